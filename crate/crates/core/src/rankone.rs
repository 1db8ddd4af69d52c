//! Rank-one relaxation of the position variables: outer-product blocks on the
//! elliptope, the penalized majorization-minimization solver and the mapping
//! back to grid positions.

use std::collections::BTreeSet;

use crate::channel::tx_phase;
use crate::error::{BestIterate, Error, Result};
use crate::numkit::{
    dominant_eig, elliptope_project, elliptope_violation, hpd_solve, logdet_hpd, nuclear_norm,
    spectral_norm, HermitianMatrix, FEAS_TOL,
};
use crate::scalar::{cplx, improves, to_f64_matrix, CMatrix, CVector, Real};

/// Default rank penalty weight.
pub const DEFAULT_TAU: f64 = 2.0;
/// Largest penalty weight reached by the optional doubling schedule.
pub const TAU_MAX: f64 = 128.0;
/// Rank residual above which the doubling schedule raises `τ`.
pub const RANK_TOL: f64 = 1e-3;
/// Surrogate change that ends the inner projected-gradient loop.
pub const INNER_TOL: f64 = 1e-8;
pub const INNER_MAX_STEPS: usize = 300;
pub const ARMIJO: f64 = 1e-4;
/// Penalized-objective change that ends the outer loop.
pub const OUTER_TOL: f64 = 1e-6;
pub const OUTER_MAX: usize = 100;

/// Relaxed position block `J ⪰ 0` with constant diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneBlock<T: Real> {
    j: HermitianMatrix<T>,
    diag_value: T,
}

impl<T: Real> RankOneBlock<T> {
    pub fn new(j: HermitianMatrix<T>, diag_value: T) -> Result<Self> {
        let violation = elliptope_violation(&j, diag_value);
        if violation > T::lit(FEAS_TOL) {
            return Err(Error::contract(format!(
                "block is off the elliptope by {violation}"
            )));
        }
        Ok(Self { j, diag_value })
    }

    pub fn matrix(&self) -> &HermitianMatrix<T> {
        &self.j
    }

    pub fn diag_value(&self) -> T {
        self.diag_value
    }

    pub fn dim(&self) -> usize {
        self.j.dim()
    }
}

/// `a*` with `a_l = exp(−j2πw cos θ_l)`.
fn conj_phases<T: Real>(w: T, thetas: &[T]) -> CVector<T> {
    CVector::from_iterator(thetas.len(), thetas.iter().map(|&t| tx_phase(t, w).conj()))
}

/// `J = c · a* aᵀ`.
pub fn j_outer<T: Real>(w: T, thetas: &[T], diag_value: T) -> RankOneBlock<T> {
    let j = HermitianMatrix::outer(&conj_phases(w, thetas), diag_value);
    RankOneBlock { j, diag_value }
}

/// `‖J‖_* − ‖J‖₂`, zero exactly when `J` has rank one.
pub fn rank_residual<T: Real>(block: &RankOneBlock<T>) -> T {
    (nuclear_norm(&block.j) - spectral_norm(&block.j)).max(T::zero())
}

/// Settings of [`mm_elliptope_solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmOptions<T: Real> {
    pub tau: T,
    /// Double `τ` after every outer round whose worst rank residual exceeds
    /// [`RANK_TOL`], up to [`TAU_MAX`].
    pub tau_doubling: bool,
}

impl<T: Real> Default for MmOptions<T> {
    fn default() -> Self {
        Self { tau: T::lit(DEFAULT_TAU), tau_doubling: false }
    }
}

#[derive(Debug, Clone)]
pub struct MmOutcome<T: Real> {
    pub blocks: Vec<RankOneBlock<T>>,
    /// Penalized objective `f(J) − τ Σ (‖J_k‖_* − ‖J_k‖₂)` at the start and
    /// after every outer iteration; a fresh segment starts whenever `τ`
    /// changes.
    pub traces: Vec<Vec<T>>,
    /// Worst elliptope infeasibility over all accepted iterates.
    pub max_violation: T,
    pub outer_iterations: usize,
    pub tau: T,
}

/// `f(J) = log₂|Σ_k B_k J_k B_kᴴ + I|`.
fn logdet_objective<T: Real>(factors: &[CMatrix<T>], js: &[HermitianMatrix<T>]) -> Result<(T, HermitianMatrix<T>)> {
    let r = factors[0].nrows();
    let mut total = CMatrix::<T>::identity(r, r);
    for (b, j) in factors.iter().zip(js) {
        total += b * j.as_matrix() * b.adjoint();
    }
    let total = HermitianMatrix::symmetrize(total);
    Ok((logdet_hpd(&total)?, total))
}

fn linear_term<T: Real>(vs: &[CVector<T>], js: &[HermitianMatrix<T>]) -> T {
    vs.iter()
        .zip(js)
        .fold(T::zero(), |acc, (v, j)| acc + (v.adjoint() * j.as_matrix() * v)[(0, 0)].re)
}

fn penalized<T: Real>(factors: &[CMatrix<T>], blocks: &[RankOneBlock<T>], tau: T) -> Result<T> {
    let js: Vec<_> = blocks.iter().map(|b| b.j.clone()).collect();
    let (f, _) = logdet_objective(factors, &js)?;
    Ok(f - tau * blocks.iter().fold(T::zero(), |acc, b| acc + rank_residual(b)))
}

fn real_inner<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    a.iter().zip(b.iter()).fold(T::zero(), |acc, (x, y)| acc + (x.conj() * y).re)
}

/// Maximizes the concave surrogate `f(J) + τ Σ v_kᴴ J_k v_k` over the product
/// of elliptopes by projected gradient ascent with Armijo backtracking.
fn inner_ascent<T: Real>(
    factors: &[CMatrix<T>],
    blocks: &[RankOneBlock<T>],
    vs: &[CVector<T>],
    tau: T,
    max_violation: &mut T,
) -> Result<Vec<RankOneBlock<T>>> {
    let ln2 = T::lit(std::f64::consts::LN_2);
    let mut js: Vec<_> = blocks.iter().map(|b| b.j.clone()).collect();
    let (f0, mut total) = logdet_objective(factors, &js)?;
    let mut value = f0 + tau * linear_term(vs, &js);
    let mut change = T::zero();
    let mut last: Option<(Vec<CMatrix<T>>, Vec<CMatrix<T>>)> = None;
    for _ in 0..INNER_MAX_STEPS {
        let grads: Vec<CMatrix<T>> = factors
            .iter()
            .zip(vs)
            .map(|(b, v)| {
                let g = b.adjoint() * hpd_solve(&total, b)?;
                Ok(g.map(|z| z / cplx(ln2)) + v * v.adjoint() * cplx(tau))
            })
            .collect::<Result<_>>()?;
        // Barzilai-Borwein trial step from the last move and gradient change
        let mut step = match &last {
            Some((moves, old_grads)) => {
                let ss = moves.iter().fold(T::zero(), |acc, d| acc + real_inner(d, d));
                let sy = moves
                    .iter()
                    .zip(old_grads.iter().zip(&grads))
                    .fold(T::zero(), |acc, (d, (g0, g1))| acc + real_inner(d, &(g1 - g0)));
                if sy < T::zero() {
                    (ss / -sy).max(T::lit(1e-10)).min(T::lit(1e4))
                } else {
                    T::one()
                }
            }
            None => T::one(),
        };
        let accepted = loop {
            let candidate: Vec<HermitianMatrix<T>> = js
                .iter()
                .zip(&grads)
                .zip(blocks)
                .map(|((j, g), b)| {
                    let moved = HermitianMatrix::symmetrize(j.as_matrix() + g.map(|z| z * cplx(step)));
                    elliptope_project(&moved, b.diag_value)
                })
                .collect::<Result<_>>()?;
            let ascent = js
                .iter()
                .zip(&candidate)
                .zip(&grads)
                .fold(T::zero(), |acc, ((j, c), g)| acc + real_inner(g, &(c.as_matrix() - j.as_matrix())));
            let (cf, ctotal) = logdet_objective(factors, &candidate)?;
            let cvalue = cf + tau * linear_term(vs, &candidate);
            if cvalue >= value + T::lit(ARMIJO) * ascent && cvalue >= value {
                break Some((candidate, ctotal, cvalue));
            }
            step *= T::lit(0.5);
            if step < T::lit(1e-12) {
                break None;
            }
        };
        let Some((candidate, ctotal, cvalue)) = accepted else {
            return finish(js, blocks, max_violation);
        };
        change = cvalue - value;
        let moves = candidate.iter().zip(&js).map(|(c, j)| c.as_matrix() - j.as_matrix()).collect();
        last = Some((moves, grads));
        js = candidate;
        total = ctotal;
        value = cvalue;
        if change < T::lit(INNER_TOL) {
            return finish(js, blocks, max_violation);
        }
    }
    Err(Error::NonConvergence {
        routine: "mm_elliptope_solve (inner projected gradient)",
        iterations: INNER_MAX_STEPS,
        change: change.as_f64(),
        best: Box::new(BestIterate::Matrices(js.iter().map(|j| to_f64_matrix(j.as_matrix())).collect())),
    })
}

fn finish<T: Real>(
    js: Vec<HermitianMatrix<T>>,
    blocks: &[RankOneBlock<T>],
    max_violation: &mut T,
) -> Result<Vec<RankOneBlock<T>>> {
    Ok(js
        .into_iter()
        .zip(blocks)
        .map(|(j, b)| {
            *max_violation = max_violation.max(elliptope_violation(&j, b.diag_value));
            RankOneBlock { j, diag_value: b.diag_value }
        })
        .collect())
}

/// Penalized MM over rank-one-relaxed blocks: maximize
/// `log₂|Σ_k B_k J_k B_kᴴ + I| − τ Σ_k (‖J_k‖_* − ‖J_k‖₂)` with every `J_k`
/// on its elliptope. Each outer round linearizes the spectral norms at the
/// dominant eigenvectors of the current blocks and solves the resulting
/// concave problem.
pub fn mm_elliptope_solve<T: Real>(
    factors: &[CMatrix<T>],
    init: Vec<RankOneBlock<T>>,
    options: MmOptions<T>,
) -> Result<MmOutcome<T>> {
    if factors.is_empty() || factors.len() != init.len() {
        return Err(Error::contract("one factor per block is required"));
    }
    if !(options.tau > T::zero()) {
        return Err(Error::contract(format!("tau must be positive, got {}", options.tau)));
    }
    let rows = factors[0].nrows();
    for (b, block) in factors.iter().zip(&init) {
        if b.nrows() != rows || b.ncols() != block.dim() {
            return Err(Error::contract("factor and block dimensions disagree"));
        }
        let violation = elliptope_violation(&block.j, block.diag_value);
        if violation > T::lit(FEAS_TOL) {
            return Err(Error::contract(format!("initial block is off the elliptope by {violation}")));
        }
    }
    let mut tau = options.tau;
    let mut blocks = init;
    let mut max_violation = blocks
        .iter()
        .fold(T::zero(), |m, b| m.max(elliptope_violation(&b.j, b.diag_value)));
    let mut traces = vec![vec![penalized(factors, &blocks, tau)?]];
    let mut outer = 0;
    while outer < OUTER_MAX {
        outer += 1;
        let vs: Vec<_> = blocks.iter().map(|b| dominant_eig(&b.j).1).collect();
        blocks = inner_ascent(factors, &blocks, &vs, tau, &mut max_violation)?;
        let value = penalized(factors, &blocks, tau)?;
        let trace = traces.last_mut().expect("trace segment");
        let previous = *trace.last().expect("initial value");
        trace.push(value);
        let worst = blocks.iter().fold(T::zero(), |m, b| m.max(rank_residual(b)));
        if options.tau_doubling && worst > T::lit(RANK_TOL) && tau < T::lit(TAU_MAX) {
            tau = (tau * T::lit(2.0)).min(T::lit(TAU_MAX));
            traces.push(vec![penalized(factors, &blocks, tau)?]);
            continue;
        }
        if (value - previous).abs() < T::lit(OUTER_TOL) {
            break;
        }
    }
    Ok(MmOutcome { blocks, traces, max_violation, outer_iterations: outer, tau })
}

/// Maps every block to the allowed grid point whose rank-one block is
/// nearest in Frobenius norm. Chosen grid indices join `exclusion`, so later
/// blocks of the same call land on distinct points; ties go to the smallest
/// position.
pub fn map_positions<T: Real>(
    blocks: &[RankOneBlock<T>],
    thetas: &[T],
    grid: &[T],
    exclusion: &mut BTreeSet<usize>,
) -> Result<Vec<T>> {
    let available = grid.len().saturating_sub(exclusion.len());
    if available < blocks.len() {
        return Err(Error::InfeasibleMapping { needed: blocks.len(), available });
    }
    let mut out = Vec::with_capacity(blocks.len());
    for block in blocks {
        let mut best: Option<(usize, T)> = None;
        for (i, &g) in grid.iter().enumerate() {
            if exclusion.contains(&i) {
                continue;
            }
            let d = j_outer(g, thetas, block.diag_value).j.frobenius_distance(&block.j);
            if best.is_none_or(|(_, bd)| improves(-d, -bd)) {
                best = Some((i, d));
            }
        }
        let (i, _) = best.expect("an allowed grid point remains");
        exclusion.insert(i);
        out.push(grid[i]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{position_grid, random_scenario, ScenarioDims};
    use crate::numkit::eigh;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_feasible(rng: &mut ChaCha8Rng, l: usize, c: f64) -> RankOneBlock<f64> {
        let a = CMatrix::from_fn(l, l, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let h = HermitianMatrix::symmetrize(&a * a.adjoint());
        let d: Vec<f64> = h.diagonal().iter().map(|x| (c / x).sqrt()).collect();
        let scale = CMatrix::from_diagonal(&CVector::from_iterator(l, d.iter().map(|&x| Complex64::new(x, 0.0))));
        RankOneBlock::new(h.congruence(&scale), c).unwrap()
    }

    #[test]
    fn outer_product_blocks() {
        let b = j_outer(1.3f64, &[0.7], 0.25);
        assert!(b.matrix().frobenius_distance(&HermitianMatrix::from_real_diagonal(&[0.25])) < 1e-15);
        let thetas = [0.1, 0.9, 2.0, 2.9];
        for w in [0.0, 0.37, 9.1] {
            let b = j_outer::<f64>(w, &thetas, 0.5);
            assert!((b.matrix().trace() - 2.0).abs() < 1e-12);
            let e = eigh(b.matrix());
            assert!(e.values[2].abs() <= 1e-12);
            assert!(rank_residual(&b) <= 1e-10);
        }
    }

    #[test]
    fn residual_of_identity() {
        let b = RankOneBlock::new(HermitianMatrix::<f64>::identity(3), 1.0).unwrap();
        assert!((rank_residual(&b) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn residual_is_trace_minus_top_eigenvalue() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let l = rng.random_range(1..7);
            let b = random_feasible(&mut rng, l, 1.0 / 3.0);
            let e = eigh(b.matrix());
            assert!((rank_residual(&b) - (b.matrix().trace() - e.max())).abs() < 1e-10);
        }
    }

    #[test]
    fn infeasible_blocks_are_rejected() {
        assert!(RankOneBlock::new(HermitianMatrix::from_real_diagonal(&[1.0, 0.5]), 1.0).is_err());
        let f = vec![CMatrix::<f64>::identity(2, 2)];
        let bad = RankOneBlock { j: HermitianMatrix::from_real_diagonal(&[2.0, 2.0]), diag_value: 1.0 };
        assert!(matches!(mm_elliptope_solve(&f, vec![bad], MmOptions::default()), Err(Error::Contract(_))));
    }

    #[test]
    fn scalar_blocks_are_fixed_points() {
        let f = vec![CMatrix::from_element(3, 1, Complex64::new(0.5, 0.2))];
        let init = vec![j_outer(0.0, &[1.0], 1.0)];
        let out = mm_elliptope_solve(&f, init.clone(), MmOptions::default()).unwrap();
        assert!(out.blocks[0].matrix().frobenius_distance(init[0].matrix()) < 1e-12);
    }

    fn factors(seed: u64, users: usize, l: usize, m: usize) -> (Vec<CMatrix<f64>>, Vec<Vec<f64>>) {
        let dims = ScenarioDims { users, bs_antennas: m, paths: l, ..Default::default() };
        let s = random_scenario::<f64>(seed, &dims).unwrap();
        let fs = s
            .users()
            .iter()
            .map(|u| u.rx_gain_matrix(m).map(|z| z * (u.power() * m as f64).sqrt()))
            .collect();
        let thetas = s.users().iter().map(|u| u.paths().aod().to_vec()).collect();
        (fs, thetas)
    }

    #[test]
    fn mm_trace_is_monotone_and_residuals_shrink() {
        for seed in 0..5 {
            let (fs, thetas) = factors(seed, 2, 3, 4);
            let init: Vec<_> = thetas.iter().map(|t| j_outer(3.0, t, 1.0)).collect();
            let out = mm_elliptope_solve(&fs, init, MmOptions::default()).unwrap();
            for seg in &out.traces {
                for w in seg.windows(2) {
                    assert!(w[1] >= w[0] - 1e-9, "{:?}", seg);
                }
            }
            assert!(out.max_violation <= 1e-9);
        }
    }

    #[test]
    fn mm_from_relaxed_start_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for seed in 0..5 {
            let (fs, _) = factors(seed, 2, 3, 4);
            let init: Vec<_> = (0..2).map(|_| random_feasible(&mut rng, 3, 1.0)).collect();
            let before: Vec<_> = init.iter().map(rank_residual).collect();
            let out = mm_elliptope_solve(&fs, init, MmOptions { tau: 2.0, tau_doubling: true }).unwrap();
            for (b, r0) in out.blocks.iter().zip(before) {
                assert!(rank_residual(b) <= r0 + 1e-9);
            }
            for seg in &out.traces {
                for w in seg.windows(2) {
                    assert!(w[1] >= w[0] - 1e-9);
                }
            }
            assert!(out.max_violation <= 1e-9);
        }
    }

    #[test]
    fn mapping_recovers_grid_points() {
        let grid = position_grid(10.0, 100);
        let thetas = [0.3, 1.2, 2.2];
        let block = j_outer(grid[37], &thetas, 1.0);
        let w = map_positions(&[block], &thetas, &grid, &mut BTreeSet::new()).unwrap();
        assert_eq!(w, vec![grid[37]]);
    }

    #[test]
    fn mapping_respects_exclusion() {
        let grid = position_grid(10.0, 100);
        let thetas = [0.3, 1.2, 2.2];
        let block = j_outer(grid[37], &thetas, 0.5);
        let mut excl = BTreeSet::new();
        let w = map_positions(&[block.clone(), block], &thetas, &grid, &mut excl).unwrap();
        assert_eq!(w[0], grid[37]);
        assert_ne!(w[1], w[0]);
        assert_eq!(excl.len(), 2);
        let small = position_grid(1.0, 1);
        let b = j_outer(0.0, &thetas, 1.0 / 3.0);
        assert!(matches!(
            map_positions(&[b.clone(), b.clone(), b], &thetas, &small, &mut BTreeSet::new()),
            Err(Error::InfeasibleMapping { needed: 3, available: 2 })
        ));
    }

    #[test]
    fn mapping_is_nearest_allowed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let grid = position_grid(10.0, 100);
        let thetas = [0.3, 1.2, 2.2, 2.8];
        for _ in 0..20 {
            let block = random_feasible(&mut rng, 4, 1.0);
            let mut excl: BTreeSet<usize> = (0..10).map(|_| rng.random_range(0..101)).collect();
            let blocked = excl.clone();
            let w = map_positions(std::slice::from_ref(&block), &thetas, &grid, &mut excl).unwrap()[0];
            let d = j_outer(w, &thetas, 1.0).matrix().frobenius_distance(block.matrix());
            for (i, &g) in grid.iter().enumerate() {
                if !blocked.contains(&i) {
                    assert!(d <= j_outer(g, &thetas, 1.0).matrix().frobenius_distance(block.matrix()) + 1e-12);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn outer_blocks_are_feasible(w in 0.0f64..10.0, c in 0.01f64..1.0, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let thetas: Vec<f64> = (0..4).map(|_| rng.random::<f64>() * std::f64::consts::PI).collect();
            let b = j_outer(w, &thetas, c);
            prop_assert!(elliptope_violation(b.matrix(), c) <= 1e-12);
            prop_assert!(rank_residual(&b) <= 1e-10);
        }
    }
}
