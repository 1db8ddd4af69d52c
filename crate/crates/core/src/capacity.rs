//! Sum-capacity objective, interference whitening and the closed-form
//! capacity limits.

use crate::channel::{channel_matrix, tx_phase, PositionVector, Scenario, UserConfig};
use crate::error::{Error, Result};
use crate::numkit::{eigh, logdet_hpd, HermitianMatrix, FEAS_TOL};
use crate::scalar::{cplx, CMatrix, Real};

/// Transmit covariance `Q ⪰ 0` with `tr(Q) ≤ budget`.
#[derive(Debug, Clone, PartialEq)]
pub struct TxCovariance<T: Real> {
    q: HermitianMatrix<T>,
    budget: T,
}

impl<T: Real> TxCovariance<T> {
    pub fn new(q: HermitianMatrix<T>, budget: T) -> Result<Self> {
        let tol = T::lit(FEAS_TOL);
        let min = eigh(&q).min();
        if min < -tol {
            return Err(Error::contract(format!(
                "covariance is not PSD (min eigenvalue {min})"
            )));
        }
        if q.trace() > budget + tol {
            return Err(Error::contract(format!(
                "covariance trace {} exceeds budget {budget}",
                q.trace()
            )));
        }
        Ok(Self { q, budget })
    }

    pub fn zeros(dim: usize, budget: T) -> Self {
        Self { q: HermitianMatrix::zeros(dim), budget }
    }

    pub(crate) fn unchecked(q: HermitianMatrix<T>, budget: T) -> Self {
        Self { q, budget }
    }

    pub fn matrix(&self) -> &HermitianMatrix<T> {
        &self.q
    }

    pub fn budget(&self) -> T {
        self.budget
    }

    pub fn dim(&self) -> usize {
        self.q.dim()
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self { q: self.q.scaled(factor), budget: self.budget * factor }
    }
}

/// Outcome of any solver in the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport<T: Real> {
    pub capacity_bits: T,
    pub covariances: Vec<TxCovariance<T>>,
    pub positions: Vec<PositionVector<T>>,
    /// Capacity (or relaxed objective) after every outer iteration.
    pub objective_trace: Vec<T>,
    /// Final rank residual of every relaxed block, when the solver uses them.
    pub rank_residuals: Vec<T>,
    /// Outer penalized objective of every majorization-minimization run.
    pub mm_traces: Vec<Vec<T>>,
    /// Worst elliptope infeasibility over all MM iterates.
    pub max_elliptope_violation: T,
    /// Capacity at the initial point, for solvers that may end below it.
    pub initial_capacity_bits: Option<T>,
    pub iterations: usize,
    pub runtime_ms: f64,
}

impl<T: Real> SolveReport<T> {
    pub fn max_rank_residual(&self) -> T {
        self.rank_residuals.iter().fold(T::zero(), |m, &r| m.max(r))
    }
}

/// `log₂|Σ_u G_u Q_u G_uᴴ + I|` for explicit channel matrices.
pub fn capacity_of_channels<T: Real>(
    channels: &[CMatrix<T>],
    qs: &[&HermitianMatrix<T>],
) -> Result<T> {
    let dim = channels.first().map(|g| g.nrows()).ok_or_else(|| Error::contract("no channels"))?;
    let total = aggregate_covariance(channels, qs, dim, None)?;
    Ok(logdet_hpd(&total)?.max(T::zero()))
}

fn aggregate_covariance<T: Real>(
    channels: &[CMatrix<T>],
    qs: &[&HermitianMatrix<T>],
    dim: usize,
    skip: Option<usize>,
) -> Result<HermitianMatrix<T>> {
    if channels.len() != qs.len() {
        return Err(Error::contract(format!(
            "{} channels but {} covariances",
            channels.len(),
            qs.len()
        )));
    }
    let mut total = CMatrix::<T>::identity(dim, dim);
    for (u, (g, q)) in channels.iter().zip(qs).enumerate() {
        if g.nrows() != dim || g.ncols() != q.dim() {
            return Err(Error::contract(format!(
                "channel {u} is {}x{} but covariance is {}x{} (M = {dim})",
                g.nrows(),
                g.ncols(),
                q.dim(),
                q.dim()
            )));
        }
        if Some(u) != skip {
            total += g * q.as_matrix() * g.adjoint();
        }
    }
    Ok(HermitianMatrix::symmetrize(total))
}

fn check_feasible<T: Real>(scenario: &Scenario<T>, qs: &[TxCovariance<T>]) -> Result<()> {
    if qs.len() != scenario.user_count() {
        return Err(Error::contract(format!(
            "{} covariances for {} users",
            qs.len(),
            scenario.user_count()
        )));
    }
    for (u, (user, q)) in scenario.users().iter().zip(qs).enumerate() {
        if q.matrix().trace() > user.power() + T::lit(FEAS_TOL) {
            return Err(Error::contract(format!(
                "user {u}: covariance trace {} exceeds P = {}",
                q.matrix().trace(),
                user.power()
            )));
        }
    }
    Ok(())
}

/// Sum capacity `log₂|Σ_u G_u(w_u) Q_u G_uᴴ(w_u) + I_M|` in bits/s/Hz.
pub fn sum_capacity<T: Real>(
    scenario: &Scenario<T>,
    qs: &[TxCovariance<T>],
    ws: &[PositionVector<T>],
) -> Result<T> {
    check_feasible(scenario, qs)?;
    let channels = scenario.channels(ws)?;
    let mats: Vec<_> = qs.iter().map(|q| q.matrix()).collect();
    capacity_of_channels(&channels, &mats)
}

/// `Ω_u = Σ_{u' ≠ u} G_{u'} Q_{u'} G_{u'}ᴴ + I_M`.
pub fn interference_matrix<T: Real>(
    scenario: &Scenario<T>,
    qs: &[TxCovariance<T>],
    ws: &[PositionVector<T>],
    u: usize,
) -> Result<HermitianMatrix<T>> {
    check_feasible(scenario, qs)?;
    if u >= scenario.user_count() {
        return Err(Error::contract(format!("user index {u} out of range")));
    }
    let channels = scenario.channels(ws)?;
    let mats: Vec<_> = qs.iter().map(|q| q.matrix()).collect();
    interference_from_channels(&channels, &mats, u)
}

pub fn interference_from_channels<T: Real>(
    channels: &[CMatrix<T>],
    qs: &[&HermitianMatrix<T>],
    u: usize,
) -> Result<HermitianMatrix<T>> {
    let dim = channels.first().map(|g| g.nrows()).ok_or_else(|| Error::contract("no channels"))?;
    aggregate_covariance(channels, qs, dim, Some(u))
}

/// Whitening of an interference-plus-noise covariance: with
/// `Ω⁻¹ = S Λ Sᴴ`, `factor = Λ^{1/2} Sᴴ`.
///
/// `Ω` is decomposed directly and its eigenvalues inverted; the explicit
/// inverse is never formed.
#[derive(Debug, Clone)]
pub struct Whitener<T: Real> {
    factor: CMatrix<T>,
    logdet: T,
}

impl<T: Real> Whitener<T> {
    pub fn new(omega: &HermitianMatrix<T>) -> Result<Self> {
        let e = eigh(omega);
        if !(e.min() > T::zero()) {
            return Err(Error::domain(format!(
                "interference covariance is not positive definite (min eigenvalue {})",
                e.min()
            )));
        }
        let n = e.values.len();
        let mut factor = e.vectors.adjoint();
        for (i, &value) in e.values.iter().enumerate() {
            let s = cplx(T::one() / value.sqrt());
            for j in 0..n {
                factor[(i, j)] *= s;
            }
        }
        let logdet = e.values.iter().fold(T::zero(), |acc, v| acc + v.log2());
        Ok(Self { factor, logdet })
    }

    /// `Λ^{1/2} Sᴴ`.
    pub fn factor(&self) -> &CMatrix<T> {
        &self.factor
    }

    /// `log₂|Ω|`.
    pub fn logdet(&self) -> T {
        self.logdet
    }

    pub fn apply(&self, g: &CMatrix<T>) -> CMatrix<T> {
        &self.factor * g
    }
}

/// `Ḡ_u(w_u) = Λ_u^{1/2} S_uᴴ G_u(w_u)`.
pub fn effective_channel<T: Real>(
    scenario: &Scenario<T>,
    omega: &HermitianMatrix<T>,
    u: usize,
    w: &PositionVector<T>,
) -> Result<CMatrix<T>> {
    if omega.dim() != scenario.bs_antennas() {
        return Err(Error::contract("interference covariance must be M x M"));
    }
    let g = channel_matrix(scenario.user(u), w, scenario.bs_antennas())?;
    Ok(Whitener::new(omega)?.apply(&g))
}

/// Large-array limit `log₂(Σ_l P M |γ_l|² + 1)` of a single-antenna user.
pub fn c0_large_m<T: Real>(user: &UserConfig<T>, bs_antennas: usize) -> T {
    (user.power() * T::from_count(bs_antennas) * user.paths().total_gain() + T::one()).log2()
}

/// `aᵀ Ψ a*` with `a_l = exp(−j2πw cos θ_l)`.
pub(crate) fn quadratic_form<T: Real>(psi: &HermitianMatrix<T>, thetas: &[T], w: T) -> T {
    let a: Vec<_> = thetas.iter().map(|&t| tx_phase(t, w)).collect();
    let m = psi.as_matrix();
    let mut acc = T::zero();
    for (l, al) in a.iter().enumerate() {
        acc += (m[(l, l)]).re;
        for (k, ak) in a.iter().enumerate().skip(l + 1) {
            acc += T::lit(2.0) * (*al * m[(l, k)] * ak.conj()).re;
        }
    }
    acc
}

pub(crate) fn quadratic_capacity_unchecked<T: Real>(
    psi: &HermitianMatrix<T>,
    thetas: &[T],
    w: T,
) -> T {
    (quadratic_form(psi, thetas, w).max(T::zero()) + T::one()).log2()
}

/// Single-antenna capacity `log₂(aᵀ Ψ a* + 1)` at position `w`.
pub fn quadratic_capacity_1ant<T: Real>(psi: &HermitianMatrix<T>, thetas: &[T], w: T) -> Result<T> {
    if psi.dim() != thetas.len() {
        return Err(Error::contract(format!(
            "Psi is {}x{} but {} departure angles were given",
            psi.dim(),
            psi.dim(),
            thetas.len()
        )));
    }
    let scale = psi.as_matrix().norm().max(T::one());
    let min = eigh(psi).min();
    if min < -T::lit(FEAS_TOL) * scale {
        return Err(Error::domain(format!("Psi is not PSD (min eigenvalue {min})")));
    }
    Ok(quadratic_capacity_unchecked(psi, thetas, w))
}
