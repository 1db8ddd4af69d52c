//! Point-to-point water-filling, iterative water-filling for the MAC, and the
//! two capacity bounds built on them.

use crate::capacity::{capacity_of_channels, interference_from_channels, TxCovariance, Whitener};
use crate::channel::Scenario;
use crate::error::{BestIterate, Error, Result};
use crate::numkit::{eigh, HermitianMatrix};
use crate::scalar::{to_f64_matrix, CMatrix, Real};

/// Sum-capacity change (bits) that ends iterative water-filling.
pub const IWF_TOL: f64 = 1e-8;
/// Cycle cap of iterative water-filling.
pub const IWF_MAX_CYCLES: usize = 200;

/// Capacity-achieving covariance of `log₂|G Q Gᴴ + I|` under `tr(Q) ≤ P`.
pub fn waterfill_p2p<T: Real>(g: &CMatrix<T>, power: T) -> Result<TxCovariance<T>> {
    if !(power >= T::zero()) {
        return Err(Error::contract(format!("power budget must be nonnegative, got {power}")));
    }
    let n = g.ncols();
    let e = eigh(&HermitianMatrix::symmetrize(g.adjoint() * g));
    let alloc = water_levels(&e.values, power);
    if alloc.iter().all(|&p| p == T::zero()) {
        return Ok(TxCovariance::zeros(n, power));
    }
    let q = e.vectors.clone();
    let mut scaled = q.clone();
    for (j, &p) in alloc.iter().enumerate() {
        let s = crate::scalar::cplx(p);
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    let m = HermitianMatrix::symmetrize(scaled * q.adjoint());
    Ok(TxCovariance::unchecked(m, power))
}

/// Optimal power per eigenmode for channel-Gram eigenvalues `gains` (any
/// order) and budget `power`: `max(0, μ − 1/g)` with the exact water level
/// `μ` of the largest feasible active set. Numerically zero modes get no
/// power.
pub fn water_levels<T: Real>(gains: &[T], power: T) -> Vec<T> {
    let mut alloc = vec![T::zero(); gains.len()];
    if !(power > T::zero()) {
        return alloc;
    }
    let top = gains.iter().fold(T::zero(), |m, &g| m.max(g));
    let floor = T::lit(1e-14) * top.max(T::one());
    let mut order: Vec<usize> = (0..gains.len()).filter(|&i| gains[i] > floor).collect();
    order.sort_by(|&a, &b| gains[b].partial_cmp(&gains[a]).expect("finite gains"));
    let mut level = T::zero();
    let mut active = 0;
    let mut inv_sum = T::zero();
    for (k, &i) in order.iter().enumerate() {
        inv_sum += T::one() / gains[i];
        let candidate = (power + inv_sum) / T::from_count(k + 1);
        if candidate > T::one() / gains[i] {
            level = candidate;
            active = k + 1;
        } else {
            break;
        }
    }
    for &i in &order[..active] {
        alloc[i] = (level - T::one() / gains[i]).max(T::zero());
    }
    alloc
}

/// Water-filled capacity `Σ_k log₂(1 + g_k p_k)` from the Gram matrix
/// `GᴴG` of a channel.
pub fn waterfill_gram_capacity<T: Real>(gram: &HermitianMatrix<T>, power: T) -> T {
    let values = eigh(gram).values;
    let alloc = water_levels(&values, power);
    values
        .iter()
        .zip(&alloc)
        .fold(T::zero(), |acc, (&g, &p)| acc + (T::one() + g.max(T::zero()) * p).log2())
}

/// Capacity `log₂|G Q Gᴴ + I|` of the water-filled covariance.
pub fn waterfill_capacity<T: Real>(g: &CMatrix<T>, power: T) -> Result<T> {
    let q = waterfill_p2p(g, power)?;
    capacity_of_channels(std::slice::from_ref(g), &[q.matrix()])
}

/// KKT residual of a point-to-point covariance, computed from `Q` alone:
/// with `H = Gᴴ(I + G Q Gᴴ)⁻¹G` and `ν = λ_max(H)`, the larger of the
/// relative budget gap and `‖H Q − ν Q‖ / (ν ‖Q‖)`.
pub fn kkt_residual<T: Real>(g: &CMatrix<T>, q: &HermitianMatrix<T>, power: T) -> Result<T> {
    let inner = HermitianMatrix::symmetrize(g * q.as_matrix() * g.adjoint())
        .add(&HermitianMatrix::identity(g.nrows()));
    let h = HermitianMatrix::symmetrize(g.adjoint() * crate::numkit::hpd_solve(&inner, g)?);
    let nu = eigh(&h).max();
    let qn = q.as_matrix().norm();
    if power == T::zero() {
        return Ok(q.trace().abs());
    }
    if qn == T::zero() || nu <= T::zero() {
        return Ok(if nu <= T::zero() { T::zero() } else { T::one() });
    }
    let budget = ((q.trace() - power) / power).abs();
    let stationarity = (h.as_matrix() * q.as_matrix() - q.as_matrix().map(|z| z * nu)).norm() / (nu * qn);
    Ok(budget.max(stationarity))
}

/// Result of iterative water-filling.
#[derive(Debug, Clone)]
pub struct IwfOutcome<T: Real> {
    pub covariances: Vec<TxCovariance<T>>,
    pub capacity: T,
    /// Sum capacity after every user update.
    pub trace: Vec<T>,
    pub cycles: usize,
}

/// MAC sum-capacity covariances by cyclic per-user water-filling against the
/// whitened interference.
pub fn iterative_waterfill<T: Real>(channels: &[CMatrix<T>], budgets: &[T]) -> Result<IwfOutcome<T>> {
    if channels.is_empty() || channels.len() != budgets.len() {
        return Err(Error::contract("iterative water-filling needs one budget per channel"));
    }
    let m = channels[0].nrows();
    if channels.iter().any(|g| g.nrows() != m) {
        return Err(Error::contract("all channels must share the receive dimension"));
    }
    let mut qs: Vec<TxCovariance<T>> =
        channels.iter().zip(budgets).map(|(g, &p)| TxCovariance::zeros(g.ncols(), p)).collect();
    let mut trace = Vec::new();
    let mut previous = T::zero();
    let mut change = T::zero();
    for cycle in 1..=IWF_MAX_CYCLES {
        for u in 0..channels.len() {
            let omega = {
                let mats: Vec<_> = qs.iter().map(|q| q.matrix()).collect();
                interference_from_channels(channels, &mats, u)?
            };
            let gbar = Whitener::new(&omega)?.apply(&channels[u]);
            qs[u] = waterfill_p2p(&gbar, budgets[u])?;
            let mats: Vec<_> = qs.iter().map(|q| q.matrix()).collect();
            trace.push(capacity_of_channels(channels, &mats)?);
        }
        let current = *trace.last().expect("at least one user");
        change = (current - previous).abs();
        previous = current;
        if change < T::lit(IWF_TOL) || channels.len() == 1 {
            return Ok(IwfOutcome { covariances: qs, capacity: current, trace, cycles: cycle });
        }
    }
    Err(Error::NonConvergence {
        routine: "iterative_waterfill",
        iterations: IWF_MAX_CYCLES,
        change: change.as_f64(),
        best: Box::new(BestIterate::Matrices(
            qs.iter().map(|q| to_f64_matrix(q.matrix().as_matrix())).collect(),
        )),
    })
}

fn bound<T: Real>(scenario: &Scenario<T>, scale_by_paths: bool) -> Result<T> {
    let m = scenario.bs_antennas();
    let channels: Vec<_> = scenario.users().iter().map(|u| u.left_factor(m)).collect();
    let budgets: Vec<_> = scenario
        .users()
        .iter()
        .map(|u| if scale_by_paths { u.power() * T::from_count(u.path_count()) } else { u.power() })
        .collect();
    Ok(iterative_waterfill(&channels, &budgets)?.capacity)
}

/// Upper bound on the sum capacity over all positions: water-filling on the
/// position-free channels `√(M N_u) A_R Γ_u` with budgets `L_u P_u`.
pub fn capacity_upper_bound<T: Real>(scenario: &Scenario<T>) -> Result<T> {
    bound(scenario, true)
}

/// Large-aperture approximation: the same channels with budgets `P_u`.
pub fn capacity_approx<T: Real>(scenario: &Scenario<T>) -> Result<T> {
    bound(scenario, false)
}
