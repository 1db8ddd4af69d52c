use std::collections::BTreeSet;

use super::{
    check_init, full_power, report, require_single_antenna, require_single_user, Timer,
    ALG1_MAX_CYCLES, ALG3_MAX_ROUNDS, ALG4_MAX_SWEEPS, MULTI_ANTENNA_TOL, SINGLE_ANTENNA_TOL,
};
use crate::capacity::{
    capacity_of_channels, interference_matrix, sum_capacity, SolveReport, TxCovariance, Whitener,
};
use crate::channel::{channel_from_left, PositionVector, Scenario, UserConfig};
use crate::closedform::single_user_position_update;
use crate::error::Result;
use crate::numkit::{psd_sqrt, HermitianMatrix};
use crate::rankone::{j_outer, map_positions, mm_elliptope_solve, rank_residual, MmOptions};
use crate::scalar::{CMatrix, Real};
use crate::waterfill::{iterative_waterfill, waterfill_p2p};

/// Alternating position optimization for single-antenna users at full
/// power.
pub fn alg1_alternating<T: Real>(
    scenario: &Scenario<T>,
    init: &[PositionVector<T>],
) -> Result<SolveReport<T>> {
    let timer = Timer::start();
    require_single_antenna(scenario, "alg1")?;
    check_init(scenario, init)?;
    let qs = full_power(scenario);
    let mut ws = init.to_vec();
    let mut capacity = sum_capacity(scenario, &qs, &ws)?;
    let mut trace = vec![capacity];
    let mut cycles = 0;
    while cycles < ALG1_MAX_CYCLES {
        cycles += 1;
        for (u, user) in scenario.users().iter().enumerate() {
            let omega = interference_matrix(scenario, &qs, &ws, u)?;
            let w = single_user_position_update(user, &omega, user.quantization(), ws[u].as_slice()[0])?;
            ws[u] = PositionVector::for_user(vec![w], user)?;
        }
        let next = sum_capacity(scenario, &qs, &ws)?;
        trace.push(next);
        let change = (next - capacity).abs();
        capacity = next;
        if change < T::lit(SINGLE_ANTENNA_TOL) {
            break;
        }
    }
    Ok(report(capacity, qs, ws, trace, cycles, &timer))
}

/// Joint rank-one relaxation of all single-antenna users' positions,
/// followed by nearest-grid mapping. The mapped point is returned even if
/// it is worse than the starting point; the starting capacity is reported
/// alongside.
pub fn alg2_joint<T: Real>(
    scenario: &Scenario<T>,
    init: &[PositionVector<T>],
    mm: MmOptions<T>,
) -> Result<SolveReport<T>> {
    let timer = Timer::start();
    require_single_antenna(scenario, "alg2")?;
    check_init(scenario, init)?;
    let m = scenario.bs_antennas();
    let factors: Vec<CMatrix<T>> = scenario
        .users()
        .iter()
        .map(|u| {
            let scale = (u.power() * T::from_count(m)).sqrt();
            u.rx_gain_matrix(m).map(|z| z * scale)
        })
        .collect();
    let blocks = scenario
        .users()
        .iter()
        .zip(init)
        .map(|(u, w)| j_outer(w.as_slice()[0], u.paths().aod(), T::one()))
        .collect();
    let out = mm_elliptope_solve(&factors, blocks, mm)?;
    let mut ws = Vec::with_capacity(scenario.user_count());
    for (user, block) in scenario.users().iter().zip(&out.blocks) {
        let w = map_positions(std::slice::from_ref(block), user.paths().aod(), &user.grid(), &mut BTreeSet::new())?;
        ws.push(PositionVector::for_user(w, user)?);
    }
    let qs = full_power(scenario);
    let initial = sum_capacity(scenario, &qs, init)?;
    let capacity = sum_capacity(scenario, &qs, &ws)?;
    let mut rep = report(capacity, qs, ws, vec![initial, capacity], out.outer_iterations, &timer);
    rep.rank_residuals = out.blocks.iter().map(rank_residual).collect();
    rep.max_elliptope_violation = out.max_violation;
    rep.mm_traces = out.traces;
    rep.initial_capacity_bits = Some(initial);
    rep.runtime_ms = timer.ms();
    Ok(rep)
}

/// Result of the single-user routine on a channel `left · A_Tᴴ(w)`.
pub(crate) struct SingleUserOutcome<T: Real> {
    pub positions: PositionVector<T>,
    pub covariance: TxCovariance<T>,
    /// Relaxed capacity after every F/J round.
    pub trace: Vec<T>,
    pub mm_traces: Vec<Vec<T>>,
    pub rank_residuals: Vec<T>,
    pub max_violation: T,
    pub rounds: usize,
}

/// Alternates water-filling of the receive-side covariance `F` with the MM
/// update of the `N` relaxed position blocks, then maps the blocks to
/// distinct grid points and water-fills the transmit covariance.
pub(crate) fn single_user_core<T: Real>(
    left: &CMatrix<T>,
    user: &UserConfig<T>,
    init: &PositionVector<T>,
    mm: MmOptions<T>,
) -> Result<SingleUserOutcome<T>> {
    let n = user.antennas();
    let c = T::one() / T::from_count(n);
    let thetas = user.paths().aod();
    let mut blocks: Vec<_> = init.as_slice().iter().map(|&w| j_outer(w, thetas, c)).collect();
    let mut trace = Vec::new();
    let mut mm_traces = Vec::new();
    let mut max_violation = T::zero();
    let mut rounds = 0;
    while rounds < ALG3_MAX_ROUNDS {
        rounds += 1;
        let s = block_sum(&blocks);
        let e = left * psd_sqrt(&s).as_matrix();
        let f = waterfill_p2p(&e.adjoint(), user.power())?;
        let phi = f.matrix().congruence(&left.adjoint());
        let b = psd_sqrt(&phi).into_matrix();
        let factors = vec![b.clone(); n];
        let out = mm_elliptope_solve(&factors, blocks, mm)?;
        blocks = out.blocks;
        max_violation = max_violation.max(out.max_violation);
        mm_traces.extend(out.traces);
        let relaxed = capacity_of_channels(std::slice::from_ref(&b), &[&block_sum(&blocks)])?;
        let previous = trace.last().copied();
        trace.push(relaxed);
        if previous.is_some_and(|p: T| (relaxed - p).abs() < T::lit(MULTI_ANTENNA_TOL)) {
            break;
        }
    }
    let w = map_positions(&blocks, thetas, &user.grid(), &mut BTreeSet::new())?;
    let positions = PositionVector::for_user(w, user)?;
    let g = channel_from_left(left, thetas, positions.as_slice());
    let covariance = waterfill_p2p(&g, user.power())?;
    Ok(SingleUserOutcome {
        positions,
        covariance,
        trace,
        mm_traces,
        rank_residuals: blocks.iter().map(rank_residual).collect(),
        max_violation,
        rounds,
    })
}

fn block_sum<T: Real>(blocks: &[crate::rankone::RankOneBlock<T>]) -> HermitianMatrix<T> {
    let mut s = HermitianMatrix::zeros(blocks[0].dim());
    for b in blocks {
        s = s.add(b.matrix());
    }
    s
}

/// Joint covariance and position optimization for one multi-antenna user.
pub fn alg3_single_user<T: Real>(
    scenario: &Scenario<T>,
    init: &PositionVector<T>,
    mm: MmOptions<T>,
) -> Result<SolveReport<T>> {
    let timer = Timer::start();
    require_single_user(scenario, "alg3")?;
    check_init(scenario, std::slice::from_ref(init))?;
    let user = scenario.user(0);
    let out = single_user_core(&user.left_factor(scenario.bs_antennas()), user, init, mm)?;
    let capacity = sum_capacity(scenario, std::slice::from_ref(&out.covariance), std::slice::from_ref(&out.positions))?;
    let mut rep = report(capacity, vec![out.covariance], vec![out.positions], out.trace, out.rounds, &timer);
    rep.rank_residuals = out.rank_residuals;
    rep.mm_traces = out.mm_traces;
    rep.max_elliptope_violation = out.max_violation;
    rep.runtime_ms = timer.ms();
    Ok(rep)
}

/// Multiuser optimization: iterative water-filling at the starting
/// positions, then per-user joint updates against the whitened
/// interference, each accepted only if the sum capacity improves.
pub fn alg4_multiuser<T: Real>(
    scenario: &Scenario<T>,
    init: &[PositionVector<T>],
    mm: MmOptions<T>,
) -> Result<SolveReport<T>> {
    let timer = Timer::start();
    check_init(scenario, init)?;
    let m = scenario.bs_antennas();
    let mut ws = init.to_vec();
    let channels = scenario.channels(&ws)?;
    let budgets: Vec<T> = scenario.users().iter().map(|u| u.power()).collect();
    let mut qs = iterative_waterfill(&channels, &budgets)?.covariances;
    let initial = sum_capacity(scenario, &qs, &ws)?;
    let mut capacity = initial;
    let mut trace = vec![capacity];
    let mut mm_traces = Vec::new();
    let mut residuals = vec![T::zero(); scenario.user_count()];
    let mut max_violation = T::zero();
    let mut sweeps = 0;
    while sweeps < ALG4_MAX_SWEEPS {
        sweeps += 1;
        let start = capacity;
        for (u, user) in scenario.users().iter().enumerate() {
            let omega = interference_matrix(scenario, &qs, &ws, u)?;
            let left = Whitener::new(&omega)?.factor() * user.left_factor(m);
            let out = single_user_core(&left, user, &ws[u], mm)?;
            mm_traces.extend(out.mm_traces);
            max_violation = max_violation.max(out.max_violation);
            let mut cand_q = qs.clone();
            let mut cand_w = ws.clone();
            cand_q[u] = out.covariance;
            cand_w[u] = out.positions;
            let value = sum_capacity(scenario, &cand_q, &cand_w)?;
            if value > capacity {
                capacity = value;
                qs = cand_q;
                ws = cand_w;
                residuals[u] = out.rank_residuals.iter().fold(T::zero(), |a, &r| a.max(r));
            }
            trace.push(capacity);
        }
        if capacity - start < T::lit(MULTI_ANTENNA_TOL) {
            break;
        }
    }
    let mut rep = report(capacity, qs, ws, trace, sweeps, &timer);
    rep.rank_residuals = residuals;
    rep.mm_traces = mm_traces;
    rep.max_elliptope_violation = max_violation;
    rep.initial_capacity_bits = Some(initial);
    rep.runtime_ms = timer.ms();
    Ok(rep)
}
