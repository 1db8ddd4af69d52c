use super::{
    full_power, report, require_single_antenna, require_single_user, search_quantization, Timer,
    ALG4_MAX_SWEEPS, MULTI_ANTENNA_TOL,
};
use crate::capacity::{interference_matrix, sum_capacity, SolveReport, Whitener};
use crate::channel::{half_wavelength_positions, position_grid, PositionVector, Scenario};
use crate::error::{Error, Result};
use crate::numkit::{logdet_hpd, HermitianMatrix};
use crate::scalar::{cplx, improves, CMatrix, CVector, Real};
use crate::waterfill::{iterative_waterfill, waterfill_gram_capacity, waterfill_p2p};

/// Largest number of position combinations an exhaustive search may visit.
pub const ES_BUDGET: f64 = 1e7;

/// Half-wavelength fixed arrays starting at 0, covariances by iterative
/// water-filling.
pub fn benchmark_fixed<T: Real>(scenario: &Scenario<T>) -> Result<SolveReport<T>> {
    let timer = Timer::start();
    let ws = scenario
        .users()
        .iter()
        .map(half_wavelength_positions)
        .collect::<Result<Vec<_>>>()?;
    let channels = scenario.channels(&ws)?;
    let budgets: Vec<T> = scenario.users().iter().map(|u| u.power()).collect();
    let iwf = iterative_waterfill(&channels, &budgets)?;
    let capacity = sum_capacity(scenario, &iwf.covariances, &ws)?;
    Ok(report(capacity, iwf.covariances, ws, iwf.trace, iwf.cycles, &timer))
}

/// Columns `left · a*(w) / √N` of the channel for every grid point.
fn grid_columns<T: Real>(left: &CMatrix<T>, thetas: &[T], grid: &[T], antennas: usize) -> Vec<CVector<T>> {
    let scale = cplx(T::one() / T::from_count(antennas).sqrt());
    grid.iter()
        .map(|&w| {
            let a = CVector::from_iterator(thetas.len(), thetas.iter().map(|&t| crate::channel::tx_phase(t, w).conj()));
            left * a * scale
        })
        .collect()
}

fn gram<T: Real>(cols: &[&CVector<T>]) -> HermitianMatrix<T> {
    let n = cols.len();
    HermitianMatrix::symmetrize(CMatrix::from_fn(n, n, |i, j| cols[i].dotc(cols[j])))
}

/// Full-power exhaustive search over the product of the users' grids
/// (single-antenna users only).
pub fn benchmark_es<T: Real>(scenario: &Scenario<T>, step: Option<T>) -> Result<SolveReport<T>> {
    let timer = Timer::start();
    require_single_antenna(scenario, "es")?;
    let m = scenario.bs_antennas();
    let grids = scenario
        .users()
        .iter()
        .map(|u| Ok(position_grid(u.length(), search_quantization(u.length(), u.quantization(), step)?)))
        .collect::<Result<Vec<_>>>()?;
    let combinations = grids.iter().fold(1.0, |acc, g| acc * g.len() as f64);
    if combinations > ES_BUDGET {
        return Err(Error::Budget { combinations, limit: ES_BUDGET });
    }
    // √P_u g_u(w) for every user and grid point
    let cols: Vec<Vec<CVector<T>>> = scenario
        .users()
        .iter()
        .zip(&grids)
        .map(|(u, grid)| {
            let left = u.left_factor(m).map(|z| z * u.power().sqrt());
            grid_columns(&left, u.paths().aod(), grid, 1)
        })
        .collect();
    let users = scenario.user_count();
    let mut index = vec![0usize; users];
    let mut best: Option<(Vec<usize>, T)> = None;
    loop {
        let chosen: Vec<&CVector<T>> = (0..users).map(|u| &cols[u][index[u]]).collect();
        let value = logdet_hpd(&gram(&chosen).add(&HermitianMatrix::identity(users)))?;
        if best.as_ref().is_none_or(|(_, b)| improves(value, *b)) {
            best = Some((index.clone(), value));
        }
        // odometer, last user fastest
        let mut u = users;
        loop {
            if u == 0 {
                break;
            }
            u -= 1;
            index[u] += 1;
            if index[u] < grids[u].len() {
                break;
            }
            index[u] = 0;
        }
        if index.iter().all(|&i| i == 0) {
            break;
        }
    }
    let (best_index, _) = best.expect("at least one combination");
    let ws = scenario
        .users()
        .iter()
        .zip(&best_index)
        .zip(&grids)
        .map(|((u, &i), g)| PositionVector::for_user(vec![g[i]], u))
        .collect::<Result<Vec<_>>>()?;
    let qs = full_power(scenario);
    let capacity = sum_capacity(scenario, &qs, &ws)?;
    Ok(report(capacity, qs, ws, vec![capacity], combinations as usize, &timer))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Single-user exhaustive search over all sets of `N` distinct grid points,
/// each scored with its own water-filled covariance.
pub fn benchmark_iwf_es<T: Real>(scenario: &Scenario<T>, step: Option<T>) -> Result<SolveReport<T>> {
    let timer = Timer::start();
    require_single_user(scenario, "iwf-es")?;
    let user = scenario.user(0);
    let n = user.antennas();
    let grid = position_grid(user.length(), search_quantization(user.length(), user.quantization(), step)?);
    if grid.len() < n {
        return Err(Error::InfeasibleMapping { needed: n, available: grid.len() });
    }
    let combinations = binomial(grid.len(), n);
    if combinations > ES_BUDGET {
        return Err(Error::Budget { combinations, limit: ES_BUDGET });
    }
    let left = user.left_factor(scenario.bs_antennas());
    let cols = grid_columns(&left, user.paths().aod(), &grid, n);
    let score = |idx: &[usize]| {
        let chosen: Vec<&CVector<T>> = idx.iter().map(|&i| &cols[i]).collect();
        waterfill_gram_capacity(&gram(&chosen), user.power())
    };
    let even: Vec<usize> = if n == 1 {
        vec![0]
    } else {
        (0..n).map(|i| ((i * (grid.len() - 1)) as f64 / (n - 1) as f64).round() as usize).collect()
    };
    let start = score(&even);
    let mut idx: Vec<usize> = (0..n).collect();
    let mut best = (idx.clone(), score(&idx));
    // lexicographic walk over increasing index tuples
    loop {
        let mut k = n;
        let advanced = loop {
            if k == 0 {
                break false;
            }
            k -= 1;
            if idx[k] < grid.len() - n + k {
                idx[k] += 1;
                for j in k + 1..n {
                    idx[j] = idx[j - 1] + 1;
                }
                break true;
            }
        };
        if !advanced {
            break;
        }
        let value = score(&idx);
        if improves(value, best.1) {
            best = (idx.clone(), value);
        }
    }
    let w = PositionVector::for_user(best.0.iter().map(|&i| grid[i]).collect(), user)?;
    let g = crate::channel::channel_matrix(user, &w, scenario.bs_antennas())?;
    let q = waterfill_p2p(&g, user.power())?;
    let capacity = sum_capacity(scenario, std::slice::from_ref(&q), std::slice::from_ref(&w))?;
    Ok(report(capacity, vec![q], vec![w], vec![start, capacity], combinations as usize, &timer))
}

/// Coordinate-wise variant usable with any number of users: one antenna at
/// a time moves to the best free grid point, scored with the user's
/// re-water-filled covariance against the current interference.
pub fn benchmark_simplified_iwf_es<T: Real>(
    scenario: &Scenario<T>,
    step: Option<T>,
) -> Result<SolveReport<T>> {
    let timer = Timer::start();
    let m = scenario.bs_antennas();
    let grids = scenario
        .users()
        .iter()
        .map(|u| Ok(position_grid(u.length(), search_quantization(u.length(), u.quantization(), step)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut index: Vec<Vec<usize>> = Vec::new();
    for (u, grid) in scenario.users().iter().zip(&grids) {
        let n = u.antennas();
        if grid.len() < n {
            return Err(Error::InfeasibleMapping { needed: n, available: grid.len() });
        }
        let k = grid.len() - 1;
        index.push(if n == 1 {
            vec![0]
        } else {
            (0..n).map(|i| ((i * k) as f64 / (n - 1) as f64).round() as usize).collect()
        });
    }
    let positions = |index: &[Vec<usize>]| -> Result<Vec<PositionVector<T>>> {
        scenario
            .users()
            .iter()
            .zip(index)
            .zip(&grids)
            .map(|((u, idx), g)| PositionVector::for_user(idx.iter().map(|&i| g[i]).collect(), u))
            .collect()
    };
    let mut ws = positions(&index)?;
    let budgets: Vec<T> = scenario.users().iter().map(|u| u.power()).collect();
    let mut qs = iterative_waterfill(&scenario.channels(&ws)?, &budgets)?.covariances;
    let mut capacity = sum_capacity(scenario, &qs, &ws)?;
    let mut trace = vec![capacity];
    let mut sweeps = 0;
    while sweeps < ALG4_MAX_SWEEPS {
        sweeps += 1;
        let start = capacity;
        for (u, user) in scenario.users().iter().enumerate() {
            let omega = interference_matrix(scenario, &qs, &ws, u)?;
            let whitener = Whitener::new(&omega)?;
            let left = whitener.factor() * user.left_factor(m);
            let cols = grid_columns(&left, user.paths().aod(), &grids[u], user.antennas());
            for n in 0..user.antennas() {
                let mut best = {
                    let chosen: Vec<&CVector<T>> = index[u].iter().map(|&i| &cols[i]).collect();
                    (index[u][n], waterfill_gram_capacity(&gram(&chosen), user.power()))
                };
                for cand in 0..grids[u].len() {
                    if index[u].contains(&cand) {
                        continue;
                    }
                    let chosen: Vec<&CVector<T>> = index[u]
                        .iter()
                        .enumerate()
                        .map(|(k, &i)| if k == n { &cols[cand] } else { &cols[i] })
                        .collect();
                    let value = waterfill_gram_capacity(&gram(&chosen), user.power());
                    if improves(value, best.1) {
                        best = (cand, value);
                    }
                }
                index[u][n] = best.0;
            }
            ws = positions(&index)?;
            let g = whitener.apply(&crate::channel::channel_matrix(user, &ws[u], m)?);
            let q = waterfill_p2p(&g, user.power())?;
            let mut cand_q = qs.clone();
            cand_q[u] = q;
            capacity = sum_capacity(scenario, &cand_q, &ws)?;
            qs = cand_q;
            trace.push(capacity);
        }
        if capacity - start < T::lit(MULTI_ANTENNA_TOL) {
            break;
        }
    }
    Ok(report(capacity, qs, ws, trace, sweeps, &timer))
}
