//! Geometric mmWave channel model.
//!
//! Lengths are measured in wavelengths (λ = 1) and the base-station ULA has
//! half-wavelength spacing. Noise is normalized to `CN(0, I_M)` everywhere, so
//! a power budget `P` is also the per-user SNR in linear scale.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cplx, unit_phasor, CMatrix, CVector, Cplx, Real};

/// BS element spacing in wavelengths.
pub const BS_SPACING: f64 = 0.5;

/// Propagation paths of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet<T: Real> {
    gains: Vec<Cplx<T>>,
    aoa: Vec<T>,
    aod: Vec<T>,
}

fn check_angle<T: Real>(angle: T, what: &str) -> Result<()> {
    if angle >= T::zero() && angle <= T::pi() {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} {angle} rad outside [0, pi]")))
    }
}

impl<T: Real> PathSet<T> {
    pub fn new(gains: Vec<Cplx<T>>, aoa: Vec<T>, aod: Vec<T>) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::config("a path set needs at least one path"));
        }
        if gains.len() != aoa.len() || gains.len() != aod.len() {
            return Err(Error::config(format!(
                "path set lengths disagree: {} gains, {} AoAs, {} AoDs",
                gains.len(),
                aoa.len(),
                aod.len()
            )));
        }
        for (&a, &d) in aoa.iter().zip(&aod) {
            check_angle(a, "angle of arrival").map_err(|e| Error::config(e.to_string()))?;
            check_angle(d, "angle of departure").map_err(|e| Error::config(e.to_string()))?;
        }
        if gains.iter().any(|g| !g.re.is_finite() || !g.im.is_finite()) {
            return Err(Error::config("path gains must be finite"));
        }
        Ok(Self { gains, aoa, aod })
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn gains(&self) -> &[Cplx<T>] {
        &self.gains
    }

    pub fn aoa(&self) -> &[T] {
        &self.aoa
    }

    pub fn aod(&self) -> &[T] {
        &self.aod
    }

    /// `Σ_l |γ_l|²`.
    pub fn total_gain(&self) -> T {
        self.gains.iter().fold(T::zero(), |acc, g| acc + g.norm_sqr())
    }
}

/// Per-user FAS configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct UserConfig<T: Real> {
    antennas: usize,
    length: T,
    power: T,
    quantization: usize,
    paths: PathSet<T>,
}

impl<T: Real> UserConfig<T> {
    pub fn new(
        antennas: usize,
        length: T,
        power: T,
        quantization: usize,
        paths: PathSet<T>,
    ) -> Result<Self> {
        if antennas == 0 {
            return Err(Error::config("each user needs at least one antenna"));
        }
        if !(length > T::zero()) || !length.is_finite() {
            return Err(Error::config(format!("FAS length must be positive, got {length}")));
        }
        if !(power > T::zero()) || !power.is_finite() {
            return Err(Error::config(format!("power budget must be positive, got {power}")));
        }
        if quantization < antennas {
            return Err(Error::config(format!(
                "quantization level K = {quantization} cannot host N = {antennas} distinct positions"
            )));
        }
        Ok(Self { antennas, length, power, quantization, paths })
    }

    /// N_u.
    pub fn antennas(&self) -> usize {
        self.antennas
    }

    /// W_u in wavelengths.
    pub fn length(&self) -> T {
        self.length
    }

    /// P_u.
    pub fn power(&self) -> T {
        self.power
    }

    /// K_u.
    pub fn quantization(&self) -> usize {
        self.quantization
    }

    pub fn paths(&self) -> &PathSet<T> {
        &self.paths
    }

    pub fn path_count(&self) -> usize {
        self.paths.len()
    }

    /// Same user with another power budget. A zero budget is allowed here so
    /// that bounds can be evaluated at `P = 0`.
    pub fn with_power(&self, power: T) -> Self {
        Self { power, ..self.clone() }
    }

    pub fn with_quantization(&self, quantization: usize) -> Result<Self> {
        Self::new(self.antennas, self.length, self.power, quantization, self.paths.clone())
    }

    /// Grid `{0, ε, …, W}` with `ε = W / K`.
    pub fn grid(&self) -> Vec<T> {
        position_grid(self.length, self.quantization)
    }

    /// `A_R Γ` (M × L).
    pub fn rx_gain_matrix(&self, bs_antennas: usize) -> CMatrix<T> {
        let mut a = rx_matrix(self.paths.aoa(), bs_antennas);
        for (l, g) in self.paths.gains().iter().enumerate() {
            for i in 0..bs_antennas {
                a[(i, l)] *= *g;
            }
        }
        a
    }

    /// `√(M N) A_R Γ`, the left factor of `G(w) = √(MN) A_R Γ A_Tᴴ(w)`.
    pub fn left_factor(&self, bs_antennas: usize) -> CMatrix<T> {
        let scale = T::from_count(bs_antennas * self.antennas).sqrt();
        self.rx_gain_matrix(bs_antennas).map(|z| z * scale)
    }
}

/// Antenna positions of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionVector<T: Real> {
    positions: Vec<T>,
}

impl<T: Real> PositionVector<T> {
    /// Validates box constraints `[0, length]` and pairwise distinctness.
    pub fn new(positions: Vec<T>, length: T) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::contract("position vector must not be empty"));
        }
        for &w in &positions {
            if !(w >= T::zero() && w <= length) {
                return Err(Error::contract(format!("position {w} outside [0, {length}]")));
            }
        }
        for (i, a) in positions.iter().enumerate() {
            if positions[i + 1..].iter().any(|b| b == a) {
                return Err(Error::contract(format!("two antennas share position {a}")));
            }
        }
        Ok(Self { positions })
    }

    pub fn for_user(positions: Vec<T>, user: &UserConfig<T>) -> Result<Self> {
        if positions.len() != user.antennas() {
            return Err(Error::contract(format!(
                "user has {} antennas but {} positions were given",
                user.antennas(),
                positions.len()
            )));
        }
        Self::new(positions, user.length())
    }

    pub(crate) fn unchecked(positions: Vec<T>) -> Self {
        Self { positions }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// A full problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T: Real> {
    bs_antennas: usize,
    users: Vec<UserConfig<T>>,
}

impl<T: Real> Scenario<T> {
    pub fn new(bs_antennas: usize, users: Vec<UserConfig<T>>) -> Result<Self> {
        if bs_antennas == 0 {
            return Err(Error::config("the base station needs at least one antenna"));
        }
        if users.is_empty() {
            return Err(Error::config("a scenario needs at least one user"));
        }
        Ok(Self { bs_antennas, users })
    }

    /// M.
    pub fn bs_antennas(&self) -> usize {
        self.bs_antennas
    }

    pub fn users(&self) -> &[UserConfig<T>] {
        &self.users
    }

    pub fn user(&self, u: usize) -> &UserConfig<T> {
        &self.users[u]
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    /// Replaces every user through `f`; used for scaling and overrides.
    pub fn map_users(&self, f: impl Fn(&UserConfig<T>) -> Result<UserConfig<T>>) -> Result<Self> {
        let users = self.users.iter().map(f).collect::<Result<Vec<_>>>()?;
        Self::new(self.bs_antennas, users)
    }

    /// Every user has a single antenna.
    pub fn is_single_antenna(&self) -> bool {
        self.users.iter().all(|u| u.antennas() == 1)
    }

    /// G_u(w_u) for every user.
    pub fn channels(&self, ws: &[PositionVector<T>]) -> Result<Vec<CMatrix<T>>> {
        if ws.len() != self.users.len() {
            return Err(Error::contract(format!(
                "{} position vectors for {} users",
                ws.len(),
                self.users.len()
            )));
        }
        self.users
            .iter()
            .zip(ws)
            .map(|(user, w)| channel_matrix(user, w, self.bs_antennas))
            .collect()
    }
}

/// Evenly spaced grid `{0, W/K, …, W}` (K + 1 points, last point exactly W).
pub fn position_grid<T: Real>(length: T, quantization: usize) -> Vec<T> {
    let k = quantization.max(1);
    let kt = T::from_count(k);
    let mut grid: Vec<T> = (0..=k).map(|i| length * T::from_count(i) / kt).collect();
    grid[k] = length;
    grid
}

/// `N` positions evenly spaced over `[0, W]` including both endpoints,
/// snapped to the user's grid (a single antenna sits at 0).
pub fn even_grid_positions<T: Real>(user: &UserConfig<T>) -> PositionVector<T> {
    let n = user.antennas();
    let k = user.quantization();
    let grid = user.grid();
    if n == 1 {
        return PositionVector::unchecked(vec![grid[0]]);
    }
    let idx = (0..n).map(|i| ((i * k) as f64 / (n - 1) as f64).round() as usize);
    PositionVector::unchecked(idx.map(|i| grid[i.min(k)]).collect())
}

/// Fixed half-wavelength array with its first element at 0.
pub fn half_wavelength_positions<T: Real>(user: &UserConfig<T>) -> Result<PositionVector<T>> {
    let n = user.antennas();
    let span = T::lit(BS_SPACING) * T::from_count(n - 1);
    if span > user.length() {
        return Err(Error::config(format!(
            "a half-wavelength array of {n} antennas spans {span} > W = {}",
            user.length()
        )));
    }
    Ok(PositionVector::unchecked(
        (0..n).map(|i| T::lit(BS_SPACING) * T::from_count(i)).collect(),
    ))
}

fn rx_phase<T: Real>(beta: T, index: usize) -> Cplx<T> {
    let two_pi = T::two_pi();
    unit_phasor(-(two_pi * T::lit(BS_SPACING) * T::from_count(index) * beta.cos()))
}

/// Phase factor `exp(−j 2π w cos θ)` of a single FAS port.
pub fn tx_phase<T: Real>(theta: T, w: T) -> Cplx<T> {
    unit_phasor(-(T::two_pi() * w * theta.cos()))
}

/// Receive steering vector `a_R(β)` of an M-element half-wavelength ULA.
pub fn steering_rx<T: Real>(beta: T, bs_antennas: usize) -> Result<CVector<T>> {
    check_angle(beta, "angle of arrival")?;
    if bs_antennas == 0 {
        return Err(Error::contract("steering vector needs at least one element"));
    }
    let scale = cplx(T::one() / T::from_count(bs_antennas).sqrt());
    Ok(CVector::from_fn(bs_antennas, |m, _| rx_phase(beta, m) * scale))
}

/// Transmit steering vector `a_T(θ, w)` for arbitrary FAS positions.
pub fn steering_tx<T: Real>(theta: T, w: &PositionVector<T>) -> Result<CVector<T>> {
    check_angle(theta, "angle of departure")?;
    let n = w.len();
    let scale = cplx(T::one() / T::from_count(n).sqrt());
    Ok(CVector::from_fn(n, |i, _| tx_phase(theta, w.as_slice()[i]) * scale))
}

/// `A_R` (M × L), columns `a_R(β_l)`.
pub fn rx_matrix<T: Real>(aoa: &[T], bs_antennas: usize) -> CMatrix<T> {
    let scale = cplx(T::one() / T::from_count(bs_antennas).sqrt());
    CMatrix::from_fn(bs_antennas, aoa.len(), |m, l| rx_phase(aoa[l], m) * scale)
}

/// `A_T(w)` (N × L), columns `a_T(θ_l, w)`.
pub fn tx_matrix<T: Real>(aod: &[T], positions: &[T]) -> CMatrix<T> {
    let scale = cplx(T::one() / T::from_count(positions.len()).sqrt());
    CMatrix::from_fn(positions.len(), aod.len(), |n, l| tx_phase(aod[l], positions[n]) * scale)
}

/// `G(w) = √(M N) A_R Γ A_Tᴴ(w)` (M × N).
pub fn channel_matrix<T: Real>(
    user: &UserConfig<T>,
    w: &PositionVector<T>,
    bs_antennas: usize,
) -> Result<CMatrix<T>> {
    if w.len() != user.antennas() {
        return Err(Error::contract(format!(
            "user has {} antennas but {} positions were given",
            user.antennas(),
            w.len()
        )));
    }
    Ok(channel_from_left(&user.left_factor(bs_antennas), user.paths().aod(), w.as_slice()))
}

/// `left · A_Tᴴ(w)` for an arbitrary left factor (whitened or not).
pub fn channel_from_left<T: Real>(left: &CMatrix<T>, aod: &[T], positions: &[T]) -> CMatrix<T> {
    left * tx_matrix(aod, positions).adjoint()
}

/// Dimensions for [`random_scenario`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDims {
    pub users: usize,
    pub bs_antennas: usize,
    pub antennas: usize,
    pub paths: usize,
    pub length: f64,
    pub quantization: usize,
    pub snr_db: f64,
}

impl Default for ScenarioDims {
    fn default() -> Self {
        Self {
            users: 1,
            bs_antennas: 16,
            antennas: 1,
            paths: 5,
            length: 10.0,
            quantization: 100,
            snr_db: 10.0,
        }
    }
}

impl ScenarioDims {
    /// Linear power from `SNR = 10 lg P` dB.
    pub fn power(&self) -> f64 {
        10f64.powf(self.snr_db / 10.0)
    }
}

/// Description of the random laws used by [`random_scenario`], recorded in
/// results metadata.
pub const GAIN_LAW: &str =
    "gains i.i.d. CN(0, 1/L); AoA and AoD i.i.d. uniform on [0, pi]; noise CN(0, I_M)";

/// Seeded random scenario: AoA/AoD uniform on `[0, π]`, gains `CN(0, 1/L)`.
pub fn random_scenario<T: Real>(seed: u64, dims: &ScenarioDims) -> Result<Scenario<T>> {
    if dims.paths == 0 {
        return Err(Error::config("need at least one path per user"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = (1.0 / (2.0 * dims.paths as f64)).sqrt();
    let power = T::lit(dims.power());
    let users = (0..dims.users)
        .map(|_| {
            let mut gains = Vec::with_capacity(dims.paths);
            let mut aoa = Vec::with_capacity(dims.paths);
            let mut aod = Vec::with_capacity(dims.paths);
            for _ in 0..dims.paths {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                gains.push(Cplx::new(T::lit(re * sigma), T::lit(im * sigma)));
                aoa.push(T::lit(rng.random::<f64>() * std::f64::consts::PI));
                aod.push(T::lit(rng.random::<f64>() * std::f64::consts::PI));
            }
            let paths = PathSet::new(gains, aoa, aod)?;
            UserConfig::new(dims.antennas, T::lit(dims.length), power, dims.quantization, paths)
        })
        .collect::<Result<Vec<_>>>()?;
    Scenario::new(dims.bs_antennas, users)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PathRecord {
    gain_re: f64,
    gain_im: f64,
    aoa_rad: f64,
    aod_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct UserRecord {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "W_lambda")]
    w_lambda: f64,
    #[serde(rename = "P")]
    p: f64,
    #[serde(rename = "K")]
    k: usize,
    paths: Vec<PathRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ScenarioRecord {
    #[serde(rename = "M")]
    m: usize,
    users: Vec<UserRecord>,
}

impl<T: Real> Scenario<T> {
    fn to_record(&self) -> ScenarioRecord {
        ScenarioRecord {
            m: self.bs_antennas,
            users: self
                .users
                .iter()
                .map(|u| UserRecord {
                    n: u.antennas,
                    w_lambda: u.length.as_f64(),
                    p: u.power.as_f64(),
                    k: u.quantization,
                    paths: (0..u.paths.len())
                        .map(|l| PathRecord {
                            gain_re: u.paths.gains[l].re.as_f64(),
                            gain_im: u.paths.gains[l].im.as_f64(),
                            aoa_rad: u.paths.aoa[l].as_f64(),
                            aod_rad: u.paths.aod[l].as_f64(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    fn from_record(record: ScenarioRecord) -> Result<Self> {
        let users = record
            .users
            .into_iter()
            .map(|u| {
                let gains = u.paths.iter().map(|p| Cplx::new(T::lit(p.gain_re), T::lit(p.gain_im)));
                let paths = PathSet::new(
                    gains.collect(),
                    u.paths.iter().map(|p| T::lit(p.aoa_rad)).collect(),
                    u.paths.iter().map(|p| T::lit(p.aod_rad)).collect(),
                )?;
                UserConfig::new(u.n, T::lit(u.w_lambda), T::lit(u.p), u.k, paths)
            })
            .collect::<Result<Vec<_>>>()?;
        Scenario::new(record.m, users)
    }

    /// Pretty-printed scenario JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_record()).expect("scenario records always serialize")
    }

    /// Parses scenario JSON and validates every invariant.
    pub fn from_json(text: &str) -> Result<Self> {
        let record: ScenarioRecord = serde_json::from_str(text)?;
        Self::from_record(record)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn single_path_user(gain: Complex64, n: usize) -> UserConfig<f64> {
        let paths = PathSet::new(vec![gain], vec![1.0], vec![0.7]).unwrap();
        UserConfig::new(n, 10.0, 1.0, 100, paths).unwrap()
    }

    #[test]
    fn steering_rx_broadside_and_endfire() {
        let a = steering_rx(PI / 2.0, 4).unwrap();
        for z in a.iter() {
            assert!((z - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        }
        let a = steering_rx(0.0, 2).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!((a[0] - Complex64::new(s, 0.0)).norm() < 1e-15);
        assert!((a[1] - Complex64::new(-s, 0.0)).norm() < 1e-15);
        assert!(matches!(steering_rx(3.5, 2), Err(Error::Domain(_))));
        assert!(matches!(steering_rx(-0.1, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn steering_tx_trivial_cases() {
        let w = PositionVector::new(vec![0.0], 1.0).unwrap();
        let a = steering_tx(1.234, &w).unwrap();
        assert!((a[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);

        let w = PositionVector::new(vec![0.0, 0.37, 2.9], 3.0).unwrap();
        let a = steering_tx(PI / 2.0, &w).unwrap();
        let s = 1.0 / 3f64.sqrt();
        for z in a.iter() {
            assert!((z - Complex64::new(s, 0.0)).norm() < 1e-15);
        }
        assert!(matches!(steering_tx(4.0, &w), Err(Error::Domain(_))));
    }

    #[test]
    fn position_vector_invariants() {
        assert!(PositionVector::new(vec![0.0, 1.0], 1.0).is_ok());
        assert!(PositionVector::new(vec![0.0, 1.5], 1.0).is_err());
        assert!(PositionVector::new(vec![0.5, 0.5], 1.0).is_err());
        assert!(PositionVector::new(vec![-0.1], 1.0).is_err());
    }

    #[test]
    fn user_config_rejects_small_grid() {
        let paths = PathSet::new(vec![Complex64::new(1.0, 0.0)], vec![1.0], vec![1.0]).unwrap();
        assert!(matches!(
            UserConfig::new(4, 10.0, 1.0, 3, paths),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn unit_channel_has_unit_modulus() {
        let user = single_path_user(Complex64::new(1.0, 0.0), 1);
        let w = PositionVector::new(vec![3.3], 10.0).unwrap();
        let g = channel_matrix(&user, &w, 1).unwrap();
        assert_eq!(g.shape(), (1, 1));
        assert!((g[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn single_path_channel_is_rank_one() {
        let user = single_path_user(Complex64::new(0.3, -0.8), 4);
        let w = PositionVector::new(vec![0.0, 1.1, 2.5, 7.0], 10.0).unwrap();
        let g = channel_matrix(&user, &w, 6).unwrap();
        let sv = g.clone().singular_values();
        assert!(sv[1] < 1e-12 * sv[0]);
    }

    #[test]
    fn dimension_mismatch_is_contract_violation() {
        let user = single_path_user(Complex64::new(1.0, 0.0), 2);
        let w = PositionVector::new(vec![0.0], 10.0).unwrap();
        assert!(matches!(channel_matrix(&user, &w, 4), Err(Error::Contract(_))));
    }

    #[test]
    fn random_scenario_is_deterministic() {
        let dims = ScenarioDims { users: 3, antennas: 2, ..Default::default() };
        let a: Scenario<f64> = random_scenario(42, &dims).unwrap();
        let b: Scenario<f64> = random_scenario(42, &dims).unwrap();
        assert_eq!(a, b);
        let c: Scenario<f64> = random_scenario(43, &dims).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn snr_sets_power() {
        let dims = ScenarioDims { snr_db: 10.0, ..Default::default() };
        let s: Scenario<f64> = random_scenario(1, &dims).unwrap();
        assert_eq!(s.user(0).power(), 10.0);
    }

    #[test]
    fn random_scenario_rejects_coarse_grid() {
        let dims = ScenarioDims { antennas: 4, quantization: 3, ..Default::default() };
        assert!(matches!(
            random_scenario::<f64>(1, &dims),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn gain_law_normalizes_total_gain() {
        let dims = ScenarioDims { users: 1, paths: 5, ..Default::default() };
        let mean = (0..10_000u64)
            .map(|seed| random_scenario::<f64>(seed, &dims).unwrap().user(0).paths().total_gain())
            .sum::<f64>()
            / 10_000.0;
        assert!((mean - 1.0).abs() < 0.05, "mean total gain {mean}");
    }

    #[test]
    fn equally_spaced_ports_are_nearly_orthogonal() {
        let n = 256;
        let positions: Vec<f64> = (0..n).map(|i| 10.0 * i as f64 / (n - 1) as f64).collect();
        let thetas = [0.3, 1.1, 1.9, 2.6];
        let a = tx_matrix(&thetas, &positions);
        let gram = a.adjoint() * &a;
        for i in 0..thetas.len() {
            assert!((gram[(i, i)].re - 1.0).abs() < 1e-12);
            for j in 0..thetas.len() {
                if i != j {
                    assert!(gram[(i, j)].norm() <= 0.1, "offdiag {}", gram[(i, j)].norm());
                }
            }
        }
    }

    #[test]
    fn grid_has_exact_endpoints() {
        let g = position_grid(10.0f64, 100);
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[100], 10.0);
        assert!((g[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn half_wavelength_array_must_fit() {
        let user = single_path_user(Complex64::new(1.0, 0.0), 4);
        let w = half_wavelength_positions(&user).unwrap();
        assert_eq!(w.as_slice(), &[0.0, 0.5, 1.0, 1.5]);
        let paths = PathSet::new(vec![Complex64::new(1.0, 0.0)], vec![1.0], vec![1.0]).unwrap();
        let short = UserConfig::new(4, 1.0, 1.0, 10, paths).unwrap();
        assert!(half_wavelength_positions(&short).is_err());
    }

    fn path_sum_channel(user: &UserConfig<f64>, w: &PositionVector<f64>, m: usize) -> CMatrix<f64> {
        let n = w.len();
        let mut g = CMatrix::zeros(m, n);
        for l in 0..user.path_count() {
            let ar = steering_rx(user.paths().aoa()[l], m).unwrap();
            let at = steering_tx(user.paths().aod()[l], w).unwrap();
            g += (&ar * at.adjoint()) * user.paths().gains()[l];
        }
        g * Complex64::new(((m * n) as f64).sqrt(), 0.0)
    }

    proptest! {
        #[test]
        fn steering_vectors_have_unit_norm(beta in 0.0..PI, m in 1usize..16, theta in 0.0..PI,
                                           raw in proptest::collection::vec(0.0..10.0f64, 1..8)) {
            prop_assert!((steering_rx(beta, m).unwrap().norm() - 1.0).abs() < 1e-12);
            let mut ws = raw.clone();
            ws.sort_by(|a, b| a.partial_cmp(b).unwrap());
            ws.dedup();
            let w = PositionVector::new(ws, 10.0).unwrap();
            prop_assert!((steering_tx(theta, &w).unwrap().norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn factored_channel_matches_path_sum(seed in 0u64..500, n in 1usize..5, l in 1usize..6, m in 1usize..9) {
            let dims = ScenarioDims { users: 1, bs_antennas: m, antennas: n, paths: l, ..Default::default() };
            let s: Scenario<f64> = random_scenario(seed, &dims).unwrap();
            let user = s.user(0);
            let w = even_grid_positions(user);
            let g = channel_matrix(user, &w, m).unwrap();
            let oracle = path_sum_channel(user, &w, m);
            prop_assert!((&g - &oracle).norm() < 1e-10);
            let rank = g.clone().rank(1e-9 * g.norm().max(1e-300));
            prop_assert!(rank <= l.min(m).min(n));
        }

        #[test]
        fn scenario_json_round_trips(seed in 0u64..1000, users in 1usize..4, n in 1usize..4) {
            let dims = ScenarioDims { users, antennas: n, ..Default::default() };
            let s: Scenario<f64> = random_scenario(seed, &dims).unwrap();
            let back = Scenario::<f64>::from_json(&s.to_json()).unwrap();
            prop_assert_eq!(s, back);
        }
    }

    #[test]
    fn reader_validates_invariants() {
        let bad = r#"{"M": 4, "users": [{"N": 2, "W_lambda": 1.0, "P": 1.0, "K": 1,
            "paths": [{"gain_re": 1.0, "gain_im": 0.0, "aoa_rad": 1.0, "aod_rad": 1.0}]}]}"#;
        assert!(matches!(Scenario::<f64>::from_json(bad), Err(Error::InvalidConfig(_))));
        let bad_angle = r#"{"M": 4, "users": [{"N": 1, "W_lambda": 1.0, "P": 1.0, "K": 10,
            "paths": [{"gain_re": 1.0, "gain_im": 0.0, "aoa_rad": 4.0, "aod_rad": 1.0}]}]}"#;
        assert!(Scenario::<f64>::from_json(bad_angle).is_err());
        assert!(matches!(Scenario::<f64>::from_json("{"), Err(Error::Json(_))));
    }
}
