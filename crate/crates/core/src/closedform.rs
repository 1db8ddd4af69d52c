//! Position optimization for single-antenna users: the `Ψ` quadratic form,
//! the two-path closed form and the one-dimensional grid search.

use crate::capacity::{quadratic_capacity_unchecked, Whitener};
use crate::channel::{position_grid, UserConfig};
use crate::error::{Error, Result};
use crate::numkit::HermitianMatrix;
use crate::scalar::{improves, Cplx, Real};

/// `Ψ = P M Γᴴ A_Rᴴ Ω⁻¹ A_R Γ` (L × L).
pub fn psi_matrix<T: Real>(
    user: &UserConfig<T>,
    bs_antennas: usize,
    omega: &HermitianMatrix<T>,
) -> Result<HermitianMatrix<T>> {
    if omega.dim() != bs_antennas {
        return Err(Error::contract(format!(
            "interference covariance is {}x{} but M = {bs_antennas}",
            omega.dim(),
            omega.dim()
        )));
    }
    let b = Whitener::new(omega)?.apply(&user.rx_gain_matrix(bs_antennas));
    let scale = user.power() * T::from_count(bs_antennas);
    Ok(HermitianMatrix::symmetrize(b.adjoint() * b).scaled(scale))
}

/// Parameters of the two-path capacity
/// `C(w) = log₂(2ψ₂ᴵᵐ sin ρw + 2ψ₂ᴿᵉ cos ρw + ψ₁ + ψ₃ + 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPathParams<T: Real> {
    pub psi1: T,
    pub psi2: Cplx<T>,
    pub psi3: T,
    pub rho: T,
    /// `arctan(ψ₂ᴿᵉ / ψ₂ᴵᵐ)`; `None` when `ψ₂ᴵᵐ = 0`.
    pub mu: Option<T>,
    /// Smallest nonnegative maximizer of the oscillating term; `None` when
    /// `ψ₂ᴵᵐ = 0`.
    pub w0: Option<T>,
}

impl<T: Real> TwoPathParams<T> {
    pub fn new(psi: &HermitianMatrix<T>, thetas: &[T]) -> Result<Self> {
        if psi.dim() != 2 || thetas.len() != 2 {
            return Err(Error::contract("two-path parameters need a 2x2 Psi and two angles"));
        }
        let rho = T::two_pi() * (thetas[0].cos() - thetas[1].cos());
        if rho == T::zero() {
            return Err(Error::DegeneratePaths);
        }
        let psi2 = psi.entry(0, 1);
        let (mu, w0) = if psi2.im == T::zero() {
            (None, None)
        } else {
            let mu = (psi2.re / psi2.im).atan();
            let pi = T::pi();
            let half = T::frac_pi_2();
            let numerator = match (psi2.im > T::zero(), rho > T::zero()) {
                (true, true) => half - mu,
                (true, false) => -(pi + half) - mu,
                (false, true) => pi + half - mu,
                (false, false) => -half - mu,
            };
            let period = T::two_pi() / rho.abs();
            let mut w0 = numerator / rho;
            w0 -= (w0 / period).floor() * period;
            (Some(mu), Some(w0))
        };
        Ok(Self { psi1: psi.entry(0, 0).re, psi2, psi3: psi.entry(1, 1).re, rho, mu, w0 })
    }

    /// Closed-form `C(w)` in bits.
    pub fn capacity(&self, w: T) -> T {
        let two = T::lit(2.0);
        let x = self.rho * w;
        let inner = two * self.psi2.im * x.sin() + two * self.psi2.re * x.cos() + self.psi1 + self.psi3;
        (inner.max(T::zero()) + T::one()).log2()
    }
}

/// Maximizer of the two-path capacity over `[0, W]`.
pub fn two_path_w_star<T: Real>(
    params: &TwoPathParams<T>,
    length: T,
    capacity_at: impl Fn(T) -> T,
) -> T {
    match params.w0 {
        None => {
            let half_period = T::pi() / params.rho.abs();
            if params.psi2.re >= T::zero() {
                T::zero()
            } else if half_period <= length {
                half_period
            } else {
                length
            }
        }
        Some(w0) if w0 <= length => w0,
        Some(_) => {
            if improves(capacity_at(length), capacity_at(T::zero())) {
                length
            } else {
                T::zero()
            }
        }
    }
}

/// Exhaustive search of `C(w)` over `{0, W/K, …, W}`; ties go to the
/// smallest `w`.
pub fn grid_best_w<T: Real>(
    user: &UserConfig<T>,
    omega: &HermitianMatrix<T>,
    quantization: usize,
) -> Result<(T, T)> {
    let psi = psi_matrix(user, omega.dim(), omega)?;
    Ok(grid_best_on(&psi, user.paths().aod(), &position_grid(user.length(), quantization)))
}

pub(crate) fn grid_best_on<T: Real>(psi: &HermitianMatrix<T>, thetas: &[T], grid: &[T]) -> (T, T) {
    let mut best = (grid[0], quadratic_capacity_unchecked(psi, thetas, grid[0]));
    for &w in &grid[1..] {
        let c = quadratic_capacity_unchecked(psi, thetas, w);
        if improves(c, best.1) {
            best = (w, c);
        }
    }
    best
}

/// Position update of one single-antenna user against the interference
/// `Ω`: `0` for one path, the closed form for two, the grid otherwise. The
/// incumbent is kept unless the candidate is strictly better.
pub fn single_user_position_update<T: Real>(
    user: &UserConfig<T>,
    omega: &HermitianMatrix<T>,
    quantization: usize,
    incumbent: T,
) -> Result<T> {
    if user.antennas() != 1 {
        return Err(Error::WrongSolver {
            solver: "single_user_position_update",
            requirement: "a single-antenna user",
        });
    }
    let psi = psi_matrix(user, omega.dim(), omega)?;
    let thetas = user.paths().aod();
    let capacity = |w: T| quadratic_capacity_unchecked(&psi, thetas, w);
    let candidate = match user.path_count() {
        1 => T::zero(),
        2 => match TwoPathParams::new(&psi, thetas) {
            Ok(params) => two_path_w_star(&params, user.length(), capacity),
            Err(Error::DegeneratePaths) => T::zero(),
            Err(e) => return Err(e),
        },
        _ => grid_best_on(&psi, thetas, &position_grid(user.length(), quantization)).0,
    };
    Ok(if improves(capacity(candidate), capacity(incumbent)) { candidate } else { incumbent })
}
