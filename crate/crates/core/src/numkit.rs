//! Complex Hermitian linear-algebra kernel.
//!
//! Every solver in the crate funnels through this module: log-determinants
//! of Hermitian positive definite matrices, full and dominant
//! eigendecompositions, and the Frobenius projection onto the set of PSD
//! matrices with a fixed constant diagonal (the elliptope).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;

use crate::error::{BestIterate, Error, Result};
use crate::scalar::{cplx, modulus, to_f64_matrix, CMatrix, CVector, Real};

/// Relative tolerance for the Hermitian eigensolver.
pub const EIGEN_TOL: f64 = 1e-11;
/// Maximum number of sweeps in [`elliptope_project_dykstra`].
pub const DYKSTRA_MAX_SWEEPS: usize = 500;
/// Successive-iterate Frobenius change that ends the Dykstra iteration.
pub const DYKSTRA_TOL: f64 = 1e-10;
/// PSD / diagonal feasibility tolerance shared across the crate.
pub const FEAS_TOL: f64 = 1e-9;

/// Square complex matrix with exact Hermitian symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix<T: Real> {
    data: CMatrix<T>,
}

impl<T: Real> HermitianMatrix<T> {
    /// Validates `m` against Hermitian symmetry and stores its exact
    /// Hermitian part.
    pub fn new(m: CMatrix<T>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::contract(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::contract("Hermitian matrix must have dim >= 1"));
        }
        let scale = m.norm().max(T::one());
        let skew = (&m - m.adjoint()).norm();
        if skew > T::lit(1e-9) * scale || !skew.is_finite() {
            return Err(Error::contract(format!(
                "matrix is not Hermitian (|A - A^H|_F = {skew})"
            )));
        }
        Ok(Self::symmetrize(m))
    }

    /// Stores `(m + m^H) / 2` without validation. Used for products that are
    /// Hermitian in exact arithmetic.
    pub fn symmetrize(m: CMatrix<T>) -> Self {
        assert!(m.is_square() && m.nrows() > 0, "Hermitian matrix must be square and non-empty");
        let half = T::lit(0.5);
        let data = (&m + m.adjoint()).map(|z| z * half);
        Self { data }
    }

    pub fn identity(dim: usize) -> Self {
        Self::symmetrize(CMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::symmetrize(CMatrix::zeros(dim, dim))
    }

    pub fn from_real_diagonal(diag: &[T]) -> Self {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&v| cplx(v)));
        Self::symmetrize(CMatrix::from_diagonal(&d))
    }

    /// `c · v vᴴ`.
    pub fn outer(v: &CVector<T>, c: T) -> Self {
        let m = v * v.adjoint();
        Self::symmetrize(m.map(|z| z * c))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix<T> {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.data
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex<T> {
        self.data[(i, j)]
    }

    /// Real trace.
    pub fn trace(&self) -> T {
        (0..self.dim()).fold(T::zero(), |acc, i| acc + self.data[(i, i)].re)
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.dim()).map(|i| self.data[(i, i)].re).collect()
    }

    pub fn frobenius_distance(&self, other: &Self) -> T {
        (&self.data - &other.data).norm()
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self { data: self.data.map(|z| z * factor) }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::symmetrize(&self.data + &other.data)
    }

    /// `B · self · Bᴴ`.
    pub fn congruence(&self, b: &CMatrix<T>) -> Self {
        Self::symmetrize(b * &self.data * b.adjoint())
    }

    /// Widens or narrows the scalar type.
    pub fn cast<U: Real>(&self) -> HermitianMatrix<U> {
        HermitianMatrix {
            data: self.data.map(|z| Complex::new(U::lit(z.re.as_f64()), U::lit(z.im.as_f64()))),
        }
    }
}

/// Eigendecomposition `H = V diag(values) Vᴴ` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct Eigh<T: Real> {
    pub values: Vec<T>,
    pub vectors: CMatrix<T>,
}

impl<T: Real> Eigh<T> {
    pub fn min(&self) -> T {
        self.values[0]
    }

    pub fn max(&self) -> T {
        *self.values.last().expect("non-empty spectrum")
    }

    /// `V diag(f(values)) Vᴴ`.
    pub fn reconstruct_with(&self, f: impl Fn(T) -> T) -> HermitianMatrix<T> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &value) in self.values.iter().enumerate() {
            let s = cplx(f(value));
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        HermitianMatrix::symmetrize(&scaled * self.vectors.adjoint())
    }
}

fn eigen_eps<T: Real>() -> T {
    T::lit(EIGEN_TOL).max(T::default_epsilon() * T::lit(4.0))
}

/// Full Hermitian eigendecomposition, eigenvalues sorted ascending.
pub fn eigh<T: Real>(h: &HermitianMatrix<T>) -> Eigh<T> {
    eigh_eps(h, eigen_eps())
}

fn eigh_eps<T: Real>(h: &HermitianMatrix<T>, eps: T) -> Eigh<T> {
    let n = h.dim();
    let eig = SymmetricEigen::try_new(h.data.clone(), eps, 0)
        .expect("symmetric eigensolver without iteration cap always returns");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Eigh { values, vectors }
}

/// Smallest eigenvalue.
pub fn min_eigenvalue<T: Real>(h: &HermitianMatrix<T>) -> T {
    eigh(h).min()
}

/// `log₂ det(H)` for Hermitian positive definite `H`, via Cholesky.
pub fn logdet_hpd<T: Real>(h: &HermitianMatrix<T>) -> Result<T> {
    let n = h.dim();
    let a = &h.data;
    let mut l = CMatrix::<T>::zeros(n, n);
    let mut acc = T::zero();
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > T::zero()) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d.as_f64() });
        }
        let ljj = d.sqrt();
        l[(j, j)] = cplx(ljj);
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
        acc += d.log2();
    }
    Ok(acc)
}

/// Largest eigenvalue and a unit eigenvector.
///
/// The eigenvector phase is fixed so that its first largest-modulus entry is
/// real and positive, which makes the result deterministic.
pub fn dominant_eig<T: Real>(h: &HermitianMatrix<T>) -> (T, CVector<T>) {
    let n = h.dim();
    let eig = SymmetricEigen::try_new(h.data.clone(), eigen_eps::<T>(), 0)
        .expect("symmetric eigensolver without iteration cap always returns");
    let mut best = 0;
    for k in 1..n {
        if eig.eigenvalues[k] > eig.eigenvalues[best] {
            best = k;
        }
    }
    let mut v: CVector<T> = eig.eigenvectors.column(best).into_owned();
    let norm = v.norm();
    if norm > T::zero() {
        v /= cplx(norm);
    }
    let max_mod = v.iter().fold(T::zero(), |m, z| m.max(modulus(*z)));
    if let Some(pivot) = v.iter().find(|z| modulus(**z) >= max_mod * T::lit(1.0 - 1e-12)) {
        let phase = *pivot / cplx(modulus(*pivot));
        v *= phase.conj();
    }
    (eig.eigenvalues[best], v)
}

/// Nearest PSD matrix in Frobenius norm (negative eigenvalues clipped).
pub fn psd_part<T: Real>(h: &HermitianMatrix<T>) -> HermitianMatrix<T> {
    eigh(h).reconstruct_with(|v| v.max(T::zero()))
}

/// Nuclear norm (sum of absolute eigenvalues).
pub fn nuclear_norm<T: Real>(h: &HermitianMatrix<T>) -> T {
    eigh(h).values.iter().fold(T::zero(), |acc, v| acc + v.abs())
}

/// Spectral norm (largest absolute eigenvalue).
pub fn spectral_norm<T: Real>(h: &HermitianMatrix<T>) -> T {
    let e = eigh(h);
    e.min().abs().max(e.max().abs())
}

/// Largest deviation of `h` from the elliptope `{M ⪰ 0, diag(M) = c·1}`:
/// the max of the negative-eigenvalue magnitude and the diagonal error.
pub fn elliptope_violation<T: Real>(h: &HermitianMatrix<T>, diag_value: T) -> T {
    let neg = (-min_eigenvalue(h)).max(T::zero());
    let diag = h
        .diagonal()
        .into_iter()
        .fold(T::zero(), |m, d| m.max((d - diag_value).abs()));
    neg.max(diag)
}

fn with_diagonal<T: Real>(m: &CMatrix<T>, diag_value: T) -> CMatrix<T> {
    let mut out = m.clone();
    for i in 0..out.nrows() {
        out[(i, i)] = cplx(diag_value);
    }
    out
}

/// Frobenius projection of `x` onto `{M ⪰ 0, diag(M) = diag_value·1}`.
///
/// Solved through the dual `min_y ½‖(X + Diag y)₊‖² − c·Σy` by a
/// semismooth Newton method; if that stalls, Dykstra's alternating
/// projections between the PSD cone and the fixed-diagonal affine set take
/// over.
pub fn elliptope_project<T: Real>(
    x: &HermitianMatrix<T>,
    diag_value: T,
) -> Result<HermitianMatrix<T>> {
    if !(diag_value > T::zero()) {
        return Err(Error::contract(format!(
            "elliptope diagonal value must be positive, got {diag_value}"
        )));
    }
    match elliptope_newton(x, diag_value) {
        Some(p) => Ok(p),
        None => elliptope_project_dykstra(x, diag_value),
    }
}

/// Newton iterations allowed before [`elliptope_project`] falls back to Dykstra.
pub const NEWTON_MAX_STEPS: usize = 50;

fn elliptope_newton<T: Real>(x: &HermitianMatrix<T>, c: T) -> Option<HermitianMatrix<T>> {
    let n = x.dim();
    let tol = (T::lit(1e-10) * c.max(T::one())).max(T::lit(64.0) * T::default_epsilon() * x.data.norm());
    let base = x.diagonal();
    let mut y: Vec<T> = base.iter().map(|&d| c - d).collect();
    let dual = |y: &[T]| -> (T, Eigh<T>) {
        let mut m = x.data.clone();
        for i in 0..n {
            m[(i, i)] += cplx(y[i]);
        }
        let e = eigh_eps(&HermitianMatrix::symmetrize(m), T::default_epsilon());
        let half_sq = e.values.iter().fold(T::zero(), |acc, &v| acc + v.max(T::zero()).powi(2)) * T::lit(0.5);
        (half_sq - c * y.iter().fold(T::zero(), |acc, &v| acc + v), e)
    };
    let residual = |e: &Eigh<T>| -> T {
        (0..n).fold(T::zero(), |worst, k| {
            let d = (0..n).fold(T::zero(), |acc, i| acc + e.values[i].max(T::zero()) * e.vectors[(k, i)].norm_sqr());
            worst.max((d - c).abs())
        })
    };
    let (mut theta, mut e) = dual(&y);
    for _ in 0..NEWTON_MAX_STEPS {
        let plus = e.reconstruct_with(|v| v.max(T::zero()));
        let grad: Vec<T> = plus.diagonal().iter().map(|&d| d - c).collect();
        let gnorm = grad.iter().fold(T::zero(), |m, g| m.max(g.abs()));
        if gnorm <= tol {
            let mut out = plus.data;
            for i in 0..n {
                out[(i, i)] = cplx(c);
            }
            return Some(HermitianMatrix { data: out });
        }
        // generalized Hessian  H_km = Σ_ij Ω_ij Re(P_ki P̄_mi P̄_kj P_mj)
        let lam = &e.values;
        let p = &e.vectors;
        let omega = DMatrix::from_fn(n, n, |i, j| {
            let (a, b) = (lam[i], lam[j]);
            let (ap, bp) = (a.max(T::zero()), b.max(T::zero()));
            if (a - b).abs() > T::lit(1e-14) * (a.abs() + b.abs()).max(T::one()) {
                (ap - bp) / (a - b)
            } else if a > T::zero() {
                T::one()
            } else {
                T::zero()
            }
        });
        let mut hess = DMatrix::<T>::zeros(n, n);
        for k in 0..n {
            for m in k..n {
                let z: Vec<Complex<T>> = (0..n).map(|i| p[(k, i)] * p[(m, i)].conj()).collect();
                let mut acc = T::zero();
                for i in 0..n {
                    for j in 0..n {
                        acc += omega[(i, j)] * (z[i] * z[j].conj()).re;
                    }
                }
                hess[(k, m)] = acc;
                hess[(m, k)] = acc;
            }
        }
        let reg = gnorm.min(T::lit(1e-6)).max(T::lit(1e-13));
        for k in 0..n {
            hess[(k, k)] += reg;
        }
        let rhs = DVector::from_iterator(n, grad.iter().map(|&g| -g));
        let ch = hess.cholesky()?;
        let dir = ch.solve(&rhs);
        let slope = dir.iter().zip(&grad).fold(T::zero(), |acc, (d, g)| acc + *d * *g);
        if !(slope < T::zero()) {
            return None;
        }
        let mut t = T::one();
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<T> = y.iter().zip(dir.iter()).map(|(&a, &d)| a + t * d).collect();
            let (value, te) = dual(&trial);
            if value <= theta + T::lit(1e-4) * t * slope || residual(&te) <= T::lit(0.5) * gnorm {
                accepted = Some((trial, value, te));
                break;
            }
            t *= T::lit(0.5);
        }
        let (trial, value, te) = accepted?;
        y = trial;
        theta = value;
        e = te;
    }
    None
}

/// Dykstra's alternating projections between the PSD cone and the
/// fixed-diagonal affine set; returns the affine iterate once successive
/// iterates move less than [`DYKSTRA_TOL`] and it is PSD within
/// [`FEAS_TOL`].
pub fn elliptope_project_dykstra<T: Real>(
    x: &HermitianMatrix<T>,
    diag_value: T,
) -> Result<HermitianMatrix<T>> {
    if !(diag_value > T::zero()) {
        return Err(Error::contract(format!(
            "elliptope diagonal value must be positive, got {diag_value}"
        )));
    }
    let n = x.dim();
    let tol = T::lit(DYKSTRA_TOL);
    let feas = T::lit(FEAS_TOL);
    let mut current = x.data.clone();
    let mut p = CMatrix::<T>::zeros(n, n);
    let mut q = CMatrix::<T>::zeros(n, n);
    let mut change = T::zero();
    for _ in 0..DYKSTRA_MAX_SWEEPS {
        let shifted = HermitianMatrix::symmetrize(&current + &p);
        let y = psd_part(&shifted).data;
        p = &shifted.data - &y;
        let with_q = &y + &q;
        let next = with_diagonal(&with_q, diag_value);
        q = &with_q - &next;
        change = (&next - &current).norm();
        current = next;
        if change < tol {
            let candidate = HermitianMatrix::symmetrize(current.clone());
            if min_eigenvalue(&candidate) >= -feas {
                return Ok(candidate);
            }
        }
    }
    Err(Error::NonConvergence {
        routine: "elliptope_project_dykstra",
        iterations: DYKSTRA_MAX_SWEEPS,
        change: change.as_f64(),
        best: Box::new(BestIterate::Matrix(to_f64_matrix(&current))),
    })
}

/// Solves `H X = B` for Hermitian positive definite `H` through its
/// eigendecomposition.
pub fn hpd_solve<T: Real>(h: &HermitianMatrix<T>, b: &CMatrix<T>) -> Result<CMatrix<T>> {
    let e = eigh(h);
    if !(e.min() > T::zero()) {
        return Err(Error::domain(format!(
            "matrix is not positive definite (min eigenvalue {})",
            e.min()
        )));
    }
    let mut coeffs = e.vectors.adjoint() * b;
    for (i, &value) in e.values.iter().enumerate() {
        let inv = cplx(T::one() / value);
        for j in 0..coeffs.ncols() {
            coeffs[(i, j)] *= inv;
        }
    }
    Ok(&e.vectors * coeffs)
}

/// Hermitian PSD square root (negative eigenvalues clipped to zero).
pub fn psd_sqrt<T: Real>(h: &HermitianMatrix<T>) -> HermitianMatrix<T> {
    eigh(h).reconstruct_with(|v| v.max(T::zero()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix<f64> {
        CMatrix::from_fn(rows, cols, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> HermitianMatrix<f64> {
        HermitianMatrix::symmetrize(random_matrix(rng, n, n))
    }

    fn random_hpd(rng: &mut ChaCha8Rng, n: usize) -> HermitianMatrix<f64> {
        let a = random_matrix(rng, n, n);
        HermitianMatrix::symmetrize(&a * a.adjoint() + CMatrix::identity(n, n) * cplx(0.1))
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::<f64>::identity(2, 2);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(HermitianMatrix::new(m), Err(Error::Contract(_))));
        assert!(matches!(
            HermitianMatrix::new(CMatrix::<f64>::zeros(2, 3)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn symmetrize_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = random_hermitian(&mut rng, 5);
        for i in 0..5 {
            assert_eq!(h.entry(i, i).im, 0.0);
            for j in 0..5 {
                assert_eq!(h.entry(i, j), h.entry(j, i).conj());
            }
        }
    }

    #[test]
    fn logdet_trivial_values() {
        assert_eq!(logdet_hpd(&HermitianMatrix::<f64>::identity(3)).unwrap(), 0.0);
        let d = HermitianMatrix::from_real_diagonal(&[2.0, 2.0]);
        assert!((logdet_hpd::<f64>(&d).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn logdet_matches_eigenvalue_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let h = random_hpd(&mut rng, 6);
            let oracle: f64 = eigh(&h).values.iter().map(|v| v.log2()).sum();
            assert!((logdet_hpd(&h).unwrap() - oracle).abs() < 1e-10);
        }
    }

    #[test]
    fn logdet_names_failing_pivot() {
        let h = HermitianMatrix::from_real_diagonal(&[1.0, 2.0, -1.0]);
        match logdet_hpd(&h) {
            Err(Error::NotPositiveDefinite { pivot, .. }) => assert_eq!(pivot, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn logdet_product_of_commuting_diagonals() {
        let a = HermitianMatrix::from_real_diagonal(&[1.5, 3.0, 0.25]);
        let b = HermitianMatrix::from_real_diagonal(&[2.0, 0.7, 9.0]);
        let ab = HermitianMatrix::symmetrize(a.as_matrix() * b.as_matrix());
        let lhs: f64 = logdet_hpd(&ab).unwrap();
        let rhs = logdet_hpd(&a).unwrap() + logdet_hpd(&b).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn sylvester_determinant_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            // O1 = A (4x2), O2 = Aᴴ: |A Aᴴ + I_4| = |Aᴴ A + I_2|
            let a = random_matrix(&mut rng, 4, 2);
            let big = HermitianMatrix::symmetrize(&a * a.adjoint() + CMatrix::identity(4, 4));
            let small = HermitianMatrix::symmetrize(a.adjoint() * &a + CMatrix::identity(2, 2));
            assert!((logdet_hpd(&big).unwrap() - logdet_hpd(&small).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn trace_product_inequality_for_psd_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let a = random_hpd(&mut rng, 4);
            let b = random_hpd(&mut rng, 4);
            let tr_ab = (a.as_matrix() * b.as_matrix()).trace().re;
            assert!(tr_ab <= a.trace() * b.trace() + 1e-12);
        }
    }

    #[test]
    fn dominant_eig_trivial() {
        let d = HermitianMatrix::from_real_diagonal(&[3.0, 1.0]);
        let (value, v): (f64, _) = dominant_eig(&d);
        assert!((value - 3.0).abs() < 1e-14);
        assert!((v[0] - cplx(1.0)).norm() < 1e-14 && v[1].norm() < 1e-14);

        let b = CVector::from_vec(vec![
            Complex64::new(0.6, 0.0),
            Complex64::new(0.0, 0.8),
        ]);
        let (value, v) = dominant_eig(&HermitianMatrix::outer(&b, 1.0));
        assert!((value - 1.0).abs() < 1e-12);
        let overlap = (b.adjoint() * &v)[(0, 0)].norm();
        assert!((overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dominant_eig_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..9 {
            let h = random_hermitian(&mut rng, n);
            let (value, v) = dominant_eig(&h);
            let residual = (h.as_matrix() * &v - &v * cplx(value)).norm();
            assert!(residual <= 1e-9 * h.as_matrix().norm().max(1e-300));
            assert!((v.norm() - 1.0).abs() < 1e-12);
            assert!((value - eigh(&h).max()).abs() < 1e-12);
        }
    }

    #[test]
    fn elliptope_fixed_point_and_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let v = CVector::from_fn(4, |_, _| crate::scalar::unit_phasor(rng.random::<f64>() * 6.0));
        let feasible = HermitianMatrix::outer(&v, 1.0);
        let out = elliptope_project(&feasible, 1.0).unwrap();
        assert!(out.frobenius_distance(&feasible) < 1e-12);

        let d = HermitianMatrix::from_real_diagonal(&[2.0, 2.0]);
        let out = elliptope_project(&d, 1.0).unwrap();
        assert!(out.frobenius_distance(&HermitianMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn elliptope_rejects_nonpositive_diag() {
        let d = HermitianMatrix::<f64>::identity(2);
        assert!(matches!(elliptope_project(&d, 0.0), Err(Error::Contract(_))));
    }

    #[test]
    fn elliptope_projection_beats_random_feasible_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..5 {
            let x = random_hermitian(&mut rng, 3).scaled(3.0);
            let proj = elliptope_project(&x, 1.0).unwrap();
            assert!(elliptope_violation(&proj, 1.0) <= 1e-9);
            let dist = proj.frobenius_distance(&x);
            for _ in 0..1000 {
                // random feasible point: normalized Gram matrix of random vectors
                let rank = 1 + rng.random_range(0..3);
                let g = random_matrix(&mut rng, 3, rank);
                let gram = &g * g.adjoint();
                let s = DVector::from_fn(3, |i, _| 1.0 / gram[(i, i)].re.sqrt());
                let feasible = HermitianMatrix::symmetrize(CMatrix::from_fn(3, 3, |i, j| {
                    gram[(i, j)] * s[i] * s[j]
                }));
                assert!(feasible.frobenius_distance(&x) >= dist - 1e-9);
            }
        }
    }

    #[test]
    fn nuclear_norm_of_fixed_diagonal_psd_is_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let x = random_hermitian(&mut rng, 4);
        let proj = elliptope_project(&x, 0.25).unwrap();
        assert!((nuclear_norm(&proj) - 1.0).abs() < 1e-8);
        assert!(spectral_norm(&proj) <= 1.0 + 1e-9);
    }

    #[test]
    fn works_in_single_precision() {
        let d = HermitianMatrix::<f32>::from_real_diagonal(&[2.0, 2.0]);
        assert!((logdet_hpd(&d).unwrap() - 2.0).abs() < 1e-6);
        let (value, _) = dominant_eig(&HermitianMatrix::<f32>::from_real_diagonal(&[3.0, 1.0]));
        assert!((value - 3.0).abs() < 1e-5);
    }

    #[test]
    fn hpd_solve_inverts() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let h = random_hpd(&mut rng, 5);
        let b = random_matrix(&mut rng, 5, 2);
        let x = hpd_solve(&h, &b).unwrap();
        assert!((h.as_matrix() * x - b).norm() < 1e-9);
    }
}
