use std::fmt::{Debug, Display};

use nalgebra::{DMatrix, DVector, RealField};
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar the numerical core is written against: `f32` or `f64`.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal or parameter into this scalar type.
    fn lit(value: f64) -> Self {
        <Self as FromPrimitive>::from_f64(value).expect("finite f64 converts to every Real")
    }

    fn from_count(count: usize) -> Self {
        <Self as FromPrimitive>::from_usize(count).expect("count converts to every Real")
    }

    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).expect("Real converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type Cplx<T> = Complex<T>;
pub type CMatrix<T> = DMatrix<Complex<T>>;
pub type CVector<T> = DVector<Complex<T>>;

/// `exp(j·phase)`.
pub fn unit_phasor<T: Real>(phase: T) -> Complex<T> {
    Complex::new(phase.cos(), phase.sin())
}

pub fn cplx<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

pub(crate) fn to_f64_matrix<T: Real>(m: &CMatrix<T>) -> DMatrix<Complex<f64>> {
    m.map(|z| Complex::new(z.re.as_f64(), z.im.as_f64()))
}

/// `|z|` without requiring `num_traits::Float` on the scalar.
pub fn modulus<T: Real>(z: Complex<T>) -> T {
    z.norm_sqr().sqrt()
}

/// Tie rule for every argmax in the crate: a candidate replaces the incumbent
/// only if it is larger by more than a relative `1e-12`, so earlier (smaller
/// position) candidates win ties.
pub(crate) fn improves<T: Real>(candidate: T, best: T) -> bool {
    candidate > best + T::lit(1e-12) * best.abs().max(T::one())
}
