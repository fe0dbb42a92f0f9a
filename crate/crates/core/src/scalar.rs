//! Scalar abstraction and the shared tolerance record.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::{DMatrix, DVector, RealField};
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar the numerical core is generic over (`f32` or `f64`).
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Machine epsilon as an `f64`, used to pick tolerance presets.
    fn epsilon_f64() -> f64;
}

impl Real for f32 {
    fn epsilon_f64() -> f64 {
        f32::EPSILON as f64
    }
}

impl Real for f64 {
    fn epsilon_f64() -> f64 {
        f64::EPSILON
    }
}

pub type Cx<T> = Complex<T>;
pub type CMatrix<T> = DMatrix<Complex<T>>;
pub type CVector<T> = DVector<Complex<T>>;

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().expect("scalar converts to f64")
}

/// `e^{i phi}`.
#[inline]
pub fn cis<T: Real>(phi: T) -> Complex<T> {
    Complex::new(phi.cos(), phi.sin())
}

#[inline]
pub fn real<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

#[inline]
pub fn imag_unit<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

/// Numerical tolerances shared by every module. Modules read these values and
/// never redefine their own.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative anti-Hermitian part above which a matrix is rejected.
    pub hermitian_rel: f64,
    /// Unitarity defect allowed for a single propagation step.
    pub unitarity_step: f64,
    /// Unitarity defect allowed anywhere along an accumulated path.
    pub unitarity_accumulated: f64,
    /// Norm deviation allowed for states that claim to be normalized.
    pub state_norm: f64,
    /// Absolute eigenvalue gap at or below which a spectrum counts as degenerate.
    pub degeneracy: f64,
    /// Two frame-to-frame overlaps closer than this make level pairing ambiguous.
    pub overlap_ambiguity: f64,
    /// Largest tolerated real part of the diagonal Berry connection.
    pub gauge_real_part: f64,
    /// Residual allowed for an eigenpair returned by the decomposition.
    pub eigen_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian_rel: 1e-8,
            unitarity_step: 1e-10,
            unitarity_accumulated: 1e-8,
            state_norm: 1e-10,
            degeneracy: 1e-8,
            overlap_ambiguity: 0.1,
            gauge_real_part: 1e-6,
            eigen_residual: 1e-10,
        }
    }
}

impl Tolerances {
    /// Preset for single precision runs.
    pub fn single_precision() -> Self {
        Self {
            hermitian_rel: 1e-4,
            unitarity_step: 1e-5,
            unitarity_accumulated: 1e-2,
            state_norm: 1e-4,
            degeneracy: 1e-4,
            overlap_ambiguity: 0.1,
            gauge_real_part: 1e-2,
            eigen_residual: 1e-4,
        }
    }

    /// Default preset matching the precision of `T`.
    pub fn for_scalar<T: Real>() -> Self {
        if T::epsilon_f64() > 1e-10 {
            Self::single_precision()
        } else {
            Self::default()
        }
    }
}
