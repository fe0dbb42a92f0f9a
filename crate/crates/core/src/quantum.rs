//! States, operators, time grids and Hamiltonian models (units with hbar = 1).

use std::fmt;

use nalgebra::ComplexField;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, CMatrix, CVector, Real, Tolerances};

/// Uniform grid `t_k = k * T / steps`, `k = 0..=steps`, starting at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T: Real> {
    t_end: T,
    steps: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(t_end: T, steps: usize) -> Result<Self> {
        if !(t_end > T::zero()) || !to_f64(t_end).is_finite() {
            return Err(Error::Usage(format!("grid end time must be finite and > 0, got {t_end}")));
        }
        if steps < 2 {
            return Err(Error::Usage(format!("grid needs at least 2 steps, got {steps}")));
        }
        Ok(Self { t_end, steps })
    }

    pub fn t_start(&self) -> T {
        T::zero()
    }

    pub fn t_end(&self) -> T {
        self.t_end
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of grid points, `steps + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> T {
        self.t_end / lit::<T>(self.steps as f64)
    }

    pub fn t(&self, k: usize) -> T {
        if k == self.steps {
            self.t_end
        } else {
            self.step() * lit::<T>(k as f64)
        }
    }

    pub fn points(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.len()).map(move |k| self.t(k))
    }

    /// Index of the grid point closest to `t` (clamped to the grid).
    pub fn nearest_index(&self, t: T) -> usize {
        let x = to_f64(t / self.step()).round();
        if x <= 0.0 {
            0
        } else {
            (x as usize).min(self.steps)
        }
    }
}

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState<T: Real> {
    amplitudes: CVector<T>,
}

impl<T: Real> QuantumState<T> {
    /// Normalizes `amplitudes`; rejects empty or zero vectors.
    pub fn new(amplitudes: CVector<T>) -> Result<Self> {
        let norm = amplitudes.norm();
        if amplitudes.is_empty() || !(norm > T::zero()) || !to_f64(norm).is_finite() {
            return Err(Error::Numerical("cannot normalize a zero or non-finite vector".into()));
        }
        Ok(Self { amplitudes: amplitudes.unscale(norm) })
    }

    /// Wraps a vector that must already be unit-norm within `tol`.
    pub fn from_unit(amplitudes: CVector<T>, tol: f64) -> Result<Self> {
        let dev = (to_f64(amplitudes.norm()) - 1.0).abs();
        if amplitudes.is_empty() || !(dev <= tol) {
            return Err(Error::Numerical(format!("state norm deviates from 1 by {dev:e} (tolerance {tol:e})")));
        }
        Ok(Self { amplitudes })
    }

    /// Standard basis vector `e_index` in dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::Usage(format!("basis index {index} out of range for dimension {dim}")));
        }
        let mut v = CVector::<T>::zeros(dim);
        v[index] = Complex::new(T::one(), T::zero());
        Ok(Self { amplitudes: v })
    }

    pub(crate) fn from_raw(amplitudes: CVector<T>) -> Self {
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector<T> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector<T> {
        self.amplitudes
    }

    pub fn norm(&self) -> T {
        self.amplitudes.norm()
    }

    /// Multiplies by a global phase factor.
    pub fn with_phase(&self, phase: Complex<T>) -> Self {
        Self { amplitudes: self.amplitudes.map(|a| a * phase) }
    }
}

/// `<a|b>`, conjugate-linear in the first argument.
pub fn inner_product<T: Real>(a: &QuantumState<T>, b: &QuantumState<T>) -> Result<Complex<T>> {
    braket(a.amplitudes(), b.amplitudes())
}

/// `<a|b>` on raw vectors.
pub fn braket<T: Real>(a: &CVector<T>, b: &CVector<T>) -> Result<Complex<T>> {
    if a.len() != b.len() {
        return Err(Error::Usage(format!("dimension mismatch: {} vs {}", a.len(), b.len())));
    }
    Ok(a.dotc(b))
}

/// `|<a|b>|` for unit states. Symmetric and insensitive to global phases.
pub fn fidelity<T: Real>(a: &QuantumState<T>, b: &QuantumState<T>) -> Result<T> {
    fidelity_with(a, b, &Tolerances::for_scalar::<T>())
}

pub fn fidelity_with<T: Real>(a: &QuantumState<T>, b: &QuantumState<T>, tol: &Tolerances) -> Result<T> {
    for (name, s) in [("first", a), ("second", b)] {
        let dev = (to_f64(s.norm()) - 1.0).abs();
        if !(dev <= tol.state_norm) {
            return Err(Error::Numerical(format!("{name} state is not normalized (|norm - 1| = {dev:e})")));
        }
    }
    let f = inner_product(a, b)?.modulus();
    Ok(f.min(T::one()))
}

/// Frobenius norm of `M - M^dagger`.
pub fn hermiticity_defect<T: Real>(m: &CMatrix<T>) -> T {
    (m - m.adjoint()).norm()
}

/// Returns `(M + M^dagger)/2`; rejects matrices whose anti-Hermitian part is
/// not roundoff-sized relative to `M`.
pub fn validate_hermitian<T: Real>(m: &CMatrix<T>) -> Result<CMatrix<T>> {
    validate_hermitian_with(m, &Tolerances::for_scalar::<T>())
}

pub fn validate_hermitian_with<T: Real>(m: &CMatrix<T>, tol: &Tolerances) -> Result<CMatrix<T>> {
    if !m.is_square() {
        return Err(Error::Usage(format!("matrix is {}x{}, expected square", m.nrows(), m.ncols())));
    }
    if m.iter().any(|z| !to_f64(z.re).is_finite() || !to_f64(z.im).is_finite()) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let adj = m.adjoint();
    let scale = to_f64(m.norm());
    let defect = to_f64((m - &adj).norm());
    if scale > 0.0 && defect > tol.hermitian_rel * scale {
        return Err(Error::Numerical(format!(
            "matrix is not Hermitian: relative defect {:e}",
            defect / scale
        )));
    }
    Ok((m + adj).scale(lit(0.5)))
}

/// Frobenius norm of `U^dagger U - I`.
pub fn unitarity_defect<T: Real>(u: &CMatrix<T>) -> T {
    let n = u.nrows();
    (u.adjoint() * u - CMatrix::<T>::identity(n, n)).norm()
}

/// Square matrix expected to be unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix<T: Real> {
    entries: CMatrix<T>,
}

impl<T: Real> UnitaryMatrix<T> {
    pub fn identity(n: usize) -> Self {
        Self { entries: CMatrix::identity(n, n) }
    }

    /// Wraps `entries`, checking the unitarity defect against `tol`.
    pub fn new(entries: CMatrix<T>, tol: f64) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::Usage("unitary matrix must be square".into()));
        }
        let d = to_f64(unitarity_defect(&entries));
        if !(d <= tol) {
            return Err(Error::Numerical(format!("unitarity defect {d:e} exceeds {tol:e}")));
        }
        Ok(Self { entries })
    }

    pub(crate) fn from_raw(entries: CMatrix<T>) -> Self {
        Self { entries }
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn defect(&self) -> T {
        unitarity_defect(&self.entries)
    }

    pub fn adjoint(&self) -> Self {
        Self { entries: self.entries.adjoint() }
    }

    /// `self * rhs`.
    pub fn compose(&self, rhs: &Self) -> Self {
        Self { entries: &self.entries * &rhs.entries }
    }

    pub fn apply(&self, state: &QuantumState<T>) -> Result<QuantumState<T>> {
        if state.dim() != self.dim() {
            return Err(Error::Usage(format!(
                "state of dimension {} applied to {}x{} operator",
                state.dim(),
                self.dim(),
                self.dim()
            )));
        }
        Ok(QuantumState::from_raw(&self.entries * state.amplitudes()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    AnalyticParametric,
    DualWrapper,
    SampledTable,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModelKind::AnalyticParametric => "analytic-parametric",
            ModelKind::DualWrapper => "dual-wrapper",
            ModelKind::SampledTable => "sampled-table",
        };
        f.write_str(s)
    }
}

/// Time-parameterized Hermitian generator `H(t)`.
///
/// Implementors provide the raw matrix; [`HamiltonianModel::evaluate`] returns
/// its Hermitian part after validation. An analytic derivative is optional;
/// without one, [`HamiltonianModel::derivative`] falls back to a centered
/// finite difference with step `max(1e-6, h/100)`.
pub trait HamiltonianModel<T: Real>: Send + Sync {
    fn dimension(&self) -> usize;

    fn kind(&self) -> ModelKind;

    fn raw(&self, t: T) -> Result<CMatrix<T>>;

    /// Analytic `dH/dt`, when the model knows it.
    fn raw_derivative(&self, _t: T) -> Option<Result<CMatrix<T>>> {
        None
    }

    fn tolerances(&self) -> Tolerances {
        Tolerances::for_scalar::<T>()
    }

    fn evaluate(&self, t: T) -> Result<CMatrix<T>> {
        let m = self.raw(t)?;
        if m.nrows() != self.dimension() {
            return Err(Error::Numerical(format!(
                "model returned a {}x{} matrix, declared dimension {}",
                m.nrows(),
                m.ncols(),
                self.dimension()
            )));
        }
        validate_hermitian_with(&m, &self.tolerances())
    }

    /// `dH/dt` at `t`; `grid_step` sets the finite-difference step when no
    /// analytic derivative is available.
    fn derivative(&self, t: T, grid_step: T) -> Result<CMatrix<T>> {
        if let Some(d) = self.raw_derivative(t) {
            return validate_hermitian_with(&d?, &self.tolerances());
        }
        let h_fd = lit::<T>(1e-6).max(grid_step / lit(100.0));
        let plus = self.evaluate(t + h_fd)?;
        let minus = self.evaluate(t - h_fd)?;
        Ok((plus - minus).unscale(h_fd + h_fd))
    }
}

impl<T: Real, M: HamiltonianModel<T> + ?Sized> HamiltonianModel<T> for &M {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn kind(&self) -> ModelKind {
        (**self).kind()
    }
    fn raw(&self, t: T) -> Result<CMatrix<T>> {
        (**self).raw(t)
    }
    fn raw_derivative(&self, t: T) -> Option<Result<CMatrix<T>>> {
        (**self).raw_derivative(t)
    }
    fn tolerances(&self) -> Tolerances {
        (**self).tolerances()
    }
}

impl<T: Real, M: HamiltonianModel<T> + ?Sized> HamiltonianModel<T> for std::sync::Arc<M> {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn kind(&self) -> ModelKind {
        (**self).kind()
    }
    fn raw(&self, t: T) -> Result<CMatrix<T>> {
        (**self).raw(t)
    }
    fn raw_derivative(&self, t: T) -> Option<Result<CMatrix<T>>> {
        (**self).raw_derivative(t)
    }
    fn tolerances(&self) -> Tolerances {
        (**self).tolerances()
    }
}

type MatrixFn<T> = Box<dyn Fn(T) -> CMatrix<T> + Send + Sync>;

/// Model backed by closures; used for ad hoc analytic Hamiltonians.
pub struct FnModel<T: Real> {
    dimension: usize,
    h: MatrixFn<T>,
    hdot: Option<MatrixFn<T>>,
}

impl<T: Real> FnModel<T> {
    pub fn new(dimension: usize, h: impl Fn(T) -> CMatrix<T> + Send + Sync + 'static) -> Self {
        Self { dimension, h: Box::new(h), hdot: None }
    }

    pub fn with_derivative(mut self, hdot: impl Fn(T) -> CMatrix<T> + Send + Sync + 'static) -> Self {
        self.hdot = Some(Box::new(hdot));
        self
    }

    /// Time-independent model.
    pub fn constant(h: CMatrix<T>) -> Self {
        let n = h.nrows();
        let zero = CMatrix::<T>::zeros(n, n);
        Self::new(n, move |_| h.clone()).with_derivative(move |_| zero.clone())
    }
}

impl<T: Real> HamiltonianModel<T> for FnModel<T> {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn kind(&self) -> ModelKind {
        ModelKind::AnalyticParametric
    }

    fn raw(&self, t: T) -> Result<CMatrix<T>> {
        Ok((self.h)(t))
    }

    fn raw_derivative(&self, t: T) -> Option<Result<CMatrix<T>>> {
        self.hdot.as_ref().map(|f| Ok(f(t)))
    }
}
