//! Adiabatic reference trajectories, validity fidelities and the quantitative
//! adiabatic-condition metrics.
//!
//! Three condition variants are evaluated:
//!
//! * pointwise: `|<E_m|dE_n/dt> / (E_m - E_n)|`, equivalently
//!   `|<E_m|dH/dt|E_n>| / |E_m - E_n|^2`, maximized over `t` and `m != n`;
//! * max/min form: `max |<E_m|dH/dt|E_n> / (E_n - E_m)|` compared with
//!   `min |E_n - E_m|`;
//! * ratio form: `eps = max |<E_m|dH/dt|E_n>| / (min |E_m - E_n|)^2`.
//!
//! "Much smaller than" is never decided silently: every metric is reported as a
//! number next to a configurable satisfaction margin.

use nalgebra::ComplexField;
use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::propagator::{PropagatorPath, StateTrajectory};
use crate::quantum::{fidelity_with, HamiltonianModel, QuantumState, TimeGrid};
use crate::scalar::{cis, lit, to_f64, Real, Tolerances};
use crate::spectral::{connection, hdot_element, SpectralPath};

/// Default satisfaction margin for "much smaller than one".
pub const DEFAULT_MARGIN: f64 = 0.1;

/// Cumulative trapezoid of uniformly spaced samples, starting at zero.
pub fn cumulative_trapezoid<T: Real>(samples: &[T], h: T) -> Vec<T> {
    let half: T = lit(0.5);
    let mut out = Vec::with_capacity(samples.len());
    let mut acc = T::zero();
    out.push(acc);
    for w in samples.windows(2) {
        acc += (w[0] + w[1]) * h * half;
        out.push(acc);
    }
    out
}

/// Phase `alpha_n(t) = dynamic + geometric` sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticPhase<T: Real> {
    /// `-int_0^t E_n`.
    pub dynamic: Vec<T>,
    /// `i int_0^t <E_n|dE_n/dt>`, real for a normalized family.
    pub geometric: Vec<T>,
}

impl<T: Real> AdiabaticPhase<T> {
    pub fn total(&self, k: usize) -> T {
        self.dynamic[k] + self.geometric[k]
    }
}

/// `<E_n|dE_n/dt>` on every grid point, checked to be purely imaginary.
fn diagonal_connection<T: Real>(path: &SpectralPath<T>, level: usize) -> Result<Vec<Complex<T>>> {
    let tol = Tolerances::for_scalar::<T>();
    (0..path.grid().len())
        .map(|k| {
            let a = connection(path, level, level, k)?;
            if !(to_f64(a.re.abs()) <= tol.gauge_real_part) {
                return Err(Error::Gauge {
                    index: k,
                    reason: format!("Re<E_n|dE_n> = {:e} is not negligible", to_f64(a.re)),
                });
            }
            Ok(a)
        })
        .collect()
}

/// Dynamic and geometric phase of level `level` by cumulative trapezoid.
pub fn adiabatic_phase<T: Real>(path: &SpectralPath<T>, level: usize) -> Result<AdiabaticPhase<T>> {
    let h = path.grid().step();
    let energies: Vec<T> = (0..path.grid().len()).map(|k| -path.eigenvalue(level, k)).collect();
    // i * (i b) = -b
    let berry: Vec<T> = diagonal_connection(path, level)?.into_iter().map(|a| -a.im).collect();
    Ok(AdiabaticPhase {
        dynamic: cumulative_trapezoid(&energies, h),
        geometric: cumulative_trapezoid(&berry, h),
    })
}

/// `e^{i alpha_n(t_k)} |E_n(t_k)>`.
pub fn adiabatic_state<T: Real>(path: &SpectralPath<T>, phase: &AdiabaticPhase<T>, level: usize, k: usize) -> QuantumState<T> {
    path.frame(k).state(level).with_phase(cis(phase.total(k)))
}

/// The adiabatic approximation of the evolution that starts in level `level`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticTrajectory<T: Real> {
    level: usize,
    grid: TimeGrid<T>,
    phase: AdiabaticPhase<T>,
    states: StateTrajectory<T>,
}

impl<T: Real> AdiabaticTrajectory<T> {
    pub fn new(path: &SpectralPath<T>, level: usize) -> Result<Self> {
        let phase = adiabatic_phase(path, level)?;
        let states = (0..path.grid().len()).map(|k| adiabatic_state(path, &phase, level, k)).collect();
        Ok(Self { level, grid: *path.grid(), states: StateTrajectory::new(*path.grid(), states)?, phase })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn phase_dynamic(&self) -> &[T] {
        &self.phase.dynamic
    }

    pub fn phase_geometric(&self) -> &[T] {
        &self.phase.geometric
    }

    pub fn phase(&self) -> &AdiabaticPhase<T> {
        &self.phase
    }

    pub fn states(&self) -> &StateTrajectory<T> {
        &self.states
    }

    pub fn state(&self, k: usize) -> &QuantumState<T> {
        self.states.at(k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityCurve<T: Real> {
    pub curve: Vec<T>,
    pub min: T,
    pub final_value: T,
}

impl<T: Real> FidelityCurve<T> {
    fn from_curve(curve: Vec<T>) -> Self {
        let min = curve.iter().copied().fold(T::one(), |a, b| a.min(b));
        let final_value = *curve.last().expect("non-empty curve");
        Self { curve, min, final_value }
    }

    pub fn squared(&self) -> Vec<T> {
        self.curve.iter().map(|&f| f * f).collect()
    }
}

/// `|<psi_adi(t_k)|psi(t_k)>|` along the grid.
pub fn validity_fidelity<T: Real>(adi: &AdiabaticTrajectory<T>, exact: &StateTrajectory<T>) -> Result<FidelityCurve<T>> {
    if adi.grid() != exact.grid() {
        return Err(Error::Usage("adiabatic and exact trajectories live on different grids".into()));
    }
    let tol = Tolerances::for_scalar::<T>();
    let curve = adi
        .states()
        .states()
        .iter()
        .zip(exact.states())
        .map(|(a, b)| fidelity_with(a, b, &tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(FidelityCurve::from_curve(curve))
}

/// Which reduced expression of the validity fidelity to evaluate.
pub enum ReducedForm<'a, T: Real> {
    /// System evolved by `U`: `|<E_n(t)|U(t)|E_n(0)>|`.
    Primal { propagator: &'a PropagatorPath<T> },
    /// Dual system, expressed through the primal eigenstates:
    /// `|<E^a_n(t)|E^a_n(0)>|`.
    Dual,
}

/// Reduced fidelity curve for `level` of `path`. For [`ReducedForm::Dual`],
/// `path` must be the primal system's path.
pub fn reduced_fidelity<T: Real>(path: &SpectralPath<T>, level: usize, form: ReducedForm<'_, T>) -> Result<FidelityCurve<T>> {
    let e0 = path.eigenvector(level, 0);
    let curve = match form {
        ReducedForm::Primal { propagator } => {
            if propagator.grid() != path.grid() {
                return Err(Error::Usage("propagator and spectral path live on different grids".into()));
            }
            (0..path.grid().len())
                .map(|k| path.eigenvector(level, k).dotc(&(propagator.at(k).matrix() * &e0)).modulus())
                .collect()
        }
        ReducedForm::Dual => (0..path.grid().len())
            .map(|k| path.eigenvector(level, k).dotc(&e0).modulus())
            .collect(),
    };
    Ok(FidelityCurve::from_curve(curve))
}

/// Per-grid-point table indexed by ordered level pairs `(m, n)`, `m != n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTable<T: Real> {
    levels: usize,
    entries: Vec<T>,
}

impl<T: Real> PairTable<T> {
    fn pairs(levels: usize) -> impl Iterator<Item = (usize, usize)> {
        (0..levels).flat_map(move |m| (0..levels).filter(move |&n| n != m).map(move |n| (m, n)))
    }

    fn width(levels: usize) -> usize {
        levels * (levels - 1)
    }

    fn build(levels: usize, points: usize, f: impl Fn(usize, usize, usize) -> Result<T> + Sync) -> Result<Self> {
        let rows: Vec<Vec<T>> = (0..points)
            .into_par_iter()
            .map(|k| Self::pairs(levels).map(|(m, n)| f(k, m, n)).collect::<Result<Vec<T>>>())
            .collect::<Result<_>>()?;
        Ok(Self { levels, entries: rows.into_iter().flatten().collect() })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn points(&self) -> usize {
        self.entries.len() / Self::width(self.levels)
    }

    pub fn get(&self, k: usize, m: usize, n: usize) -> T {
        assert!(m != n && m < self.levels && n < self.levels);
        let col = m * (self.levels - 1) + if n > m { n - 1 } else { n };
        self.entries[k * Self::width(self.levels) + col]
    }

    pub fn row(&self, k: usize) -> &[T] {
        let w = Self::width(self.levels);
        &self.entries[k * w..(k + 1) * w]
    }

    pub fn row_max(&self, k: usize) -> T {
        self.row(k).iter().copied().fold(T::zero(), |a, b| a.max(b))
    }

    pub fn max(&self) -> T {
        self.entries.iter().copied().fold(T::zero(), |a, b| a.max(b))
    }

    pub fn min(&self) -> T {
        self.entries.iter().copied().fold(self.entries[0], |a, b| a.min(b))
    }

    /// Largest entrywise deviation; `None` when the shapes differ.
    pub fn max_deviation(&self, other: &Self) -> Option<T> {
        if self.levels != other.levels || self.entries.len() != other.entries.len() {
            return None;
        }
        Some(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| (*a - *b).abs())
                .fold(T::zero(), |a, b| a.max(b)),
        )
    }
}

/// `|<E_m|dE_n/dt> / (E_m - E_n)|` for all `m != n` and grid points, with the
/// eigenvector derivative taken by finite differences.
pub fn condition_pointwise<T: Real>(path: &SpectralPath<T>) -> Result<PairTable<T>> {
    PairTable::build(path.levels(), path.grid().len(), |k, m, n| {
        let gap = path.eigenvalue(m, k) - path.eigenvalue(n, k);
        Ok(connection(path, m, n, k)?.modulus() / gap.abs())
    })
}

/// `|<E_m(t_k)|dH/dt|E_n(t_k)>|` for all `m != n`.
pub fn hdot_elements<T: Real, M: HamiltonianModel<T> + ?Sized>(model: &M, path: &SpectralPath<T>) -> Result<PairTable<T>> {
    let grid = *path.grid();
    let hdots = (0..grid.len())
        .into_par_iter()
        .map(|k| model.derivative(grid.t(k), grid.step()))
        .collect::<Result<Vec<_>>>()?;
    PairTable::build(path.levels(), grid.len(), |k, m, n| Ok(hdot_element(&hdots[k], path, m, n, k)?.modulus()))
}

/// `|E_m - E_n|` for all `m != n`.
pub fn gap_table<T: Real>(path: &SpectralPath<T>) -> Result<PairTable<T>> {
    PairTable::build(path.levels(), path.grid().len(), |k, m, n| Ok((path.eigenvalue(m, k) - path.eigenvalue(n, k)).abs()))
}

/// `|<E_m|dH/dt|E_n>| / |E_m - E_n|^2`, the derivative-free form of the
/// pointwise condition.
pub fn condition_hdot<T: Real>(elements: &PairTable<T>, gaps: &PairTable<T>) -> Result<PairTable<T>> {
    if elements.max_deviation(gaps).is_none() {
        return Err(Error::Usage("element and gap tables differ in shape".into()));
    }
    PairTable::build(elements.levels, elements.points(), |k, m, n| {
        let g = gaps.get(k, m, n);
        Ok(elements.get(k, m, n) / (g * g))
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxMinCondition<T: Real> {
    /// `max |<E_m|dH/dt|E_n> / (E_n - E_m)|`.
    pub lhs: T,
    /// `min |E_n - E_m|`.
    pub rhs: T,
    pub satisfied: bool,
}

/// Max/min form; satisfied iff `lhs <= margin * rhs`.
pub fn condition_lidar<T: Real>(elements: &PairTable<T>, gaps: &PairTable<T>, margin: f64) -> Result<MaxMinCondition<T>> {
    if elements.max_deviation(gaps).is_none() {
        return Err(Error::Usage("element and gap tables differ in shape".into()));
    }
    let ratios = PairTable::build(elements.levels, elements.points(), |k, m, n| Ok(elements.get(k, m, n) / gaps.get(k, m, n)))?;
    let lhs = ratios.max();
    let rhs = gaps.min();
    Ok(MaxMinCondition { lhs, rhs, satisfied: lhs <= lit::<T>(margin) * rhs })
}

/// `eps = max |<E_m|dH/dt|E_n>| / (min |E_m - E_n|)^2`.
pub fn condition_roland<T: Real>(elements: &PairTable<T>, gaps: &PairTable<T>) -> T {
    let g = gaps.min();
    elements.max() / (g * g)
}

/// All condition metrics and validity fidelities for one level of one system.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport<T: Real> {
    pub level: usize,
    pub pointwise: PairTable<T>,
    pub pointwise_ratio_max: T,
    pub hdot_ratio_max: T,
    pub lidar: MaxMinCondition<T>,
    pub roland_epsilon: T,
    pub gap_min: T,
    pub margin: f64,
    pub fidelity: FidelityCurve<T>,
}

impl<T: Real> ConditionReport<T> {
    pub fn fidelity_min(&self) -> T {
        self.fidelity.min
    }

    pub fn fidelity_final(&self) -> T {
        self.fidelity.final_value
    }

    /// Pointwise condition judged against the margin.
    pub fn pointwise_satisfied(&self) -> bool {
        self.pointwise_ratio_max <= lit::<T>(self.margin)
    }

    pub fn roland_satisfied(&self) -> bool {
        self.roland_epsilon <= lit::<T>(self.margin)
    }
}

/// Runs every condition metric on `path` and the validity fidelity of the
/// adiabatic trajectory of `level` against `exact`.
pub fn audit<T: Real, M: HamiltonianModel<T> + ?Sized>(
    model: &M,
    path: &SpectralPath<T>,
    exact: &StateTrajectory<T>,
    level: usize,
    margin: f64,
) -> Result<ConditionReport<T>> {
    if level >= path.levels() {
        return Err(Error::Usage(format!("level {level} out of range for {} levels", path.levels())));
    }
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::Usage(format!("satisfaction margin must lie in (0, 1), got {margin}")));
    }
    let pointwise = condition_pointwise(path)?;
    let elements = hdot_elements(model, path)?;
    let gaps = gap_table(path)?;
    let hdot = condition_hdot(&elements, &gaps)?;
    let adi = AdiabaticTrajectory::new(path, level)?;
    Ok(ConditionReport {
        level,
        pointwise_ratio_max: pointwise.max(),
        pointwise,
        hdot_ratio_max: hdot.max(),
        lidar: condition_lidar(&elements, &gaps, margin)?,
        roland_epsilon: condition_roland(&elements, &gaps),
        gap_min: gaps.min(),
        margin,
        fidelity: validity_fidelity(&adi, exact)?,
    })
}

/// Both sides of the chain that substitutes the adiabatic approximation into
/// the identity `<E_n(0)|U U^dagger|E_n(0)> = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarzlinSanders<T: Real> {
    /// `<E_n(0)|U(t) U^dagger(t)|E_n(0)>` computed literally; identically one.
    pub exact: Vec<Complex<T>>,
    /// `e^{-int <E_n|dE_n>} <E_n(0)|E_n(t)>`; not of unit modulus in general.
    pub adiabatic: Vec<Complex<T>>,
}

impl<T: Real> MarzlinSanders<T> {
    /// `max_k |exact_k - 1|`.
    pub fn exact_deviation(&self) -> T {
        self.exact
            .iter()
            .map(|z| (*z - Complex::new(T::one(), T::zero())).modulus())
            .fold(T::zero(), |a, b| a.max(b))
    }
}

pub fn marzlin_sanders_residual<T: Real>(
    path_a: &SpectralPath<T>,
    prop_a: &PropagatorPath<T>,
    level: usize,
) -> Result<MarzlinSanders<T>> {
    if path_a.grid() != prop_a.grid() {
        return Err(Error::Usage("spectral path and propagator live on different grids".into()));
    }
    let berry = diagonal_connection(path_a, level)?;
    // int <E|dE> = i B with B real
    let b_im: Vec<T> = berry.iter().map(|a| a.im).collect();
    let integral = cumulative_trapezoid(&b_im, path_a.grid().step());
    let e0 = path_a.eigenvector(level, 0);
    let mut exact = Vec::with_capacity(integral.len());
    let mut adiabatic = Vec::with_capacity(integral.len());
    for (k, b) in integral.into_iter().enumerate() {
        let u = prop_a.at(k).matrix();
        let uu = u * u.adjoint();
        exact.push(e0.dotc(&(uu * &e0)));
        adiabatic.push(cis(-b) * e0.dotc(&path_a.eigenvector(level, k)));
    }
    Ok(MarzlinSanders { exact, adiabatic })
}
