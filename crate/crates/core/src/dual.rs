//! The dual system `H^b(t) = -U^dagger(t) H^a(t) U(t)` built from a primal
//! model and its propagator, and checks of the correspondences between the two.
//!
//! The dual propagator is exactly `U^dagger`; its eigenvalues are the negated
//! primal eigenvalues and its eigenvectors are `U^dagger |E^a_n>`. The off-diagonal
//! couplings of the two systems coincide, so every quantitative adiabatic
//! condition holds for one system iff it holds for the other.

use std::sync::Arc;

use nalgebra::ComplexField;
use num_complex::Complex;

use crate::audit::ConditionReport;
use crate::error::{Error, Result};
use crate::propagator::{max_path_distance, step_unitary, substep, PropagatorPath};
use crate::quantum::{HamiltonianModel, ModelKind, TimeGrid};
use crate::scalar::{lit, to_f64, CMatrix, Real, Tolerances};
use crate::spectral::{connection, match_levels, SpectralPath};

/// `-U^dagger(t) H(t) U(t)`, defined on the primal propagator's time span.
///
/// On grid points the stored `U(t_k)` is used. Between grid points one extra
/// midpoint sub-step is taken from the nearest stored unitary; unitaries are
/// never interpolated.
pub struct DualModel<T: Real, M> {
    primal: M,
    propagator: Arc<PropagatorPath<T>>,
}

impl<T: Real, M: HamiltonianModel<T>> DualModel<T, M> {
    pub fn primal(&self) -> &M {
        &self.primal
    }

    pub fn propagator(&self) -> &PropagatorPath<T> {
        &self.propagator
    }

    /// Primal `U(t)` at any `t` in `[0, T]`.
    pub fn unitary_at(&self, t: T) -> Result<CMatrix<T>> {
        let grid = self.propagator.grid();
        let h = grid.step();
        let slack = h * lit(1e-9);
        if t < -slack || t > grid.t_end() + slack {
            return Err(Error::Usage(format!(
                "dual model queried at t = {t}, outside [0, {}]",
                grid.t_end()
            )));
        }
        let k = grid.nearest_index(t);
        let delta = t - grid.t(k);
        let stored = self.propagator.at(k).matrix();
        if delta.abs() <= slack {
            return Ok(stored.clone());
        }
        let h_mid = self.primal.evaluate(grid.t(k) + delta * lit(0.5))?;
        substep(&h_mid, delta, stored)
    }
}

impl<T: Real, M: HamiltonianModel<T>> HamiltonianModel<T> for DualModel<T, M> {
    fn dimension(&self) -> usize {
        self.primal.dimension()
    }

    fn kind(&self) -> ModelKind {
        ModelKind::DualWrapper
    }

    fn raw(&self, t: T) -> Result<CMatrix<T>> {
        let u = self.unitary_at(t)?;
        let h = self.primal.evaluate(t)?;
        Ok(-(u.adjoint() * h * u))
    }

    /// `d/dt (-U^dagger H U) = -U^dagger (dH/dt) U`; the commutator terms cancel.
    fn raw_derivative(&self, t: T) -> Option<Result<CMatrix<T>>> {
        Some((|| {
            let u = self.unitary_at(t)?;
            let hdot = self.primal.derivative(t, self.propagator.grid().step())?;
            Ok(-(u.adjoint() * hdot * u))
        })())
    }

    fn tolerances(&self) -> Tolerances {
        self.primal.tolerances()
    }
}

/// Builds the dual-wrapper model. `prop` must have been computed from `model`.
pub fn dual_hamiltonian<T: Real, M: HamiltonianModel<T>>(model: M, prop: Arc<PropagatorPath<T>>) -> Result<DualModel<T, M>> {
    if prop.dim() != model.dimension() {
        return Err(Error::Usage(format!(
            "propagator dimension {} differs from model dimension {}",
            prop.dim(),
            model.dimension()
        )));
    }
    let h = prop.grid().step();
    let first = step_unitary(&model.evaluate(h * lit(0.5))?, h)?;
    // A consistent propagator agrees with one midpoint step up to O(h^3).
    let mismatch = to_f64((first.matrix() - prop.at(1).matrix()).norm());
    let allowed = 1e-9f64.max(to_f64(h * h));
    if !(mismatch <= allowed) {
        return Err(Error::Usage(format!(
            "propagator was not computed from this model on its grid (first-step mismatch {mismatch:e})"
        )));
    }
    Ok(DualModel { primal: model, propagator: prop })
}

/// Primal system, its propagator and the dual built from them, all sharing one grid.
pub struct DualSystem<T: Real, M> {
    dual: DualModel<T, M>,
}

impl<T: Real, M: HamiltonianModel<T>> DualSystem<T, M> {
    pub fn new(primal: M, primal_propagator: Arc<PropagatorPath<T>>) -> Result<Self> {
        Ok(Self { dual: dual_hamiltonian(primal, primal_propagator)? })
    }

    pub fn primal(&self) -> &M {
        &self.dual.primal
    }

    pub fn primal_propagator(&self) -> &PropagatorPath<T> {
        &self.dual.propagator
    }

    pub fn dual_model(&self) -> &DualModel<T, M> {
        &self.dual
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        self.dual.propagator.grid()
    }

    /// `max_k ||U^b(t_k) U^a(t_k) - I||_F` for an independently computed dual propagator.
    pub fn propagator_conjugacy(&self, dual_prop: &PropagatorPath<T>) -> Result<T> {
        let a = self.primal_propagator();
        if a.grid() != dual_prop.grid() {
            return Err(Error::Usage("dual propagator uses a different grid".into()));
        }
        let n = a.dim();
        let id = CMatrix::<T>::identity(n, n);
        Ok(a.unitaries()
            .iter()
            .zip(dual_prop.unitaries())
            .map(|(ua, ub)| (ub.matrix() * ua.matrix() - &id).norm())
            .fold(T::zero(), |x, y| x.max(y)))
    }

    /// Distance of an independently propagated dual path from `U^dagger`.
    pub fn conjugate_path_distance(&self, dual_prop: &PropagatorPath<T>) -> Result<T> {
        max_path_distance(&crate::propagator::hermitian_conjugate_path(self.primal_propagator()), dual_prop)
    }

    fn check_paths(&self, path_a: &SpectralPath<T>, path_b: &SpectralPath<T>) -> Result<()> {
        if path_a.grid() != self.grid() || path_b.grid() != self.grid() {
            return Err(Error::Usage("spectral paths must live on the dual system's grid".into()));
        }
        if path_a.levels() != path_b.levels() {
            return Err(Error::Usage("spectral paths have different level counts".into()));
        }
        Ok(())
    }
}

/// For each primal level `n`, the dual level that continues it
/// (`|E^b_n(0)> = |E^a_n(0)>` since `U(0) = I`).
pub fn level_correspondence<T: Real>(path_a: &SpectralPath<T>, path_b: &SpectralPath<T>) -> Result<Vec<usize>> {
    match_levels(
        path_a.frame(0).eigenvectors(),
        path_b.frame(0).eigenvectors(),
        0,
        &Tolerances::for_scalar::<T>(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenCorrespondence<T: Real> {
    /// `order[n]` is the dual level paired with primal level `n`.
    pub order: Vec<usize>,
    /// `max |E^b_n + E^a_n|`.
    pub eigenvalue_residual: T,
    /// `max (1 - |<E^b_n|U^dagger|E^a_n>|)`.
    pub overlap_deficit: T,
}

/// Checks `E^b_n = -E^a_n` and `|E^b_n> ~ U^dagger |E^a_n>` on every grid point.
pub fn verify_eigen_correspondence<T: Real, M: HamiltonianModel<T>>(
    dual: &DualSystem<T, M>,
    path_a: &SpectralPath<T>,
    path_b: &SpectralPath<T>,
) -> Result<EigenCorrespondence<T>> {
    dual.check_paths(path_a, path_b)?;
    let order = level_correspondence(path_a, path_b)?;
    let mut eigenvalue_residual = T::zero();
    let mut overlap_deficit = T::zero();
    for k in 0..dual.grid().len() {
        let udag = dual.primal_propagator().at(k).matrix().adjoint();
        for (n, &j) in order.iter().enumerate() {
            eigenvalue_residual = eigenvalue_residual.max((path_b.eigenvalue(j, k) + path_a.eigenvalue(n, k)).abs());
            let o = path_b.eigenvector(j, k).dotc(&(&udag * path_a.eigenvector(n, k))).modulus();
            overlap_deficit = overlap_deficit.max(T::one() - o);
        }
    }
    Ok(EigenCorrespondence { order, eigenvalue_residual, overlap_deficit })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingIdentity<T: Real> {
    /// `max |<E^b_m|dE^b_n> - (i E^a_m delta_mn + <E^a_m|dE^a_n>)|` with the dual
    /// eigenvectors in the transported gauge `U^dagger |E^a_n>`.
    pub transported_residual: T,
    /// `max | |<E^b_m|dE^b_n>| - |<E^a_m|dE^a_n>| |` over `m != n`, in the
    /// dual path's own gauge.
    pub modulus_residual: T,
}

/// Checks the connection identity between the two systems.
///
/// The diagonal term `i E^a_m` only appears in the transported gauge, so the
/// dual path is rephased onto `U^dagger |E^a_n>` first. The off-diagonal
/// moduli are gauge independent and are compared in `path_b` as given.
pub fn verify_coupling_identity<T: Real, M: HamiltonianModel<T>>(
    dual: &DualSystem<T, M>,
    path_a: &SpectralPath<T>,
    path_b: &SpectralPath<T>,
) -> Result<CouplingIdentity<T>> {
    dual.check_paths(path_a, path_b)?;
    let order = level_correspondence(path_a, path_b)?;
    let b = path_b.relabel(&order)?;
    let prop = dual.primal_propagator();
    let transported =
        b.with_reference_gauge(|m, k| prop.at(k).matrix().adjoint() * path_a.eigenvector(m, k))?;
    // Gauge repair must leave the vectors on top of U^dagger |E^a>.
    for k in 0..dual.grid().len() {
        for m in 0..b.levels() {
            let target = prop.at(k).matrix().adjoint() * path_a.eigenvector(m, k);
            let d = to_f64((transported.eigenvector(m, k) - target).norm());
            if !(d <= 1e-6) {
                return Err(Error::Gauge {
                    index: k,
                    reason: format!("dual eigenvector {m} is {d:e} away from the transported primal eigenvector"),
                });
            }
        }
    }
    let levels = b.levels();
    let mut transported_residual = T::zero();
    let mut modulus_residual = T::zero();
    for k in 0..dual.grid().len() {
        for m in 0..levels {
            for n in 0..levels {
                let a_mn = connection(path_a, m, n, k)?;
                let diag = if m == n { Complex::new(T::zero(), path_a.eigenvalue(m, k)) } else { Complex::new(T::zero(), T::zero()) };
                let lhs = connection(&transported, m, n, k)?;
                transported_residual = transported_residual.max((lhs - diag - a_mn).modulus());
                if m != n {
                    let b_mn = connection(&b, m, n, k)?;
                    modulus_residual = modulus_residual.max((b_mn.modulus() - a_mn.modulus()).abs());
                }
            }
        }
    }
    Ok(CouplingIdentity { transported_residual, modulus_residual })
}

/// Tolerance for entrywise agreement of pointwise-condition tables.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionEquivalence<T: Real> {
    pub equivalent: bool,
    pub max_deviation: T,
}

/// Compares the pointwise ratio tables of two reports entry by entry. Both
/// reports must use the same grid and level labels (relabel the dual path
/// with [`level_correspondence`] first).
pub fn verify_condition_equivalence<T: Real>(
    report_a: &ConditionReport<T>,
    report_b: &ConditionReport<T>,
) -> ConditionEquivalence<T> {
    verify_condition_equivalence_within(report_a, report_b, EQUIVALENCE_TOLERANCE)
}

pub fn verify_condition_equivalence_within<T: Real>(
    report_a: &ConditionReport<T>,
    report_b: &ConditionReport<T>,
    tolerance: f64,
) -> ConditionEquivalence<T> {
    match report_a.pointwise.max_deviation(&report_b.pointwise) {
        Some(d) => ConditionEquivalence { equivalent: to_f64(d) <= tolerance, max_deviation: d },
        None => ConditionEquivalence { equivalent: false, max_deviation: lit(f64::INFINITY) },
    }
}
