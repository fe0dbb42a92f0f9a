//! Orchestration behind the `adiabat` CLI: builds the configured model, runs
//! propagation, tracking and the audits, and assembles CSV tables and the
//! JSON run summary. Every number in the output comes straight from a
//! library call.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::audit::{audit, marzlin_sanders_residual, AdiabaticTrajectory, ConditionReport};
use crate::config::{ModelSpec, RunConfig, SweepParameter};
use crate::dual::{
    level_correspondence, verify_condition_equivalence, verify_coupling_identity, verify_eigen_correspondence,
    DualSystem, EQUIVALENCE_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::propagator::{evolve_state, hermitian_conjugate_path, propagate, PropagatorPath};
use crate::quantum::{HamiltonianModel, ModelKind, TimeGrid};
use crate::sampled::SampledModel;
use crate::scalar::{CMatrix, Tolerances};
use crate::spectral::{track, SpectralPath};
use crate::spinhalf::{hamiltonian_a, SpinHalfParams};

pub const SIMULATE_COLUMNS: [&str; 8] = [
    "t",
    "fidelity",
    "fidelity_squared",
    "cond_pointwise_max",
    "gap_min",
    "phase_dynamic",
    "phase_geometric",
    "unitarity_defect",
];

pub const SWEEP_COLUMNS: [&str; 5] = [
    "value",
    "cond_pointwise_max",
    "roland_epsilon",
    "fidelity_min_primal",
    "fidelity_min_dual",
];

/// Residual bound for the eigen correspondence, modulus coupling identity
/// and condition equivalence checks.
pub const RESIDUAL_TOLERANCE: f64 = EQUIVALENCE_TOLERANCE;
/// Bound on `|<E(0)|U U^dagger|E(0)> - 1|`.
pub const EXACT_VALUE_TOLERANCE: f64 = 1e-10;

/// Numeric table written as CSV with 17 significant digits.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn to_csv_string(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, x) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write!(out, "{x:.16e}").expect("writing to a String");
            }
            out.push('\n');
        }
        out
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionSummary {
    pub pointwise_ratio_max: f64,
    pub hdot_ratio_max: f64,
    pub maxmin_lhs: f64,
    pub maxmin_rhs: f64,
    pub maxmin_satisfied: bool,
    pub roland_epsilon: f64,
    pub gap_min: f64,
    pub margin: f64,
    pub pointwise_satisfied: bool,
    pub roland_satisfied: bool,
}

impl From<&ConditionReport<f64>> for ConditionSummary {
    fn from(r: &ConditionReport<f64>) -> Self {
        Self {
            pointwise_ratio_max: r.pointwise_ratio_max,
            hdot_ratio_max: r.hdot_ratio_max,
            maxmin_lhs: r.lidar.lhs,
            maxmin_rhs: r.lidar.rhs,
            maxmin_satisfied: r.lidar.satisfied,
            roland_epsilon: r.roland_epsilon,
            gap_min: r.gap_min,
            margin: r.margin,
            pointwise_satisfied: r.pointwise_satisfied(),
            roland_satisfied: r.roland_satisfied(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemSummary {
    /// Ascending-energy index of the audited level in this system.
    pub level: usize,
    pub conditions: ConditionSummary,
    pub fidelity_min: f64,
    pub fidelity_final: f64,
}

impl From<&ConditionReport<f64>> for SystemSummary {
    fn from(r: &ConditionReport<f64>) -> Self {
        Self {
            level: r.level,
            conditions: r.into(),
            fidelity_min: r.fidelity_min(),
            fidelity_final: r.fidelity_final(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityResiduals {
    pub eigenvalue_residual: f64,
    pub eigenvector_overlap_deficit: f64,
    pub coupling_transported_residual: f64,
    pub coupling_transported_tolerance: f64,
    pub coupling_modulus_residual: f64,
    pub condition_equivalence_deviation: f64,
    /// `max ||U^b U^a - I||_F` with `U^b` propagated independently.
    pub propagator_conjugacy: f64,
    pub propagator_conjugacy_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarzlinSandersSummary {
    /// `<E(0)|U U^dagger|E(0)>` at `t_end`, real and imaginary parts.
    pub exact_value: [f64; 2],
    pub exact_deviation_max: f64,
    /// `|adiabatic value|` at `t_end`; one would be consistent.
    pub adiabatic_modulus: f64,
    pub adiabatic_modulus_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub command: &'static str,
    pub model: &'static str,
    pub kind: ModelKind,
    pub t_end: f64,
    pub steps: usize,
    pub max_unitarity_defect: f64,
    pub primal: SystemSummary,
    pub dual: Option<SystemSummary>,
    pub identities: Option<IdentityResiduals>,
    pub marzlin_sanders: Option<MarzlinSandersSummary>,
    pub verdicts: Vec<String>,
    /// Residuals that exceeded their tolerance; non-empty fails `verify`.
    pub failures: Vec<String>,
}

impl RunSummary {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

/// Model wrapper that substitutes the configured tolerances.
struct Configured<M> {
    inner: M,
    tol: Tolerances,
}

impl<M: HamiltonianModel<f64>> HamiltonianModel<f64> for Configured<M> {
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn kind(&self) -> ModelKind {
        self.inner.kind()
    }

    fn raw(&self, t: f64) -> Result<CMatrix<f64>> {
        self.inner.raw(t)
    }

    fn raw_derivative(&self, t: f64) -> Option<Result<CMatrix<f64>>> {
        self.inner.raw_derivative(t)
    }

    fn tolerances(&self) -> Tolerances {
        self.tol
    }
}

type PrimalModel = Arc<dyn HamiltonianModel<f64>>;

fn spin_half_params(model: &ModelSpec) -> Result<SpinHalfParams<f64>> {
    match *model {
        ModelSpec::SpinHalf { omega0, omega, theta } => SpinHalfParams::new(omega0, omega, theta),
        ModelSpec::DualOfSpinHalf { omega0, omega, theta } => SpinHalfParams::for_dual_demo(omega0, omega, theta),
        ModelSpec::Sampled { .. } => Err(Error::Usage("sampled models have no spin-half parameters".into())),
    }
}

/// Primal model for a config; for `dual_of_spin_half` this is the spin-half
/// system the dual is built from.
fn build_primal(cfg: &RunConfig) -> Result<PrimalModel> {
    let tol = cfg.audit.tolerances;
    Ok(match &cfg.model {
        ModelSpec::Sampled { path } => Arc::new(Configured { inner: SampledModel::<f64>::from_path(path)?, tol }),
        spec => Arc::new(Configured { inner: hamiltonian_a(&spin_half_params(spec)?), tol }),
    })
}

fn grid_of(cfg: &RunConfig) -> Result<TimeGrid<f64>> {
    TimeGrid::new(cfg.grid.t_end, cfg.grid.steps)
}

/// Spectral path, audit and adiabatic trajectory of one system.
struct Audited {
    path: SpectralPath<f64>,
    report: ConditionReport<f64>,
    trajectory: AdiabaticTrajectory<f64>,
}

fn audit_system<M: HamiltonianModel<f64> + ?Sized>(
    model: &M,
    path: SpectralPath<f64>,
    exact_propagator: &PropagatorPath<f64>,
    level: usize,
    margin: f64,
) -> Result<Audited> {
    if level >= path.levels() {
        return Err(Error::Usage(format!("level {level} out of range for {} levels", path.levels())));
    }
    let exact = evolve_state(exact_propagator, &path.frame(0).state(level))?;
    let report = audit(model, &path, &exact, level, margin)?;
    let trajectory = AdiabaticTrajectory::new(&path, level)?;
    Ok(Audited { path, report, trajectory })
}

/// Primal and (for the dual kind) dual audits sharing one propagation.
struct Pipeline {
    grid: TimeGrid<f64>,
    propagator: Arc<PropagatorPath<f64>>,
    primal: Audited,
    dual: Option<(Audited, PropagatorPath<f64>)>,
}

fn run_pipeline(cfg: &RunConfig, with_dual: bool) -> Result<Pipeline> {
    let model = build_primal(cfg)?;
    let grid = grid_of(cfg)?;
    let propagator = Arc::new(propagate(&model, &grid)?);
    let path_a = track(&model, &grid)?;
    let level = cfg.audit.level;
    let dual = if with_dual {
        let system = DualSystem::new(model.clone(), propagator.clone())?;
        let path_b = track(system.dual_model(), &grid)?;
        let order = level_correspondence(&path_a, &path_b)?;
        let level_b = *order
            .get(level)
            .ok_or_else(|| Error::Usage(format!("level {level} out of range for {} levels", order.len())))?;
        // The dual is driven exactly by U^dagger.
        let prop_b = hermitian_conjugate_path(&propagator);
        Some((audit_system(system.dual_model(), path_b, &prop_b, level_b, cfg.audit.margin)?, prop_b))
    } else {
        None
    };
    let primal = audit_system(&model, path_a, &propagator, level, cfg.audit.margin)?;
    Ok(Pipeline { grid, propagator, primal, dual })
}

fn system_verdict(name: &str, r: &ConditionReport<f64>) -> String {
    let cond = if r.pointwise_satisfied() { "satisfied" } else { "violated" };
    let valid = if r.fidelity_min() >= 1.0 - r.margin { "holds" } else { "fails" };
    format!(
        "{name}: pointwise condition {cond} (max {:.3e} vs margin {}); adiabatic approximation {valid} (fidelity_min {:.6})",
        r.pointwise_ratio_max,
        r.margin,
        r.fidelity_min()
    )
}

fn simulation_table(a: &Audited, prop: &PropagatorPath<f64>, grid: &TimeGrid<f64>) -> CsvTable {
    let fid = &a.report.fidelity.curve;
    let rows = (0..grid.len())
        .map(|k| {
            vec![
                grid.t(k),
                fid[k],
                fid[k] * fid[k],
                a.report.pointwise.row_max(k),
                a.path.frame(k).min_gap(),
                a.trajectory.phase_dynamic()[k],
                a.trajectory.phase_geometric()[k],
                prop.at(k).defect(),
            ]
        })
        .collect();
    CsvTable { columns: SIMULATE_COLUMNS.to_vec(), rows }
}

fn base_summary(cfg: &RunConfig, command: &'static str, p: &Pipeline) -> RunSummary {
    let kind = match cfg.model {
        ModelSpec::SpinHalf { .. } => ModelKind::AnalyticParametric,
        ModelSpec::DualOfSpinHalf { .. } => ModelKind::DualWrapper,
        ModelSpec::Sampled { .. } => ModelKind::SampledTable,
    };
    let mut verdicts = vec![system_verdict("primal", &p.primal.report)];
    if let Some((d, _)) = &p.dual {
        verdicts.push(system_verdict("dual", &d.report));
    }
    RunSummary {
        command,
        model: cfg.model.name(),
        kind,
        t_end: cfg.grid.t_end,
        steps: cfg.grid.steps,
        max_unitarity_defect: p.propagator.max_unitarity_defect(),
        primal: (&p.primal.report).into(),
        dual: p.dual.as_ref().map(|(d, _)| (&d.report).into()),
        identities: None,
        marzlin_sanders: None,
        verdicts,
        failures: Vec::new(),
    }
}

/// Propagates, tracks and audits the configured system. The CSV follows the
/// dual system for `dual_of_spin_half` and the primal one otherwise.
pub fn run_simulate(cfg: &RunConfig) -> Result<(CsvTable, RunSummary)> {
    let with_dual = matches!(cfg.model, ModelSpec::DualOfSpinHalf { .. });
    let p = run_pipeline(cfg, with_dual)?;
    let table = match &p.dual {
        Some((d, prop_b)) => simulation_table(d, prop_b, &p.grid),
        None => simulation_table(&p.primal, &p.propagator, &p.grid),
    };
    Ok((table, base_summary(cfg, "simulate", &p)))
}

/// Checks every primal/dual identity and the Marzlin–Sanders chain. The
/// returned summary lists residuals above tolerance in `failures`.
pub fn run_verify(cfg: &RunConfig) -> Result<RunSummary> {
    let model = build_primal(cfg)?;
    let grid = grid_of(cfg)?;
    let level = cfg.audit.level;
    let h = grid.step();
    let propagator = Arc::new(propagate(&model, &grid)?);
    let system = DualSystem::new(model.clone(), propagator.clone())?;
    let path_a = track(&model, &grid)?;
    let path_b = track(system.dual_model(), &grid)?;

    let eig = verify_eigen_correspondence(&system, &path_a, &path_b)?;
    let coupling = verify_coupling_identity(&system, &path_a, &path_b)?;
    let prop_b = hermitian_conjugate_path(&propagator);
    let relabeled = path_b.relabel(&eig.order)?;
    let primal = audit_system(&model, path_a, &propagator, level, cfg.audit.margin)?;
    let dual = audit_system(system.dual_model(), relabeled, &prop_b, level, cfg.audit.margin)?;
    let equivalence = verify_condition_equivalence(&primal.report, &dual.report);
    let independent_b = propagate(system.dual_model(), &grid)?;
    let conjugacy = system.propagator_conjugacy(&independent_b)?;
    let ms = marzlin_sanders_residual(&primal.path, &propagator, level)?;

    let transported_tol = RESIDUAL_TOLERANCE.max(10.0 * h * h);
    // Both paths carry the O(h^2 T) global error of the midpoint rule.
    let conjugacy_tol = RESIDUAL_TOLERANCE.max(h * h * grid.t_end());
    let identities = IdentityResiduals {
        eigenvalue_residual: eig.eigenvalue_residual,
        eigenvector_overlap_deficit: eig.overlap_deficit,
        coupling_transported_residual: coupling.transported_residual,
        coupling_transported_tolerance: transported_tol,
        coupling_modulus_residual: coupling.modulus_residual,
        condition_equivalence_deviation: equivalence.max_deviation,
        propagator_conjugacy: conjugacy,
        propagator_conjugacy_tolerance: conjugacy_tol,
    };
    let last_exact = ms.exact[ms.exact.len() - 1];
    let last_adi = ms.adiabatic[ms.adiabatic.len() - 1].norm();
    let marzlin = MarzlinSandersSummary {
        exact_value: [last_exact.re, last_exact.im],
        exact_deviation_max: ms.exact_deviation(),
        adiabatic_modulus: last_adi,
        adiabatic_modulus_squared: last_adi * last_adi,
    };

    let checks = [
        ("eigenvalue_residual", identities.eigenvalue_residual, RESIDUAL_TOLERANCE),
        ("eigenvector_overlap_deficit", identities.eigenvector_overlap_deficit, RESIDUAL_TOLERANCE),
        ("coupling_transported_residual", identities.coupling_transported_residual, transported_tol),
        ("coupling_modulus_residual", identities.coupling_modulus_residual, RESIDUAL_TOLERANCE),
        ("condition_equivalence_deviation", identities.condition_equivalence_deviation, RESIDUAL_TOLERANCE),
        ("propagator_conjugacy", identities.propagator_conjugacy, conjugacy_tol),
        ("marzlin_sanders_exact_deviation", marzlin.exact_deviation_max, EXACT_VALUE_TOLERANCE),
    ];
    let failures: Vec<String> = checks
        .iter()
        .filter(|(_, value, tol)| !(value <= tol))
        .map(|(name, value, tol)| format!("{name} = {value:e} exceeds {tol:e}"))
        .collect();

    let p = Pipeline { grid, propagator, primal, dual: Some((dual, prop_b)) };
    let mut summary = base_summary(cfg, "verify", &p);
    summary.verdicts.push(format!(
        "identities: {}",
        if failures.is_empty() { "all residuals within tolerance" } else { "residuals above tolerance" }
    ));
    summary.verdicts.push(format!(
        "marzlin-sanders: exact value {:.12} vs |adiabatic value| {:.6} at t_end",
        last_exact.re, last_adi
    ));
    summary.identities = Some(identities);
    summary.marzlin_sanders = Some(marzlin);
    summary.failures = failures;
    Ok(summary)
}

/// One row per sweep value, in input order; points run concurrently.
pub fn run_sweep(cfg: &RunConfig) -> Result<CsvTable> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| Error::Usage("sweep requires a [sweep] section".into()))?;
    if sweep.values.is_empty() {
        return Err(Error::Usage("sweep value list is empty".into()));
    }
    let (omega0, omega, theta) = cfg
        .model
        .spin_half_params()
        .ok_or_else(|| Error::Usage("sweeps are defined for the spin-half models only".into()))?;
    let rows = sweep
        .values
        .par_iter()
        .map(|&value| {
            let (omega0, omega, theta) = match sweep.parameter {
                SweepParameter::Omega0 => (value, omega, theta),
                SweepParameter::Omega => (omega0, value, theta),
                SweepParameter::Theta => (omega0, omega, value),
            };
            let point = RunConfig {
                model: ModelSpec::DualOfSpinHalf { omega0, omega, theta },
                sweep: None,
                ..cfg.clone()
            };
            let p = run_pipeline(&point, true)?;
            let (dual, _) = p.dual.as_ref().expect("pipeline ran with the dual");
            Ok(vec![
                value,
                p.primal.report.pointwise_ratio_max,
                p.primal.report.roland_epsilon,
                p.primal.report.fidelity_min(),
                dual.report.fidelity_min(),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CsvTable { columns: SWEEP_COLUMNS.to_vec(), rows })
}

/// Gnuplot script drawing `columns` (1-based, after the first) against column 1.
pub fn plot_script(csv: &Path, table: &CsvTable) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    writeln!(s, "set xlabel '{}'", table.columns[0]).expect("writing to a String");
    s.push_str("set key outside\n");
    let name = csv.display();
    let curves: Vec<String> = table
        .columns
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| format!("'{name}' using 1:{} skip 1 with lines title '{c}'", i + 1))
        .collect();
    writeln!(s, "plot {}", curves.join(", \\\n     ")).expect("writing to a String");
    s
}
