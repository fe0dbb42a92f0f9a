#![allow(dead_code)]

use std::sync::Arc;

use adiabat::dual::{level_correspondence, DualSystem};
use adiabat::propagator::{evolve_state, hermitian_conjugate_path, propagate, PropagatorPath};
use adiabat::quantum::{FnModel, TimeGrid};
use adiabat::scalar::CMatrix;
use adiabat::spectral::{track, SpectralPath};
use adiabat::{audit, ConditionReport64, HamiltonianModel};
use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;

/// Random Hermitian matrix with entries bounded by `scale`.
pub fn random_hermitian(rng: &mut impl Rng, n: usize, scale: f64) -> CMatrix<f64> {
    let mut m = DMatrix::<Complex<f64>>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = Complex::new(rng.gen_range(-scale..scale), 0.0);
        for j in i + 1..n {
            let z = Complex::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale)) / 2f64.sqrt();
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

/// `H(t) = diag(-2, 0, 2) + A + cos(a t) B + sin(b t) C` with small random
/// Hermitian `A, B, C`; the gaps stay above one half.
pub fn random_smooth_model(rng: &mut impl Rng) -> FnModel<f64> {
    let mut base = random_hermitian(rng, 3, 0.1);
    for (i, e) in [-2.0, 0.0, 2.0].into_iter().enumerate() {
        base[(i, i)] += Complex::new(e, 0.0);
    }
    let b = random_hermitian(rng, 3, 0.1);
    let c = random_hermitian(rng, 3, 0.1);
    let fa: f64 = rng.gen_range(0.2..1.0);
    let fb: f64 = rng.gen_range(0.2..1.0);
    let (b2, c2) = (b.clone(), c.clone());
    FnModel::new(3, move |t: f64| {
        &base + &b * Complex::new((fa * t).cos(), 0.0) + &c * Complex::new((fb * t).sin(), 0.0)
    })
    .with_derivative(move |t: f64| {
        &b2 * Complex::new(-fa * (fa * t).sin(), 0.0) + &c2 * Complex::new(fb * (fb * t).cos(), 0.0)
    })
}

/// Everything the primal/dual comparisons need, on one grid.
pub struct DualRun<M> {
    pub grid: TimeGrid<f64>,
    pub system: DualSystem<f64, M>,
    pub propagator: Arc<PropagatorPath<f64>>,
    pub path_a: SpectralPath<f64>,
    pub path_b: SpectralPath<f64>,
    pub order: Vec<usize>,
}

pub fn dual_run<M: HamiltonianModel<f64> + Clone>(model: M, t_end: f64, steps: usize) -> DualRun<M> {
    let grid = TimeGrid::new(t_end, steps).unwrap();
    let propagator = Arc::new(propagate(&model, &grid).unwrap());
    let system = DualSystem::new(model.clone(), propagator.clone()).unwrap();
    let path_a = track(&model, &grid).unwrap();
    let path_b = track(system.dual_model(), &grid).unwrap();
    let order = level_correspondence(&path_a, &path_b).unwrap();
    DualRun { grid, system, propagator, path_a, path_b, order }
}

impl<M: HamiltonianModel<f64>> DualRun<M> {
    /// Primal and dual audits of primal level `level`, with the dual path
    /// relabelled onto the primal level order.
    pub fn reports(&self, level: usize, margin: f64) -> (ConditionReport64, ConditionReport64) {
        let exact_a = evolve_state(&self.propagator, &self.path_a.frame(0).state(level)).unwrap();
        let a = audit::audit(self.system.primal(), &self.path_a, &exact_a, level, margin).unwrap();
        let b_path = self.path_b.relabel(&self.order).unwrap();
        let prop_b = hermitian_conjugate_path(&self.propagator);
        let exact_b = evolve_state(&prop_b, &b_path.frame(0).state(level)).unwrap();
        let b = audit::audit(self.system.dual_model(), &b_path, &exact_b, level, margin).unwrap();
        (a, b)
    }
}
