//! Time-ordered propagation with the midpoint exponential rule
//! `U(t_{k+1}) = exp(-i h H(t_k + h/2)) U(t_k)`.

use crate::error::{Error, Result};
use crate::quantum::{HamiltonianModel, QuantumState, TimeGrid, UnitaryMatrix};
use crate::scalar::{cis, lit, to_f64, CMatrix, Real, Tolerances};

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching orthonormal eigenvectors as columns.
pub(crate) fn hermitian_eigen<T: Real>(h: &CMatrix<T>) -> Result<(Vec<T>, CMatrix<T>)> {
    let n = h.nrows();
    let eig = h
        .clone()
        .try_symmetric_eigen(T::default_epsilon(), 10_000)
        .ok_or_else(|| Error::Numerical("Hermitian eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::<T>::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        vectors.set_column(j, &eig.eigenvectors.column(i));
    }
    Ok((values, vectors))
}

/// `exp(-i h H)` for Hermitian `H` via its eigendecomposition.
pub fn step_unitary<T: Real>(h_mid: &CMatrix<T>, h: T) -> Result<UnitaryMatrix<T>> {
    if !(h > T::zero()) {
        return Err(Error::Usage(format!("step size must be > 0, got {h}")));
    }
    Ok(UnitaryMatrix::from_raw(exp_minus_i(h_mid, h)?))
}

/// `exp(-i tau H)` for any real `tau` (negative values run backwards).
pub(crate) fn exp_minus_i<T: Real>(h_mid: &CMatrix<T>, tau: T) -> Result<CMatrix<T>> {
    let (values, vectors) = hermitian_eigen(h_mid)?;
    let mut scaled = vectors.clone();
    for (j, &e) in values.iter().enumerate() {
        let phase = cis(-(tau * e));
        for z in scaled.column_mut(j).iter_mut() {
            *z *= phase;
        }
    }
    Ok(scaled * vectors.adjoint())
}

/// Unitaries `U(t_k)` on every grid point, `U(t_0) = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorPath<T: Real> {
    grid: TimeGrid<T>,
    unitaries: Vec<UnitaryMatrix<T>>,
    max_unitarity_defect: T,
}

impl<T: Real> PropagatorPath<T> {
    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn unitaries(&self) -> &[UnitaryMatrix<T>] {
        &self.unitaries
    }

    pub fn at(&self, k: usize) -> &UnitaryMatrix<T> {
        &self.unitaries[k]
    }

    pub fn last(&self) -> &UnitaryMatrix<T> {
        self.unitaries.last().expect("path has at least three points")
    }

    pub fn dim(&self) -> usize {
        self.unitaries[0].dim()
    }

    pub fn max_unitarity_defect(&self) -> T {
        self.max_unitarity_defect
    }

    /// Per-point unitarity defects.
    pub fn unitarity_defects(&self) -> Vec<T> {
        self.unitaries.iter().map(|u| u.defect()).collect()
    }
}

/// Integrates `i dU/dt = H(t) U` on `grid` from `U(0) = I`.
pub fn propagate<T: Real, M: HamiltonianModel<T> + ?Sized>(model: &M, grid: &TimeGrid<T>) -> Result<PropagatorPath<T>> {
    propagate_with(model, grid, &model.tolerances())
}

pub fn propagate_with<T: Real, M: HamiltonianModel<T> + ?Sized>(
    model: &M,
    grid: &TimeGrid<T>,
    tol: &Tolerances,
) -> Result<PropagatorPath<T>> {
    let n = model.dimension();
    if n < 2 {
        return Err(Error::Usage(format!("model dimension must be >= 2, got {n}")));
    }
    let unitaries = propagate_segment(
        model,
        T::zero(),
        grid.step(),
        grid.steps(),
        &UnitaryMatrix::identity(n),
        tol,
    )?;
    let max_unitarity_defect = unitaries
        .iter()
        .map(|u| u.defect())
        .fold(T::zero(), |a, b| a.max(b));
    Ok(PropagatorPath { grid: *grid, unitaries, max_unitarity_defect })
}

/// Propagates `steps` midpoint steps of size `h` starting at `t0` from the
/// seed unitary. Returns `steps + 1` unitaries, the first being `seed`.
pub fn propagate_segment<T: Real, M: HamiltonianModel<T> + ?Sized>(
    model: &M,
    t0: T,
    h: T,
    steps: usize,
    seed: &UnitaryMatrix<T>,
    tol: &Tolerances,
) -> Result<Vec<UnitaryMatrix<T>>> {
    if seed.dim() != model.dimension() {
        return Err(Error::Usage("seed unitary dimension differs from model".into()));
    }
    let half: T = lit(0.5);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(seed.clone());
    let mut current = seed.clone();
    for k in 0..steps {
        let t_mid = t0 + h * (lit::<T>(k as f64) + half);
        let h_mid = model.evaluate(t_mid)?;
        let step = step_unitary(&h_mid, h)?;
        let d_step = to_f64(step.defect());
        if !(d_step <= tol.unitarity_step) {
            return Err(Error::Numerical(format!(
                "single-step unitarity defect {d_step:e} exceeds {:e} at t = {t_mid}",
                tol.unitarity_step
            )));
        }
        current = step.compose(&current);
        let d = to_f64(current.defect());
        if !(d <= tol.unitarity_accumulated) {
            return Err(Error::Numerical(format!(
                "accumulated unitarity defect {d:e} exceeds {:e} at step {}",
                tol.unitarity_accumulated,
                k + 1
            )));
        }
        out.push(current.clone());
    }
    Ok(out)
}

/// States `U(t_k) |psi_0>` along a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory<T: Real> {
    grid: TimeGrid<T>,
    states: Vec<QuantumState<T>>,
}

impl<T: Real> StateTrajectory<T> {
    pub fn new(grid: TimeGrid<T>, states: Vec<QuantumState<T>>) -> Result<Self> {
        if states.len() != grid.len() {
            return Err(Error::Usage(format!(
                "trajectory has {} states for {} grid points",
                states.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, states })
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn states(&self) -> &[QuantumState<T>] {
        &self.states
    }

    pub fn at(&self, k: usize) -> &QuantumState<T> {
        &self.states[k]
    }

    /// Multiplies every state by its own phase `e^{i phi_k}`.
    pub fn with_phases(&self, phases: &[T]) -> Result<Self> {
        if phases.len() != self.states.len() {
            return Err(Error::Usage("phase count differs from trajectory length".into()));
        }
        let states = self.states.iter().zip(phases).map(|(s, &p)| s.with_phase(cis(p))).collect();
        Ok(Self { grid: self.grid, states })
    }
}

pub fn evolve_state<T: Real>(path: &PropagatorPath<T>, initial: &QuantumState<T>) -> Result<StateTrajectory<T>> {
    let tol = Tolerances::for_scalar::<T>();
    let states = path
        .unitaries
        .iter()
        .map(|u| {
            let s = u.apply(initial)?;
            let dev = (to_f64(s.norm()) - to_f64(initial.norm())).abs();
            if !(dev <= tol.state_norm) {
                return Err(Error::Numerical(format!("evolution changed the norm by {dev:e}")));
            }
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    StateTrajectory::new(path.grid, states)
}

/// Replaces every `U(t_k)` with `U(t_k)^dagger`: the exact propagator of the
/// dual system `-U^dagger H U`.
pub fn hermitian_conjugate_path<T: Real>(path: &PropagatorPath<T>) -> PropagatorPath<T> {
    PropagatorPath {
        grid: path.grid,
        unitaries: path.unitaries.iter().map(UnitaryMatrix::adjoint).collect(),
        max_unitarity_defect: path.max_unitarity_defect,
    }
}

/// Largest Frobenius distance between matched unitaries of two paths.
pub fn max_path_distance<T: Real>(a: &PropagatorPath<T>, b: &PropagatorPath<T>) -> Result<T> {
    if a.unitaries.len() != b.unitaries.len() || a.dim() != b.dim() {
        return Err(Error::Usage("paths differ in length or dimension".into()));
    }
    Ok(a.unitaries
        .iter()
        .zip(&b.unitaries)
        .map(|(x, y)| (x.matrix() - y.matrix()).norm())
        .fold(T::zero(), |m, d| m.max(d)))
}

/// Single-site helper used by off-grid dual evaluation: `exp(-i tau H) U`
/// with `tau` of either sign.
pub(crate) fn substep<T: Real>(h_mid: &CMatrix<T>, tau: T, from: &CMatrix<T>) -> Result<CMatrix<T>> {
    Ok(exp_minus_i(h_mid, tau)? * from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::FnModel;
    use nalgebra::dmatrix;
    use num_complex::Complex;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn zero_hamiltonian_gives_identity() {
        let u = step_unitary(&CMatrix::<f64>::zeros(3, 3), 0.3).unwrap();
        assert!((u.matrix() - CMatrix::<f64>::identity(3, 3)).norm() < 1e-15);
    }

    #[test]
    fn diagonal_step() {
        let w0 = 1.7;
        let h = 0.05;
        let hm = dmatrix![c(w0 / 2.0, 0.0), c(0.0, 0.0); c(0.0, 0.0), c(-w0 / 2.0, 0.0)];
        let u = step_unitary(&hm, h).unwrap();
        let expect = dmatrix![cis(-w0 * h / 2.0), c(0.0, 0.0); c(0.0, 0.0), cis(w0 * h / 2.0)];
        assert!((u.matrix() - expect).norm() < 1e-15);
    }

    #[test]
    fn rejects_nonpositive_step() {
        assert!(matches!(step_unitary(&CMatrix::<f64>::zeros(2, 2), 0.0), Err(Error::Usage(_))));
    }

    #[test]
    fn constant_hamiltonian_is_exact() {
        let hm = dmatrix![c(0.3, 0.0), c(0.2, -0.7); c(0.2, 0.7), c(-1.1, 0.0)];
        let model = FnModel::constant(hm.clone());
        let grid = TimeGrid::new(7.5, 37).unwrap();
        let path = propagate(&model, &grid).unwrap();
        let exact = exp_minus_i(&hm, 7.5).unwrap();
        assert!((path.last().matrix() - exact).norm() < 1e-10);
        assert_eq!(path.at(0).matrix(), &CMatrix::<f64>::identity(2, 2));
    }

    #[test]
    fn evolve_constant_diagonal() {
        let e = [0.4, -0.9];
        let hm = dmatrix![c(e[0], 0.0), c(0.0, 0.0); c(0.0, 0.0), c(e[1], 0.0)];
        let grid = TimeGrid::new(3.0, 30).unwrap();
        let path = propagate(&FnModel::constant(hm), &grid).unwrap();
        let e1 = QuantumState::basis(2, 0).unwrap();
        let traj = evolve_state(&path, &e1).unwrap();
        assert_eq!(traj.at(0), &e1);
        for (k, s) in traj.states().iter().enumerate() {
            let t = grid.t(k);
            assert!((s.amplitudes()[0] - cis(-e[0] * t)).norm() < 1e-13);
            assert!(s.amplitudes()[1].norm() < 1e-15);
        }
    }

    #[test]
    fn conjugate_path_is_an_involution() {
        let model = FnModel::new(2, |t: f64| {
            dmatrix![c(t.cos(), 0.0), c(0.3, t.sin()); c(0.3, -t.sin()), c(-t.cos(), 0.0)]
        });
        let grid = TimeGrid::new(2.0, 40).unwrap();
        let path = propagate(&model, &grid).unwrap();
        let twice = hermitian_conjugate_path(&hermitian_conjugate_path(&path));
        assert_eq!(twice, path);
        let id = propagate(&FnModel::constant(CMatrix::<f64>::zeros(2, 2)), &grid).unwrap();
        assert_eq!(hermitian_conjugate_path(&id), id);
    }

    #[test]
    fn state_dimension_mismatch() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let path = propagate(&FnModel::constant(CMatrix::<f64>::zeros(2, 2)), &grid).unwrap();
        assert!(matches!(evolve_state(&path, &QuantumState::basis(3, 0).unwrap()), Err(Error::Usage(_))));
    }
}
