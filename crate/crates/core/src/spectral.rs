//! Instantaneous eigendecompositions of `H(t)` tracked along a grid with a
//! continuous gauge, plus the eigenvector derivatives and couplings built on
//! top of them.

use nalgebra::ComplexField;
use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::propagator::hermitian_eigen;
use crate::quantum::{validate_hermitian_with, HamiltonianModel, QuantumState, TimeGrid};
use crate::scalar::{lit, real, to_f64, CMatrix, CVector, Real, Tolerances};

/// Eigenpairs of `H(t)` at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFrame<T: Real> {
    t: T,
    eigenvalues: Vec<T>,
    /// Eigenvectors as columns, in level order.
    eigenvectors: CMatrix<T>,
    min_gap: T,
}

impl<T: Real> SpectralFrame<T> {
    pub fn t(&self) -> T {
        self.t
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, level: usize) -> T {
        self.eigenvalues[level]
    }

    pub fn eigenvectors(&self) -> &CMatrix<T> {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, level: usize) -> CVector<T> {
        self.eigenvectors.column(level).into_owned()
    }

    pub fn state(&self, level: usize) -> QuantumState<T> {
        QuantumState::from_raw(self.eigenvector(level))
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min_gap(&self) -> T {
        self.min_gap
    }

    fn scale_column(&mut self, level: usize, phase: Complex<T>) {
        for z in self.eigenvectors.column_mut(level).iter_mut() {
            *z *= phase;
        }
    }
}

fn min_gap<T: Real>(values: &[T]) -> T {
    let mut gap = T::max_value().unwrap_or_else(|| lit(f64::MAX));
    for (i, &a) in values.iter().enumerate() {
        for &b in &values[i + 1..] {
            gap = gap.min((a - b).abs());
        }
    }
    gap
}

/// Unit phase that rotates `z` onto the positive real axis (1 for `z = 0`).
fn unphase<T: Real>(z: Complex<T>) -> Complex<T> {
    let m = z.modulus();
    if m > T::zero() {
        z.conj().unscale(m)
    } else {
        real(T::one())
    }
}

/// Eigendecomposition of a Hermitian matrix with ascending eigenvalues. Each
/// eigenvector's largest-modulus component is made real and positive.
pub fn decompose<T: Real>(h: &CMatrix<T>, t: T) -> Result<SpectralFrame<T>> {
    decompose_with(h, t, &Tolerances::for_scalar::<T>())
}

pub fn decompose_with<T: Real>(h: &CMatrix<T>, t: T, tol: &Tolerances) -> Result<SpectralFrame<T>> {
    let h = validate_hermitian_with(h, tol)?;
    let (eigenvalues, eigenvectors) = hermitian_eigen(&h)?;
    let gap = min_gap(&eigenvalues);
    if !(to_f64(gap) > tol.degeneracy) {
        return Err(Error::Degeneracy { t: to_f64(t), gap: to_f64(gap), threshold: tol.degeneracy });
    }
    let mut frame = SpectralFrame { t, eigenvalues, eigenvectors, min_gap: gap };
    let scale = to_f64(h.norm()).max(1.0);
    for m in 0..frame.dim() {
        let v = frame.eigenvector(m);
        let pivot = v
            .iter()
            .enumerate()
            .fold((0, T::zero()), |best, (i, z)| if z.modulus() > best.1 { (i, z.modulus()) } else { best });
        frame.scale_column(m, unphase(v[pivot.0]));
        let v = frame.eigenvector(m);
        let residual = to_f64((&h * &v - v.scale(frame.eigenvalues[m])).norm());
        if !(residual <= tol.eigen_residual * scale) {
            return Err(Error::Numerical(format!(
                "eigenpair residual {residual:e} at t = {t} exceeds tolerance"
            )));
        }
    }
    Ok(frame)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gauge {
    /// Seed gauge at the first frame, discrete parallel transport afterwards:
    /// `<E_m(t_k)|E_m(t_{k+1})>` is real and positive.
    ParallelTransport,
    /// Phases fixed by an external reference family (still continuous).
    Prescribed,
}

/// Frames along a grid with consistent level labels and continuous phases.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPath<T: Real> {
    grid: TimeGrid<T>,
    frames: Vec<SpectralFrame<T>>,
    gauge: Gauge,
}

impl<T: Real> SpectralPath<T> {
    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn frames(&self) -> &[SpectralFrame<T>] {
        &self.frames
    }

    pub fn frame(&self, k: usize) -> &SpectralFrame<T> {
        &self.frames[k]
    }

    pub fn gauge(&self) -> Gauge {
        self.gauge
    }

    pub fn levels(&self) -> usize {
        self.frames[0].dim()
    }

    pub fn eigenvalue(&self, level: usize, k: usize) -> T {
        self.frames[k].eigenvalues[level]
    }

    pub fn eigenvector(&self, level: usize, k: usize) -> CVector<T> {
        self.frames[k].eigenvector(level)
    }

    /// Smallest gap over the whole path.
    pub fn min_gap(&self) -> T {
        self.frames.iter().map(|f| f.min_gap).fold(self.frames[0].min_gap, |a, b| a.min(b))
    }

    fn check_level(&self, level: usize) -> Result<()> {
        if level >= self.levels() {
            return Err(Error::Usage(format!("level {level} out of range for {} levels", self.levels())));
        }
        Ok(())
    }

    /// Rephases every eigenvector so that `<reference(level, k)|E_level(t_k)>`
    /// is real and positive.
    pub fn with_reference_gauge(&self, reference: impl Fn(usize, usize) -> CVector<T>) -> Result<Self> {
        let mut out = self.clone();
        for (k, frame) in out.frames.iter_mut().enumerate() {
            for m in 0..frame.dim() {
                let r = reference(m, k);
                if r.len() != frame.dim() {
                    return Err(Error::Usage("reference vector has wrong dimension".into()));
                }
                let o = r.dotc(&frame.eigenvector(m));
                frame.scale_column(m, unphase(o));
            }
        }
        out.gauge = Gauge::Prescribed;
        Ok(out)
    }

    /// Multiplies eigenvector `(level, k)` by `e^{i phase(level, k)}`. The result
    /// is generally discontinuous; follow with [`SpectralPath::realign`].
    pub fn with_phases(&self, phase: impl Fn(usize, usize) -> T) -> Self {
        let mut out = self.clone();
        for (k, frame) in out.frames.iter_mut().enumerate() {
            for m in 0..frame.dim() {
                frame.scale_column(m, crate::scalar::cis(phase(m, k)));
            }
        }
        out
    }

    /// Re-runs the parallel-transport phase alignment, keeping frame 0 as is.
    pub fn realign(&self) -> Self {
        let mut out = self.clone();
        for k in 1..out.frames.len() {
            let (done, rest) = out.frames.split_at_mut(k);
            let prev = &done[k - 1];
            let cur = &mut rest[0];
            for m in 0..cur.dim() {
                let o = prev.eigenvector(m).dotc(&cur.eigenvector(m));
                cur.scale_column(m, unphase(o));
            }
        }
        out.gauge = Gauge::ParallelTransport;
        out
    }

    /// Path whose level `i` is this path's level `order[i]`.
    pub fn relabel(&self, order: &[usize]) -> Result<Self> {
        let n = self.levels();
        let mut seen = vec![false; n];
        if order.len() != n || order.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
            return Err(Error::Usage(format!("{order:?} is not a permutation of {n} levels")));
        }
        let frames = self
            .frames
            .iter()
            .map(|f| {
                let mut vecs = CMatrix::<T>::zeros(n, n);
                for (j, &i) in order.iter().enumerate() {
                    vecs.set_column(j, &f.eigenvectors.column(i));
                }
                SpectralFrame {
                    t: f.t,
                    eigenvalues: order.iter().map(|&i| f.eigenvalues[i]).collect(),
                    eigenvectors: vecs,
                    min_gap: f.min_gap,
                }
            })
            .collect();
        Ok(Self { grid: self.grid, frames, gauge: self.gauge })
    }

    /// Builds a path from externally computed frames. Each column of
    /// `vectors[k]` must be a unit eigenvector for `values[k]`.
    pub fn from_parts(grid: TimeGrid<T>, values: Vec<Vec<T>>, vectors: Vec<CMatrix<T>>, gauge: Gauge) -> Result<Self> {
        if values.len() != grid.len() || vectors.len() != grid.len() {
            return Err(Error::Usage("frame count differs from grid length".into()));
        }
        let frames = values
            .into_iter()
            .zip(vectors)
            .enumerate()
            .map(|(k, (ev, vecs))| {
                if ev.len() != vecs.ncols() || vecs.nrows() != vecs.ncols() {
                    return Err(Error::Usage(format!("frame {k} has inconsistent shape")));
                }
                Ok(SpectralFrame { t: grid.t(k), min_gap: min_gap(&ev), eigenvalues: ev, eigenvectors: vecs })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, frames, gauge })
    }
}

/// Decomposes `H(t_k)` on every grid point, pairs levels frame to frame by
/// maximal eigenvector overlap and fixes phases by discrete parallel transport.
pub fn track<T: Real, M: HamiltonianModel<T> + ?Sized>(model: &M, grid: &TimeGrid<T>) -> Result<SpectralPath<T>> {
    track_with(model, grid, &model.tolerances())
}

pub fn track_with<T: Real, M: HamiltonianModel<T> + ?Sized>(
    model: &M,
    grid: &TimeGrid<T>,
    tol: &Tolerances,
) -> Result<SpectralPath<T>> {
    let raw: Vec<SpectralFrame<T>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let t = grid.t(k);
            decompose_with(&model.evaluate(t)?, t, tol)
        })
        .collect::<Result<_>>()?;
    let mut frames = Vec::with_capacity(raw.len());
    let mut iter = raw.into_iter();
    frames.push(iter.next().expect("grid has points"));
    for (k, next) in iter.enumerate().map(|(i, f)| (i + 1, f)) {
        let aligned = align_frame(&frames[k - 1], next, k, tol)?;
        frames.push(aligned);
    }
    Ok(SpectralPath { grid: *grid, frames, gauge: Gauge::ParallelTransport })
}

/// Level order in `next` that best continues `prev`, by maximal overlap.
pub(crate) fn match_levels<T: Real>(
    prev: &CMatrix<T>,
    next: &CMatrix<T>,
    index: usize,
    tol: &Tolerances,
) -> Result<Vec<usize>> {
    let n = prev.ncols();
    let overlaps = prev.adjoint() * next;
    let mut order = Vec::with_capacity(n);
    let mut used = vec![false; n];
    for m in 0..n {
        let mut row: Vec<(usize, f64)> = (0..n).map(|j| (j, to_f64(overlaps[(m, j)].modulus()))).collect();
        row.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        let (best, top) = row[0];
        let second = row.get(1).map_or(0.0, |r| r.1);
        if top - second < tol.overlap_ambiguity {
            return Err(Error::Tracking {
                index,
                reason: format!("level {m}: overlaps {top:.4} and {second:.4} are too close to pair"),
            });
        }
        if std::mem::replace(&mut used[best], true) {
            return Err(Error::Tracking { index, reason: format!("level {m} pairs with an already used level") });
        }
        order.push(best);
    }
    Ok(order)
}

fn align_frame<T: Real>(prev: &SpectralFrame<T>, next: SpectralFrame<T>, k: usize, tol: &Tolerances) -> Result<SpectralFrame<T>> {
    let order = match_levels(&prev.eigenvectors, &next.eigenvectors, k, tol)?;
    let n = next.dim();
    let mut vecs = CMatrix::<T>::zeros(n, n);
    for (m, &j) in order.iter().enumerate() {
        let v = next.eigenvectors.column(j);
        let phase = unphase(prev.eigenvectors.column(m).dotc(&v));
        vecs.set_column(m, &v.map(|z| z * phase));
    }
    Ok(SpectralFrame {
        t: next.t,
        eigenvalues: order.iter().map(|&j| next.eigenvalues[j]).collect(),
        eigenvectors: vecs,
        min_gap: next.min_gap,
    })
}

/// `d|E_n>/dt` at grid index `k` in the stored gauge: centered differences in
/// the interior, one-sided second-order stencils at the two ends.
pub fn eigen_derivative<T: Real>(path: &SpectralPath<T>, level: usize, k: usize) -> Result<CVector<T>> {
    path.check_level(level)?;
    let last = path.grid.steps();
    if k > last {
        return Err(Error::Usage(format!("grid index {k} out of range 0..={last}")));
    }
    let two_h = path.grid.step() * lit(2.0);
    let v = |i: usize| path.frames[i].eigenvectors.column(level).into_owned();
    let d = if k == 0 {
        v(1).scale(lit(4.0)) - v(0).scale(lit(3.0)) - v(2)
    } else if k == last {
        v(last).scale(lit(3.0)) - v(last - 1).scale(lit(4.0)) + v(last - 2)
    } else {
        v(k + 1) - v(k - 1)
    };
    Ok(d.unscale(two_h))
}

/// `<E_m(t_k)|dE_n/dt(t_k)>` from finite differences of the stored vectors.
pub fn connection<T: Real>(path: &SpectralPath<T>, m: usize, n: usize, k: usize) -> Result<Complex<T>> {
    path.check_level(m)?;
    let d = eigen_derivative(path, n, k)?;
    Ok(path.frames[k].eigenvectors.column(m).dotc(&d))
}

/// `<E_m|dH/dt|E_n> / (E_n - E_m)`, which equals `<E_m|dE_n/dt>` for `m != n`.
pub fn coupling_via_hdot<T: Real, M: HamiltonianModel<T> + ?Sized>(
    model: &M,
    path: &SpectralPath<T>,
    m: usize,
    n: usize,
    k: usize,
) -> Result<Complex<T>> {
    let hdot = model.derivative(path.grid.t(k), path.grid.step())?;
    coupling_from_hdot(&hdot, path, m, n, k)
}

pub(crate) fn hdot_element<T: Real>(hdot: &CMatrix<T>, path: &SpectralPath<T>, m: usize, n: usize, k: usize) -> Result<Complex<T>> {
    path.check_level(m)?;
    path.check_level(n)?;
    let f = &path.frames[k];
    Ok(f.eigenvectors.column(m).dotc(&(hdot * f.eigenvectors.column(n))))
}

pub(crate) fn coupling_from_hdot<T: Real>(hdot: &CMatrix<T>, path: &SpectralPath<T>, m: usize, n: usize, k: usize) -> Result<Complex<T>> {
    if m == n {
        return Err(Error::Usage("coupling needs two distinct levels".into()));
    }
    let num = hdot_element(hdot, path, m, n, k)?;
    let f = &path.frames[k];
    let gap = f.eigenvalues[n] - f.eigenvalues[m];
    let threshold = Tolerances::for_scalar::<T>().degeneracy;
    if !(to_f64(gap.abs()) > threshold) {
        return Err(Error::Degeneracy { t: to_f64(f.t), gap: to_f64(gap.abs()), threshold });
    }
    Ok(num.unscale(gap))
}
