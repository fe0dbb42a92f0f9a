//! Hamiltonian given as a table of samples, linearly interpolated in time.
//!
//! File format: CSV with header `t, h_re_0_0, h_im_0_0, h_re_0_1, h_im_0_1, ...`
//! listing the upper triangle row by row; the lower triangle is filled in by
//! Hermiticity.

use std::io::Read;
use std::path::Path;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::quantum::{HamiltonianModel, ModelKind};
use crate::scalar::{lit, CMatrix, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct SampledModel<T: Real> {
    times: Vec<T>,
    samples: Vec<CMatrix<T>>,
}

/// Column names for an `n`-level table, `t` first.
pub fn sampled_header(n: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    for i in 0..n {
        for j in i..n {
            cols.push(format!("h_re_{i}_{j}"));
            cols.push(format!("h_im_{i}_{j}"));
        }
    }
    cols
}

/// Dimension `n` such that `1 + n (n + 1)` equals `columns`.
fn dimension_for(columns: usize) -> Option<usize> {
    (2..=64).find(|n| 1 + n * (n + 1) == columns)
}

impl<T: Real> SampledModel<T> {
    /// Sample times must be strictly increasing; matrices are stored as given
    /// and validated for Hermiticity on evaluation.
    pub fn new(times: Vec<T>, samples: Vec<CMatrix<T>>) -> Result<Self> {
        if times.len() < 2 || times.len() != samples.len() {
            return Err(Error::Config(format!(
                "sampled model needs at least two rows with one matrix each, got {} times and {} matrices",
                times.len(),
                samples.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("sample times must be strictly increasing".into()));
        }
        let n = samples[0].nrows();
        if n < 2 || samples.iter().any(|m| m.nrows() != n || m.ncols() != n) {
            return Err(Error::Config("sampled matrices must all be square of one size >= 2".into()));
        }
        Ok(Self { times, samples })
    }

    pub fn from_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Config(format!("sampled table header: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        let n = dimension_for(header.len())
            .ok_or_else(|| Error::Config(format!("sampled table has {} columns, not 1 + n(n+1)", header.len())))?;
        if header != sampled_header(n) {
            return Err(Error::Config(format!(
                "sampled table header must be `{}`",
                sampled_header(n).join(", ")
            )));
        }
        let mut times = Vec::new();
        let mut samples = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Config(format!("sampled table row {}: {e}", row + 1)))?;
            let values = record
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::Config(format!("sampled table row {}: bad number `{s}`", row + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            times.push(lit::<T>(values[0]));
            let mut m = CMatrix::<T>::zeros(n, n);
            let mut col = 1;
            for i in 0..n {
                for j in i..n {
                    let z = Complex::new(lit::<T>(values[col]), lit::<T>(values[col + 1]));
                    m[(i, j)] = z;
                    if i != j {
                        m[(j, i)] = z.conj();
                    }
                    col += 2;
                }
            }
            samples.push(m);
        }
        Self::new(times, samples)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Config(format!("cannot open sampled table {}: {e}", path.display())))?;
        Self::from_reader(file)
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn t_start(&self) -> T {
        self.times[0]
    }

    pub fn t_end(&self) -> T {
        self.times[self.times.len() - 1]
    }

    /// Segment `i` with `times[i] <= t <= times[i + 1]`.
    fn segment(&self, t: T) -> Result<usize> {
        let slack = (self.t_end() - self.t_start()) * lit(1e-12);
        if t < self.t_start() - slack || t > self.t_end() + slack {
            return Err(Error::Usage(format!(
                "sampled model queried at t = {t}, outside [{}, {}]",
                self.t_start(),
                self.t_end()
            )));
        }
        let upper = self.times.partition_point(|&s| s <= t);
        Ok(upper.clamp(1, self.times.len() - 1) - 1)
    }

    fn slope(&self, i: usize) -> CMatrix<T> {
        (&self.samples[i + 1] - &self.samples[i]).unscale(self.times[i + 1] - self.times[i])
    }
}

impl<T: Real> HamiltonianModel<T> for SampledModel<T> {
    fn dimension(&self) -> usize {
        self.samples[0].nrows()
    }

    fn kind(&self) -> ModelKind {
        ModelKind::SampledTable
    }

    fn raw(&self, t: T) -> Result<CMatrix<T>> {
        let i = self.segment(t)?;
        let w = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        Ok(&self.samples[i] * Complex::new(T::one() - w, T::zero()) + &self.samples[i + 1] * Complex::new(w, T::zero()))
    }

    /// Slope of the interpolant; at an interior sample the two adjacent
    /// slopes are averaged.
    fn raw_derivative(&self, t: T) -> Option<Result<CMatrix<T>>> {
        Some(self.segment(t).map(|i| {
            let last = self.times.len() - 1;
            if t == self.times[i] && i > 0 {
                (self.slope(i - 1) + self.slope(i)).unscale(lit(2.0))
            } else if t == self.times[i + 1] && i + 1 < last {
                (self.slope(i) + self.slope(i + 1)).unscale(lit(2.0))
            } else {
                self.slope(i)
            }
        }))
    }
}
