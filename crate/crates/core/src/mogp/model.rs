use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::kernel::{Kernel, KernelParams};
use crate::error::{invalid, Error, Result};
use crate::linalg::{cholesky_jittered, dot, JITTER_START};

/// One noisy utility observation of a single player.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationRecord {
    /// Kernel coordinates of the joint action profile.
    pub x: Vec<f64>,
    /// Fidelity level, 1-based.
    pub m: usize,
    pub y: f64,
}

/// Exact GP posterior for one player over mixed-fidelity data.
///
/// The factor `L` of `K + (sigma2 + jitter) I` is kept in packed
/// lower-triangular row form and grows by one row per appended observation,
/// so the leading `n x n` block always factors the first `n` records.
#[derive(Clone, Debug)]
pub struct MogpModel {
    kernel: Kernel,
    sigma2: f64,
    data: Vec<ObservationRecord>,
    chol: Vec<f64>,
    whitened: Vec<f64>,
    jitter: f64,
    generation: u64,
}

#[inline]
fn row_start(i: usize) -> usize {
    i * (i + 1) / 2
}

impl MogpModel {
    pub fn new(params: KernelParams, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(invalid(format!("noise variance must be > 0, got {sigma2}")));
        }
        Ok(Self {
            kernel: Kernel::new(params)?,
            sigma2,
            data: Vec::new(),
            chol: Vec::new(),
            whitened: Vec::new(),
            jitter: JITTER_START,
            generation: 0,
        })
    }

    /// Batch construction with a single full factorization.
    pub fn from_records(params: KernelParams, sigma2: f64, records: Vec<ObservationRecord>) -> Result<Self> {
        let mut model = Self::new(params, sigma2)?;
        for r in &records {
            model.check_record(r)?;
        }
        model.data = records;
        model.refactor()?;
        Ok(model)
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn params(&self) -> &KernelParams {
        self.kernel.params()
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn data(&self) -> &[ObservationRecord] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Bumped whenever the factor is rebuilt from scratch; caches built on
    /// an older generation must resynchronize fully.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// Row `i` of the factor, entries `0..=i`.
    pub fn chol_row(&self, i: usize) -> &[f64] {
        &self.chol[row_start(i)..row_start(i + 1)]
    }

    /// `L^{-1} y`.
    pub fn whitened(&self) -> &[f64] {
        &self.whitened
    }

    fn check_record(&self, r: &ObservationRecord) -> Result<()> {
        self.kernel.check_fidelity(r.m)?;
        if let Some(first) = self.data.first() {
            if first.x.len() != r.x.len() {
                return Err(invalid(format!(
                    "profile dimension {} does not match {}",
                    r.x.len(),
                    first.x.len()
                )));
            }
        }
        if !r.y.is_finite() {
            return Err(invalid("observation is not finite"));
        }
        Ok(())
    }

    /// Append one observation and extend the factor by one row. Falls back
    /// to a full jittered refactorization when the new pivot is not positive.
    pub fn append(&mut self, rec: ObservationRecord) -> Result<()> {
        self.check_record(&rec)?;
        let n = self.data.len();
        let l = self.solve_lower(&self.cross_cov(&rec.x, rec.m));
        let d2 = self.kernel.prior_var(rec.m) + self.sigma2 + self.jitter - dot(&l, &l);
        if d2 > 1e-300 && d2.is_finite() {
            let d = d2.sqrt();
            let w = (rec.y - dot(&l, &self.whitened)) / d;
            self.chol.extend_from_slice(&l);
            self.chol.push(d);
            self.whitened.push(w);
            self.data.push(rec);
            debug_assert_eq!(self.chol.len(), row_start(n + 1));
            Ok(())
        } else {
            self.data.push(rec);
            self.refactor()
        }
    }

    /// Functional form of [`append`](Self::append).
    pub fn with_observation(mut self, rec: ObservationRecord) -> Result<Self> {
        self.append(rec)?;
        Ok(self)
    }

    /// Model restricted to the first `n` observations. Shares the leading
    /// block of the factor, so no refactorization is needed.
    pub fn prefix(&self, n: usize) -> Self {
        let n = n.min(self.data.len());
        Self {
            kernel: self.kernel.clone(),
            sigma2: self.sigma2,
            data: self.data[..n].to_vec(),
            chol: self.chol[..row_start(n)].to_vec(),
            whitened: self.whitened[..n].to_vec(),
            jitter: self.jitter,
            generation: self.generation,
        }
    }

    fn refactor(&mut self) -> Result<()> {
        let n = self.data.len();
        let mut gram = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let k = self.kernel.cov(&self.data[i].x, self.data[i].m, &self.data[j].x, self.data[j].m);
                gram[(i, j)] = k;
                gram[(j, i)] = k;
            }
            gram[(i, i)] += self.sigma2;
        }
        let (ch, jitter) = cholesky_jittered(&gram)?;
        let l = ch.l_dirty();
        self.chol.clear();
        for i in 0..n {
            for j in 0..=i {
                self.chol.push(l[(i, j)]);
            }
        }
        self.jitter = jitter;
        self.generation += 1;
        let y: Vec<f64> = self.data.iter().map(|r| r.y).collect();
        self.whitened = self.solve_lower(&y);
        if self.whitened.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite whitened observations".into()));
        }
        Ok(())
    }

    /// Prior covariances between `(x, m)` and every stored observation.
    pub fn cross_cov(&self, x: &[f64], m: usize) -> Vec<f64> {
        self.data.iter().map(|r| self.kernel.cov(x, m, &r.x, r.m)).collect()
    }

    /// Forward substitution `L^{-1} b` against the current factor.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len().min(self.data.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let row = self.chol_row(i);
            let s = b[i] - dot(&row[..i], &out);
            out.push(s / row[i]);
        }
        out
    }

    /// `L^{-1} k(x, m)`: the whitened cross-covariance of a query.
    pub fn whitened_cross(&self, x: &[f64], m: usize) -> Vec<f64> {
        self.solve_lower(&self.cross_cov(x, m))
    }

    /// Posterior mean and variance of the latent utility at `(x, m)`.
    pub fn posterior(&self, x: &[f64], m: usize) -> Result<(f64, f64)> {
        self.kernel.check_fidelity(m)?;
        if let Some(first) = self.data.first() {
            if first.x.len() != x.len() {
                return Err(invalid("query dimension does not match the data"));
            }
        }
        Ok(self.posterior_unchecked(x, m))
    }

    pub(crate) fn posterior_unchecked(&self, x: &[f64], m: usize) -> (f64, f64) {
        let v = self.whitened_cross(x, m);
        let prior = self.kernel.prior_var(m);
        let mean = dot(&v, &self.whitened);
        let var = (prior - dot(&v, &v)).clamp(0.0, prior);
        (mean, var)
    }

    /// Joint posterior covariance among several `(x, m)` queries.
    pub fn posterior_cov(&self, points: &[(&[f64], usize)]) -> Result<DMatrix<f64>> {
        for (_, m) in points {
            self.kernel.check_fidelity(*m)?;
        }
        let vs: Vec<Vec<f64>> = points.iter().map(|(x, m)| self.whitened_cross(x, *m)).collect();
        let p = points.len();
        let mut cov = DMatrix::zeros(p, p);
        for i in 0..p {
            for j in 0..=i {
                let k = self.kernel.cov(points[i].0, points[i].1, points[j].0, points[j].1) - dot(&vs[i], &vs[j]);
                cov[(i, j)] = k;
                cov[(j, i)] = k;
            }
        }
        Ok(cov)
    }
}

/// Information one noisy query at `(x, m)` carries: `½ ln(1 + var / sigma2)`
/// with `var` the current posterior variance there.
pub fn mutual_information_single(model: &MogpModel, x: &[f64], m: usize) -> Result<f64> {
    let (_, var) = model.posterior(x, m)?;
    Ok(super::information_from_variance(var, model.sigma2()))
}
