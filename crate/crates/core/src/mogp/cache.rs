use nalgebra::DMatrix;

use super::model::MogpModel;
use crate::error::{invalid, Result};

/// Posterior mean and variance at a fixed list of `(x, m)` points, kept in
/// step with a growing [`MogpModel`].
///
/// Stores the whitened cross-covariances `L^{-1} k(x, m)` observation-major,
/// so that each observation appended to the model costs one pass over the
/// stored rows instead of a fresh triangular solve per point.
#[derive(Clone, Debug)]
pub struct PosteriorCache {
    dim: usize,
    feats: Vec<f64>,
    fids: Vec<usize>,
    // rows[i * P + p] = (L^{-1} k(p))_i
    rows: Vec<f64>,
    mean: Vec<f64>,
    var: Vec<f64>,
    prior: Vec<f64>,
    synced: usize,
    generation: u64,
}

impl PosteriorCache {
    /// `points` are `(x, m)` pairs sharing one feature dimension.
    pub fn new(model: &MogpModel, points: &[(Vec<f64>, usize)]) -> Result<Self> {
        let dim = points.first().map_or(0, |p| p.0.len());
        let mut feats = Vec::with_capacity(points.len() * dim);
        let mut fids = Vec::with_capacity(points.len());
        for (x, m) in points {
            if x.len() != dim {
                return Err(invalid("cache points have mixed dimensions"));
            }
            model.kernel().check_fidelity(*m)?;
            feats.extend_from_slice(x);
            fids.push(*m);
        }
        let prior: Vec<f64> = fids.iter().map(|&m| model.kernel().prior_var(m)).collect();
        let mut cache = Self {
            dim,
            feats,
            fids,
            rows: Vec::new(),
            mean: vec![0.0; prior.len()],
            var: prior.clone(),
            prior,
            synced: 0,
            generation: model.generation(),
        };
        cache.sync(model);
        Ok(cache)
    }

    pub fn len(&self) -> usize {
        self.fids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fids.is_empty()
    }

    pub fn point(&self, p: usize) -> (&[f64], usize) {
        (&self.feats[p * self.dim..(p + 1) * self.dim], self.fids[p])
    }

    pub fn mean(&self, p: usize) -> f64 {
        self.mean[p]
    }

    pub fn var(&self, p: usize) -> f64 {
        self.var[p].clamp(0.0, self.prior[p])
    }

    pub fn means(&self) -> &[f64] {
        &self.mean
    }

    /// Number of model observations folded in.
    pub fn synced(&self) -> usize {
        self.synced
    }

    /// Whitened cross-covariance entry `(L^{-1} k(p))_i`.
    pub fn whitened_entry(&self, i: usize, p: usize) -> f64 {
        self.rows[i * self.len() + p]
    }

    /// Posterior covariance between two cached points.
    pub fn cov(&self, model: &MogpModel, p: usize, q: usize) -> f64 {
        let (xp, mp) = self.point(p);
        let (xq, mq) = self.point(q);
        let np = self.len();
        let s: f64 = (0..self.synced).map(|i| self.rows[i * np + p] * self.rows[i * np + q]).sum();
        model.kernel().cov(xp, mp, xq, mq) - s
    }

    /// Joint posterior covariance among several cached points.
    pub fn cov_block(&self, model: &MogpModel, idx: &[usize]) -> DMatrix<f64> {
        let mut out = self.prior_block(model, idx);
        if self.synced > 0 {
            let v = self.whitened_block(idx);
            out.gemm_tr(-1.0, &v, &v, 1.0);
        }
        out
    }

    /// Prior covariance among several cached points.
    pub fn prior_block(&self, model: &MogpModel, idx: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(idx.len(), idx.len(), |a, b| {
            let (xa, ma) = self.point(idx[a]);
            let (xb, mb) = self.point(idx[b]);
            model.kernel().cov(xa, ma, xb, mb)
        })
    }

    /// Whitened cross-covariances of several cached points, one row per
    /// folded-in observation.
    pub fn whitened_block(&self, idx: &[usize]) -> DMatrix<f64> {
        let np = self.len();
        DMatrix::from_fn(self.synced, idx.len(), |i, j| self.rows[i * np + idx[j]])
    }

    /// Fold in observations appended to `model` since the last sync. A
    /// model that was refactored, or that is shorter than what the cache
    /// has seen, triggers a full rebuild.
    pub fn sync(&mut self, model: &MogpModel) {
        if model.generation() != self.generation || model.len() < self.synced {
            self.rows.clear();
            self.mean.iter_mut().for_each(|v| *v = 0.0);
            self.var.copy_from_slice(&self.prior);
            self.synced = 0;
            self.generation = model.generation();
        }
        let np = self.len();
        let kernel = model.kernel();
        let mut row = vec![0.0; np];
        for i in self.synced..model.len() {
            let rec = &model.data()[i];
            for (p, r) in row.iter_mut().enumerate() {
                let x = &self.feats[p * self.dim..(p + 1) * self.dim];
                *r = kernel.cov(x, self.fids[p], &rec.x, rec.m);
            }
            let lrow = model.chol_row(i);
            for (j, &l) in lrow[..i].iter().enumerate() {
                let prev = &self.rows[j * np..(j + 1) * np];
                for (r, v) in row.iter_mut().zip(prev) {
                    *r -= l * v;
                }
            }
            let inv = 1.0 / lrow[i];
            let w = model.whitened()[i];
            for ((r, mu), var) in row.iter_mut().zip(&mut self.mean).zip(&mut self.var) {
                *r *= inv;
                *mu += *r * w;
                *var -= *r * *r;
            }
            self.rows.extend_from_slice(&row);
        }
        self.synced = model.len();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mogp::{KernelParams, ObservationRecord};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn incremental_cache_matches_direct_posterior() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = KernelParams::new(0.7, vec![0.5, 0.9], vec![0.6, 0.8]).unwrap();
        let mut model = MogpModel::new(p, 0.05).unwrap();
        let pts: Vec<(Vec<f64>, usize)> = (0..30)
            .map(|_| (vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)], rng.random_range(1..=3)))
            .collect();
        let mut cache = PosteriorCache::new(&model, &pts).unwrap();
        for _ in 0..12 {
            model
                .append(ObservationRecord {
                    x: vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                    m: rng.random_range(1..=3),
                    y: rng.random_range(-1.0..1.0),
                })
                .unwrap();
            cache.sync(&model);
            for (k, (x, m)) in pts.iter().enumerate() {
                let (mu, var) = model.posterior(x, *m).unwrap();
                assert!((cache.mean(k) - mu).abs() < 1e-10);
                assert!((cache.var(k) - var).abs() < 1e-10);
            }
        }
        let direct = model.posterior_cov(&[(&pts[0].0, pts[0].1), (&pts[1].0, pts[1].1)]).unwrap();
        assert!((cache.cov(&model, 0, 1) - direct[(0, 1)]).abs() < 1e-10);
        let block = cache.cov_block(&model, &[0, 1]);
        assert!((block - direct).amax() < 1e-10);
    }

    #[test]
    fn shorter_model_triggers_rebuild() {
        let p = KernelParams::single(1.0).unwrap();
        let mut model = MogpModel::new(p, 0.1).unwrap();
        for i in 0..4 {
            model.append(ObservationRecord { x: vec![i as f64 * 0.3], m: 1, y: 0.5 }).unwrap();
        }
        let pts = vec![(vec![0.1], 1)];
        let mut cache = PosteriorCache::new(&model, &pts).unwrap();
        let short = model.prefix(2);
        cache.sync(&short);
        let (mu, var) = short.posterior(&[0.1], 1).unwrap();
        assert!((cache.mean(0) - mu).abs() < 1e-12 && (cache.var(0) - var).abs() < 1e-12);
    }
}
