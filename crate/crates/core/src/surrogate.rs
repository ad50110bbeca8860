//! One player's surrogate bound to a [`SearchSet`]: the exact MOGP model
//! plus posterior caches at the profiles the policies optimize over.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::game::SearchSet;
use crate::mogp::{KernelParams, MogpModel, ObservationRecord, PosteriorCache};

/// Cache layout: the player's points at the top fidelity first, then (if
/// requested) the candidates at each lower fidelity.
#[derive(Clone, Debug)]
pub struct PlayerSurrogate {
    player: usize,
    model: MogpModel,
    cache: PosteriorCache,
    n_top: usize,
    n_cand: usize,
    lower: bool,
}

impl PlayerSurrogate {
    /// `lower` adds cache entries for the candidates at fidelities below the
    /// top, needed only by the exploration phase.
    pub fn new(params: KernelParams, sigma2: f64, search: &SearchSet, player: usize, lower: bool) -> Result<Self> {
        let model = MogpModel::new(params, sigma2)?;
        let levels = model.kernel().levels();
        let space = search.space();
        let pp = search.player(player);
        let mut pts: Vec<(Vec<f64>, usize)> = pp.points.iter().map(|&i| (space.features_at(i), levels)).collect();
        let n_top = pts.len();
        let n_cand = search.candidates().len();
        if lower && levels > 1 {
            for m in 1..levels {
                for &ci in &pp.candidate_pos {
                    pts.push((pts[ci as usize].0.clone(), m));
                }
            }
        }
        let cache = PosteriorCache::new(&model, &pts)?;
        Ok(Self { player, model, cache, n_top, n_cand, lower: lower && levels > 1 })
    }

    pub fn player(&self) -> usize {
        self.player
    }

    pub fn model(&self) -> &MogpModel {
        &self.model
    }

    pub fn levels(&self) -> usize {
        self.model.kernel().levels()
    }

    pub fn has_lower(&self) -> bool {
        self.lower
    }

    /// Append an observation and bring the caches up to date.
    pub fn observe(&mut self, x: Vec<f64>, m: usize, y: f64) -> Result<()> {
        self.model.append(ObservationRecord { x, m, y })?;
        self.cache.sync(&self.model);
        Ok(())
    }

    /// Top-fidelity posterior mean at a position of the player's points.
    pub fn top_mean(&self, pos: usize) -> f64 {
        self.cache.mean(pos)
    }

    pub fn top_var(&self, pos: usize) -> f64 {
        self.cache.var(pos)
    }

    pub fn top_means(&self) -> &[f64] {
        &self.cache.means()[..self.n_top]
    }

    /// Posterior variance of candidate `ci` (index into the candidate list)
    /// at fidelity `m`.
    pub fn candidate_var(&self, search: &SearchSet, ci: usize, m: usize) -> f64 {
        if m == self.levels() {
            self.cache.var(search.player(self.player).candidate_pos[ci] as usize)
        } else {
            assert!(self.lower, "lower-fidelity cache not built");
            self.cache.var(self.n_top + (m - 1) * self.n_cand + ci)
        }
    }

    /// Top-fidelity variance at any profile, cached or not.
    pub fn top_var_at(&self, search: &SearchSet, idx: u64) -> f64 {
        match search.player(self.player).position(idx) {
            Some(pos) => self.top_var(pos),
            None => self.model.posterior_unchecked(&search.space().features_at(idx), self.levels()).1,
        }
    }

    /// Joint top-fidelity posterior covariance at several point positions.
    pub fn top_cov_block(&self, positions: &[usize]) -> DMatrix<f64> {
        self.cache.cov_block(&self.model, positions)
    }

    /// Prior covariance at several point positions.
    pub fn top_prior_block(&self, positions: &[usize]) -> DMatrix<f64> {
        self.cache.prior_block(&self.model, positions)
    }

    /// `W` with `top_cov_block = top_prior_block - W^T W`.
    pub fn top_whitened_block(&self, positions: &[usize]) -> DMatrix<f64> {
        self.cache.whitened_block(positions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{ActionGrid, ProfileSpace};

    #[test]
    fn cached_values_match_model() {
        let space = ProfileSpace::new(vec![
            ActionGrid::uniform(-1.0, 1.0, 5).unwrap(),
            ActionGrid::uniform(-1.0, 1.0, 4).unwrap(),
        ])
        .unwrap();
        let search = SearchSet::full(&space);
        let p = KernelParams::new(0.89, vec![0.78], vec![0.768]).unwrap();
        let mut s = PlayerSurrogate::new(p, 0.1, &search, 1, true).unwrap();
        s.observe(space.features(&[1, 2]), 1, 0.3).unwrap();
        s.observe(space.features(&[4, 0]), 2, -0.2).unwrap();
        for (ci, &idx) in search.candidates().iter().enumerate() {
            let x = space.features_at(idx);
            for m in 1..=2 {
                let (_, v) = s.model().posterior(&x, m).unwrap();
                assert!((s.candidate_var(&search, ci, m) - v).abs() < 1e-12);
            }
            assert!((s.top_var_at(&search, idx) - s.model().posterior(&x, 2).unwrap().1).abs() < 1e-12);
        }
    }
}
