//! Uplink power control: each link picks a transmit power and earns its
//! average spectral efficiency minus a power penalty, under Rayleigh fading.

use std::sync::Arc;

use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::game::{ActionGrid, DissatisfactionTable, GameSpec, ProfileSpace, SearchSet, UtilityOracle};
use crate::mogp::KernelParams;
use crate::policies::Instance;
use crate::rng::{stream, SimRng};

fn default_links() -> usize {
    3
}
fn default_grid() -> usize {
    8
}
fn default_db_lo() -> f64 {
    -13.0
}
fn default_db_hi() -> f64 {
    23.0
}
fn default_noise_db() -> f64 {
    -20.0
}
fn default_psi_db() -> f64 {
    -20.0
}
fn default_xi() -> f64 {
    0.1
}
fn default_samples() -> Vec<u32> {
    vec![1, 10, 20, 50, 100]
}
fn default_truth_samples() -> usize {
    20_000
}
fn default_surrogate() -> KernelParams {
    KernelParams::uniform(0.89, 0.78, 0.768, 5).expect("valid constants")
}
fn default_candidates() -> usize {
    crate::game::FULL_ENUMERATION_LIMIT
}
fn yes() -> bool {
    true
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerConfig {
    #[serde(default = "default_links")]
    pub links: usize,
    /// Power levels per link, evenly spaced in dB.
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_db_lo")]
    pub db_lo: f64,
    #[serde(default = "default_db_hi")]
    pub db_hi: f64,
    #[serde(default = "default_noise_db")]
    pub noise_db: f64,
    /// Mean gain of the interference channels, dB.
    #[serde(default = "default_psi_db")]
    pub psi_db: f64,
    #[serde(default = "default_xi")]
    pub xi: f64,
    /// Channel realizations averaged at each fidelity; also the query cost.
    #[serde(default = "default_samples")]
    pub samples: Vec<u32>,
    /// Size of the fixed channel bank defining the true utilities.
    #[serde(default = "default_truth_samples")]
    pub truth_samples: usize,
    /// Standardize utilities with the bank's mean and spread.
    #[serde(default = "yes")]
    pub standardize: bool,
    #[serde(default = "default_surrogate")]
    pub surrogate: KernelParams,
    #[serde(default = "default_candidates")]
    pub max_candidates: usize,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            links: default_links(),
            grid: default_grid(),
            db_lo: default_db_lo(),
            db_hi: default_db_hi(),
            noise_db: default_noise_db(),
            psi_db: default_psi_db(),
            xi: default_xi(),
            samples: default_samples(),
            truth_samples: default_truth_samples(),
            standardize: true,
            surrogate: default_surrogate(),
            max_candidates: default_candidates(),
        }
    }
}

impl PowerConfig {
    pub fn costs(&self) -> Vec<f64> {
        self.samples.iter().map(|&s| s as f64).collect()
    }

    pub fn build(&self, seed: u64) -> Result<Instance> {
        let game = Arc::new(PowerGame::new(self, seed)?);
        let space = game.space.clone();
        let top = *self.samples.last().expect("validated") as f64;
        let costs = self.samples.iter().map(|&s| s as f64 / top).collect();
        let mut pick = stream(seed, "search", 0);
        let search = Arc::new(SearchSet::new(&space, self.max_candidates, &mut pick)?);
        let oracle: Arc<dyn UtilityOracle> = game.clone();
        let table = if search.is_full() {
            DissatisfactionTable::brute_force(oracle.clone(), space.clone())?
        } else {
            DissatisfactionTable::over_candidates(oracle.clone(), space.clone(), search.candidates())?
        };
        let spec = GameSpec::new(space, costs, game.surrogate_sigma2(), 1.0)?.with_c(table.suggested_c())?;
        Ok(Instance { spec, surrogate: self.surrogate.clone(), oracle, table: Arc::new(table), search })
    }
}

/// Power-control game with true utilities averaged over a fixed channel
/// bank and observations averaged over fresh channel draws.
#[derive(Debug)]
pub struct PowerGame {
    space: ProfileSpace,
    power: Vec<f64>,
    noise: f64,
    psi: f64,
    xi: f64,
    samples: Vec<u32>,
    truth: Vec<f64>,
    truth_se: Vec<f64>,
    single_var: f64,
    offset: f64,
    scale: f64,
}

impl PowerGame {
    pub fn new(cfg: &PowerConfig, seed: u64) -> Result<Self> {
        if cfg.links == 0 || cfg.grid == 0 || cfg.samples.is_empty() || cfg.truth_samples < 2 {
            return Err(invalid("power game needs links, power levels, fidelities and a channel bank"));
        }
        if cfg.samples.contains(&0) || cfg.samples.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("sample counts must be positive and increasing"));
        }
        if cfg.surrogate.levels() != cfg.samples.len() {
            return Err(invalid("surrogate levels do not match the fidelity ladder"));
        }
        let db: Vec<f64> = if cfg.grid == 1 {
            vec![cfg.db_lo]
        } else {
            (0..cfg.grid).map(|i| cfg.db_lo + (cfg.db_hi - cfg.db_lo) * i as f64 / (cfg.grid - 1) as f64).collect()
        };
        let hi = if cfg.db_hi > cfg.db_lo { cfg.db_hi } else { cfg.db_lo + 1.0 };
        let g = ActionGrid::scalar_mapped(&db, cfg.db_lo, hi)?;
        let space = ProfileSpace::new(vec![g; cfg.links])?;
        let mut game = Self {
            space,
            power: db.iter().map(|&d| db_to_linear(d)).collect(),
            noise: db_to_linear(cfg.noise_db),
            psi: db_to_linear(cfg.psi_db),
            xi: cfg.xi,
            samples: cfg.samples.clone(),
            truth: Vec::new(),
            truth_se: Vec::new(),
            single_var: 0.0,
            offset: 0.0,
            scale: 1.0,
        };
        game.fill_truth(cfg.truth_samples, &mut stream(seed, "channel-bank", 0));
        if cfg.standardize {
            let n = game.truth.len() as f64;
            let mean = game.truth.iter().sum::<f64>() / n;
            let var = game.truth.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            game.offset = mean;
            game.scale = if var > 0.0 { 1.0 / var.sqrt() } else { 1.0 };
        }
        Ok(game)
    }

    pub fn space(&self) -> &ProfileSpace {
        &self.space
    }

    fn n_links(&self) -> usize {
        self.space.n_players()
    }

    /// Direct gain of link `n` and interference gains into it, for one
    /// channel realization.
    fn draw_gains(&self, rng: &mut SimRng, gains: &mut [f64]) {
        for (j, g) in gains.iter_mut().enumerate() {
            let e: f64 = Exp1.sample(rng);
            *g = if j == 0 { e } else { e * self.psi };
        }
    }

    /// `log(1 + SINR_n)` for link `n` given gains `[direct, interferers...]`.
    fn rate(&self, n: usize, profile: &[usize], gains: &[f64]) -> f64 {
        let mut interference = self.noise;
        let mut j = 1;
        for (m, &a) in profile.iter().enumerate() {
            if m != n {
                interference += gains[j] * self.power[a];
                j += 1;
            }
        }
        (1.0 + gains[0] * self.power[profile[n]] / interference).ln()
    }

    fn penalty(&self, n: usize, profile: &[usize]) -> f64 {
        self.xi * self.power[profile[n]]
    }

    fn fill_truth(&mut self, bank: usize, rng: &mut SimRng) {
        let np = self.n_links();
        // bank[s][n] = [direct, interferers...]
        let mut gains = vec![0.0; bank * np * np];
        for chunk in gains.chunks_mut(np) {
            self.draw_gains(rng, chunk);
        }
        let size = self.space.size() as usize;
        let mut truth = vec![0.0; size * np];
        let mut se = vec![0.0; size * np];
        let mut var_sum = 0.0;
        for idx in 0..size {
            let prof = self.space.profile_at(idx as u64);
            for n in 0..np {
                let (mut s, mut ss) = (0.0, 0.0);
                for b in 0..bank {
                    let g = &gains[(b * np + n) * np..(b * np + n + 1) * np];
                    let r = self.rate(n, &prof, g);
                    s += r;
                    ss += r * r;
                }
                let mean = s / bank as f64;
                let var = (ss / bank as f64 - mean * mean).max(0.0) * bank as f64 / (bank - 1) as f64;
                truth[idx * np + n] = mean - self.penalty(n, &prof);
                se[idx * np + n] = (var / bank as f64).sqrt();
                var_sum += var;
            }
        }
        self.truth = truth;
        self.truth_se = se;
        self.single_var = var_sum / (size * np) as f64;
    }

    /// Unscaled true utility of link `n`.
    pub fn raw_truth(&self, n: usize, profile: &[usize]) -> f64 {
        self.truth[self.space.index_of(profile) as usize * self.n_links() + n]
    }

    /// Monte-Carlo standard error of [`Self::raw_truth`].
    pub fn truth_std_err(&self, n: usize, profile: &[usize]) -> f64 {
        self.truth_se[self.space.index_of(profile) as usize * self.n_links() + n]
    }

    /// Unscaled fidelity-`m` observation: an average over `samples[m - 1]`
    /// fresh channel realizations.
    pub fn raw_observe(&self, n: usize, profile: &[usize], m: usize, rng: &mut SimRng) -> f64 {
        let count = self.samples[m - 1];
        let mut g = vec![0.0; self.n_links()];
        let mut s = 0.0;
        for _ in 0..count {
            self.draw_gains(rng, &mut g);
            s += self.rate(n, profile, &g);
        }
        s / count as f64 - self.penalty(n, profile)
    }

    /// Noise variance handed to the surrogate: the average single-draw
    /// variance divided by the geometric mean of the sample counts, in
    /// standardized units.
    pub fn surrogate_sigma2(&self) -> f64 {
        let gm = (self.samples.iter().map(|&s| (s as f64).ln()).sum::<f64>() / self.samples.len() as f64).exp();
        (self.single_var / gm * self.scale * self.scale).max(1e-6)
    }

    pub fn scale(&self) -> (f64, f64) {
        (self.offset, self.scale)
    }
}

impl UtilityOracle for PowerGame {
    fn n_players(&self) -> usize {
        self.n_links()
    }

    fn levels(&self) -> usize {
        self.samples.len()
    }

    fn observe(&self, n: usize, profile: &[usize], m: usize, rng: &mut SimRng) -> f64 {
        (self.raw_observe(n, profile, m, rng) - self.offset) * self.scale
    }

    fn true_utility(&self, n: usize, profile: &[usize]) -> f64 {
        (self.raw_truth(n, profile) - self.offset) * self.scale
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;

    fn single_link(grid: usize, noise_db: f64, xi: f64) -> PowerConfig {
        PowerConfig {
            links: 1,
            grid,
            db_lo: -10.0,
            db_hi: 10.0,
            noise_db,
            xi,
            truth_samples: 4000,
            standardize: false,
            ..PowerConfig::default()
        }
    }

    #[test]
    fn silent_link_without_penalty_earns_nothing() {
        let cfg = PowerConfig { db_lo: -200.0, db_hi: -190.0, ..single_link(2, -20.0, 0.0) };
        let g = PowerGame::new(&cfg, 1).unwrap();
        assert!(g.raw_truth(0, &[0]).abs() < 1e-12);
    }

    #[test]
    fn observation_variance_shrinks_with_samples() {
        let cfg = single_link(3, 0.0, 0.1);
        let g = PowerGame::new(&cfg, 3).unwrap();
        let mut rng = SimRng::seed_from_u64(8);
        let var_at = |m: usize, rng: &mut SimRng| {
            let n = 3000;
            let v: Vec<f64> = (0..n).map(|_| g.raw_observe(0, &[1], m, rng)).collect();
            let mean = v.iter().sum::<f64>() / n as f64;
            v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        };
        let v1 = var_at(1, &mut rng);
        let v100 = var_at(5, &mut rng);
        let ratio = v100 * 100.0 / v1;
        assert!((ratio - 1.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn standardized_truth_has_unit_spread() {
        let g = PowerGame::new(&PowerConfig { links: 2, grid: 4, truth_samples: 500, ..PowerConfig::default() }, 0).unwrap();
        let vals: Vec<f64> = (0..g.space().size())
            .flat_map(|i| {
                let p = g.space().profile_at(i);
                (0..2).map(move |n| (n, p.clone()))
            })
            .map(|(n, p)| g.true_utility(n, &p))
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
        assert!(mean.abs() < 1e-9 && (var - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fidelity_count_must_match_surrogate() {
        let cfg = PowerConfig { samples: vec![1, 10], ..single_link(2, 0.0, 0.1) };
        assert!(PowerGame::new(&cfg, 0).is_err());
    }
}
