//! Games whose utilities are draws from the MOGP prior.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::game::{
    ActionGrid, DissatisfactionTable, GameSpec, ProfileSpace, SearchSet, TabularGame, UtilityOracle,
    FULL_ENUMERATION_LIMIT,
};
use crate::linalg::eigen_root;
use crate::mogp::{Kernel, KernelParams};
use crate::policies::Instance;
use crate::rng::{stream, SimRng};

/// Largest profile space whose utilities are tabulated by an exact joint
/// draw; larger games use random Fourier features.
pub const TABLE_LIMIT: u64 = 1 << 20;

fn default_players() -> usize {
    2
}
fn default_grid() -> usize {
    128
}
fn default_sigma2() -> f64 {
    0.1
}
fn default_costs() -> Vec<f64> {
    vec![0.125, 1.0]
}
fn default_rff() -> usize {
    512
}
fn default_candidates() -> usize {
    FULL_ENUMERATION_LIMIT
}

/// Generator parameters used for the synthetic experiments.
pub fn well_specified_params() -> KernelParams {
    KernelParams::new(0.89, vec![0.78], vec![0.768]).expect("valid constants")
}

/// Surrogate parameters of the misspecified setting.
pub fn misspecified_params() -> KernelParams {
    KernelParams::new(0.62, vec![0.41], vec![0.625]).expect("valid constants")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    #[serde(default = "default_players")]
    pub players: usize,
    /// Actions per player, evenly spaced on `[-1, 1]`.
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "well_specified_params")]
    pub generator: KernelParams,
    /// Surrogate hyperparameters; the generator's when absent.
    #[serde(default)]
    pub surrogate: Option<KernelParams>,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
    /// Query cost per fidelity in the units budgets are quoted in.
    #[serde(default = "default_costs")]
    pub costs: Vec<f64>,
    #[serde(default = "default_candidates")]
    pub max_candidates: usize,
    /// Fourier features per latent process for games too large to tabulate.
    #[serde(default = "default_rff")]
    pub rff_features: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            players: default_players(),
            grid: default_grid(),
            generator: well_specified_params(),
            surrogate: None,
            sigma2: default_sigma2(),
            costs: default_costs(),
            max_candidates: default_candidates(),
            rff_features: default_rff(),
        }
    }
}

impl SyntheticConfig {
    /// Ten players on 16-point grids with four fidelities.
    pub fn n10() -> Self {
        Self {
            players: 10,
            grid: 16,
            generator: KernelParams::uniform(0.89, 0.78, 0.768, 4).expect("valid constants"),
            costs: vec![0.125, 0.25, 0.5, 1.0],
            max_candidates: 1024,
            ..Self::default()
        }
    }

    pub fn space(&self) -> Result<ProfileSpace> {
        if self.players == 0 || self.grid == 0 {
            return Err(invalid("synthetic game needs players and actions"));
        }
        let g = ActionGrid::uniform(-1.0, 1.0, self.grid)?;
        ProfileSpace::new(vec![g; self.players])
    }

    fn check(&self) -> Result<()> {
        if self.costs.len() != self.generator.levels() {
            return Err(invalid(format!(
                "{} costs given for {} fidelity levels",
                self.costs.len(),
                self.generator.levels()
            )));
        }
        if let Some(s) = &self.surrogate {
            if s.levels() != self.generator.levels() {
                return Err(invalid("surrogate and generator disagree on the number of levels"));
            }
        }
        Ok(())
    }

    pub fn build(&self, seed: u64) -> Result<Instance> {
        self.check()?;
        let space = self.space()?;
        let top_cost = *self.costs.last().expect("checked nonempty");
        let costs: Vec<f64> = self.costs.iter().map(|c| c / top_cost).collect();
        let mut draw = stream(seed, "synthetic-draw", 0);
        let mut pick = stream(seed, "search", 0);
        let search = Arc::new(SearchSet::new(&space, self.max_candidates, &mut pick)?);
        let (oracle, table): (Arc<dyn UtilityOracle>, DissatisfactionTable) = if space.size() <= TABLE_LIMIT {
            let game: Arc<dyn UtilityOracle> =
                Arc::new(sample_synthetic_game(&self.generator, &space, self.sigma2, &mut draw)?);
            let table = DissatisfactionTable::brute_force(game.clone(), space.clone())?;
            (game, table)
        } else {
            let game: Arc<dyn UtilityOracle> =
                Arc::new(RffGame::sample(&self.generator, &space, self.sigma2, self.rff_features, &mut draw)?);
            let table = DissatisfactionTable::over_candidates(game.clone(), space.clone(), search.candidates())?;
            (game, table)
        };
        let spec = GameSpec::new(space, costs, self.sigma2, 1.0)?.with_c(table.suggested_c())?;
        Ok(Instance {
            spec,
            surrogate: self.surrogate.clone().unwrap_or_else(|| self.generator.clone()),
            oracle,
            table: Arc::new(table),
            search,
        })
    }
}

/// One exact joint draw of every fidelity of every player's utility on the
/// whole grid. The RBF kernel factorizes over players, so each latent
/// process is sampled as a Kronecker product of per-player roots.
pub fn sample_synthetic_game(
    params: &KernelParams,
    space: &ProfileSpace,
    sigma2: f64,
    rng: &mut SimRng,
) -> Result<TabularGame> {
    if space.size() > TABLE_LIMIT {
        return Err(invalid(format!("{} profiles are too many to tabulate", space.size())));
    }
    let kernel = Kernel::new(params.clone())?;
    let levels = kernel.levels();
    let mut tables = Vec::with_capacity(space.n_players());
    for _ in 0..space.n_players() {
        let top = kronecker_draw(space, params.h, rng);
        let resid: Vec<Vec<f64>> = params.zeta.iter().map(|&z| kronecker_draw(space, z, rng)).collect();
        let stack = (1..=levels)
            .map(|m| {
                let mut u: Vec<f64> = top.iter().map(|v| kernel.top_coef(m) * v).collect();
                for (l, r) in resid.iter().enumerate().skip(m - 1) {
                    let c = kernel.resid_coef(l + 1, m);
                    u.iter_mut().zip(r).for_each(|(a, b)| *a += c * b);
                }
                u
            })
            .collect();
        tables.push(stack);
    }
    TabularGame::new(space.clone(), tables, sigma2)
}

/// Zero-mean GP draw with kernel `exp(-h |x - x'|^2)` over all profiles.
fn kronecker_draw(space: &ProfileSpace, h: f64, rng: &mut SimRng) -> Vec<f64> {
    let size = space.size() as usize;
    let mut v: Vec<f64> = (0..size).map(|_| rng.sample(StandardNormal)).collect();
    for n in 0..space.n_players() {
        let g = space.grid(n);
        let k = g.len();
        let kmat = DMatrix::from_fn(k, k, |a, b| {
            let d2: f64 = g.feature(a).iter().zip(g.feature(b)).map(|(p, q)| (p - q) * (p - q)).sum();
            (-h * d2).exp()
        });
        let root = eigen_root(&kmat);
        let stride = space.stride(n) as usize;
        let mut fiber = DVector::zeros(k);
        for base in 0..size {
            // first element of each fiber along axis n
            if (base / stride) % k != 0 {
                continue;
            }
            for a in 0..k {
                fiber[a] = v[base + a * stride];
            }
            let out = &root * &fiber;
            for a in 0..k {
                v[base + a * stride] = out[a];
            }
        }
    }
    v
}

/// Approximate prior draw through random Fourier features, evaluated on
/// demand. Used when the profile space cannot be tabulated.
#[derive(Debug)]
pub struct RffGame {
    space: ProfileSpace,
    kernel: Kernel,
    // players[n][process]: top first, then one per residual level
    players: Vec<Vec<Rff>>,
    noise: Normal<f64>,
}

#[derive(Debug)]
struct Rff {
    omega: Vec<f64>,
    phase: Vec<f64>,
    weight: Vec<f64>,
    dim: usize,
}

impl Rff {
    fn sample(h: f64, dim: usize, features: usize, rng: &mut SimRng) -> Self {
        // spectral density of exp(-h d^2) is N(0, 2h I)
        let spread = Normal::new(0.0, (2.0 * h).sqrt()).expect("positive scale");
        let omega = (0..features * dim).map(|_| spread.sample(rng)).collect();
        let phase = (0..features).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        let weight = (0..features).map(|_| rng.sample(StandardNormal)).collect();
        Self { omega, phase, weight, dim }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let d = self.weight.len();
        let mut s = 0.0;
        for j in 0..d {
            let w = &self.omega[j * self.dim..(j + 1) * self.dim];
            let arg: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.phase[j];
            s += self.weight[j] * arg.cos();
        }
        s * (2.0 / d as f64).sqrt()
    }
}

impl RffGame {
    pub fn sample(
        params: &KernelParams,
        space: &ProfileSpace,
        sigma2: f64,
        features: usize,
        rng: &mut SimRng,
    ) -> Result<Self> {
        if features == 0 {
            return Err(invalid("need at least one Fourier feature"));
        }
        let kernel = Kernel::new(params.clone())?;
        let dim = space.feature_dim();
        let players = (0..space.n_players())
            .map(|_| {
                let mut v = vec![Rff::sample(params.h, dim, features, rng)];
                v.extend(params.zeta.iter().map(|&z| Rff::sample(z, dim, features, rng)));
                v
            })
            .collect();
        let noise = Normal::new(0.0, sigma2.sqrt()).map_err(|e| invalid(e.to_string()))?;
        Ok(Self { space: space.clone(), kernel, players, noise })
    }

    pub fn utility(&self, n: usize, profile: &[usize], m: usize) -> f64 {
        let x = self.space.features(profile);
        let procs = &self.players[n];
        let mut u = self.kernel.top_coef(m) * procs[0].eval(&x);
        for l in m..self.kernel.levels() {
            u += self.kernel.resid_coef(l, m) * procs[l].eval(&x);
        }
        u
    }
}

impl UtilityOracle for RffGame {
    fn n_players(&self) -> usize {
        self.players.len()
    }

    fn levels(&self) -> usize {
        self.kernel.levels()
    }

    fn observe(&self, n: usize, profile: &[usize], m: usize, rng: &mut SimRng) -> f64 {
        self.utility(n, profile, m) + self.noise.sample(rng)
    }

    fn true_utility(&self, n: usize, profile: &[usize]) -> f64 {
        self.utility(n, profile, self.kernel.levels())
    }
}
