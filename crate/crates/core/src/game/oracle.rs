use rand_distr::{Distribution, Normal};

use super::space::ProfileSpace;
use crate::error::{invalid, Result};
use crate::rng::SimRng;

/// Black-box access to the players' utilities.
///
/// `observe` is what policies call; `true_utility` is the noiseless
/// top-fidelity value and is used only for scoring.
pub trait UtilityOracle: Send + Sync {
    fn n_players(&self) -> usize;

    /// Number of fidelity levels.
    fn levels(&self) -> usize;

    /// Noisy observation of player `n`'s fidelity-`m` utility at a profile.
    fn observe(&self, n: usize, profile: &[usize], m: usize, rng: &mut SimRng) -> f64;

    fn true_utility(&self, n: usize, profile: &[usize]) -> f64;
}

impl std::fmt::Debug for dyn UtilityOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "UtilityOracle({} players, {} levels)", self.n_players(), self.levels())
    }
}

/// Utilities stored explicitly for every profile and fidelity, observed
/// through additive Gaussian noise.
#[derive(Clone, Debug)]
pub struct TabularGame {
    space: ProfileSpace,
    // tables[n][m - 1][profile index]
    tables: Vec<Vec<Vec<f64>>>,
    noise: Normal<f64>,
}

impl TabularGame {
    pub fn new(space: ProfileSpace, tables: Vec<Vec<Vec<f64>>>, sigma2: f64) -> Result<Self> {
        if tables.len() != space.n_players() {
            return Err(invalid("one table stack per player required"));
        }
        let levels = tables[0].len();
        let size = space.size() as usize;
        for stack in &tables {
            if stack.len() != levels || levels == 0 || stack.iter().any(|t| t.len() != size) {
                return Err(invalid("utility tables must cover every profile at every fidelity"));
            }
        }
        if !(sigma2 >= 0.0) {
            return Err(invalid("noise variance must be nonnegative"));
        }
        let noise = Normal::new(0.0, sigma2.sqrt()).map_err(|e| invalid(e.to_string()))?;
        Ok(Self { space, tables, noise })
    }

    /// Single-fidelity game from per-player utility tables.
    pub fn from_utilities(space: ProfileSpace, utilities: Vec<Vec<f64>>, sigma2: f64) -> Result<Self> {
        Self::new(space, utilities.into_iter().map(|u| vec![u]).collect(), sigma2)
    }

    pub fn space(&self) -> &ProfileSpace {
        &self.space
    }

    pub fn table(&self, n: usize, m: usize) -> &[f64] {
        &self.tables[n][m - 1]
    }
}

impl UtilityOracle for TabularGame {
    fn n_players(&self) -> usize {
        self.tables.len()
    }

    fn levels(&self) -> usize {
        self.tables[0].len()
    }

    fn observe(&self, n: usize, profile: &[usize], m: usize, rng: &mut SimRng) -> f64 {
        self.tables[n][m - 1][self.space.index_of(profile) as usize] + self.noise.sample(rng)
    }

    fn true_utility(&self, n: usize, profile: &[usize]) -> f64 {
        let top = self.tables[n].len() - 1;
        self.tables[n][top][self.space.index_of(profile) as usize]
    }
}
