use serde::{Deserialize, Serialize};

use super::space::ProfileSpace;
use crate::error::{invalid, Result};

/// A full problem instance as the policies see it: action grids, fidelity
/// costs, noise, budget and the constants entering regret and confidence
/// widths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    pub space: ProfileSpace,
    /// `costs[m - 1]` is the per-player price of a fidelity-`m` query; the
    /// last entry is 1.
    pub costs: Vec<f64>,
    pub sigma2: f64,
    pub budget: f64,
    /// Upper bound on any dissatisfaction, normalizes rewards.
    pub c: f64,
    /// Norm bound entering the confidence width.
    pub b: f64,
    pub delta: f64,
    /// Fraction of top-fidelity players that ends an exploration phase.
    pub eta: f64,
}

impl GameSpec {
    /// Defaults `c = 1`, `b = 2`, `delta = min(0.1, 1/(2N))`, `eta = 0.5`
    /// (clamped into `[1/N, 1]`).
    pub fn new(space: ProfileSpace, costs: Vec<f64>, sigma2: f64, budget: f64) -> Result<Self> {
        let n = space.n_players() as f64;
        let spec = Self {
            space,
            costs,
            sigma2,
            budget,
            c: 1.0,
            b: 2.0,
            delta: 0.1f64.min(0.5 / n),
            eta: 0.5f64.max(1.0 / n),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        self.eta = eta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_c(mut self, c: f64) -> Result<Self> {
        self.c = c;
        self.validate()?;
        Ok(self)
    }

    pub fn with_b(mut self, b: f64) -> Result<Self> {
        self.b = b;
        self.validate()?;
        Ok(self)
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        self.delta = delta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_budget(mut self, budget: f64) -> Result<Self> {
        self.budget = budget;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_players() as f64;
        if self.costs.is_empty() {
            return Err(invalid("fidelity ladder is empty"));
        }
        if self.costs.iter().any(|c| !(*c > 0.0)) || self.costs.windows(2).any(|w| w[0] > w[1]) {
            return Err(invalid(format!("costs must be positive and nondecreasing: {:?}", self.costs)));
        }
        if (self.costs[self.costs.len() - 1] - 1.0).abs() > 1e-12 {
            return Err(invalid("top-fidelity cost must be 1"));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(invalid("noise variance must be positive"));
        }
        if !(self.budget >= 0.0 && self.budget.is_finite()) {
            return Err(invalid("budget must be finite and nonnegative"));
        }
        if !(self.c > 0.0) || !(self.b >= 0.0) {
            return Err(invalid("C must be positive and B nonnegative"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0 / n) {
            return Err(invalid(format!("delta must lie in (0, 1/N), got {}", self.delta)));
        }
        if !(self.eta >= 1.0 / n - 1e-12 && self.eta <= 1.0) {
            return Err(invalid(format!("eta must lie in [1/N, 1], got {}", self.eta)));
        }
        Ok(())
    }

    pub fn n_players(&self) -> usize {
        self.space.n_players()
    }

    pub fn levels(&self) -> usize {
        self.costs.len()
    }

    pub fn cost(&self, m: usize) -> f64 {
        self.costs[m - 1]
    }

    /// Cost of querying every player at the given fidelities.
    pub fn vector_cost(&self, fids: &[usize]) -> f64 {
        fids.iter().map(|&m| self.cost(m)).sum()
    }

    /// Price of one evaluation step, all players at the top level.
    pub fn evaluation_cost(&self) -> f64 {
        self.n_players() as f64
    }

    /// Smallest budget that admits an exploration step followed by an
    /// evaluation step.
    pub fn exploration_floor(&self) -> f64 {
        self.n_players() as f64 * (self.costs[0] + 1.0)
    }
}
