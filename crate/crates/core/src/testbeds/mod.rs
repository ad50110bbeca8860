//! Ready-made games: MOGP prior draws, uplink power control and slotted
//! ALOHA, each with exact scoring.

mod aloha;
mod fixed_point;
mod power;
mod synthetic;

use serde::{Deserialize, Serialize};

pub use aloha::{AlohaConfig, AlohaGame, AlohaSolution};
pub use fixed_point::{best_response_iteration, fixed_point_or, BestResponseOutcome};
pub use power::{db_to_linear, PowerConfig, PowerGame};
pub use synthetic::{
    misspecified_params, sample_synthetic_game, well_specified_params, RffGame, SyntheticConfig, TABLE_LIMIT,
};

use crate::error::Result;
use crate::game::{GameSpec, Profile};
use crate::policies::Instance;

/// A testbed and its parameters. Building it with a seed gives a
/// reproducible [`Instance`]; budgets are quoted in the testbed's own cost
/// units and divided by [`Testbed::budget_unit`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Testbed {
    Synthetic(SyntheticConfig),
    Power(PowerConfig),
    Aloha(AlohaConfig),
}

impl Testbed {
    pub fn build(&self, seed: u64) -> Result<Instance> {
        match self {
            Testbed::Synthetic(c) => c.build(seed),
            Testbed::Power(c) => c.build(seed),
            Testbed::Aloha(c) => c.build(seed),
        }
    }

    /// Cost of one top-fidelity query in the testbed's units.
    pub fn budget_unit(&self) -> f64 {
        let costs = match self {
            Testbed::Synthetic(c) => c.costs.clone(),
            Testbed::Power(c) => c.costs(),
            Testbed::Aloha(c) => c.costs.clone(),
        };
        costs.last().copied().unwrap_or(1.0)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Testbed::Synthetic(_) => "synthetic",
            Testbed::Power(_) => "power",
            Testbed::Aloha(_) => "aloha",
        }
    }
}

/// Replayable description of a built instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub testbed: Testbed,
    pub seed: u64,
    pub spec: GameSpec,
    pub surrogate: crate::mogp::KernelParams,
    pub eps_star: f64,
    pub eps_star_exact: bool,
    pub argmin: Profile,
    pub max_f: f64,
    pub profiles: u64,
    pub candidates: usize,
}

impl InstanceSummary {
    pub fn new(testbed: &Testbed, seed: u64, inst: &Instance) -> Self {
        Self {
            testbed: testbed.clone(),
            seed,
            spec: inst.spec.clone(),
            surrogate: inst.surrogate.clone(),
            eps_star: inst.table.eps_star(),
            eps_star_exact: inst.table.is_exact(),
            argmin: inst.table.argmin().to_vec(),
            max_f: inst.table.max_f(),
            profiles: inst.spec.space.size(),
            candidates: inst.search.candidates().len(),
        }
    }
}
