//! Complete optimization policies: MF-UCB-PNE and the single-fidelity
//! UCB-PNE and PE baselines. All of them produce a [`RunResult`].

mod log;
mod pe;

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use log::{cumulative_regret, returned_solution, EpisodeLog, EvaluationStep, RunResult};
pub use pe::{pe_scores, DEFAULT_PE_SAMPLES};

use crate::acquisition::{run_exploration_phase, BudgetLedger, BUDGET_TOL};
use crate::equilibrium::{
    build_confidence_state, compute_beta, exploring_profile, final_evaluation_profile, prior_gamma, reported_profile,
};
use crate::error::{Error, Result};
use crate::game::{episode_regret, DissatisfactionTable, GameSpec, SearchSet, UtilityOracle};
use crate::mogp::KernelParams;
use crate::rng::{stream, SimRng};
use crate::surrogate::PlayerSurrogate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolicyId {
    #[serde(rename = "mf-ucb-pne")]
    MfUcbPne,
    #[serde(rename = "ucb-pne")]
    UcbPne,
    #[serde(rename = "pe")]
    Pe,
}

impl PolicyId {
    pub const ALL: [PolicyId; 3] = [PolicyId::MfUcbPne, PolicyId::UcbPne, PolicyId::Pe];

    pub fn name(self) -> &'static str {
        match self {
            PolicyId::MfUcbPne => "mf-ucb-pne",
            PolicyId::UcbPne => "ucb-pne",
            PolicyId::Pe => "pe",
        }
    }

    /// Whether the policy uses the threshold `eta`.
    pub fn uses_eta(self) -> bool {
        self == PolicyId::MfUcbPne
    }
}

impl fmt::Display for PolicyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PolicyId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PolicyId::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown policy '{s}'")))
    }
}

/// Everything a run needs: the problem, the surrogate hyperparameters, the
/// black box, the scoring table and the profiles searched over.
#[derive(Clone, Debug)]
pub struct Instance {
    pub spec: GameSpec,
    pub surrogate: KernelParams,
    pub oracle: Arc<dyn UtilityOracle>,
    pub table: Arc<DissatisfactionTable>,
    pub search: Arc<SearchSet>,
}

impl Instance {
    /// Same instance with another budget and threshold.
    pub fn with_budget_eta(&self, budget: f64, eta: f64) -> Result<Self> {
        let mut out = self.clone();
        out.spec = out.spec.clone().with_budget(budget)?.with_eta(eta)?;
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    /// Posterior draws per step for PE.
    pub pe_samples: usize,
    /// Record whether the confidence intervals contain the truth at every
    /// evaluation step.
    pub coverage_probe: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { pe_samples: DEFAULT_PE_SAMPLES, coverage_probe: false }
    }
}

pub fn run_policy(policy: PolicyId, inst: &Instance, seed: u64, opts: &RunOptions) -> Result<RunResult> {
    match policy {
        PolicyId::MfUcbPne => run_mf_ucb_pne(inst, seed, opts),
        PolicyId::UcbPne => run_ucb_pne(inst, seed, opts),
        PolicyId::Pe => run_pe(inst, seed, opts),
    }
}

pub fn run_mf_ucb_pne(inst: &Instance, seed: u64, opts: &RunOptions) -> Result<RunResult> {
    run_confidence_policy(PolicyId::MfUcbPne, inst, seed, opts)
}

/// MF-UCB-PNE with the exploration phase removed.
pub fn run_ucb_pne(inst: &Instance, seed: u64, opts: &RunOptions) -> Result<RunResult> {
    run_confidence_policy(PolicyId::UcbPne, inst, seed, opts)
}

fn surrogates(inst: &Instance, lower: bool) -> Result<Vec<PlayerSurrogate>> {
    (0..inst.spec.n_players())
        .map(|n| PlayerSurrogate::new(inst.surrogate.clone(), inst.spec.sigma2, &inst.search, n, lower))
        .collect()
}

fn noise_streams(seed: u64, n: usize) -> Vec<SimRng> {
    (0..n).map(|i| stream(seed, "noise", i as u64)).collect()
}

fn check_levels(inst: &Instance) -> Result<()> {
    if inst.surrogate.levels() != inst.spec.levels() || inst.oracle.levels() != inst.spec.levels() {
        return Err(Error::InvalidArgument(format!(
            "fidelity levels disagree: spec {}, surrogate {}, oracle {}",
            inst.spec.levels(),
            inst.surrogate.levels(),
            inst.oracle.levels()
        )));
    }
    Ok(())
}

/// Query every player at the top fidelity and fold the results in.
fn evaluate(
    inst: &Instance,
    surrogates: &mut [PlayerSurrogate],
    rngs: &mut [SimRng],
    ledger: &mut BudgetLedger,
    idx: u64,
) -> Result<Vec<f64>> {
    let space = inst.search.space();
    let profile = space.profile_at(idx);
    let x = space.features(&profile);
    let top = inst.spec.levels();
    let mut obs = Vec::with_capacity(surrogates.len());
    for (n, s) in surrogates.iter_mut().enumerate() {
        let y = inst.oracle.observe(n, &profile, top, &mut rngs[n]);
        s.observe(x.clone(), top, y)?;
        obs.push(y);
    }
    ledger.charge(inst.spec.evaluation_cost())?;
    Ok(obs)
}

fn run_confidence_policy(policy: PolicyId, inst: &Instance, seed: u64, opts: &RunOptions) -> Result<RunResult> {
    check_levels(inst)?;
    let start = Instant::now();
    let spec = &inst.spec;
    let search = inst.search.as_ref();
    let np = spec.n_players();
    let explore = policy == PolicyId::MfUcbPne;
    let mut sur = surrogates(inst, explore)?;
    let mut rngs = noise_streams(seed, np);
    let mut ledger = BudgetLedger::new(spec.budget);
    let mut result = RunResult::new(policy, inst, seed);
    let mut steps = 0usize;

    while ledger.remaining() >= spec.evaluation_cost() - BUDGET_TOL {
        ledger.start_episode();
        let exploration = if explore {
            Some(run_exploration_phase(&mut sur, search, spec, &mut ledger, inst.oracle.as_ref(), &mut rngs)?)
        } else {
            None
        };
        steps += exploration.as_ref().map_or(0, |e| e.steps.len());

        let gamma_t = prior_gamma(&inst.surrogate, spec.sigma2, search, steps + 1)?;
        let gamma = vec![gamma_t; np];
        let beta: Vec<f64> = gamma.iter().map(|&g| compute_beta(spec.b, spec.sigma2.sqrt(), g, spec.delta)).collect();
        let state = build_confidence_state(&sur, search, &beta, &gamma);
        let coverage = opts
            .coverage_probe
            .then(|| (state.utility_covered(search, inst.oracle.as_ref()), state.dissatisfaction_covered(search, &inst.table)));
        let rep_ci = reported_profile(&state);
        let rep = search.candidates()[rep_ci];
        let (worst, exp) = exploring_profile(&state, search, rep_ci);
        let fin = final_evaluation_profile(&sur, search, rep, exp);
        let observations = evaluate(inst, &mut sur, &mut rngs, &mut ledger, fin)?;
        steps += 1;

        let space = search.space();
        let eval = EvaluationStep {
            profile: space.profile_at(fin),
            observations,
            reported: space.profile_at(rep),
            exploring: space.profile_at(exp),
            worst_player: Some(worst),
            coverage,
        };
        result.push_episode(inst, exploration, eval, beta, gamma);
    }
    result.finish(start);
    Ok(result)
}

/// Probability-of-equilibrium baseline: each step evaluates the candidate
/// most often found to be an equilibrium of posterior draws.
pub fn run_pe(inst: &Instance, seed: u64, opts: &RunOptions) -> Result<RunResult> {
    check_levels(inst)?;
    let start = Instant::now();
    let spec = &inst.spec;
    let search = inst.search.as_ref();
    let np = spec.n_players();
    let mut sur = surrogates(inst, false)?;
    let mut rngs = noise_streams(seed, np);
    let mut draws = stream(seed, "pe-draws", 0);
    let mut ledger = BudgetLedger::new(spec.budget);
    let mut result = RunResult::new(PolicyId::Pe, inst, seed);
    while ledger.remaining() >= spec.evaluation_cost() - BUDGET_TOL {
        ledger.start_episode();
        let scores = pe_scores(&sur, search, opts.pe_samples, &mut draws);
        let mut best = 0;
        for ci in 1..scores.len() {
            if scores[ci] > scores[best] {
                best = ci;
            }
        }
        let idx = search.candidates()[best];
        let observations = evaluate(inst, &mut sur, &mut rngs, &mut ledger, idx)?;
        let profile = search.space().profile_at(idx);
        let eval = EvaluationStep {
            profile: profile.clone(),
            observations,
            reported: profile.clone(),
            exploring: profile,
            worst_player: None,
            coverage: None,
        };
        result.push_episode(inst, None, eval, Vec::new(), Vec::new());
    }
    result.finish(start);
    Ok(result)
}

/// Episode regret of a logged episode.
pub(crate) fn logged_regret(spec: &GameSpec, table: &DissatisfactionTable, spend: f64, eps_j: f64) -> f64 {
    episode_regret(spec.n_players(), table.eps_star(), spec.c, spend, eps_j)
}
