use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{logged_regret, Instance, PolicyId};
use crate::acquisition::{DecisionPair, ExplorationOutcome, ExplorationStep, StopReason, BUDGET_TOL};
use crate::error::{Error, Result};
use crate::game::{DissatisfactionTable, GameSpec, Profile};

/// The all-top-fidelity query closing an episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationStep {
    pub profile: Profile,
    pub observations: Vec<f64>,
    /// Candidate with the smallest optimistic dissatisfaction.
    pub reported: Profile,
    /// Reported profile with the worst player moved to its optimistic best
    /// response.
    pub exploring: Profile,
    pub worst_player: Option<usize>,
    /// (utility intervals covered, dissatisfaction intervals covered), when
    /// probed.
    pub coverage: Option<(bool, bool)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub index: usize,
    pub exploration: Vec<ExplorationStep>,
    pub stop_reason: Option<StopReason>,
    /// Joint information of the exploration sequence, per player.
    pub exploration_info: Vec<f64>,
    pub ratio_threshold: Option<f64>,
    pub evaluation: EvaluationStep,
    pub exploration_spend: f64,
    /// Exploration spend plus the evaluation step.
    pub spend: f64,
    /// True maximum dissatisfaction of the evaluated profile.
    pub eps_j: f64,
    pub reward: f64,
    pub regret: f64,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub policy: PolicyId,
    pub seed: u64,
    pub spec: GameSpec,
    pub eps_star: f64,
    pub eps_star_exact: bool,
    pub episodes: Vec<EpisodeLog>,
    /// Running sum of episode regrets.
    pub cumulative_regret_trace: Vec<f64>,
    /// Best evaluated maximum dissatisfaction minus ε*, after each episode.
    pub simple_regret_trace: Vec<f64>,
    pub last_profile: Option<Profile>,
    pub best_profile: Option<Profile>,
    pub spend: f64,
    /// No evaluation step fit in the budget.
    pub degenerate: bool,
    pub wallclock_ms: u64,
}

impl RunResult {
    pub(crate) fn new(policy: PolicyId, inst: &Instance, seed: u64) -> Self {
        Self {
            policy,
            seed,
            spec: inst.spec.clone(),
            eps_star: inst.table.eps_star(),
            eps_star_exact: inst.table.is_exact(),
            episodes: Vec::new(),
            cumulative_regret_trace: Vec::new(),
            simple_regret_trace: Vec::new(),
            last_profile: None,
            best_profile: None,
            spend: 0.0,
            degenerate: true,
            wallclock_ms: 0,
        }
    }

    pub(crate) fn push_episode(
        &mut self,
        inst: &Instance,
        exploration: Option<ExplorationOutcome>,
        evaluation: EvaluationStep,
        beta: Vec<f64>,
        gamma: Vec<f64>,
    ) {
        let spec = &inst.spec;
        let table = inst.table.as_ref();
        let eps_j = table.max_f_at(&evaluation.profile);
        let (steps, stop, info, thr, xspend) = match exploration {
            Some(e) => (e.steps, Some(e.stop_reason), e.info_per_player, Some(e.ratio_threshold), e.spend),
            None => (Vec::new(), None, Vec::new(), None, 0.0),
        };
        let spend = xspend + spec.evaluation_cost();
        let regret = logged_regret(spec, table, spend, eps_j);
        let cum = self.cumulative_regret_trace.last().copied().unwrap_or(0.0) + regret;
        let gap = eps_j - table.eps_star();
        let simple = self.simple_regret_trace.last().map_or(gap, |s: &f64| s.min(gap));
        if simple == gap && self.simple_regret_trace.last().is_none_or(|s| gap < *s) {
            self.best_profile = Some(evaluation.profile.clone());
        }
        self.last_profile = Some(evaluation.profile.clone());
        self.cumulative_regret_trace.push(cum);
        self.simple_regret_trace.push(simple);
        self.spend += spend;
        self.degenerate = false;
        self.episodes.push(EpisodeLog {
            index: self.episodes.len(),
            exploration: steps,
            stop_reason: stop,
            exploration_info: info,
            ratio_threshold: thr,
            evaluation,
            exploration_spend: xspend,
            spend,
            eps_j,
            reward: (spec.c - eps_j) / spec.c,
            regret,
            beta,
            gamma,
        });
    }

    pub(crate) fn finish(&mut self, start: Instant) {
        self.wallclock_ms = start.elapsed().as_millis() as u64;
    }

    pub fn cumulative_regret(&self) -> f64 {
        self.cumulative_regret_trace.last().copied().unwrap_or(0.0)
    }

    /// Final simple regret, `None` for a degenerate run.
    pub fn simple_regret(&self) -> Option<f64> {
        self.simple_regret_trace.last().copied()
    }

    pub fn exploration_steps(&self) -> usize {
        self.episodes.iter().map(|e| e.exploration.len()).sum()
    }

    /// Every query of the run in order, evaluation steps included.
    pub fn decisions(&self) -> Vec<DecisionPair> {
        let top = self.spec.levels();
        let np = self.spec.n_players();
        let mut out = Vec::new();
        for e in &self.episodes {
            out.extend(e.exploration.iter().map(|s| s.pair.clone()));
            out.push(DecisionPair { profile: e.evaluation.profile.clone(), fids: vec![top; np] });
        }
        out
    }

    /// Per-query rewards: zero for exploration, the normalized gap for
    /// evaluation steps.
    pub fn reward_stream(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for e in &self.episodes {
            out.extend(std::iter::repeat_n(0.0, e.exploration.len()));
            out.push(e.reward);
        }
        out
    }

    /// JSON with the wall-clock field zeroed, for reproducibility checks.
    pub fn deterministic_json(&self) -> Result<String> {
        let mut c = self.clone();
        c.wallclock_ms = 0;
        Ok(serde_json::to_string(&c)?)
    }
}

/// Total regret as the sum of episode regrets, checking the spend ledger.
/// Returns the total and the per-episode values.
pub fn cumulative_regret(spec: &GameSpec, table: &DissatisfactionTable, episodes: &[EpisodeLog]) -> Result<(f64, Vec<f64>)> {
    let mut total_spend = 0.0;
    let mut per = Vec::with_capacity(episodes.len());
    for e in episodes {
        let explored: f64 = e.exploration.iter().map(|s| s.cost).sum();
        if (explored - e.exploration_spend).abs() > BUDGET_TOL
            || (e.spend - e.exploration_spend - spec.evaluation_cost()).abs() > BUDGET_TOL
        {
            return Err(Error::Integrity(format!("episode {} spend does not add up", e.index)));
        }
        total_spend += e.spend;
        per.push(logged_regret(spec, table, e.spend, table.max_f_at(&e.evaluation.profile)));
    }
    if total_spend > spec.budget + BUDGET_TOL {
        return Err(Error::Integrity(format!("spent {total_spend} of a budget of {}", spec.budget)));
    }
    Ok((per.iter().sum(), per))
}

/// `(last evaluated profile, best evaluated profile)`; the best one is
/// scored with true dissatisfactions.
pub fn returned_solution(result: &RunResult) -> Result<(Profile, Profile)> {
    match (&result.last_profile, &result.best_profile) {
        (Some(l), Some(b)) => Ok((l.clone(), b.clone())),
        _ => Err(Error::InvalidArgument("degenerate run: no evaluation step".into())),
    }
}
