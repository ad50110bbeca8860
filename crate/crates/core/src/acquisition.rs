//! Exploration phase: information-per-cost selection of (profile, fidelity
//! vector) pairs, budget bookkeeping and the three stopping rules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameSpec, Profile, SearchSet, UtilityOracle};
use crate::mogp::{information_from_variance, MogpModel, SequenceInformation};
use crate::rng::SimRng;
use crate::surrogate::PlayerSurrogate;

/// Slack on budget comparisons, absorbs rounding in sums of fractional costs.
pub const BUDGET_TOL: f64 = 1e-9;

/// Fidelity vectors are enumerated exhaustively when the cost cap binds and
/// there are at most this many of them.
pub const ENUMERATION_LIMIT: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetLedger {
    pub budget: f64,
    pub spent_total: f64,
    /// Spent in the current episode's exploration phase.
    pub spent_episode: f64,
    /// Remaining budget when the current episode started.
    pub episode_start_remaining: f64,
}

impl BudgetLedger {
    pub fn new(budget: f64) -> Self {
        Self { budget, spent_total: 0.0, spent_episode: 0.0, episode_start_remaining: budget }
    }

    pub fn remaining(&self) -> f64 {
        self.budget - self.spent_total
    }

    /// Remaining budget inside the episode, `start - spent_episode`.
    pub fn remaining_in_episode(&self) -> f64 {
        self.episode_start_remaining - self.spent_episode
    }

    pub fn start_episode(&mut self) {
        self.episode_start_remaining = self.remaining();
        self.spent_episode = 0.0;
    }

    /// Charge an exploration query.
    pub fn charge_exploration(&mut self, cost: f64) -> Result<()> {
        self.charge(cost)?;
        self.spent_episode += cost;
        Ok(())
    }

    pub fn charge(&mut self, cost: f64) -> Result<()> {
        if self.spent_total + cost > self.budget + BUDGET_TOL {
            return Err(Error::Integrity(format!(
                "charging {cost} would exceed the budget ({} of {} spent)",
                self.spent_total, self.budget
            )));
        }
        self.spent_total += cost;
        Ok(())
    }
}

/// A query: one profile and a fidelity per player.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DecisionPair {
    pub profile: Profile,
    pub fids: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    InsufficientBudget,
    FidelityFraction,
    MiRatio,
}

/// One committed exploration query and what it returned.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplorationStep {
    pub pair: DecisionPair,
    pub observations: Vec<f64>,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplorationOutcome {
    pub steps: Vec<ExplorationStep>,
    pub stop_reason: StopReason,
    /// Joint information each player's observations carry about its
    /// top-fidelity utilities at the visited profiles.
    pub info_per_player: Vec<f64>,
    pub spend: f64,
    /// `1 / sqrt(remaining budget at episode start)`.
    pub ratio_threshold: f64,
}

impl ExplorationOutcome {
    /// Information-to-cost ratio of the retained sequence.
    pub fn ratio(&self) -> Option<f64> {
        (self.spend > 0.0).then(|| self.info_per_player.iter().sum::<f64>() / self.spend)
    }
}

/// True when the remaining budget cannot pay for one cheapest exploration
/// step plus one evaluation step.
pub fn check_stop_insufficient(spec: &GameSpec, remaining: f64) -> bool {
    remaining < spec.exploration_floor() - BUDGET_TOL
}

/// True when at least a fraction `eta` of players would be queried at the
/// top fidelity.
pub fn check_stop_fidelity_fraction(candidate: &DecisionPair, eta: f64, levels: usize) -> bool {
    let top = candidate.fids.iter().filter(|&&m| m == levels).count();
    top as f64 / candidate.fids.len() as f64 >= eta - 1e-12
}

/// True when the accumulated information per unit cost falls below
/// `1 / sqrt(episode_start_remaining)`.
pub fn check_stop_mi_ratio(total_info: f64, total_cost: f64, episode_start_remaining: f64) -> bool {
    total_info / total_cost < 1.0 / episode_start_remaining.sqrt()
}

/// Same test computed from scratch: joint information of `sequence` for
/// every player given its episode-start model.
pub fn sequence_ratio_stops(
    models0: &[MogpModel],
    space: &crate::game::ProfileSpace,
    sequence: &[DecisionPair],
    costs: &[f64],
    episode_start_remaining: f64,
) -> Result<bool> {
    let mut info = 0.0;
    for (n, model) in models0.iter().enumerate() {
        let mut t = SequenceInformation::new(model);
        for d in sequence {
            t.push(&space.features(&d.profile), d.fids[n])?;
        }
        info += t.information();
    }
    let cost: f64 = sequence.iter().flat_map(|d| d.fids.iter().map(|&m| costs[m - 1])).sum();
    Ok(check_stop_mi_ratio(info, cost, episode_start_remaining))
}

/// Best fidelity vector for one profile given each player's information
/// `gain[n][m - 1]`, maximizing total gain over total cost under `cap`.
/// Returns `(ratio, fids)` or `None` if even the cheapest vector exceeds
/// the cap.
pub fn best_fidelity_vector(gain: &[Vec<f64>], costs: &[f64], cap: f64) -> Option<(f64, Vec<usize>)> {
    let np = gain.len();
    let levels = costs.len();
    if np as f64 * costs[0] > cap + BUDGET_TOL {
        return None;
    }
    // Dinkelbach iteration: for a fixed ratio t the objective separates by
    // player; the fixed point maximizes the ratio of sums exactly.
    let mut fids = vec![1usize; np];
    let ratio_of = |f: &[usize]| {
        let g: f64 = f.iter().enumerate().map(|(n, &m)| gain[n][m - 1]).sum();
        let c: f64 = f.iter().map(|&m| costs[m - 1]).sum();
        (g / c, c)
    };
    let (mut t, _) = ratio_of(&fids);
    for _ in 0..64 {
        let next: Vec<usize> = (0..np)
            .map(|n| {
                let mut best = 1;
                let mut best_v = gain[n][0] - t * costs[0];
                for m in 2..=levels {
                    let v = gain[n][m - 1] - t * costs[m - 1];
                    if v > best_v {
                        best_v = v;
                        best = m;
                    }
                }
                best
            })
            .collect();
        let (t_next, _) = ratio_of(&next);
        if next == fids || t_next <= t {
            if t_next > t {
                fids = next;
                t = t_next;
            }
            break;
        }
        fids = next;
        t = t_next;
    }
    let (_, cost) = ratio_of(&fids);
    if cost <= cap + BUDGET_TOL {
        return Some((t, fids));
    }
    let total = levels.checked_pow(np as u32).unwrap_or(usize::MAX);
    if total <= ENUMERATION_LIMIT {
        let mut best: Option<(f64, Vec<usize>)> = None;
        let mut f = vec![1usize; np];
        for _ in 0..total {
            let (r, c) = ratio_of(&f);
            if c <= cap + BUDGET_TOL && best.as_ref().is_none_or(|(br, _)| r > *br) {
                best = Some((r, f.clone()));
            }
            for k in (0..np).rev() {
                f[k] += 1;
                if f[k] <= levels {
                    break;
                }
                f[k] = 1;
            }
        }
        return best;
    }
    // Greedy repair: step down the player losing the least information per
    // unit of cost saved until the cap holds.
    let mut cost = cost;
    while cost > cap + BUDGET_TOL {
        let mut pick: Option<(f64, usize)> = None;
        for n in 0..np {
            let m = fids[n];
            if m == 1 {
                continue;
            }
            let saved = costs[m - 1] - costs[m - 2];
            let loss = gain[n][m - 1] - gain[n][m - 2];
            let score = if saved > 0.0 { loss / saved } else { f64::INFINITY };
            if pick.is_none_or(|(s, _)| score < s) {
                pick = Some((score, n));
            }
        }
        let (_, n) = pick?;
        cost -= costs[fids[n] - 1] - costs[fids[n] - 2];
        fids[n] -= 1;
    }
    let (r, _) = ratio_of(&fids);
    Some((r, fids))
}

/// Candidate decision pair maximizing summed information over summed cost
/// with the cap `remaining - N`. `None` when nothing is affordable.
pub fn select_exploration_pair(
    surrogates: &[PlayerSurrogate],
    search: &SearchSet,
    spec: &GameSpec,
    remaining: f64,
) -> Option<DecisionPair> {
    let cap = remaining - spec.evaluation_cost();
    let levels = spec.levels();
    let sigma2 = surrogates[0].model().sigma2();
    let mut best: Option<(f64, usize, Vec<usize>)> = None;
    let mut gain = vec![vec![0.0; levels]; surrogates.len()];
    for ci in 0..search.candidates().len() {
        for (n, s) in surrogates.iter().enumerate() {
            for m in 1..=levels {
                gain[n][m - 1] = information_from_variance(s.candidate_var(search, ci, m), sigma2);
            }
        }
        if let Some((r, fids)) = best_fidelity_vector(&gain, &spec.costs, cap) {
            if best.as_ref().is_none_or(|(br, _, _)| r > *br) {
                best = Some((r, ci, fids));
            }
        }
    }
    best.map(|(_, ci, fids)| DecisionPair { profile: search.space().profile_at(search.candidates()[ci]), fids })
}

/// Run one exploration phase, committing queries until a stopping rule
/// fires. `rngs` holds one observation-noise stream per player.
pub fn run_exploration_phase(
    surrogates: &mut [PlayerSurrogate],
    search: &SearchSet,
    spec: &GameSpec,
    ledger: &mut BudgetLedger,
    oracle: &dyn UtilityOracle,
    rngs: &mut [SimRng],
) -> Result<ExplorationOutcome> {
    let space = search.space();
    let models0: Vec<MogpModel> = surrogates.iter().map(|s| s.model().clone()).collect();
    let mut trackers: Vec<SequenceInformation> = models0.iter().map(SequenceInformation::new).collect();
    let threshold = 1.0 / ledger.episode_start_remaining.sqrt();
    let levels = spec.levels();
    let mut steps = Vec::new();
    let mut spend = 0.0;
    let mut info_per_player = vec![0.0; surrogates.len()];

    let stop_reason = loop {
        if check_stop_insufficient(spec, ledger.remaining()) {
            break StopReason::InsufficientBudget;
        }
        let Some(pair) = select_exploration_pair(surrogates, search, spec, ledger.remaining()) else {
            break StopReason::InsufficientBudget;
        };
        if check_stop_fidelity_fraction(&pair, spec.eta, levels) {
            break StopReason::FidelityFraction;
        }
        let x = space.features(&pair.profile);
        let cost = spec.vector_cost(&pair.fids);
        let mut info = Vec::with_capacity(trackers.len());
        for (t, &m) in trackers.iter_mut().zip(&pair.fids) {
            t.push(&x, m)?;
            info.push(t.information());
        }
        if check_stop_mi_ratio(info.iter().sum(), spend + cost, ledger.episode_start_remaining) {
            trackers.iter_mut().for_each(|t| t.pop());
            break StopReason::MiRatio;
        }
        let mut observations = Vec::with_capacity(surrogates.len());
        for (n, s) in surrogates.iter_mut().enumerate() {
            let y = oracle.observe(n, &pair.profile, pair.fids[n], &mut rngs[n]);
            s.observe(x.clone(), pair.fids[n], y)?;
            observations.push(y);
        }
        ledger.charge_exploration(cost)?;
        spend += cost;
        info_per_player = info;
        steps.push(ExplorationStep { pair, observations, cost });
    };

    if !steps.is_empty() {
        let ratio = info_per_player.iter().sum::<f64>() / spend;
        if ratio < threshold * (1.0 - 1e-9) {
            return Err(Error::Integrity(format!(
                "retained exploration ratio {ratio} below threshold {threshold}"
            )));
        }
    }
    if ledger.remaining() < spec.evaluation_cost() - BUDGET_TOL && !steps.is_empty() {
        return Err(Error::Integrity("exploration left less than one evaluation step of budget".into()));
    }
    Ok(ExplorationOutcome { steps, stop_reason, info_per_player, spend, ratio_threshold: threshold })
}
