//! Evaluation phase: confidence bounds on utilities and dissatisfactions,
//! optimistic profile selection, and the width parameter β with its
//! greedy information-gain estimate γ.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{invalid, Result};
use crate::game::{DissatisfactionTable, SearchSet, UtilityOracle};
use crate::mogp::{information_from_variance, KernelParams, MogpModel, ObservationRecord, PosteriorCache};
use crate::surrogate::PlayerSurrogate;

/// At most this many candidates enter the greedy γ estimate; larger sets
/// are thinned by an even stride.
pub const GAMMA_POINTS: usize = 2048;

/// `B + 4 σ sqrt(1 + γ + ln(1/δ))`, with `sigma` the noise standard deviation.
pub fn compute_beta(b: f64, sigma: f64, gamma: f64, delta: f64) -> f64 {
    b + 4.0 * sigma * (1.0 + gamma + (1.0 / delta).ln()).sqrt()
}

/// Greedy top-fidelity information chain: each step queries the point of
/// largest posterior variance and fantasizes its observation.
#[derive(Debug)]
struct GreedyChain {
    model: MogpModel,
    cache: PosteriorCache,
    feats: Vec<Vec<f64>>,
    // cumulative[t] = information after t steps
    cumulative: Vec<f64>,
}

impl GreedyChain {
    fn new(model: &MogpModel, points: &[Vec<f64>]) -> Result<Self> {
        let top = model.kernel().levels();
        let pts: Vec<(Vec<f64>, usize)> = points.iter().map(|x| (x.clone(), top)).collect();
        Ok(Self {
            model: model.clone(),
            cache: PosteriorCache::new(model, &pts)?,
            feats: points.to_vec(),
            cumulative: vec![0.0],
        })
    }

    fn extend_to(&mut self, horizon: usize) -> Result<f64> {
        let top = self.model.kernel().levels();
        let sigma2 = self.model.sigma2();
        while self.cumulative.len() <= horizon {
            let mut best = 0;
            for p in 1..self.cache.len() {
                if self.cache.var(p) > self.cache.var(best) {
                    best = p;
                }
            }
            let gain = information_from_variance(self.cache.var(best), sigma2);
            let last = *self.cumulative.last().unwrap();
            self.cumulative.push(last + gain);
            // the posterior variance does not depend on the observed value
            self.model.append(ObservationRecord { x: self.feats[best].clone(), m: top, y: 0.0 })?;
            self.cache.sync(&self.model);
        }
        Ok(self.cumulative[horizon])
    }
}

/// Greedy estimate of the maximal information gain of `horizon`
/// top-fidelity queries over `points`, starting from `model`'s data.
pub fn estimate_gamma(model: &MogpModel, points: &[Vec<f64>], horizon: usize) -> Result<f64> {
    if horizon == 0 {
        return Err(invalid("gamma horizon must be at least 1"));
    }
    if points.is_empty() {
        return Err(invalid("no points to choose from"));
    }
    GreedyChain::new(model, points)?.extend_to(horizon)
}

type ChainKey = (String, u64, u64);

fn chains() -> &'static Mutex<HashMap<ChainKey, Arc<Mutex<GreedyChain>>>> {
    static CHAINS: OnceLock<Mutex<HashMap<ChainKey, Arc<Mutex<GreedyChain>>>>> = OnceLock::new();
    CHAINS.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Prior-based greedy γ over a search set, memoized per process: the chain
/// only depends on the kernel, the noise and the points, so every run on
/// the same grid reuses it and extends it as horizons grow.
pub fn prior_gamma(params: &KernelParams, sigma2: f64, search: &SearchSet, horizon: usize) -> Result<f64> {
    if horizon == 0 {
        return Err(invalid("gamma horizon must be at least 1"));
    }
    let key = (serde_json::to_string(params)?, sigma2.to_bits(), search.fingerprint());
    let chain = {
        let mut map = chains().lock().expect("gamma memo poisoned");
        match map.get(&key) {
            Some(c) => c.clone(),
            None => {
                let cands = search.candidates();
                let stride = cands.len().div_ceil(GAMMA_POINTS).max(1);
                let points: Vec<Vec<f64>> =
                    cands.iter().step_by(stride).map(|&i| search.space().features_at(i)).collect();
                let model = MogpModel::new(params.clone(), sigma2)?;
                let c = Arc::new(Mutex::new(GreedyChain::new(&model, &points)?));
                map.insert(key, c.clone());
                c
            }
        }
    };
    let mut guard = chain.lock().expect("gamma chain poisoned");
    guard.extend_to(horizon)
}

/// Confidence bounds at the search set for every player.
#[derive(Clone, Debug)]
pub struct ConfidenceState {
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    /// `lower[n][pos]`, `upper[n][pos]` over player `n`'s points.
    pub lower: Vec<Vec<f64>>,
    pub upper: Vec<Vec<f64>>,
    /// `f_lower[n][ci]`, `f_upper[n][ci]` over candidates.
    pub f_lower: Vec<Vec<f64>>,
    pub f_upper: Vec<Vec<f64>>,
    /// Per player and column, position of the largest upper bound.
    col_argmax_upper: Vec<Vec<u32>>,
}

/// Utility intervals `μ ± β σ` at the top fidelity and the implied
/// dissatisfaction intervals, with the inner maxima taken over columns.
pub fn build_confidence_state(
    surrogates: &[PlayerSurrogate],
    search: &SearchSet,
    beta: &[f64],
    gamma: &[f64],
) -> ConfidenceState {
    let np = surrogates.len();
    let mut st = ConfidenceState {
        beta: beta.to_vec(),
        gamma: gamma.to_vec(),
        lower: Vec::with_capacity(np),
        upper: Vec::with_capacity(np),
        f_lower: Vec::with_capacity(np),
        f_upper: Vec::with_capacity(np),
        col_argmax_upper: Vec::with_capacity(np),
    };
    for (n, s) in surrogates.iter().enumerate() {
        let pp = search.player(n);
        let npts = pp.points.len();
        let mut lo = Vec::with_capacity(npts);
        let mut hi = Vec::with_capacity(npts);
        for pos in 0..npts {
            let mu = s.top_mean(pos);
            let w = beta[n] * s.top_var(pos).sqrt();
            lo.push(mu - w);
            hi.push(mu + w);
        }
        let ncol = pp.n_columns();
        let mut col_lo = vec![f64::NEG_INFINITY; ncol];
        let mut col_hi = vec![f64::NEG_INFINITY; ncol];
        let mut col_arg = vec![0u32; ncol];
        for c in 0..ncol {
            for &pos in pp.column(c) {
                let p = pos as usize;
                col_lo[c] = col_lo[c].max(lo[p]);
                if hi[p] > col_hi[c] {
                    col_hi[c] = hi[p];
                    col_arg[c] = pos;
                }
            }
        }
        let ncand = search.candidates().len();
        let mut fl = Vec::with_capacity(ncand);
        let mut fu = Vec::with_capacity(ncand);
        for ci in 0..ncand {
            let pos = pp.candidate_pos[ci] as usize;
            let c = pp.candidate_col[ci] as usize;
            fl.push(col_lo[c] - hi[pos]);
            fu.push(col_hi[c] - lo[pos]);
        }
        st.lower.push(lo);
        st.upper.push(hi);
        st.f_lower.push(fl);
        st.f_upper.push(fu);
        st.col_argmax_upper.push(col_arg);
    }
    st
}

impl ConfidenceState {
    pub fn n_players(&self) -> usize {
        self.lower.len()
    }

    /// `max_n f_lower[n][ci]`.
    pub fn optimistic_gap(&self, ci: usize) -> f64 {
        self.f_lower.iter().map(|f| f[ci]).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Does every utility interval contain the true utility?
    pub fn utility_covered(&self, search: &SearchSet, oracle: &dyn UtilityOracle) -> bool {
        (0..self.n_players()).all(|n| {
            search.player(n).points.iter().enumerate().all(|(pos, &idx)| {
                let u = oracle.true_utility(n, &search.space().profile_at(idx));
                self.lower[n][pos] <= u && u <= self.upper[n][pos]
            })
        })
    }

    /// Does every dissatisfaction interval contain the true dissatisfaction?
    pub fn dissatisfaction_covered(&self, search: &SearchSet, table: &DissatisfactionTable) -> bool {
        (0..self.n_players()).all(|n| {
            search.candidates().iter().enumerate().all(|(ci, &idx)| {
                let f = table.f(n, &search.space().profile_at(idx));
                self.f_lower[n][ci] <= f && f <= self.f_upper[n][ci]
            })
        })
    }

    /// One row per candidate with every player's bounds.
    pub fn write_csv(&self, search: &SearchSet, path: &Path) -> Result<()> {
        let np = self.n_players();
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["index".to_string()];
        header.extend((0..np).map(|n| format!("a{n}")));
        for n in 0..np {
            for k in ["u_lower", "u_upper", "f_lower", "f_upper"] {
                header.push(format!("{k}{n}"));
            }
        }
        w.write_record(&header)?;
        for (ci, &idx) in search.candidates().iter().enumerate() {
            let mut row = vec![idx.to_string()];
            row.extend(search.space().profile_at(idx).iter().map(|a| a.to_string()));
            for n in 0..np {
                let pos = search.player(n).candidate_pos[ci] as usize;
                for v in [self.lower[n][pos], self.upper[n][pos], self.f_lower[n][ci], self.f_upper[n][ci]] {
                    row.push(v.to_string());
                }
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Candidate minimizing the optimistic maximum dissatisfaction; returns the
/// candidate's position in the candidate list.
pub fn reported_profile(state: &ConfidenceState) -> usize {
    let ncand = state.f_lower[0].len();
    let mut best = 0;
    let mut best_v = state.optimistic_gap(0);
    for ci in 1..ncand {
        let v = state.optimistic_gap(ci);
        if v < best_v {
            best_v = v;
            best = ci;
        }
    }
    best
}

/// The player with the largest pessimistic dissatisfaction at the reported
/// candidate, and the profile where that player switches to the action with
/// the largest upper utility bound. Returns `(player, profile index)`.
pub fn exploring_profile(state: &ConfidenceState, search: &SearchSet, reported: usize) -> (usize, u64) {
    let mut nj = 0;
    for n in 1..state.n_players() {
        if state.f_upper[n][reported] > state.f_upper[nj][reported] {
            nj = n;
        }
    }
    let pp = search.player(nj);
    let col = pp.candidate_col[reported] as usize;
    let pos = state.col_argmax_upper[nj][col] as usize;
    (nj, pp.points[pos])
}

/// Of the two profiles, the one with the larger maximum top-fidelity
/// posterior variance across players; ties go to `reported`.
pub fn final_evaluation_profile(surrogates: &[PlayerSurrogate], search: &SearchSet, reported: u64, exploring: u64) -> u64 {
    if reported == exploring {
        return reported;
    }
    let spread = |idx: u64| surrogates.iter().map(|s| s.top_var_at(search, idx)).fold(0.0, f64::max);
    if spread(exploring) > spread(reported) {
        exploring
    } else {
        reported
    }
}
