//! Slotted ALOHA with energy costs: each terminal picks an activity and an
//! access probability, trading collision-channel throughput against energy.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::fixed_point::fixed_point_or;
use crate::error::{invalid, Result};
use crate::game::{ActionGrid, DissatisfactionTable, GameSpec, Profile, ProfileSpace, SearchSet, UtilityOracle};
use crate::mogp::KernelParams;
use crate::policies::Instance;
use crate::rng::{stream, SimRng};

/// Largest reduced profile count swept for the exact ε*.
const REDUCED_LIMIT: u64 = 1 << 26;

fn default_terminals() -> usize {
    5
}
fn default_grid() -> usize {
    9
}
fn default_c1() -> f64 {
    50.0
}
fn default_c2() -> f64 {
    70.0
}
fn default_caps() -> Vec<f64> {
    vec![60.0, 55.0, 50.0, 45.0, 40.0]
}
fn default_xi() -> f64 {
    6.5e-4
}
fn default_omega() -> Vec<f64> {
    vec![4.9e-4, 5.5e-4, 6.1e-4]
}
fn default_costs() -> Vec<f64> {
    vec![1.0, 5.0, 10.0, 20.0]
}
fn default_scale() -> f64 {
    10.0
}
fn default_sigma2() -> f64 {
    0.01
}
fn default_surrogate() -> KernelParams {
    KernelParams::uniform(1.08, 0.41, 0.797, 4).expect("valid constants")
}
fn default_candidates() -> usize {
    256
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlohaConfig {
    #[serde(default = "default_terminals")]
    pub terminals: usize,
    /// Points per probability axis; each terminal starts from a grid x grid
    /// square on `[0, 1]^2`.
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default = "default_c2")]
    pub c2: f64,
    /// Energy cap per terminal.
    #[serde(default = "default_caps")]
    pub caps: Vec<f64>,
    #[serde(default = "default_xi")]
    pub xi: f64,
    /// Energy weights of the lower fidelities.
    #[serde(default = "default_omega")]
    pub omega: Vec<f64>,
    #[serde(default = "default_costs")]
    pub costs: Vec<f64>,
    /// Multiplier applied to utilities before noise.
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
    #[serde(default = "default_surrogate")]
    pub surrogate: KernelParams,
    #[serde(default = "default_candidates")]
    pub max_candidates: usize,
}

impl Default for AlohaConfig {
    fn default() -> Self {
        Self {
            terminals: default_terminals(),
            grid: default_grid(),
            c1: default_c1(),
            c2: default_c2(),
            caps: default_caps(),
            xi: default_xi(),
            omega: default_omega(),
            costs: default_costs(),
            scale: default_scale(),
            sigma2: default_sigma2(),
            surrogate: default_surrogate(),
            max_candidates: default_candidates(),
        }
    }
}

/// Exact equilibrium summary of an ALOHA game.
#[derive(Clone, Debug, PartialEq)]
pub struct AlohaSolution {
    pub eps_star: f64,
    pub argmin: Profile,
    pub max_f: f64,
}

fn solution_memo() -> &'static Mutex<HashMap<String, AlohaSolution>> {
    static MEMO: OnceLock<Mutex<HashMap<String, AlohaSolution>>> = OnceLock::new();
    MEMO.get_or_init(|| Mutex::new(HashMap::new()))
}

impl AlohaConfig {
    pub fn build(&self, seed: u64) -> Result<Instance> {
        let game = Arc::new(AlohaGame::new(self)?);
        let key = serde_json::to_string(self)?;
        let cached = solution_memo().lock().expect("memo poisoned").get(&key).cloned();
        let sol = match cached {
            Some(s) => s,
            None => {
                let s = game.solve()?;
                solution_memo().lock().expect("memo poisoned").insert(key, s.clone());
                s
            }
        };
        let space = game.space().clone();
        let top = *self.costs.last().expect("validated");
        let costs = self.costs.iter().map(|c| c / top).collect();
        let mut pick = stream(seed, "search", 0);
        let search = Arc::new(SearchSet::new(&space, self.max_candidates, &mut pick)?);
        let oracle: Arc<dyn UtilityOracle> = game;
        let table = DissatisfactionTable::from_summary(oracle.clone(), space.clone(), sol.eps_star, sol.argmin, sol.max_f, true);
        let spec = GameSpec::new(space, costs, self.sigma2, 1.0)?.with_c(table.suggested_c())?;
        Ok(Instance { spec, surrogate: self.surrogate.clone(), oracle, table: Arc::new(table), search })
    }
}

/// Per-terminal action data.
#[derive(Clone, Debug)]
struct Terminal {
    // transmit probability x1 * x2 and energy per action
    p: Vec<f64>,
    e: Vec<f64>,
}

#[derive(Debug)]
pub struct AlohaGame {
    space: ProfileSpace,
    terminals: Vec<Terminal>,
    caps: Vec<f64>,
    xi: f64,
    omega: Vec<f64>,
    scale: f64,
    noise: Normal<f64>,
}

impl AlohaGame {
    pub fn new(cfg: &AlohaConfig) -> Result<Self> {
        if cfg.terminals == 0 || cfg.grid < 2 {
            return Err(invalid("ALOHA needs terminals and at least two points per axis"));
        }
        if cfg.caps.len() != cfg.terminals {
            return Err(invalid(format!("{} energy caps for {} terminals", cfg.caps.len(), cfg.terminals)));
        }
        let levels = cfg.omega.len() + 1;
        if cfg.costs.len() != levels || cfg.surrogate.levels() != levels {
            return Err(invalid("costs, energy weights and surrogate disagree on the number of levels"));
        }
        if !(cfg.sigma2 > 0.0) || !(cfg.scale > 0.0) {
            return Err(invalid("noise variance and scale must be positive"));
        }
        let mut grids = Vec::new();
        let mut terminals = Vec::new();
        let k = cfg.grid;
        for &cap in &cfg.caps {
            let (mut vals, mut feats, mut p, mut e) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for i in 0..k {
                for j in 0..k {
                    let x1 = i as f64 / (k - 1) as f64;
                    let x2 = j as f64 / (k - 1) as f64;
                    let energy = x1 * (cfg.c1 + cfg.c2 * x2);
                    if energy > cap || x1 * x2 > 1.0 - 1e-9 {
                        continue;
                    }
                    vals.push(vec![x1, x2]);
                    feats.push(vec![x1, x2]);
                    p.push(x1 * x2);
                    e.push(energy);
                }
            }
            if vals.is_empty() {
                return Err(invalid(format!("energy cap {cap} excludes every action")));
            }
            grids.push(ActionGrid::new(vals, feats)?);
            terminals.push(Terminal { p, e });
        }
        Ok(Self {
            space: ProfileSpace::new(grids)?,
            terminals,
            caps: cfg.caps.clone(),
            xi: cfg.xi,
            omega: cfg.omega.clone(),
            scale: cfg.scale,
            noise: Normal::new(0.0, cfg.sigma2.sqrt()).map_err(|e| invalid(e.to_string()))?,
        })
    }

    pub fn space(&self) -> &ProfileSpace {
        &self.space
    }

    pub fn cap(&self, n: usize) -> f64 {
        self.caps[n]
    }

    /// Probability that terminal `n` transmits alone.
    pub fn throughput(&self, n: usize, profile: &[usize]) -> f64 {
        let mut t = self.terminals[n].p[profile[n]];
        for (i, &a) in profile.iter().enumerate() {
            if i != n {
                t *= 1.0 - self.terminals[i].p[a];
            }
        }
        t
    }

    pub fn energy(&self, n: usize, profile: &[usize]) -> f64 {
        self.terminals[n].e[profile[n]]
    }

    fn weight(&self, m: usize) -> f64 {
        if m > self.omega.len() {
            self.xi
        } else {
            self.omega[m - 1]
        }
    }

    /// Noiseless scaled utility at fidelity `m`.
    pub fn utility(&self, n: usize, profile: &[usize], m: usize) -> f64 {
        self.scale * (self.throughput(n, profile) - self.weight(m) * self.energy(n, profile))
    }

    /// Exact ε*, a minimizing profile and the largest dissatisfaction.
    ///
    /// A terminal's payoff depends on the others only through their
    /// transmit probabilities, and among its own actions with equal
    /// probability the least energetic one dominates. Sweeping one
    /// cheapest action per probability per terminal therefore finds ε*,
    /// and the costliest action per probability gives the largest
    /// dissatisfaction.
    pub fn solve(&self) -> Result<AlohaSolution> {
        struct Classes {
            p: Vec<f64>,
            e_min: Vec<f64>,
            e_max: Vec<f64>,
            rep: Vec<usize>,
        }
        let classes: Vec<Classes> = self
            .terminals
            .iter()
            .map(|t| {
                let mut by_p: BTreeMap<i64, (f64, f64, f64, usize)> = BTreeMap::new();
                for a in 0..t.p.len() {
                    let key = (t.p[a] * 1e12).round() as i64;
                    let ent = by_p.entry(key).or_insert((t.p[a], t.e[a], t.e[a], a));
                    if t.e[a] < ent.1 {
                        ent.1 = t.e[a];
                        ent.3 = a;
                    }
                    ent.2 = ent.2.max(t.e[a]);
                }
                let v: Vec<_> = by_p.into_values().collect();
                Classes {
                    p: v.iter().map(|c| c.0).collect(),
                    e_min: v.iter().map(|c| c.1).collect(),
                    e_max: v.iter().map(|c| c.2).collect(),
                    rep: v.iter().map(|c| c.3).collect(),
                }
            })
            .collect();
        let np = classes.len();
        let radix: Vec<usize> = classes.iter().map(|c| c.p.len()).collect();
        let total = radix.iter().try_fold(1u64, |acc, &r| acc.checked_mul(r as u64));
        match total {
            Some(t) if t <= REDUCED_LIMIT => {}
            _ => return Err(invalid("ALOHA game too large for the exact sweep")),
        }
        let top = self.omega.len() + 1;
        let xi = self.weight(top);
        let mut digits = vec![0usize; np];
        let mut best = (f64::INFINITY, digits.clone());
        let mut max_f: f64 = 0.0;
        let mut prefix = vec![1.0; np + 1];
        let mut suffix = vec![1.0; np + 1];
        loop {
            for i in 0..np {
                prefix[i + 1] = prefix[i] * (1.0 - classes[i].p[digits[i]]);
            }
            for i in (0..np).rev() {
                suffix[i] = suffix[i + 1] * (1.0 - classes[i].p[digits[i]]);
            }
            let mut worst: f64 = 0.0;
            for n in 0..np {
                let q = prefix[n] * suffix[n + 1];
                let c = &classes[n];
                let mut br = f64::NEG_INFINITY;
                let mut low = f64::INFINITY;
                for k in 0..c.p.len() {
                    br = br.max(c.p[k] * q - xi * c.e_min[k]);
                    low = low.min(c.p[k] * q - xi * c.e_max[k]);
                }
                let own = c.p[digits[n]] * q - xi * c.e_min[digits[n]];
                worst = worst.max(self.scale * (br - own));
                max_f = max_f.max(self.scale * (br - low));
            }
            if worst < best.0 {
                best = (worst, digits.clone());
            }
            // odometer, last terminal fastest
            let mut i = np;
            loop {
                if i == 0 {
                    let argmin: Profile = best.1.iter().enumerate().map(|(n, &d)| classes[n].rep[d]).collect();
                    return Ok(AlohaSolution { eps_star: best.0, argmin, max_f });
                }
                i -= 1;
                digits[i] += 1;
                if digits[i] < radix[i] {
                    break;
                }
                digits[i] = 0;
            }
        }
    }

    /// Equilibrium by best-response iteration from the all-idle profile,
    /// falling back to the exact sweep if the dynamics cycle.
    pub fn fixed_point_equilibrium(&self) -> Result<(Profile, bool)> {
        let start = vec![0; self.space.n_players()];
        fixed_point_or(self, &self.space, &start, 200, || Ok(self.solve()?.argmin))
    }
}

impl UtilityOracle for AlohaGame {
    fn n_players(&self) -> usize {
        self.terminals.len()
    }

    fn levels(&self) -> usize {
        self.omega.len() + 1
    }

    fn observe(&self, n: usize, profile: &[usize], m: usize, rng: &mut SimRng) -> f64 {
        self.utility(n, profile, m) + self.noise.sample(rng)
    }

    fn true_utility(&self, n: usize, profile: &[usize]) -> f64 {
        self.utility(n, profile, self.omega.len() + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{dissatisfaction, epsilon_star};

    fn small(terminals: usize, grid: usize) -> AlohaConfig {
        AlohaConfig { terminals, grid, caps: default_caps()[..terminals].to_vec(), ..AlohaConfig::default() }
    }

    fn action(g: &AlohaGame, n: usize, x1: f64, x2: f64) -> usize {
        let grid = g.space().grid(n);
        (0..grid.len()).find(|&a| grid.value(a) == [x1, x2]).unwrap()
    }

    #[test]
    fn idle_terminal_pays_only_for_activity() {
        let g = AlohaGame::new(&small(2, 5)).unwrap();
        let prof = vec![action(&g, 0, 0.5, 0.0), action(&g, 1, 0.25, 0.5)];
        assert_eq!(g.throughput(0, &prof), 0.0);
        let u = g.true_utility(0, &prof);
        assert!((u - g.scale * (-g.xi * 50.0 * 0.5)).abs() < 1e-15);
    }

    #[test]
    fn single_terminal_collapses() {
        let cfg = AlohaConfig { caps: vec![200.0], ..small(1, 5) };
        let g = AlohaGame::new(&cfg).unwrap();
        let a = action(&g, 0, 1.0, 0.25);
        assert!((g.throughput(0, &[a]) - 0.25).abs() < 1e-15);
        assert!((g.energy(0, &[a]) - (50.0 + 70.0 * 0.25)).abs() < 1e-12);
    }

    #[test]
    fn grids_respect_caps() {
        let g = AlohaGame::new(&AlohaConfig::default()).unwrap();
        for n in 0..5 {
            for a in 0..g.space().grid(n).len() {
                let [x1, x2] = g.space().grid(n).value(a) else { panic!() };
                assert!(x1 * (50.0 + 70.0 * x2) <= g.cap(n));
                assert!(x1 * x2 < 1.0);
            }
        }
    }

    #[test]
    fn reduced_sweep_matches_brute_force() {
        let g = AlohaGame::new(&small(3, 4)).unwrap();
        let sol = g.solve().unwrap();
        let (eps, _) = epsilon_star(&g, g.space()).unwrap();
        assert!((sol.eps_star - eps).abs() < 1e-12, "{} vs {eps}", sol.eps_star);
        let worst = (0..3).map(|n| dissatisfaction(&g, g.space(), n, &sol.argmin)).fold(0.0, f64::max);
        assert!((worst - eps).abs() < 1e-12);
        let table = DissatisfactionTable::brute_force(Arc::new(AlohaGame::new(&small(3, 4)).unwrap()), g.space().clone()).unwrap();
        assert!((table.max_f() - sol.max_f).abs() < 1e-12);
    }

    #[test]
    fn fixed_point_agrees_with_sweep_when_a_pne_exists() {
        let g = AlohaGame::new(&small(2, 5)).unwrap();
        let sol = g.solve().unwrap();
        let (p, _) = g.fixed_point_equilibrium().unwrap();
        let worst = (0..2).map(|n| dissatisfaction(&g, g.space(), n, &p)).fold(0.0, f64::max);
        if sol.eps_star == 0.0 {
            assert_eq!(worst, 0.0);
        }
        assert!(worst >= sol.eps_star);
    }
}
