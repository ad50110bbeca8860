//! Experiment orchestration: expand a config into (policy, budget,
//! threshold, seed) cells, run them, and persist traces and tables.

mod config;
mod summary;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{ExperimentConfig, SeedRange, PRESET_NAMES};
pub use summary::{
    best_eta, percentile, read_results, regret_surface, summarize, write_results, write_summary, write_surface,
    AggregateRow, EtaChoice, ResultRow, Summary, SurfacePoint, RESULTS_HEADER,
};

use crate::error::{Error, Result};
use crate::policies::{run_policy, Instance, PolicyId, RunOptions, RunResult};
use crate::rng::derive_seed;
use crate::testbeds::{InstanceSummary, Testbed};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub policy: PolicyId,
    /// In testbed cost units.
    pub lambda: f64,
    pub eta: Option<f64>,
    pub seed: u64,
}

impl Cell {
    pub fn file_stem(&self) -> String {
        match self.eta {
            Some(e) => format!("{}_L{}_eta{}_s{}", self.policy, self.lambda, e, self.seed),
            None => format!("{}_L{}_s{}", self.policy, self.lambda, self.seed),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub cell: Cell,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub summary: Summary,
    pub failures: Vec<CellFailure>,
}

#[derive(Clone, Debug)]
pub struct EtaSearchOutput {
    pub experiment: ExperimentOutput,
    pub surface: Vec<SurfacePoint>,
    pub best: Vec<EtaChoice>,
}

/// Seed of the game instance shared by every cell with replicate `seed`.
pub fn instance_seed(master: u64, seed: u64) -> u64 {
    derive_seed(master, "instance", seed)
}

/// Seed of the policy randomness of replicate `seed`; shared across
/// policies so that they see common observation noise.
pub fn run_seed(master: u64, seed: u64) -> u64 {
    derive_seed(master, "run", seed)
}

/// Cells in output order: seed, policy, budget, threshold.
pub fn cells(cfg: &ExperimentConfig, default_eta: f64) -> Vec<Cell> {
    let etas: Vec<f64> = if cfg.etas.is_empty() { vec![default_eta] } else { cfg.etas.clone() };
    let mut out = Vec::new();
    for seed in cfg.seeds.iter() {
        for &policy in &cfg.policies {
            for &lambda in &cfg.budgets {
                if policy.uses_eta() {
                    out.extend(etas.iter().map(|&e| Cell { policy, lambda, eta: Some(e), seed }));
                } else {
                    out.push(Cell { policy, lambda, eta: None, seed });
                }
            }
        }
    }
    out
}

/// Build the instance of replicate `seed` with the config's overrides.
pub fn build_instance(cfg: &ExperimentConfig, seed: u64) -> Result<Instance> {
    let mut inst = cfg.testbed.build(instance_seed(cfg.master_seed, seed))?;
    let mut spec = inst.spec.clone();
    if let Some(b) = cfg.b {
        spec = spec.with_b(b)?;
    }
    if let Some(d) = cfg.delta {
        spec = spec.with_delta(d)?;
    }
    if let Some(c) = cfg.c {
        spec = spec.with_c(c)?;
    }
    inst.spec = spec;
    Ok(inst)
}

fn pool(parallel: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(k) = parallel {
        b = b.num_threads(k);
    }
    b.build().map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn run_cell(
    cfg: &ExperimentConfig,
    inst: &Instance,
    cell: &Cell,
    opts: &RunOptions,
    runs_dir: Option<&Path>,
) -> Result<(ResultRow, RunResult)> {
    let unit = cfg.testbed.budget_unit();
    let eta = cell.eta.unwrap_or(inst.spec.eta);
    let inst = inst.with_budget_eta(cell.lambda / unit, eta)?;
    let res = run_policy(cell.policy, &inst, run_seed(cfg.master_seed, cell.seed), opts)?;
    if let Some(dir) = runs_dir {
        let path = dir.join(format!("{}.json", cell.file_stem()));
        std::fs::write(path, serde_json::to_vec(&res)?)?;
    }
    let row = ResultRow {
        policy: cell.policy.to_string(),
        lambda: cell.lambda,
        eta: cell.eta,
        seed: cell.seed,
        simple_regret: res.simple_regret(),
        cum_regret: Some(res.cumulative_regret()),
        episodes: Some(res.episodes.len()),
        spend: Some(res.spend * unit),
        wallclock_ms: Some(res.wallclock_ms),
    };
    Ok((row, res))
}

fn failed_row(cell: &Cell) -> ResultRow {
    ResultRow {
        policy: cell.policy.to_string(),
        lambda: cell.lambda,
        eta: cell.eta,
        seed: cell.seed,
        simple_regret: None,
        cum_regret: None,
        episodes: None,
        spend: None,
        wallclock_ms: None,
    }
}

/// Run every cell of `cfg`. Cell failures are recorded, not raised. With
/// `out` set, writes `results.csv`, `summary.csv`, `failures.json` and (if
/// enabled) `runs/*.json` there.
pub fn run_experiment(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let runs_dir: Option<PathBuf> = match out {
        Some(o) if cfg.save_runs => Some(o.join("runs")),
        _ => None,
    };
    if let Some(o) = out {
        std::fs::create_dir_all(o)?;
    }
    if let Some(d) = &runs_dir {
        std::fs::create_dir_all(d)?;
    }
    let opts = RunOptions { pe_samples: cfg.pe_samples.unwrap_or(RunOptions::default().pe_samples), ..RunOptions::default() };
    let pool = pool(cfg.parallel)?;
    let seeds: Vec<u64> = cfg.seeds.iter().collect();
    let instances: Vec<std::result::Result<Arc<Instance>, String>> = pool.install(|| {
        seeds.par_iter().map(|&s| build_instance(cfg, s).map(Arc::new).map_err(|e| e.to_string())).collect()
    });
    let default_eta = instances
        .iter()
        .find_map(|i| i.as_ref().ok().map(|i| i.spec.eta))
        .unwrap_or(0.5);
    let cells = cells(cfg, default_eta);
    let outcomes: Vec<std::result::Result<ResultRow, String>> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let idx = (cell.seed - cfg.seeds.start) as usize;
                let inst = instances[idx].as_ref().map_err(|e| format!("instance: {e}"))?;
                run_cell(cfg, inst, cell, &opts, runs_dir.as_deref()).map(|(r, _)| r).map_err(|e| e.to_string())
            })
            .collect()
    });
    let mut rows = Vec::with_capacity(cells.len());
    let mut failures = Vec::new();
    for (cell, o) in cells.iter().zip(outcomes) {
        match o {
            Ok(r) => rows.push(r),
            Err(message) => {
                rows.push(failed_row(cell));
                failures.push(CellFailure { cell: cell.clone(), message });
            }
        }
    }
    let summary = summarize(&rows);
    if let Some(o) = out {
        write_results(&o.join("results.csv"), &rows)?;
        write_summary(&o.join("summary.csv"), &summary)?;
        if !failures.is_empty() {
            std::fs::write(o.join("failures.json"), serde_json::to_vec_pretty(&failures)?)?;
        }
    }
    Ok(ExperimentOutput { rows, summary, failures })
}

/// Exhaustive search over the config's thresholds for the multi-fidelity
/// policy. Writes `surface.csv` next to the usual outputs.
pub fn eta_search(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<EtaSearchOutput> {
    let mut cfg = cfg.clone();
    cfg.policies = vec![PolicyId::MfUcbPne];
    if cfg.etas.is_empty() {
        return Err(Error::Config("threshold search needs a list of etas".into()));
    }
    let players = match &cfg.testbed {
        Testbed::Synthetic(s) => s.players,
        Testbed::Power(p) => p.links,
        Testbed::Aloha(a) => a.terminals,
    };
    if let Some(e) = cfg.etas.iter().find(|&&e| e < 1.0 / players as f64 - 1e-12) {
        return Err(Error::Config(format!("eta {e} is below 1/N = {}", 1.0 / players as f64)));
    }
    let experiment = run_experiment(&cfg, out)?;
    let surface = regret_surface(&experiment.rows);
    let best = best_eta(&surface);
    if let Some(o) = out {
        write_surface(&o.join("surface.csv"), &surface)?;
    }
    Ok(EtaSearchOutput { experiment, surface, best })
}

/// Replayable description of the instance of replicate `seed`.
pub fn dump_instance(cfg: &ExperimentConfig, seed: u64) -> Result<InstanceSummary> {
    let inst = build_instance(cfg, seed)?;
    Ok(InstanceSummary::new(&cfg.testbed, instance_seed(cfg.master_seed, seed), &inst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testbeds::SyntheticConfig;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            name: None,
            testbed: Testbed::Synthetic(SyntheticConfig { grid: 8, ..SyntheticConfig::default() }),
            policies: vec![PolicyId::UcbPne],
            budgets: vec![8.0],
            etas: vec![],
            seeds: SeedRange { start: 0, count: 2 },
            master_seed: 3,
            b: None,
            delta: None,
            c: None,
            pe_samples: Some(8),
            out: None,
            parallel: Some(1),
            save_runs: true,
        }
    }

    #[test]
    fn one_policy_two_seeds() {
        let out = run_experiment(&tiny(), None).unwrap();
        assert_eq!(out.rows.len(), 2);
        assert_eq!(out.summary.rows.len(), 1);
        assert!(out.failures.is_empty());
    }

    #[test]
    fn repeated_runs_write_identical_tables() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny();
        cfg.policies = PolicyId::ALL.to_vec();
        cfg.etas = vec![0.5, 1.0];
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        run_experiment(&cfg, Some(&a)).unwrap();
        cfg.parallel = Some(2);
        run_experiment(&cfg, Some(&b)).unwrap();
        let strip = |p: &Path| -> Vec<ResultRow> {
            read_results(&p.join("results.csv"))
                .unwrap()
                .into_iter()
                .map(|mut r| {
                    r.wallclock_ms = None;
                    r
                })
                .collect()
        };
        assert_eq!(strip(&a), strip(&b));
        assert_eq!(std::fs::read_dir(a.join("runs")).unwrap().count(), 2 * 4);
    }

    #[test]
    fn presets_parse() {
        for name in PRESET_NAMES {
            ExperimentConfig::preset(name).unwrap();
        }
        assert!(ExperimentConfig::preset("nope").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "budgets = [8.0]\nbogus = 1\n[seeds]\ncount = 1\n[testbed]\nkind = \"synthetic\"\n";
        assert!(matches!(ExperimentConfig::from_toml(text), Err(Error::Config(_))));
        let text = "budgets = [8.0]\n[seeds]\ncount = 1\n[testbed]\nkind = \"synthetic\"\ngird = 4\n";
        assert!(matches!(ExperimentConfig::from_toml(text), Err(Error::Config(_))));
        let ok = "budgets = [8.0]\n[seeds]\ncount = 1\n[testbed]\nkind = \"synthetic\"\ngrid = 4\n";
        ExperimentConfig::from_toml(ok).unwrap();
    }

    #[test]
    fn eta_grid_below_one_over_n_is_rejected() {
        let mut cfg = tiny();
        cfg.etas = vec![0.25];
        assert!(eta_search(&cfg, None).is_err());
    }
}
