use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column order of `results.csv`.
pub const RESULTS_HEADER: [&str; 9] =
    ["policy", "lambda", "eta", "seed", "simple_regret", "cum_regret", "episodes", "spend", "wallclock_ms"];

/// One finished cell. `eta` is empty for policies without a threshold;
/// the metrics are empty for failed cells. `lambda` and `spend` are in the
/// testbed's cost units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub policy: String,
    pub lambda: f64,
    pub eta: Option<f64>,
    pub seed: u64,
    pub simple_regret: Option<f64>,
    pub cum_regret: Option<f64>,
    pub episodes: Option<usize>,
    pub spend: Option<f64>,
    pub wallclock_ms: Option<u64>,
}

impl ResultRow {
    pub fn failed(&self) -> bool {
        self.cum_regret.is_none()
    }

    pub fn over_budget(&self) -> bool {
        self.spend.is_some_and(|s| s > self.lambda * (1.0 + 1e-9))
    }
}

pub fn write_results(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(RESULTS_HEADER)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != RESULTS_HEADER {
        return Err(Error::InvalidArgument(format!(
            "{}: expected columns {}, found {}",
            path.display(),
            RESULTS_HEADER.join(","),
            header.join(",")
        )));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Mean and 5th/95th percentiles of one (policy, budget, threshold) group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub policy: String,
    pub lambda: f64,
    pub eta: Option<f64>,
    pub runs: usize,
    pub failed: usize,
    pub simple_mean: f64,
    pub simple_p05: f64,
    pub simple_p95: f64,
    pub cum_mean: f64,
    pub cum_p05: f64,
    pub cum_p95: f64,
    pub budget_violations: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: Vec<AggregateRow>,
    pub budget_violations: usize,
    pub failed: usize,
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn bands(mut v: Vec<f64>) -> (f64, f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    v.sort_by(f64::total_cmp);
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (mean, percentile(&v, 0.05), percentile(&v, 0.95))
}

type GroupKey = (String, u64, Option<u64>);

/// Group rows by policy, budget and threshold.
pub fn summarize(rows: &[ResultRow]) -> Summary {
    let mut groups: BTreeMap<GroupKey, Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.policy.clone(), r.lambda.to_bits(), r.eta.map(f64::to_bits))).or_default().push(r);
    }
    let mut out = Summary::default();
    for ((policy, lambda, eta), g) in groups {
        let ok: Vec<&&ResultRow> = g.iter().filter(|r| !r.failed()).collect();
        let (simple_mean, simple_p05, simple_p95) = bands(ok.iter().filter_map(|r| r.simple_regret).collect());
        let (cum_mean, cum_p05, cum_p95) = bands(ok.iter().filter_map(|r| r.cum_regret).collect());
        let violations = g.iter().filter(|r| r.over_budget()).count();
        out.budget_violations += violations;
        out.failed += g.len() - ok.len();
        out.rows.push(AggregateRow {
            policy,
            lambda: f64::from_bits(lambda),
            eta: eta.map(f64::from_bits),
            runs: g.len(),
            failed: g.len() - ok.len(),
            simple_mean,
            simple_p05,
            simple_p95,
            cum_mean,
            cum_p05,
            cum_p95,
            budget_violations: violations,
        });
    }
    out.rows.sort_by(|a, b| {
        (a.policy.as_str(), a.lambda, a.eta.unwrap_or(-1.0))
            .partial_cmp(&(b.policy.as_str(), b.lambda, b.eta.unwrap_or(-1.0)))
            .expect("finite keys")
    });
    out
}

pub fn write_summary(path: &Path, summary: &Summary) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in &summary.rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// One point of the threshold-budget regret surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub eta: f64,
    pub lambda: f64,
    pub mean_simple_regret: f64,
    pub runs: usize,
}

/// Threshold with the smallest mean simple regret at one budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaChoice {
    pub lambda: f64,
    pub eta: f64,
    pub mean_simple_regret: f64,
}

/// Mean simple regret per (threshold, budget) over the rows carrying a
/// threshold.
pub fn regret_surface(rows: &[ResultRow]) -> Vec<SurfacePoint> {
    let mut acc: BTreeMap<(u64, u64), (f64, usize)> = BTreeMap::new();
    for r in rows {
        if let (Some(eta), Some(s)) = (r.eta, r.simple_regret) {
            let e = acc.entry((r.lambda.to_bits(), eta.to_bits())).or_insert((0.0, 0));
            e.0 += s;
            e.1 += 1;
        }
    }
    let mut pts: Vec<SurfacePoint> = acc
        .into_iter()
        .map(|((l, e), (s, n))| SurfacePoint {
            eta: f64::from_bits(e),
            lambda: f64::from_bits(l),
            mean_simple_regret: s / n as f64,
            runs: n,
        })
        .collect();
    pts.sort_by(|a, b| (a.lambda, a.eta).partial_cmp(&(b.lambda, b.eta)).expect("finite keys"));
    pts
}

/// Best threshold per budget; exact ties go to the smaller threshold.
pub fn best_eta(surface: &[SurfacePoint]) -> Vec<EtaChoice> {
    let mut best: Vec<EtaChoice> = Vec::new();
    for p in surface {
        match best.iter_mut().find(|b| b.lambda == p.lambda) {
            Some(b) => {
                if p.mean_simple_regret < b.mean_simple_regret
                    || (p.mean_simple_regret == b.mean_simple_regret && p.eta < b.eta)
                {
                    b.eta = p.eta;
                    b.mean_simple_regret = p.mean_simple_regret;
                }
            }
            None => best.push(EtaChoice { lambda: p.lambda, eta: p.eta, mean_simple_regret: p.mean_simple_regret }),
        }
    }
    best
}

pub fn write_surface(path: &Path, surface: &[SurfacePoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in surface {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}
