//! A small seed sweep through the harness, written to a temporary
//! directory, then read back and summarized.

use mfpne::harness::{read_results, run_experiment, summarize, ExperimentConfig};

const CONFIG: &str = r#"
name = "demo"
budgets = [16.0, 64.0]
etas = [0.5, 1.0]
seeds = { count = 3 }
parallel = 1

[testbed]
kind = "synthetic"
grid = 32
"#;

fn main() -> mfpne::Result<()> {
    let cfg = ExperimentConfig::from_toml(CONFIG)?;
    let out = std::env::temp_dir().join("mfpne-demo");
    let res = run_experiment(&cfg, Some(&out))?;
    println!("{} cells, {} failures, written to {}", res.rows.len(), res.failures.len(), out.display());

    let rows = read_results(&out.join("results.csv"))?;
    let summary = summarize(&rows);
    println!("{:>11} {:>6} {:>5} {:>12} {:>12}", "policy", "budget", "eta", "simple", "cumulative");
    for r in &summary.rows {
        let eta = r.eta.map_or("-".to_string(), |e| e.to_string());
        println!("{:>11} {:>6} {eta:>5} {:>12.4} {:>12.3}", r.policy, r.lambda, r.simple_mean, r.cum_mean);
    }
    Ok(())
}
