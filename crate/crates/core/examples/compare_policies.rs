//! MF-UCB-PNE against the single-fidelity baselines on one synthetic game,
//! with a per-episode trace of the multi-fidelity run.
//!
//! `cargo run --release --example compare_policies -- [budget] [seed]`

use mfpne::policies::{run_policy, PolicyId, RunOptions};
use mfpne::testbeds::{SyntheticConfig, Testbed};

fn main() -> mfpne::Result<()> {
    let mut args = std::env::args().skip(1);
    let budget: f64 = args.next().map_or(Ok(128.0), |s| s.parse()).expect("budget");
    let seed: u64 = args.next().map_or(Ok(0), |s| s.parse()).expect("seed");

    let tb = Testbed::Synthetic(SyntheticConfig::default());
    let inst = tb.build(seed)?.with_budget_eta(budget / tb.budget_unit(), 0.5)?;
    println!("eps* = {:.4}, budget {budget}", inst.table.eps_star());

    for policy in PolicyId::ALL {
        let r = run_policy(policy, &inst, seed, &RunOptions::default())?;
        println!(
            "{policy:>11}: {:>3} episodes, {:>4} exploration steps, simple regret {:.4}, cumulative regret {:.3}, {} ms",
            r.episodes.len(),
            r.exploration_steps(),
            r.simple_regret().unwrap_or(f64::NAN),
            r.cumulative_regret(),
            r.wallclock_ms
        );
        if policy == PolicyId::MfUcbPne {
            for e in r.episodes.iter().take(8) {
                println!(
                    "    episode {:>2}: {:>3} cheap steps ({:?}), evaluated {:?}, max f {:.3}",
                    e.index,
                    e.exploration.len(),
                    e.stop_reason,
                    e.evaluation.profile,
                    e.eps_j
                );
            }
        }
    }
    Ok(())
}
