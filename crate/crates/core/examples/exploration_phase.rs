//! One exploration phase on a synthetic two-player game: which profiles and
//! fidelities get queried, and why the phase stops.

use mfpne::acquisition::{run_exploration_phase, BudgetLedger};
use mfpne::rng::stream;
use mfpne::surrogate::PlayerSurrogate;
use mfpne::testbeds::{SyntheticConfig, Testbed};

fn main() -> mfpne::Result<()> {
    let seed = 3;
    let inst = Testbed::Synthetic(SyntheticConfig { grid: 32, ..SyntheticConfig::default() })
        .build(seed)?
        .with_budget_eta(64.0, 0.5)?;
    let spec = &inst.spec;
    let mut surrogates = (0..spec.n_players())
        .map(|n| PlayerSurrogate::new(inst.surrogate.clone(), spec.sigma2, &inst.search, n, true))
        .collect::<mfpne::Result<Vec<_>>>()?;
    let mut rngs: Vec<_> = (0..spec.n_players()).map(|n| stream(seed, "noise", n as u64)).collect();
    let mut ledger = BudgetLedger::new(spec.budget);
    ledger.start_episode();

    let out = run_exploration_phase(&mut surrogates, &inst.search, spec, &mut ledger, inst.oracle.as_ref(), &mut rngs)?;
    for (t, s) in out.steps.iter().enumerate().take(12) {
        println!("{t:>3}: profile {:?} fidelities {:?} cost {}", s.pair.profile, s.pair.fids, s.cost);
    }
    if out.steps.len() > 12 {
        println!("... {} steps in total", out.steps.len());
    }
    println!("stopped: {:?}", out.stop_reason);
    println!(
        "spent {:.3} of {:.1}; information/cost {:.4} vs threshold {:.4}",
        out.spend,
        spec.budget,
        out.ratio().unwrap_or(0.0),
        out.ratio_threshold
    );
    Ok(())
}
