//! The uplink power-control game: utilities as a function of transmit
//! power, how noisy each fidelity is, and one MF-UCB-PNE run.

use mfpne::policies::{run_policy, PolicyId, RunOptions};
use mfpne::rng::stream;
use mfpne::testbeds::{PowerConfig, PowerGame, Testbed};

fn main() -> mfpne::Result<()> {
    let cfg = PowerConfig::default();
    let game = PowerGame::new(&cfg, 0)?;
    let quiet = vec![0; cfg.links];
    println!("link 0 utility with the others at minimum power:");
    for a in 0..cfg.grid {
        let mut p = quiet.clone();
        p[0] = a;
        println!("  action {a}: {:.4} (+/- {:.4})", game.raw_truth(0, &p), game.truth_std_err(0, &p));
    }

    let mut rng = stream(0, "example", 0);
    let probe = vec![cfg.grid / 2; cfg.links];
    for (m, samples) in cfg.samples.iter().enumerate() {
        let obs: Vec<f64> = (0..200).map(|_| game.raw_observe(0, &probe, m + 1, &mut rng)).collect();
        let mean = obs.iter().sum::<f64>() / obs.len() as f64;
        let sd = (obs.iter().map(|o| (o - mean).powi(2)).sum::<f64>() / obs.len() as f64).sqrt();
        println!("fidelity {} ({samples:>3} channel draws): sd {sd:.4}", m + 1);
    }

    let tb = Testbed::Power(cfg);
    let inst = tb.build(0)?.with_budget_eta(3000.0 / tb.budget_unit(), 0.4)?;
    let r = run_policy(PolicyId::MfUcbPne, &inst, 0, &RunOptions::default())?;
    println!(
        "MF-UCB-PNE at budget 3000: {} episodes, simple regret {:.4} (eps* {:.4}), best profile {:?}",
        r.episodes.len(),
        r.simple_regret().unwrap_or(f64::NAN),
        inst.table.eps_star(),
        r.best_profile
    );
    Ok(())
}
