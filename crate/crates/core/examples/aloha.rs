//! Slotted-ALOHA access game: the exact equilibrium, a best-response check
//! and the three policies at a small budget.

use mfpne::policies::{run_policy, PolicyId, RunOptions};
use mfpne::testbeds::{AlohaConfig, AlohaGame, Testbed};

fn main() -> mfpne::Result<()> {
    let cfg = AlohaConfig { max_candidates: 64, ..AlohaConfig::default() };
    let game = AlohaGame::new(&cfg)?;
    let sol = game.solve()?;
    println!("{} feasible profiles", game.space().size());
    println!("eps* = {:.5} at {:?}", sol.eps_star, sol.argmin);
    for (n, &a) in sol.argmin.iter().enumerate() {
        let p = sol.argmin.clone();
        println!(
            "  terminal {n}: action {a}, throughput {:.4}, energy {:.1} (cap {})",
            game.throughput(n, &p),
            game.energy(n, &p),
            game.cap(n)
        );
    }
    let (fp, converged) = game.fixed_point_equilibrium()?;
    println!("best-response iteration {}: {fp:?}", if converged { "converged" } else { "cycled" });

    let tb = Testbed::Aloha(cfg);
    let inst = tb.build(0)?.with_budget_eta(1000.0 / tb.budget_unit(), 0.2)?;
    for policy in PolicyId::ALL {
        let r = run_policy(policy, &inst, 0, &RunOptions::default())?;
        println!(
            "{policy:>11}: {} episodes, simple regret {:.5}",
            r.episodes.len(),
            r.simple_regret().unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
