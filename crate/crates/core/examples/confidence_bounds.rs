//! Evaluation-phase internals after a few top-fidelity observations:
//! confidence widths, the reported profile, the exploring player and the
//! profile finally evaluated.

use mfpne::equilibrium::{
    build_confidence_state, compute_beta, exploring_profile, final_evaluation_profile, prior_gamma, reported_profile,
};
use mfpne::rng::stream;
use mfpne::surrogate::PlayerSurrogate;
use mfpne::testbeds::{SyntheticConfig, Testbed};
use rand::Rng;

fn main() -> mfpne::Result<()> {
    let seed = 11;
    let inst = Testbed::Synthetic(SyntheticConfig { grid: 24, ..SyntheticConfig::default() }).build(seed)?;
    let spec = &inst.spec;
    let search = inst.search.as_ref();
    let space = search.space();
    let np = spec.n_players();
    let mut sur = (0..np)
        .map(|n| PlayerSurrogate::new(inst.surrogate.clone(), spec.sigma2, search, n, false))
        .collect::<mfpne::Result<Vec<_>>>()?;

    let mut rng = stream(seed, "example", 0);
    let steps = 40;
    for _ in 0..steps {
        let idx = rng.random_range(0..space.size());
        let profile = space.profile_at(idx);
        for (n, s) in sur.iter_mut().enumerate() {
            let y = inst.oracle.observe(n, &profile, spec.levels(), &mut rng);
            s.observe(space.features(&profile), spec.levels(), y)?;
        }
    }

    let gamma = prior_gamma(&inst.surrogate, spec.sigma2, search, steps)?;
    let beta = compute_beta(spec.b, spec.sigma2.sqrt(), gamma, spec.delta);
    println!("gamma after {steps} steps: {gamma:.3}, beta: {beta:.3}");
    let state = build_confidence_state(&sur, search, &vec![beta; np], &vec![gamma; np]);
    println!("intervals contain the truth: {}", state.utility_covered(search, inst.oracle.as_ref()));

    let rep = reported_profile(&state);
    let rep_idx = search.candidates()[rep];
    let (player, exp_idx) = exploring_profile(&state, search, rep);
    let fin = final_evaluation_profile(&sur, search, rep_idx, exp_idx);
    let f = |idx: u64| inst.table.max_f_at(&space.profile_at(idx));
    println!("reported  {:?}  optimistic gap {:.3}  true max f {:.3}", space.profile_at(rep_idx), state.optimistic_gap(rep), f(rep_idx));
    println!("exploring {:?}  (player {player} deviates)", space.profile_at(exp_idx));
    println!("evaluate  {:?}", space.profile_at(fin));
    println!("eps* of the instance: {:.3}", inst.table.eps_star());
    Ok(())
}
