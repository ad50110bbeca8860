use std::sync::Arc;

use proptest::prelude::*;

use mfpne::game::{
    episode_regret, regret_from_rewards, ActionGrid, DissatisfactionTable, GameSpec, ProfileSpace, SearchSet,
    TabularGame, UtilityOracle,
};
use mfpne::mogp::KernelParams;
use mfpne::policies::{run_policy, Instance, PolicyId, RunOptions};
use mfpne::testbeds::{SyntheticConfig, Testbed};

/// u1 = [[3,0],[5,1]], u2 = [[3,5],[0,1]], row = player 1.
fn bimatrix(budget: f64) -> Instance {
    let g = ActionGrid::uniform(0.0, 1.0, 2).unwrap();
    let space = ProfileSpace::new(vec![g.clone(), g]).unwrap();
    let game = TabularGame::from_utilities(space.clone(), vec![vec![3.0, 0.0, 5.0, 1.0], vec![3.0, 5.0, 0.0, 1.0]], 0.01)
        .unwrap();
    let oracle: Arc<dyn UtilityOracle> = Arc::new(game);
    let table = DissatisfactionTable::brute_force(oracle.clone(), space.clone()).unwrap();
    let spec = GameSpec::new(space.clone(), vec![1.0], 0.01, budget).unwrap().with_c(table.suggested_c()).unwrap();
    Instance {
        spec,
        surrogate: KernelParams::single(0.89).unwrap(),
        oracle,
        table: Arc::new(table),
        search: Arc::new(SearchSet::full(&space)),
    }
}

fn small_synthetic(seed: u64) -> Instance {
    Testbed::Synthetic(SyntheticConfig { grid: 16, ..SyntheticConfig::default() }).build(seed).unwrap()
}

#[test]
fn bimatrix_regret_matches_hand_enumeration() {
    let inst = bimatrix(12.0);
    // (row 2, col 2) is the only equilibrium; (row 1, col 1) has f = (2, 2)
    assert_eq!(inst.table.eps_star(), 0.0);
    assert_eq!(inst.table.argmin(), &[1, 1]);
    assert_eq!(inst.table.max_f(), 2.0);
    for policy in PolicyId::ALL {
        let r = run_policy(policy, &inst, 4, &RunOptions::default()).unwrap();
        assert_eq!(r.episodes.len(), 6);
        let c = inst.spec.c;
        let hand: f64 = r
            .episodes
            .iter()
            .map(|e| {
                let p = &e.evaluation.profile;
                let f1 = [[2.0, 1.0], [0.0, 0.0]][p[0]][p[1]];
                let f2 = [[2.0, 0.0], [1.0, 0.0]][p[0]][p[1]];
                f64::max(f1, f2) / c
            })
            .sum();
        assert!((r.cumulative_regret() - hand).abs() < 1e-12, "{policy}: {} vs {hand}", r.cumulative_regret());
    }
}

#[test]
fn cumulative_regret_equals_reward_form() {
    for seed in 0..4 {
        let inst = small_synthetic(seed).with_budget_eta(24.0, 0.5).unwrap();
        let r = run_policy(PolicyId::MfUcbPne, &inst, seed, &RunOptions::default()).unwrap();
        let from_rewards = regret_from_rewards(r.spend, 2, r.eps_star, inst.spec.c, &r.reward_stream());
        assert!((r.cumulative_regret() - from_rewards).abs() < 1e-9);
        let per: f64 = r
            .episodes
            .iter()
            .map(|e| episode_regret(2, r.eps_star, inst.spec.c, e.spend, e.eps_j))
            .sum();
        assert!((r.cumulative_regret() - per).abs() < 1e-9);
    }
}

#[test]
fn simple_regret_trace_is_nonincreasing_and_nonnegative() {
    for policy in PolicyId::ALL {
        let inst = small_synthetic(9).with_budget_eta(40.0, 0.5).unwrap();
        let r = run_policy(policy, &inst, 9, &RunOptions::default()).unwrap();
        assert!(r.simple_regret_trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.simple_regret_trace.iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn runs_are_reproducible() {
    let inst = small_synthetic(2).with_budget_eta(32.0, 0.5).unwrap();
    for policy in PolicyId::ALL {
        let a = run_policy(policy, &inst, 5, &RunOptions::default()).unwrap();
        let b = run_policy(policy, &inst, 5, &RunOptions::default()).unwrap();
        assert_eq!(a.deterministic_json().unwrap(), b.deterministic_json().unwrap());
    }
}

#[test]
fn tiny_budget_gives_degenerate_run() {
    let inst = small_synthetic(0).with_budget_eta(1.5, 0.5).unwrap();
    let r = run_policy(PolicyId::MfUcbPne, &inst, 0, &RunOptions::default()).unwrap();
    assert!(r.degenerate);
    assert!(r.episodes.is_empty());
    assert_eq!(r.simple_regret(), None);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn spend_never_exceeds_budget(seed in 0u64..1000, budget in 2.0f64..40.0, eta in prop::sample::select(vec![0.5, 1.0])) {
        let inst = small_synthetic(seed % 8).with_budget_eta(budget, eta).unwrap();
        for policy in PolicyId::ALL {
            let r = run_policy(policy, &inst, seed, &RunOptions { pe_samples: 8, ..RunOptions::default() }).unwrap();
            let total: f64 = r.episodes.iter().map(|e| e.spend).sum();
            prop_assert!(total <= budget + 1e-9);
            prop_assert!(budget - total < 2.0 + 1e-9 || r.episodes.is_empty());
        }
    }
}
