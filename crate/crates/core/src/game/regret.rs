use super::space::Profile;
use super::spec::GameSpec;
use super::table::DissatisfactionTable;
use crate::error::{invalid, Result};

/// Per-step reward: `(C - max_n f_n(x)) / C` when every player was queried
/// at the top fidelity, zero otherwise.
pub fn reward(spec: &GameSpec, table: &DissatisfactionTable, profile: &[usize], fids: &[usize]) -> f64 {
    let top = spec.levels();
    if fids.iter().all(|&m| m == top) {
        (spec.c - table.max_f_at(profile)) / spec.c
    } else {
        0.0
    }
}

/// Regret of one episode that spent `spend` in total and ended on a
/// profile with maximum dissatisfaction `eps_j`.
pub fn episode_regret(n_players: usize, eps_star: f64, c: f64, spend: f64, eps_j: f64) -> f64 {
    spend / n_players as f64 * (1.0 - eps_star / c) - (1.0 - eps_j / c)
}

/// Regret computed directly from the stream of per-step rewards:
/// `(budget / N)(1 - ε*/C) - Σ r`.
pub fn regret_from_rewards(budget: f64, n_players: usize, eps_star: f64, c: f64, rewards: &[f64]) -> f64 {
    budget / n_players as f64 * (1.0 - eps_star / c) - rewards.iter().sum::<f64>()
}

/// Best maximum dissatisfaction among `visited` profiles, minus ε*.
pub fn simple_pne_regret(table: &DissatisfactionTable, visited: &[Profile]) -> Result<f64> {
    if visited.is_empty() {
        return Err(invalid("no evaluated profiles to score"));
    }
    let best = visited.iter().map(|p| table.max_f_at(p)).fold(f64::INFINITY, f64::min);
    Ok(best - table.eps_star())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{ActionGrid, DissatisfactionTable, ProfileSpace, TabularGame};
    use std::sync::Arc;

    fn setup() -> (GameSpec, DissatisfactionTable) {
        let space =
            ProfileSpace::new((0..2).map(|_| ActionGrid::uniform(0.0, 1.0, 2).unwrap()).collect()).unwrap();
        let g = Arc::new(
            TabularGame::from_utilities(space.clone(), vec![vec![3.0, 0.0, 5.0, 1.0], vec![3.0, 5.0, 0.0, 1.0]], 0.0)
                .unwrap(),
        );
        let t = DissatisfactionTable::brute_force(g, space.clone()).unwrap();
        let spec = GameSpec::new(space, vec![0.5, 1.0], 0.1, 8.0).unwrap().with_c(t.suggested_c()).unwrap();
        (spec, t)
    }

    #[test]
    fn rewards() {
        let (spec, t) = setup();
        assert_eq!(reward(&spec, &t, &[0, 0], &[1, 2]), 0.0);
        assert!((reward(&spec, &t, &[1, 1], &[2, 2]) - (1.0 - t.eps_star() / spec.c)).abs() < 1e-15);
        let worst = t.max_f();
        let spec = spec.with_c(worst).unwrap();
        let arg = (0..4u64).map(|i| t.space().profile_at(i)).find(|p| t.max_f_at(p) == worst).unwrap();
        assert_eq!(reward(&spec, &t, &arg, &[2, 2]), 0.0);
    }

    #[test]
    fn episode_regret_edge_cases() {
        // evaluation only, optimal profile
        assert!(episode_regret(2, 0.1, 1.0, 2.0, 0.1).abs() < 1e-15);
        let l = 3.0;
        let r = episode_regret(2, 0.1, 1.0, l + 2.0, 0.1);
        assert!((r - l / 2.0 * 0.9).abs() < 1e-12);
    }

    #[test]
    fn simple_regret_on_bimatrix() {
        let (_, t) = setup();
        assert!(simple_pne_regret(&t, &[]).is_err());
        assert_eq!(simple_pne_regret(&t, &[vec![0, 0]]).unwrap(), 2.0);
        assert_eq!(simple_pne_regret(&t, &[vec![0, 0], vec![1, 1]]).unwrap(), 0.0);
    }
}
