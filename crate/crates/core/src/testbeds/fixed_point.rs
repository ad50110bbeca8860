//! Best-response dynamics on a finite game.

use std::collections::HashSet;

use crate::game::{Profile, ProfileSpace, UtilityOracle};

/// Improvements below this are ignored, so ties never cause a switch.
const IMPROVE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum BestResponseOutcome {
    /// No player can improve; reached after `sweeps` rounds.
    Converged { profile: Profile, sweeps: usize },
    /// The dynamics revisited a profile or ran out of rounds.
    Cycle { sweeps: usize },
}

/// Round-robin best responses on true utilities from `start`. Each player
/// moves to its lowest-index best action when that strictly improves on
/// its current one.
pub fn best_response_iteration(
    oracle: &dyn UtilityOracle,
    space: &ProfileSpace,
    start: &[usize],
    max_sweeps: usize,
) -> BestResponseOutcome {
    let mut x = start.to_vec();
    let mut seen = HashSet::new();
    for sweep in 0..max_sweeps {
        if !seen.insert(x.clone()) {
            return BestResponseOutcome::Cycle { sweeps: sweep };
        }
        let mut moved = false;
        for n in 0..space.n_players() {
            let here = oracle.true_utility(n, &x);
            let mut best = (x[n], here);
            let mut y = x.clone();
            for a in 0..space.grid(n).len() {
                y[n] = a;
                let u = oracle.true_utility(n, &y);
                if u > best.1 + IMPROVE_TOL && u > here + IMPROVE_TOL {
                    best = (a, u);
                }
            }
            if best.0 != x[n] {
                x[n] = best.0;
                moved = true;
            }
        }
        if !moved {
            return BestResponseOutcome::Converged { profile: x, sweeps: sweep + 1 };
        }
    }
    BestResponseOutcome::Cycle { sweeps: max_sweeps }
}

/// Equilibrium by best-response iteration, or `fallback()` when the
/// dynamics cycle. The flag reports whether the fallback was used.
pub fn fixed_point_or<F>(
    oracle: &dyn UtilityOracle,
    space: &ProfileSpace,
    start: &[usize],
    max_sweeps: usize,
    fallback: F,
) -> crate::Result<(Profile, bool)>
where
    F: FnOnce() -> crate::Result<Profile>,
{
    match best_response_iteration(oracle, space, start, max_sweeps) {
        BestResponseOutcome::Converged { profile, .. } => Ok((profile, false)),
        BestResponseOutcome::Cycle { .. } => Ok((fallback()?, true)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{epsilon_star, ActionGrid, TabularGame};

    fn two_by_two(u0: [f64; 4], u1: [f64; 4]) -> (TabularGame, ProfileSpace) {
        let g = ActionGrid::uniform(0.0, 1.0, 2).unwrap();
        let sp = ProfileSpace::new(vec![g.clone(), g]).unwrap();
        (TabularGame::from_utilities(sp.clone(), vec![u0.to_vec(), u1.to_vec()], 0.0).unwrap(), sp)
    }

    #[test]
    fn dominant_strategies_converge_quickly() {
        // prisoners' dilemma, action 1 = defect
        let (g, sp) = two_by_two([3.0, 0.0, 5.0, 1.0], [3.0, 5.0, 0.0, 1.0]);
        match best_response_iteration(&g, &sp, &[0, 0], 10) {
            BestResponseOutcome::Converged { profile, sweeps } => {
                assert_eq!(profile, vec![1, 1]);
                assert!(sweeps <= 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn matching_pennies_falls_back() {
        let (g, sp) = two_by_two([1.0, -1.0, -1.0, 1.0], [-1.0, 1.0, 1.0, -1.0]);
        assert!(matches!(best_response_iteration(&g, &sp, &[0, 0], 50), BestResponseOutcome::Cycle { .. }));
        let (p, fell_back) = fixed_point_or(&g, &sp, &[0, 0], 50, || Ok(epsilon_star(&g, &sp)?.1)).unwrap();
        assert!(fell_back);
        assert_eq!(p, epsilon_star(&g, &sp).unwrap().1);
    }
}
