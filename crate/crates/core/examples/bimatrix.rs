//! Dissatisfaction, ε* and regret bookkeeping on a prisoner's-dilemma style
//! 2x2 game.

use std::sync::Arc;

use mfpne::game::{
    dissatisfaction, epsilon_star, episode_regret, reward, ActionGrid, DissatisfactionTable, GameSpec, ProfileSpace,
    TabularGame, UtilityOracle,
};

fn main() -> mfpne::Result<()> {
    let grid = ActionGrid::uniform(0.0, 1.0, 2)?;
    let space = ProfileSpace::new(vec![grid.clone(), grid])?;
    // profile index = 2 * row + col
    let u1 = vec![3.0, 0.0, 5.0, 1.0];
    let u2 = vec![3.0, 5.0, 0.0, 1.0];
    let game = TabularGame::from_utilities(space.clone(), vec![u1, u2], 0.0)?;

    for profile in [[0, 0], [0, 1], [1, 0], [1, 1]] {
        let f: Vec<f64> = (0..2).map(|n| dissatisfaction(&game, &space, n, &profile)).collect();
        println!("profile {profile:?}: dissatisfaction {f:?}");
    }
    let (eps, argmin) = epsilon_star(&game, &space)?;
    println!("eps* = {eps} at {argmin:?}");

    let oracle: Arc<dyn UtilityOracle> = Arc::new(game);
    let table = DissatisfactionTable::brute_force(oracle, space.clone())?;
    let spec = GameSpec::new(space, vec![1.0], 0.01, 8.0)?.with_c(table.suggested_c())?;
    println!("C = {}", spec.c);
    for profile in [[0usize, 0usize], [1, 1]] {
        println!("reward of evaluating {profile:?}: {:.3}", reward(&spec, &table, &profile, &[1, 1]));
    }
    let r = episode_regret(2, table.eps_star(), spec.c, 2.0, table.max_f_at(&[0, 0]));
    println!("regret of a bare evaluation episode at [0, 0]: {r:.3}");
    Ok(())
}
