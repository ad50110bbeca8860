use std::fmt;
use std::path::Path;
use std::sync::Arc;

use super::oracle::UtilityOracle;
use super::space::{Profile, ProfileSpace};
use crate::error::{invalid, Result};

/// Largest profile space swept exhaustively.
pub const BRUTE_FORCE_LIMIT: u64 = 1 << 22;

/// `f_n(x)`: how much player `n` gains by its best unilateral deviation
/// from `profile`, using true utilities.
pub fn dissatisfaction(oracle: &dyn UtilityOracle, space: &ProfileSpace, n: usize, profile: &[usize]) -> f64 {
    let current = oracle.true_utility(n, profile);
    let mut p = profile.to_vec();
    let mut best = current;
    for a in 0..space.grid(n).len() {
        p[n] = a;
        best = best.max(oracle.true_utility(n, &p));
    }
    best - current
}

/// Dense `f[idx * N + n]` over the whole space.
fn dense_dissatisfaction(oracle: &dyn UtilityOracle, space: &ProfileSpace) -> Result<Vec<f64>> {
    let size = space.size();
    if size > BRUTE_FORCE_LIMIT {
        return Err(invalid(format!("{size} profiles is too many for an exhaustive sweep")));
    }
    let np = space.n_players();
    let size = size as usize;
    let mut util = vec![0.0; size * np];
    let mut profile = vec![0usize; np];
    for idx in 0..size {
        for n in 0..np {
            util[idx * np + n] = oracle.true_utility(n, &profile);
        }
        // odometer increment, last player fastest
        for k in (0..np).rev() {
            profile[k] += 1;
            if profile[k] < space.grid(k).len() {
                break;
            }
            profile[k] = 0;
        }
    }
    let mut f = vec![0.0; size * np];
    for n in 0..np {
        let s = space.stride(n) as usize;
        let k = space.grid(n).len();
        for hi in 0..size / (s * k) {
            for lo in 0..s {
                let base = hi * s * k + lo;
                let best = (0..k).map(|a| util[(base + a * s) * np + n]).fold(f64::NEG_INFINITY, f64::max);
                for a in 0..k {
                    let i = (base + a * s) * np + n;
                    f[i] = best - util[i];
                }
            }
        }
    }
    Ok(f)
}

/// Exhaustive `ε* = min_x max_n f_n(x)` with the lowest-index minimizer.
pub fn epsilon_star(oracle: &dyn UtilityOracle, space: &ProfileSpace) -> Result<(f64, Profile)> {
    let f = dense_dissatisfaction(oracle, space)?;
    let np = space.n_players();
    let (best, idx) = min_of_max(&f, np);
    Ok((best, space.profile_at(idx as u64)))
}

fn min_of_max(f: &[f64], np: usize) -> (f64, usize) {
    let mut best = f64::INFINITY;
    let mut arg = 0;
    for (idx, row) in f.chunks_exact(np).enumerate() {
        let v = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if v < best {
            best = v;
            arg = idx;
        }
    }
    (best, arg)
}

/// Ground-truth dissatisfaction for scoring runs.
///
/// Small spaces are swept once and stored densely. Larger ones keep only
/// ε*, its minimizer and the largest dissatisfaction (supplied by the
/// testbed or computed over a candidate subset) and evaluate `f_n` on
/// demand.
#[derive(Clone)]
pub struct DissatisfactionTable {
    oracle: Arc<dyn UtilityOracle>,
    space: ProfileSpace,
    eps_star: f64,
    argmin: Profile,
    max_f: f64,
    exact: bool,
    dense: Option<Vec<f64>>,
}

impl fmt::Debug for DissatisfactionTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DissatisfactionTable")
            .field("eps_star", &self.eps_star)
            .field("argmin", &self.argmin)
            .field("max_f", &self.max_f)
            .field("exact", &self.exact)
            .field("dense", &self.dense.is_some())
            .finish()
    }
}

impl DissatisfactionTable {
    pub fn brute_force(oracle: Arc<dyn UtilityOracle>, space: ProfileSpace) -> Result<Self> {
        let f = dense_dissatisfaction(oracle.as_ref(), &space)?;
        let np = space.n_players();
        let (eps_star, idx) = min_of_max(&f, np);
        let max_f = f.iter().cloned().fold(0.0, f64::max);
        Ok(Self {
            argmin: space.profile_at(idx as u64),
            oracle,
            space,
            eps_star,
            max_f,
            exact: true,
            dense: Some(f),
        })
    }

    /// Table from externally computed summary values.
    pub fn from_summary(
        oracle: Arc<dyn UtilityOracle>,
        space: ProfileSpace,
        eps_star: f64,
        argmin: Profile,
        max_f: f64,
        exact: bool,
    ) -> Self {
        Self { oracle, space, eps_star, argmin, max_f, exact, dense: None }
    }

    /// ε* and the largest dissatisfaction restricted to `candidates`
    /// (profile indices). Marked inexact.
    pub fn over_candidates(oracle: Arc<dyn UtilityOracle>, space: ProfileSpace, candidates: &[u64]) -> Result<Self> {
        if candidates.is_empty() {
            return Err(invalid("candidate set is empty"));
        }
        let mut eps = f64::INFINITY;
        let mut arg = 0;
        let mut max_f: f64 = 0.0;
        for &c in candidates {
            let p = space.profile_at(c);
            let worst = (0..space.n_players())
                .map(|n| dissatisfaction(oracle.as_ref(), &space, n, &p))
                .fold(0.0, f64::max);
            max_f = max_f.max(worst);
            if worst < eps || (worst == eps && c < arg) {
                eps = worst;
                arg = c;
            }
        }
        Ok(Self::from_summary(oracle, space.clone(), eps, space.profile_at(arg), max_f, false))
    }

    pub fn space(&self) -> &ProfileSpace {
        &self.space
    }

    pub fn oracle(&self) -> &Arc<dyn UtilityOracle> {
        &self.oracle
    }

    pub fn eps_star(&self) -> f64 {
        self.eps_star
    }

    pub fn argmin(&self) -> &[usize] {
        &self.argmin
    }

    /// Largest dissatisfaction of any player at any profile covered.
    pub fn max_f(&self) -> f64 {
        self.max_f
    }

    /// Whether ε* comes from a sweep of the whole space.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn f(&self, n: usize, profile: &[usize]) -> f64 {
        match &self.dense {
            Some(f) => f[self.space.index_of(profile) as usize * self.space.n_players() + n],
            None => dissatisfaction(self.oracle.as_ref(), &self.space, n, profile),
        }
    }

    /// `max_n f_n(x)`.
    pub fn max_f_at(&self, profile: &[usize]) -> f64 {
        (0..self.space.n_players()).map(|n| self.f(n, profile)).fold(0.0, f64::max)
    }

    /// `1.05 * max f`, or 1 for a game where nobody is ever dissatisfied.
    pub fn suggested_c(&self) -> f64 {
        if self.max_f > 0.0 {
            1.05 * self.max_f
        } else {
            1.0
        }
    }

    /// One row per profile: index, actions, per-player `f`, ε*. Only for
    /// dense tables.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let f = self.dense.as_ref().ok_or_else(|| invalid("only swept tables can be exported"))?;
        let np = self.space.n_players();
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["index".to_string()];
        header.extend((0..np).map(|n| format!("a{n}")));
        header.extend((0..np).map(|n| format!("f{n}")));
        header.push("eps_star".into());
        w.write_record(&header)?;
        for idx in 0..self.space.size() {
            let mut row = vec![idx.to_string()];
            row.extend(self.space.profile_at(idx).iter().map(|a| a.to_string()));
            row.extend(f[idx as usize * np..(idx as usize + 1) * np].iter().map(|v| v.to_string()));
            row.push(self.eps_star.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{ActionGrid, TabularGame};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn space(sizes: &[usize]) -> ProfileSpace {
        ProfileSpace::new(sizes.iter().map(|&k| ActionGrid::uniform(0.0, 1.0, k).unwrap()).collect()).unwrap()
    }

    pub(crate) fn prisoners() -> TabularGame {
        // row = player 0; index = 2 * row + col
        let u0 = vec![3.0, 0.0, 5.0, 1.0];
        let u1 = vec![3.0, 5.0, 0.0, 1.0];
        TabularGame::from_utilities(space(&[2, 2]), vec![u0, u1], 0.0).unwrap()
    }

    #[test]
    fn bimatrix_dissatisfaction() {
        let g = prisoners();
        let s = g.space().clone();
        assert_eq!(dissatisfaction(&g, &s, 0, &[0, 0]), 2.0);
        assert_eq!(dissatisfaction(&g, &s, 1, &[0, 0]), 2.0);
        assert_eq!(dissatisfaction(&g, &s, 0, &[1, 1]), 0.0);
        assert_eq!(dissatisfaction(&g, &s, 1, &[1, 1]), 0.0);
        let (eps, arg) = epsilon_star(&g, &s).unwrap();
        assert_eq!(eps, 0.0);
        assert_eq!(arg, vec![1, 1]);
    }

    #[test]
    fn dense_table_agrees_with_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = space(&[3, 4, 2]);
        let utils = (0..3).map(|_| (0..24).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let g = Arc::new(TabularGame::from_utilities(s.clone(), utils, 0.0).unwrap());
        let t = DissatisfactionTable::brute_force(g.clone(), s.clone()).unwrap();
        for idx in 0..s.size() {
            let p = s.profile_at(idx);
            for n in 0..3 {
                assert_eq!(t.f(n, &p), dissatisfaction(g.as_ref(), &s, n, &p));
                assert!(t.f(n, &p) >= 0.0);
            }
        }
        let lazy = DissatisfactionTable::over_candidates(g, s.clone(), &(0..s.size()).collect::<Vec<_>>()).unwrap();
        assert_eq!(lazy.eps_star(), t.eps_star());
        assert_eq!(lazy.argmin(), t.argmin());
        assert_eq!(lazy.max_f(), t.max_f());
    }

    #[test]
    fn ties_pick_lowest_index() {
        let s = space(&[2, 2]);
        let g = TabularGame::from_utilities(s.clone(), vec![vec![0.0; 4], vec![0.0; 4]], 0.0).unwrap();
        assert_eq!(epsilon_star(&g, &s).unwrap().1, vec![0, 0]);
    }

    #[test]
    fn csv_export_has_one_row_per_profile() {
        let g = Arc::new(prisoners());
        let t = DissatisfactionTable::brute_force(g.clone(), g.space().clone()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        t.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with("index,a0,a1,f0,f1,eps_star"));
    }
}
