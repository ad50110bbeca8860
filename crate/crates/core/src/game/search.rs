use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use super::space::ProfileSpace;
use crate::error::{invalid, Result};
use crate::rng::SimRng;

/// Default cap on the number of candidate profiles; spaces up to this size
/// are enumerated completely.
pub const FULL_ENUMERATION_LIMIT: usize = 32_768;

/// The profiles one player's surrogate has to track: the candidates plus,
/// for every candidate, its whole column (all unilateral deviations of this
/// player), which the confidence bounds on dissatisfaction maximize over.
#[derive(Clone, Debug)]
pub struct PlayerPoints {
    /// Sorted profile indices.
    pub points: Vec<u64>,
    /// Position in `points` of each candidate.
    pub candidate_pos: Vec<u32>,
    /// Column of each candidate.
    pub candidate_col: Vec<u32>,
    /// `columns[c * k + a]`: position of action `a` of column `c`, `k` the
    /// player's grid size.
    pub columns: Vec<u32>,
    pub column_len: usize,
}

impl PlayerPoints {
    pub fn n_columns(&self) -> usize {
        self.columns.len() / self.column_len
    }

    pub fn column(&self, c: usize) -> &[u32] {
        &self.columns[c * self.column_len..(c + 1) * self.column_len]
    }

    pub fn position(&self, idx: u64) -> Option<usize> {
        self.points.binary_search(&idx).ok()
    }
}

/// Profiles over which acquisitions and equilibrium estimates are
/// optimized: the whole space when it is small enough, otherwise a fixed
/// random subsample drawn once per instance.
#[derive(Clone, Debug)]
pub struct SearchSet {
    space: ProfileSpace,
    candidates: Vec<u64>,
    full: bool,
    players: Vec<PlayerPoints>,
}

impl SearchSet {
    pub fn new(space: &ProfileSpace, max_candidates: usize, rng: &mut SimRng) -> Result<Self> {
        if max_candidates == 0 {
            return Err(invalid("need at least one candidate profile"));
        }
        let size = space.size();
        if size <= max_candidates as u64 {
            return Ok(Self::full(space));
        }
        let mut picked = BTreeSet::new();
        while picked.len() < max_candidates {
            picked.insert(rng.random_range(0..size));
        }
        let candidates: Vec<u64> = picked.into_iter().collect();
        let players = (0..space.n_players()).map(|n| Self::player_points(space, &candidates, n)).collect();
        Ok(Self { space: space.clone(), candidates, full: false, players })
    }

    /// Every profile is a candidate.
    pub fn full(space: &ProfileSpace) -> Self {
        let size = space.size();
        let candidates: Vec<u64> = (0..size).collect();
        let mut players = Vec::with_capacity(space.n_players());
        for n in 0..space.n_players() {
            let s = space.stride(n);
            let k = space.grid(n).len() as u64;
            let mut columns = Vec::with_capacity(size as usize);
            let mut candidate_col = vec![0u32; size as usize];
            let mut col = 0u32;
            for hi in 0..size / (s * k) {
                for lo in 0..s {
                    let base = hi * s * k + lo;
                    for a in 0..k {
                        let idx = base + a * s;
                        columns.push(idx as u32);
                        candidate_col[idx as usize] = col;
                    }
                    col += 1;
                }
            }
            players.push(PlayerPoints {
                points: candidates.clone(),
                candidate_pos: (0..size as u32).collect(),
                candidate_col,
                columns,
                column_len: k as usize,
            });
        }
        Self { space: space.clone(), candidates, full: true, players }
    }

    fn player_points(space: &ProfileSpace, candidates: &[u64], n: usize) -> PlayerPoints {
        let k = space.grid(n).len();
        let mut bases = BTreeMap::new();
        for &c in candidates {
            let next = bases.len() as u32;
            bases.entry(space.deviate_index(c, n, 0)).or_insert(next);
        }
        // renumber columns in base order
        let order: BTreeMap<u64, u32> = bases.keys().enumerate().map(|(i, b)| (*b, i as u32)).collect();
        let mut members: Vec<u64> = Vec::with_capacity(order.len() * k);
        for &b in order.keys() {
            members.extend((0..k).map(|a| space.deviate_index(b, n, a)));
        }
        let mut points = members.clone();
        points.sort_unstable();
        points.dedup();
        let pos = |idx: u64| points.binary_search(&idx).expect("member present") as u32;
        let columns = members.iter().map(|&m| pos(m)).collect();
        let candidate_pos = candidates.iter().map(|&c| pos(c)).collect();
        let candidate_col = candidates.iter().map(|&c| order[&space.deviate_index(c, n, 0)]).collect();
        PlayerPoints { points: points.clone(), candidate_pos, candidate_col, columns, column_len: k }
    }

    pub fn space(&self) -> &ProfileSpace {
        &self.space
    }

    /// Sorted candidate profile indices.
    pub fn candidates(&self) -> &[u64] {
        &self.candidates
    }

    pub fn is_full(&self) -> bool {
        self.full
    }

    pub fn player(&self, n: usize) -> &PlayerPoints {
        &self.players[n]
    }

    /// Stable fingerprint of the candidate set, for memo keys.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |v: u64| {
            for b in v.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01B3);
            }
        };
        for g in self.space.grids() {
            for a in 0..g.len() {
                for f in g.feature(a) {
                    feed(f.to_bits());
                }
            }
        }
        for &c in &self.candidates {
            feed(c);
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::ActionGrid;
    use rand::SeedableRng;

    fn space(sizes: &[usize]) -> ProfileSpace {
        ProfileSpace::new(sizes.iter().map(|&k| ActionGrid::uniform(0.0, 1.0, k).unwrap()).collect()).unwrap()
    }

    fn check_columns(set: &SearchSet) {
        let s = set.space();
        for n in 0..s.n_players() {
            let pp = set.player(n);
            for (ci, &c) in set.candidates().iter().enumerate() {
                assert_eq!(pp.points[pp.candidate_pos[ci] as usize], c);
                let col = pp.column(pp.candidate_col[ci] as usize);
                for (a, &p) in col.iter().enumerate() {
                    assert_eq!(pp.points[p as usize], s.deviate_index(c, n, a));
                }
            }
        }
    }

    #[test]
    fn full_enumeration_columns() {
        let set = SearchSet::full(&space(&[3, 4, 2]));
        assert!(set.is_full());
        assert_eq!(set.candidates().len(), 24);
        assert_eq!(set.player(1).n_columns(), 6);
        check_columns(&set);
    }

    #[test]
    fn subsample_covers_candidate_columns() {
        let mut rng = SimRng::seed_from_u64(1);
        let set = SearchSet::new(&space(&[6, 6, 6, 6]), 50, &mut rng).unwrap();
        assert!(!set.is_full());
        assert_eq!(set.candidates().len(), 50);
        assert!(set.candidates().windows(2).all(|w| w[0] < w[1]));
        check_columns(&set);
        let again = SearchSet::new(&space(&[6, 6, 6, 6]), 50, &mut SimRng::seed_from_u64(1)).unwrap();
        assert_eq!(again.fingerprint(), set.fingerprint());
    }
}
