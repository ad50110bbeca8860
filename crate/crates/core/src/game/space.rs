use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Joint action profile as per-player action indices.
pub type Profile = Vec<usize>;

/// One player's finite action set. `values` are the actions in their
/// natural units (dB, probabilities, ...), `features` the coordinates the
/// kernel sees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionGrid {
    values: Vec<Vec<f64>>,
    features: Vec<Vec<f64>>,
}

impl ActionGrid {
    pub fn new(values: Vec<Vec<f64>>, features: Vec<Vec<f64>>) -> Result<Self> {
        if values.is_empty() || values.len() != features.len() {
            return Err(invalid("action grid needs matching, nonempty values and features"));
        }
        let d = features[0].len();
        if d == 0 || features.iter().any(|f| f.len() != d || f.iter().any(|v| !v.is_finite())) {
            return Err(invalid("action features must share a nonzero dimension and be finite"));
        }
        Ok(Self { values, features })
    }

    /// `k` evenly spaced scalar actions on `[lo, hi]`, used as their own features.
    pub fn uniform(lo: f64, hi: f64, k: usize) -> Result<Self> {
        if k == 0 || !(hi >= lo) {
            return Err(invalid(format!("bad uniform grid [{lo}, {hi}] x {k}")));
        }
        let pts: Vec<Vec<f64>> = (0..k)
            .map(|i| {
                if k == 1 {
                    vec![0.5 * (lo + hi)]
                } else {
                    vec![lo + (hi - lo) * i as f64 / (k - 1) as f64]
                }
            })
            .collect();
        Self::new(pts.clone(), pts)
    }

    /// Scalar actions whose features are rescaled affinely from `[lo, hi]`
    /// to `[-1, 1]`.
    pub fn scalar_mapped(values: &[f64], lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(invalid("mapping interval is empty"));
        }
        let feats = values.iter().map(|v| vec![2.0 * (v - lo) / (hi - lo) - 1.0]).collect();
        Self::new(values.iter().map(|v| vec![*v]).collect(), feats)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, a: usize) -> &[f64] {
        &self.values[a]
    }

    pub fn feature(&self, a: usize) -> &[f64] {
        &self.features[a]
    }

    pub fn feature_dim(&self) -> usize {
        self.features[0].len()
    }
}

/// Cartesian product of the players' grids with mixed-radix indexing.
/// Player 0 is the most significant digit, so index order is lexicographic
/// order on profiles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ActionGrid>", into = "Vec<ActionGrid>")]
pub struct ProfileSpace {
    grids: Vec<ActionGrid>,
    strides: Vec<u64>,
    size: u64,
}

impl TryFrom<Vec<ActionGrid>> for ProfileSpace {
    type Error = crate::Error;
    fn try_from(grids: Vec<ActionGrid>) -> Result<Self> {
        Self::new(grids)
    }
}

impl From<ProfileSpace> for Vec<ActionGrid> {
    fn from(s: ProfileSpace) -> Self {
        s.grids
    }
}

impl ProfileSpace {
    pub fn new(grids: Vec<ActionGrid>) -> Result<Self> {
        if grids.is_empty() {
            return Err(invalid("a game needs at least one player"));
        }
        let mut strides = vec![0u64; grids.len()];
        let mut size: u64 = 1;
        for n in (0..grids.len()).rev() {
            strides[n] = size;
            size = size
                .checked_mul(grids[n].len() as u64)
                .ok_or_else(|| invalid("profile space too large to index"))?;
        }
        Ok(Self { grids, strides, size })
    }

    pub fn n_players(&self) -> usize {
        self.grids.len()
    }

    pub fn grid(&self, n: usize) -> &ActionGrid {
        &self.grids[n]
    }

    pub fn grids(&self) -> &[ActionGrid] {
        &self.grids
    }

    /// Number of joint profiles.
    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn stride(&self, n: usize) -> u64 {
        self.strides[n]
    }

    pub fn contains(&self, profile: &[usize]) -> bool {
        profile.len() == self.grids.len() && profile.iter().zip(&self.grids).all(|(a, g)| *a < g.len())
    }

    pub fn index_of(&self, profile: &[usize]) -> u64 {
        debug_assert!(self.contains(profile));
        profile.iter().zip(&self.strides).map(|(a, s)| *a as u64 * s).sum()
    }

    pub fn profile_at(&self, mut idx: u64) -> Profile {
        debug_assert!(idx < self.size);
        let mut out = vec![0; self.grids.len()];
        for (n, s) in self.strides.iter().enumerate() {
            out[n] = (idx / s) as usize;
            idx %= s;
        }
        out
    }

    /// Action index of player `n` inside a profile index.
    pub fn action_at(&self, idx: u64, n: usize) -> usize {
        ((idx / self.strides[n]) % self.grids[n].len() as u64) as usize
    }

    /// Index of the profile with player `n` switched to action `a`.
    pub fn deviate_index(&self, idx: u64, n: usize, a: usize) -> u64 {
        let cur = self.action_at(idx, n) as u64;
        idx - cur * self.strides[n] + a as u64 * self.strides[n]
    }

    pub fn feature_dim(&self) -> usize {
        self.grids.iter().map(|g| g.feature_dim()).sum()
    }

    /// Concatenated kernel coordinates of a profile.
    pub fn features(&self, profile: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.feature_dim());
        for (a, g) in profile.iter().zip(&self.grids) {
            out.extend_from_slice(g.feature(*a));
        }
        out
    }

    pub fn features_at(&self, idx: u64) -> Vec<f64> {
        self.features(&self.profile_at(idx))
    }
}
