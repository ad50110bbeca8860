//! Small dense helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Diagonal jitter ladder: start here, multiply by ten on failure.
pub const JITTER_START: f64 = 1e-10;
/// Largest jitter tried before giving up.
pub const JITTER_MAX: f64 = 1e-6;

/// Cholesky factor of `mat + jitter * I`, escalating the jitter from
/// [`JITTER_START`] to [`JITTER_MAX`]. Returns the factor and the jitter used.
pub fn cholesky_jittered(mat: &DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let mut jitter = JITTER_START;
    loop {
        let mut m = mat.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
        if let Some(ch) = Cholesky::new(m) {
            return Ok((ch, jitter));
        }
        if jitter >= JITTER_MAX * (1.0 - 1e-9) {
            return Err(Error::Numeric(format!(
                "cholesky failed after jitter {jitter:e}; {}",
                condition_diagnostic(mat)
            )));
        }
        jitter *= 10.0;
    }
}

/// Eigenvalue range of a symmetric matrix, for error messages.
pub fn condition_diagnostic(mat: &DMatrix<f64>) -> String {
    if mat.nrows() == 0 {
        return "empty matrix".into();
    }
    let eig = SymmetricEigen::new(mat.clone());
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    format!(
        "n={}, eigenvalues in [{min:e}, {max:e}], condition ~ {:e}",
        mat.nrows(),
        max / min.abs().max(f64::MIN_POSITIVE)
    )
}

/// `ln det` from a Cholesky factor.
pub fn log_det(ch: &Cholesky<f64, Dyn>) -> f64 {
    let l = ch.l_dirty();
    (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0
}

/// A factor `R` with `R R^T ~= mat` for a symmetric positive semidefinite
/// matrix. Tries a jittered Cholesky first and falls back to an eigen
/// decomposition with negative eigenvalues clipped to zero.
pub fn psd_root(mat: &DMatrix<f64>) -> DMatrix<f64> {
    if let Ok((ch, _)) = cholesky_jittered(mat) {
        return ch.unpack();
    }
    eigen_root(mat)
}

/// `U diag(sqrt(max(lambda, 0)))` from a symmetric eigen decomposition.
pub fn eigen_root(mat: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(mat.clone());
    let mut root = eig.eigenvectors.clone();
    for (j, lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        root.column_mut(j).scale_mut(s);
    }
    root
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // Four accumulators; the compiler vectorizes this reliably.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in chunks * 4..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Lower-triangular Cholesky factor grown one row at a time, stored packed.
/// Keeps running `ln det` so that truncation is O(1).
#[derive(Clone, Debug, Default)]
pub struct PackedCholesky {
    data: Vec<f64>,
    // ln det of the leading i x i block, for i = 0..=n
    log_dets: Vec<f64>,
}

impl PackedCholesky {
    pub fn new() -> Self {
        Self { data: Vec::new(), log_dets: vec![0.0] }
    }

    pub fn len(&self) -> usize {
        self.log_dets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * (i + 1) / 2..(i + 1) * (i + 2) / 2]
    }

    /// Forward substitution against the leading `b.len()` rows.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(b.len());
        for i in 0..b.len() {
            let row = self.row(i);
            let s = b[i] - dot(&row[..i], &out);
            out.push(s / row[i]);
        }
        out
    }

    /// Extend by one row given the new column `cross` (covariances with the
    /// existing rows) and the new diagonal entry. Returns `false` and leaves
    /// the factor unchanged when the pivot is not above `min_pivot`.
    pub fn push(&mut self, cross: &[f64], diag: f64, min_pivot: f64) -> bool {
        debug_assert_eq!(cross.len(), self.len());
        let l = self.solve_lower(cross);
        let d2 = diag - dot(&l, &l);
        if !(d2 > min_pivot && d2.is_finite()) {
            return false;
        }
        self.data.extend_from_slice(&l);
        self.data.push(d2.sqrt());
        let last = *self.log_dets.last().unwrap();
        self.log_dets.push(last + d2.ln());
        true
    }

    pub fn truncate(&mut self, n: usize) {
        if n < self.len() {
            self.data.truncate(n * (n + 1) / 2);
            self.log_dets.truncate(n + 1);
        }
    }

    pub fn clear(&mut self) {
        self.truncate(0);
    }

    pub fn log_det(&self) -> f64 {
        *self.log_dets.last().unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jitter_rescues_singular_psd() {
        let m = DMatrix::from_element(3, 3, 1.0);
        let (ch, jitter) = cholesky_jittered(&m).unwrap();
        assert!(jitter <= JITTER_MAX);
        let rebuilt = ch.l() * ch.l().transpose();
        assert!((rebuilt[(0, 1)] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn indefinite_matrix_is_an_error() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let err = cholesky_jittered(&m).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)));
    }

    #[test]
    fn log_det_matches_product_of_eigenvalues() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let (ch, _) = cholesky_jittered(&m).unwrap();
        assert!((log_det(&ch) - (2.0f64 - 0.25).ln()).abs() < 1e-9);
    }

    #[test]
    fn packed_cholesky_matches_dense() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let mut pc = PackedCholesky::new();
        for i in 0..3 {
            let cross: Vec<f64> = (0..i).map(|j| m[(i, j)]).collect();
            assert!(pc.push(&cross, m[(i, i)], 0.0));
        }
        assert!((pc.log_det() - m.determinant().ln()).abs() < 1e-12);
        pc.truncate(1);
        assert!((pc.log_det() - 4f64.ln()).abs() < 1e-12);
        assert!(!pc.push(&[2.0], 1.0, 0.0));
        assert_eq!(pc.len(), 1);
    }

    #[test]
    fn eigen_root_reconstructs_rank_deficient() {
        let v = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]);
        let m = &v * v.transpose();
        let r = eigen_root(&m);
        let back = &r * r.transpose();
        assert!((back - m).amax() < 1e-10);
    }
}
