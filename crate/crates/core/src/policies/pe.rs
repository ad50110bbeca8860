use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::game::SearchSet;
use crate::linalg::psd_root;
use crate::rng::SimRng;
use crate::surrogate::PlayerSurrogate;

pub const DEFAULT_PE_SAMPLES: usize = 64;

/// Prior eigenvalues below this fraction of the largest are dropped when
/// sampling a column.
const RANK_TOL: f64 = 1e-9;

/// For every candidate, the number of `samples` posterior draws under which
/// it is a pure equilibrium: each player's draw over a candidate's column
/// peaks at the candidate. Columns are drawn jointly, independently of each
/// other and across players.
///
/// All columns of a player share one prior block `K`, so draws are taken in
/// the leading eigenbasis `U` of `K`: the posterior covariance of a column
/// is `K - W^T W`, and its restriction `Lambda - (W U)^T (W U)` is small.
/// Directions outside `U` carry prior, hence posterior, variance below
/// `RANK_TOL` times the largest eigenvalue.
pub fn pe_scores(surrogates: &[PlayerSurrogate], search: &SearchSet, samples: usize, rng: &mut SimRng) -> Vec<u32> {
    let n_cand = search.candidates().len();
    let mut scores = vec![0u32; n_cand];
    // hits[ci * samples + s] counts players for which ci wins draw s
    let mut hits = vec![0u16; n_cand * samples];
    for (n, sur) in surrogates.iter().enumerate() {
        let pp = search.player(n);
        // winning position per (column, draw)
        let mut winners = vec![u32::MAX; pp.n_columns() * samples];
        let basis = prior_basis(&sur.top_prior_block(&column_positions(pp.column(0))));
        let mut z = DVector::<f64>::zeros(basis.0.ncols());
        for c in 0..pp.n_columns() {
            let col = column_positions(pp.column(c));
            let root = column_root(&basis, &sur.top_whitened_block(&col));
            for s in 0..samples {
                for v in z.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                let d = &root * &z;
                let mut best = 0;
                let mut best_v = f64::NEG_INFINITY;
                for (a, &p) in col.iter().enumerate() {
                    let v = sur.top_mean(p) + d[a];
                    if v > best_v {
                        best_v = v;
                        best = a;
                    }
                }
                winners[c * samples + s] = col[best] as u32;
            }
        }
        for ci in 0..n_cand {
            let c = pp.candidate_col[ci] as usize;
            let pos = pp.candidate_pos[ci];
            for s in 0..samples {
                if winners[c * samples + s] == pos {
                    hits[ci * samples + s] += 1;
                }
            }
        }
    }
    let np = surrogates.len() as u16;
    for ci in 0..n_cand {
        scores[ci] = hits[ci * samples..(ci + 1) * samples].iter().filter(|&&h| h == np).count() as u32;
    }
    scores
}

fn column_positions(col: &[u32]) -> Vec<usize> {
    col.iter().map(|&p| p as usize).collect()
}

/// Leading eigenvectors of the prior block and their eigenvalues.
fn prior_basis(prior: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let eig = SymmetricEigen::new(prior.clone());
    let top = eig.eigenvalues.max();
    let keep: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&i| eig.eigenvalues[i] > RANK_TOL * top).collect();
    let u = eig.eigenvectors.select_columns(&keep);
    let lam = DVector::from_iterator(keep.len(), keep.iter().map(|&i| eig.eigenvalues[i]));
    (u, lam)
}

/// `k x r` factor `R` with `R R^T` the column's posterior covariance
/// restricted to the basis.
fn column_root(basis: &(DMatrix<f64>, DVector<f64>), w: &DMatrix<f64>) -> DMatrix<f64> {
    let (u, lam) = basis;
    let mut inner = DMatrix::from_diagonal(lam);
    if w.nrows() > 0 {
        let p = w * u;
        inner -= p.tr_mul(&p);
    }
    u * psd_root(&inner)
}
