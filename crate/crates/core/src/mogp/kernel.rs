use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Hyperparameters of the auto-regressive multi-fidelity kernel.
///
/// Fidelity levels are 1-based: `1` is the cheapest, `levels()` is the
/// true utility. `zeta[i]` and `rho[i]` belong to level `i + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelParams {
    /// Inverse squared lengthscale of the top-fidelity RBF kernel.
    pub h: f64,
    /// Inverse squared lengthscales of the residual kernels, levels `1..M`.
    pub zeta: Vec<f64>,
    /// Auto-regressive correlations, levels `1..M`, each in `(0, 1)`.
    pub rho: Vec<f64>,
}

impl KernelParams {
    pub fn new(h: f64, zeta: Vec<f64>, rho: Vec<f64>) -> Result<Self> {
        let p = Self { h, zeta, rho };
        p.validate()?;
        Ok(p)
    }

    /// Single-fidelity RBF kernel.
    pub fn single(h: f64) -> Result<Self> {
        Self::new(h, Vec::new(), Vec::new())
    }

    /// Same coefficient at every level.
    pub fn uniform(h: f64, zeta: f64, rho: f64, levels: usize) -> Result<Self> {
        if levels == 0 {
            return Err(invalid("at least one fidelity level is required"));
        }
        Self::new(h, vec![zeta; levels - 1], vec![rho; levels - 1])
    }

    pub fn levels(&self) -> usize {
        self.rho.len() + 1
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(invalid(format!("kernel h must be > 0, got {}", self.h)));
        }
        if self.zeta.len() != self.rho.len() {
            return Err(invalid(format!(
                "zeta has {} entries but rho has {}",
                self.zeta.len(),
                self.rho.len()
            )));
        }
        for (i, z) in self.zeta.iter().enumerate() {
            if !(*z > 0.0 && z.is_finite()) {
                return Err(invalid(format!("zeta[{}] must be > 0, got {z}", i + 1)));
            }
        }
        for (i, r) in self.rho.iter().enumerate() {
            if !(*r > 0.0 && *r < 1.0) {
                return Err(invalid(format!("rho[{}] must lie in (0, 1), got {r}", i + 1)));
            }
        }
        Ok(())
    }
}

/// Kernel with the cascade coefficients unrolled.
///
/// With `A_m = prod_{i=m}^{M-1} rho_i` and
/// `c_l^m = (prod_{i=m}^{l-1} rho_i) sqrt(1 - rho_l^2)`:
///
/// `cov(u_m(x), u_m2(x2)) = A_m A_m2 k(x, x2) + sum_{l >= max(m, m2)} c_l^m c_l^m2 k_l(x, x2)`
#[derive(Clone, Debug)]
pub struct Kernel {
    params: KernelParams,
    top: Vec<f64>,
    // resid[l - 1][m - 1] = c_l^m, zero when m > l
    resid: Vec<Vec<f64>>,
}

impl Kernel {
    pub fn new(params: KernelParams) -> Result<Self> {
        params.validate()?;
        let levels = params.levels();
        let top = (1..=levels)
            .map(|m| params.rho[m - 1..].iter().product::<f64>())
            .collect();
        let resid = (1..levels)
            .map(|l| {
                let s = (1.0 - params.rho[l - 1] * params.rho[l - 1]).sqrt();
                (1..=levels)
                    .map(|m| {
                        if m > l {
                            0.0
                        } else {
                            params.rho[m - 1..l - 1].iter().product::<f64>() * s
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self { params, top, resid })
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn levels(&self) -> usize {
        self.top.len()
    }

    /// `A_m`, the weight of the top-level process in `u_m`.
    pub fn top_coef(&self, m: usize) -> f64 {
        self.top[m - 1]
    }

    /// `c_l^m`, the weight of residual `l` in `u_m` (zero for `m > l`).
    pub fn resid_coef(&self, l: usize, m: usize) -> f64 {
        self.resid[l - 1][m - 1]
    }

    /// Covariance given the squared distance between the two inputs.
    /// Fidelities are 1-based and must be in range.
    #[inline]
    pub fn cov_sq(&self, d2: f64, m: usize, m2: usize) -> f64 {
        debug_assert!(m >= 1 && m <= self.levels() && m2 >= 1 && m2 <= self.levels());
        let mut k = self.top[m - 1] * self.top[m2 - 1] * (-self.params.h * d2).exp();
        for l in m.max(m2)..self.levels() {
            let c = self.resid[l - 1][m - 1] * self.resid[l - 1][m2 - 1];
            k += c * (-self.params.zeta[l - 1] * d2).exp();
        }
        k
    }

    #[inline]
    pub fn cov(&self, x: &[f64], m: usize, x2: &[f64], m2: usize) -> f64 {
        self.cov_sq(sq_dist(x, x2), m, m2)
    }

    /// Prior variance at any input; one by construction, computed anyway.
    pub fn prior_var(&self, m: usize) -> f64 {
        self.cov_sq(0.0, m, m)
    }

    pub fn check_fidelity(&self, m: usize) -> Result<()> {
        if m == 0 || m > self.levels() {
            return Err(invalid(format!(
                "fidelity {m} outside 1..={}",
                self.levels()
            )));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// Covariance of the cascade between `(x, m)` and `(x2, m2)`.
pub fn kernel_eval(p: &KernelParams, x: &[f64], m: usize, x2: &[f64], m2: usize) -> Result<f64> {
    let k = Kernel::new(p.clone())?;
    k.check_fidelity(m)?;
    k.check_fidelity(m2)?;
    if x.len() != x2.len() {
        return Err(invalid("inputs differ in dimension"));
    }
    Ok(k.cov(x, m, x2, m2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    #[test]
    fn single_fidelity_diagonal_is_one() {
        let p = KernelParams::single(0.89).unwrap();
        assert_eq!(kernel_eval(&p, &[0.3, -0.2], 1, &[0.3, -0.2], 1).unwrap(), 1.0);
    }

    #[test]
    fn two_levels_cross_covariance_is_rho() {
        let p = KernelParams::new(0.89, vec![0.78], vec![0.768]).unwrap();
        let k = kernel_eval(&p, &[0.1], 1, &[0.1], 2).unwrap();
        assert!((k - 0.768).abs() < 1e-15);
    }

    #[test]
    fn three_levels_diagonal_telescopes() {
        let p = KernelParams::new(1.0, vec![1.0, 1.0], vec![0.5, 0.5]).unwrap();
        let k = kernel_eval(&p, &[0.4], 1, &[0.4], 1).unwrap();
        assert!((k - 1.0).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_fidelity_is_rejected() {
        let p = KernelParams::new(1.0, vec![1.0], vec![0.5]).unwrap();
        assert!(kernel_eval(&p, &[0.0], 3, &[0.0], 1).is_err());
        assert!(kernel_eval(&p, &[0.0], 0, &[0.0], 1).is_err());
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(KernelParams::new(0.0, vec![], vec![]).is_err());
        assert!(KernelParams::new(1.0, vec![1.0], vec![1.0]).is_err());
        assert!(KernelParams::new(1.0, vec![-1.0], vec![0.5]).is_err());
        assert!(KernelParams::new(1.0, vec![1.0, 1.0], vec![0.5]).is_err());
    }

    /// Monte-Carlo check of the unrolled covariance: simulate the cascade at
    /// two inputs by drawing the independent base processes jointly, then
    /// compare the empirical covariance matrix of all six latents.
    #[test]
    fn cascade_matches_monte_carlo() {
        let rho = [0.5, 0.8];
        let zeta = [1.0, 1.0];
        let h = 1.0;
        let p = KernelParams::new(h, zeta.to_vec(), rho.to_vec()).unwrap();
        let x = [0.3];
        let x2 = [-0.45];
        let d2 = (x[0] - x2[0]) * (x[0] - x2[0]);
        // 2x2 Cholesky factors for each base GP at the two inputs.
        let chol2 = |theta: f64| {
            let r = (-theta * d2).exp();
            [1.0, r, (1.0 - r * r).sqrt()]
        };
        let bases = [chol2(h), chol2(zeta[0]), chol2(zeta[1])];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let draws = 1_000_000usize;
        // latents ordered (x,1),(x,2),(x,3),(x2,1),(x2,2),(x2,3)
        let mut sum = [0.0f64; 6];
        let mut prod = [[0.0f64; 6]; 6];
        for _ in 0..draws {
            let mut g = [[0.0; 2]; 3];
            for (b, c) in bases.iter().enumerate() {
                let z0: f64 = rng.sample(StandardNormal);
                let z1: f64 = rng.sample(StandardNormal);
                g[b] = [c[0] * z0, c[1] * z0 + c[2] * z1];
            }
            let mut v = [0.0; 6];
            for side in 0..2 {
                let u3 = g[0][side];
                let u2 = rho[1] * u3 + (1.0 - rho[1] * rho[1]).sqrt() * g[2][side];
                let u1 = rho[0] * u2 + (1.0 - rho[0] * rho[0]).sqrt() * g[1][side];
                v[side * 3] = u1;
                v[side * 3 + 1] = u2;
                v[side * 3 + 2] = u3;
            }
            for i in 0..6 {
                sum[i] += v[i];
                for j in 0..6 {
                    prod[i][j] += v[i] * v[j];
                }
            }
        }
        let n = draws as f64;
        let pts = [(&x[..], 1), (&x[..], 2), (&x[..], 3), (&x2[..], 1), (&x2[..], 2), (&x2[..], 3)];
        for i in 0..6 {
            for j in 0..6 {
                let cov = prod[i][j] / n - sum[i] / n * sum[j] / n;
                let var_i = prod[i][i] / n;
                let var_j = prod[j][j] / n;
                // standard error of a sample covariance ~ sqrt((var_i var_j + cov^2) / n)
                let se = ((var_i * var_j + cov * cov) / n).sqrt();
                let exact = kernel_eval(&p, pts[i].0, pts[i].1, pts[j].0, pts[j].1).unwrap();
                assert!(
                    (cov - exact).abs() <= 3.0 * se + 1e-12,
                    "({i},{j}) empirical {cov} vs exact {exact}, se {se}"
                );
            }
        }
    }

    proptest! {
        #[test]
        fn symmetric_and_unit_diagonal(
            h in 0.05f64..3.0,
            zr in proptest::collection::vec((0.05f64..3.0, 0.01f64..0.99), 0..4),
            a in proptest::collection::vec(-1.0f64..1.0, 3),
            b in proptest::collection::vec(-1.0f64..1.0, 3),
            m_seed in 0usize..100,
        ) {
            let (zeta, rho): (Vec<f64>, Vec<f64>) = zr.into_iter().unzip();
            let p = KernelParams::new(h, zeta, rho).unwrap();
            let levels = p.levels();
            let m = 1 + m_seed % levels;
            let m2 = 1 + (m_seed / 7) % levels;
            let k = Kernel::new(p).unwrap();
            prop_assert_eq!(k.cov(&a, m, &b, m2), k.cov(&b, m2, &a, m));
            prop_assert!((k.cov(&a, m, &a, m) - 1.0).abs() < 1e-12);
        }
    }
}
