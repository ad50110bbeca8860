use super::model::MogpModel;
use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, PackedCholesky, JITTER_MAX, JITTER_START};

/// Joint information that a sequence of noisy queries carries about the
/// top-fidelity utilities at the queried profiles, conditioned on a fixed
/// starting dataset.
///
/// Computed as `½ [ln det K_y + ln det K_u - ln det K_(u,y)]`, which equals
/// `½ [ln det(K_obs + s I) - ln det(K_obs - C K_uu^{-1} C^T + s I)]`. All
/// three factors grow by appending rows, so a push costs O(L^2) on top of
/// one whitened solve against the starting model, and steps can be rolled
/// back, which is how the exploration phase tests a candidate before
/// committing it.
#[derive(Clone, Debug)]
pub struct SequenceInformation<'a> {
    model0: &'a MogpModel,
    points: Vec<(Vec<f64>, usize)>,
    whitened: Vec<Vec<f64>>,
    // cov[i][j], j <= i
    cov: Vec<Vec<f64>>,
    obs: Vec<usize>,
    latents: Vec<usize>,
    // (point, is_latent) in push order
    joint_rows: Vec<(usize, bool)>,
    ky: PackedCholesky,
    ku: PackedCholesky,
    kj: PackedCholesky,
    eps: f64,
    history: Vec<(usize, usize, usize)>,
}

impl<'a> SequenceInformation<'a> {
    pub fn new(model0: &'a MogpModel) -> Self {
        Self {
            model0,
            points: Vec::new(),
            whitened: Vec::new(),
            cov: Vec::new(),
            obs: Vec::new(),
            latents: Vec::new(),
            joint_rows: Vec::new(),
            ky: PackedCholesky::new(),
            ku: PackedCholesky::new(),
            kj: PackedCholesky::new(),
            eps: 0.0,
            history: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    fn point_index(&mut self, x: &[f64], m: usize) -> usize {
        if let Some(i) = self.points.iter().position(|(p, pm)| *pm == m && p.as_slice() == x) {
            return i;
        }
        let v = self.model0.whitened_cross(x, m);
        let k = self.model0.kernel();
        let row: Vec<f64> = self
            .points
            .iter()
            .zip(&self.whitened)
            .map(|((p, pm), w)| k.cov(x, m, p, *pm) - dot(&v, w))
            .chain(std::iter::once(k.prior_var(m) - dot(&v, &v)))
            .collect();
        self.points.push((x.to_vec(), m));
        self.whitened.push(v);
        self.cov.push(row);
        self.points.len() - 1
    }

    fn c(&self, i: usize, j: usize) -> f64 {
        if j <= i {
            self.cov[i][j]
        } else {
            self.cov[j][i]
        }
    }

    fn diag_extra(&self, is_latent: bool) -> f64 {
        if is_latent {
            self.eps
        } else {
            self.model0.sigma2()
        }
    }

    // latent pivots below this are treated as a failed factorization
    fn pivot_floor(&self) -> f64 {
        if self.eps == 0.0 {
            1e-12
        } else {
            0.5 * self.eps
        }
    }

    fn push_latent_row(&mut self, k: usize) -> bool {
        let p = self.latents[k];
        let cross: Vec<f64> = self.latents[..k].iter().map(|&q| self.c(p, q)).collect();
        self.ku.push(&cross, self.c(p, p) + self.eps, self.pivot_floor())
    }

    fn push_joint_row(&mut self, k: usize) -> bool {
        let (p, lat) = self.joint_rows[k];
        let cross: Vec<f64> = self.joint_rows[..k].iter().map(|&(q, _)| self.c(p, q)).collect();
        let floor = if lat { self.pivot_floor() } else { 0.0 };
        self.kj.push(&cross, self.c(p, p) + self.diag_extra(lat), floor)
    }

    /// Rebuild the latent-bearing factors with a larger jitter.
    fn escalate(&mut self) -> Result<()> {
        loop {
            self.eps = if self.eps == 0.0 { JITTER_START } else { self.eps * 10.0 };
            if self.eps > JITTER_MAX * (1.0 + 1e-9) {
                return Err(Error::Numeric(format!(
                    "latent covariance of {} profiles singular after jitter {:e}",
                    self.latents.len(),
                    self.eps / 10.0
                )));
            }
            self.ku.clear();
            self.kj.clear();
            let ok = (0..self.latents.len()).all(|k| self.push_latent_row(k))
                && (0..self.joint_rows.len()).all(|k| self.push_joint_row(k));
            if ok {
                return Ok(());
            }
        }
    }

    /// Add one query `(x, m)` to the sequence. After a numeric error the
    /// tracker should be discarded.
    pub fn push(&mut self, x: &[f64], m: usize) -> Result<()> {
        self.model0.kernel().check_fidelity(m)?;
        self.history.push((self.points.len(), self.latents.len(), self.joint_rows.len()));
        let top = self.model0.kernel().levels();
        let o = self.point_index(x, m);
        let u = self.point_index(x, top);

        let cross: Vec<f64> = self.obs.iter().map(|&q| self.c(o, q)).collect();
        if !self.ky.push(&cross, self.c(o, o) + self.model0.sigma2(), 0.0) {
            let (np, _, _) = self.history.pop().expect("pushed above");
            self.points.truncate(np);
            self.whitened.truncate(np);
            self.cov.truncate(np);
            return Err(Error::Numeric("noisy observation covariance is not positive definite".into()));
        }
        self.obs.push(o);

        let mut ok = true;
        if !self.latents.contains(&u) {
            self.latents.push(u);
            self.joint_rows.push((u, true));
            ok = self.push_latent_row(self.latents.len() - 1) && self.push_joint_row(self.joint_rows.len() - 1);
        }
        self.joint_rows.push((o, false));
        ok = ok && self.push_joint_row(self.joint_rows.len() - 1);
        if !ok {
            // factors may be partially extended; rebuild them in full
            if let Err(e) = self.escalate() {
                self.pop();
                return Err(e);
            }
        }
        Ok(())
    }

    /// Undo the most recent [`push`](Self::push).
    pub fn pop(&mut self) {
        if let Some((np, nl, nj)) = self.history.pop() {
            self.obs.pop();
            self.ky.truncate(self.obs.len());
            self.points.truncate(np);
            self.whitened.truncate(np);
            self.cov.truncate(np);
            self.latents.truncate(nl);
            self.ku.truncate(nl);
            self.joint_rows.truncate(nj);
            self.kj.truncate(nj);
        }
    }

    /// Current joint information in nats.
    pub fn information(&self) -> f64 {
        if self.obs.is_empty() {
            return 0.0;
        }
        (0.5 * (self.ky.log_det() + self.ku.log_det() - self.kj.log_det())).max(0.0)
    }
}

/// Joint information of a whole query sequence about the top-fidelity
/// utilities at its profiles, given `model0`'s data.
pub fn mutual_information_sequence(model0: &MogpModel, seq: &[(Vec<f64>, usize)]) -> Result<f64> {
    if seq.is_empty() {
        return Err(invalid("query sequence is empty"));
    }
    let mut tracker = SequenceInformation::new(model0);
    for (x, m) in seq {
        tracker.push(x, *m)?;
    }
    Ok(tracker.information())
}
