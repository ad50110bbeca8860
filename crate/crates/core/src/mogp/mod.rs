//! Multi-output Gaussian process surrogate over (action profile, fidelity).
//!
//! Each player gets an independent model. Fidelities follow an
//! auto-regressive cascade: the top level `M` is a zero-mean GP with RBF
//! kernel `exp(-h |x - x'|^2)`, and level `m < M` is
//! `rho_m * u_{m+1} + sqrt(1 - rho_m^2) * q_m` with independent RBF residuals
//! `q_m`. Every level therefore has unit prior variance.

mod cache;
mod kernel;
mod model;
mod sequence;

pub use cache::PosteriorCache;
pub use kernel::{kernel_eval, Kernel, KernelParams};
pub use model::{mutual_information_single, MogpModel, ObservationRecord};
pub use sequence::{mutual_information_sequence, SequenceInformation};

/// `½ ln(1 + var / sigma2)`: information an observation with noise variance
/// `sigma2` carries about a latent with posterior variance `var`.
pub fn information_from_variance(var: f64, sigma2: f64) -> f64 {
    0.5 * (var.max(0.0) / sigma2).ln_1p()
}
