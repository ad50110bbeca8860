//! Multi-fidelity Bayesian optimization for approximate pure Nash equilibria.
//!
//! The crate searches for an action profile with the smallest achievable
//! maximum dissatisfaction in a game whose utilities are expensive black
//! boxes, under a hard budget on query cost. Utilities can be probed at
//! several fidelity levels; cheaper levels are biased approximations of the
//! true utility.
//!
//! The main pieces:
//!
//! * [`mogp`]: per-player multi-output Gaussian process over
//!   (action profile, fidelity) with an auto-regressive fidelity cascade.
//! * [`game`]: action grids, utility oracles, dissatisfaction, ε*, rewards
//!   and regrets.
//! * [`acquisition`]: the low-fidelity exploration phase (information gain per
//!   unit cost, budget ledger and the three stopping rules).
//! * [`equilibrium`]: the max-fidelity evaluation phase (confidence intervals
//!   on utilities and dissatisfactions, optimistic profile selection).
//! * [`policies`]: MF-UCB-PNE and the single-fidelity UCB-PNE and PE
//!   baselines, all producing [`policies::RunResult`] logs.
//! * [`testbeds`]: synthetic GP-sampled games, an interference power-control
//!   game and a slotted-ALOHA access game.
//! * [`harness`]: experiment configs, seed sweeps and CSV/JSON persistence.
//!
//! The runnable programs under `examples/` walk through each capability.

pub mod acquisition;
pub mod equilibrium;
pub mod error;
pub mod game;
pub mod harness;
pub mod linalg;
pub mod mogp;
pub mod policies;
pub mod rng;
pub mod surrogate;
pub mod testbeds;

pub use error::{Error, Result};
