//! Reactive power market simulation and batch reinforcement learning for
//! generator bidding.
//!
//! The crate is organised bottom-up:
//!
//! - [`nn`]: dense MLP and single-layer LSTM with exact gradients, Adam and
//!   RPROP, soft parameter blending and a finite-difference checker.
//! - [`replay`]: proportional prioritized experience replay on a sum tree.
//! - [`market`]: GENCO data, demand profiles, rival bidding strategies,
//!   quadratic dispatch clearing and the baseline-relative reward.
//! - [`forecast`]: LSTM requirement forecaster and the two-lag baseline.
//! - [`agent`]: state encoding, the 81-action grid, Q-networks and the
//!   NFQ-TP training loop.
//! - [`harness`]: seeded experiments, matrices, sweeps and CSV output.

pub mod agent;
pub mod error;
pub mod forecast;
pub mod harness;
pub mod market;
pub mod nn;
pub mod replay;

pub use error::{Error, Result};

/// Random source used throughout the crate. ChaCha keeps streams stable
/// across platforms and `rand` releases.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Build the crate's random source from a seed.
pub fn seeded_rng(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}
