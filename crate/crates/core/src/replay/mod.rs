//! Proportional prioritized experience replay.
//!
//! Entry `i` with priority `p_i` is drawn with probability
//! `p_i^β / Σ_j p_j^β`. Priorities are `|δ| + ε_P`, so no stored entry ever
//! has zero probability. There is no importance-sampling correction.

mod buffer;
mod sum_tree;

pub use buffer::{Experience, InitialPriority, ReplayBuffer, ReplayConfig};
pub use sum_tree::SumTree;
