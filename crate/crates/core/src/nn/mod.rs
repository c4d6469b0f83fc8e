//! Small neural-network engine: MLP and LSTM with hand-written
//! backpropagation, Adam and RPROP, soft target blending.
//!
//! All arithmetic is `f64`. Gradients are returned as a value of the same
//! type as the network, so the [`Parameters`] block layout of a gradient
//! always matches the network it came from.

mod checkpoint;
mod gradcheck;
mod lstm;
mod matrix;
mod mlp;
mod optim;
mod params;

pub use checkpoint::{Checkpoint, GateRecord, LayerRecord};
pub use gradcheck::{check_gradients, lstm_grad_check, mlp_grad_check, relative_error};
pub use lstm::{Gate, Lstm, LstmOutput};
pub use matrix::Matrix;
pub use mlp::{Activation, Dense, Mlp, MlpTrace};
pub use optim::{AdamConfig, Optimizer, OptimizerConfig, OptimizerState, RpropConfig};
pub use params::{soft_update, soft_update_in_place, Parameters};
