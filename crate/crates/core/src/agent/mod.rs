//! NFQ-TP learner: state encoding, the 81-action grid, Q-networks,
//! ε-greedy acting, TD targets and the training loop.

mod action;
mod learner;
mod qnet;
mod state;
mod task;
mod toy;
mod train;

pub use action::{action_decode, action_encode, LEVELS, NUM_ACTIONS};
pub use learner::{
    argmax, compute_targets, epsilon_schedule, select_action, td_error, LearnReport, NfqAgent,
    TrainConfig,
};
pub use qnet::{action_feature, QNetwork, Variant};
pub use state::{encode_state, AgentState, LAGS, PAD_RATIO, PAD_REWARD, STATE_DIM};
pub use task::BiddingTask;
pub use toy::{TwoStateChain, CHAIN_NEXT, CHAIN_REWARDS};
pub use train::{
    read_curve_csv, train, train_into, warmup, write_curve_csv, EpisodeRecord, Environment,
    SeedPlan, TrainOutcome, Transition,
};
