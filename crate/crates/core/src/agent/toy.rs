use super::train::{Environment, Transition};
use crate::{Error, Result};

/// Two states, two actions, one-hot state encoding.
///
/// | state | action 0        | action 1        |
/// |-------|-----------------|-----------------|
/// | 0     | reward 1, stay  | reward 0, to 1  |
/// | 1     | reward 3, stay  | reward 0, to 0  |
///
/// Episodes are cut after `episode_length` steps without a terminal state.
#[derive(Clone, Debug)]
pub struct TwoStateChain {
    pub episode_length: usize,
    state: usize,
    t: usize,
}

pub const CHAIN_REWARDS: [[f64; 2]; 2] = [[1.0, 0.0], [3.0, 0.0]];
pub const CHAIN_NEXT: [[usize; 2]; 2] = [[0, 1], [1, 0]];

impl TwoStateChain {
    pub fn new(episode_length: usize) -> Self {
        Self {
            episode_length,
            state: 0,
            t: 0,
        }
    }

    pub fn encode(state: usize) -> Vec<f64> {
        let mut v = vec![0.0; 2];
        v[state] = 1.0;
        v
    }
}

impl Environment for TwoStateChain {
    fn state_dim(&self) -> usize {
        2
    }

    fn num_actions(&self) -> usize {
        2
    }

    /// Odd seeds start in state 1.
    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        self.state = (seed % 2) as usize;
        self.t = 0;
        Ok(Self::encode(self.state))
    }

    fn step(&mut self, action: usize) -> Result<Transition> {
        if action > 1 {
            return Err(Error::InvalidArgument(format!("action {action} out of range")));
        }
        let reward = CHAIN_REWARDS[self.state][action];
        self.state = CHAIN_NEXT[self.state][action];
        self.t += 1;
        Ok(Transition {
            next_state: Self::encode(self.state),
            reward,
            terminal: false,
            done: self.t >= self.episode_length,
            baseline_payment: 0.0,
        })
    }
}
