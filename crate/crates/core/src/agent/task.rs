use super::action::{action_decode, NUM_ACTIONS};
use super::state::{encode_state, AgentState, STATE_DIM};
use super::train::{Environment, Transition};
use crate::forecast::Forecaster;
use crate::market::{EnvConfig, MarketEnv, StepRecord};
use crate::Result;

/// The market seen through the learner's state encoding and action grid.
///
/// The requirement estimate is the forecaster's next-hour prediction from
/// the last 24 dispatched totals, in the forecaster's normalized units.
/// Episode ends are time limits, so transitions are never terminal.
#[derive(Clone, Debug)]
pub struct BiddingTask {
    env: MarketEnv,
    forecaster: Forecaster,
    reward_scale: f64,
}

impl BiddingTask {
    pub fn new(config: EnvConfig, forecaster: Forecaster, reward_scale: f64, seed: u64) -> Result<Self> {
        if !(reward_scale > 0.0 && reward_scale.is_finite()) {
            return Err(crate::Error::config("reward_scale", "must be positive"));
        }
        Ok(Self {
            env: MarketEnv::new(config, seed)?,
            forecaster,
            reward_scale,
        })
    }

    pub fn market(&self) -> &MarketEnv {
        &self.env
    }

    pub fn history(&self) -> &[StepRecord] {
        self.env.history()
    }

    pub fn forecaster(&self) -> &Forecaster {
        &self.forecaster
    }

    /// State for the step about to be played.
    pub fn current_state(&self) -> Result<AgentState> {
        let estimate = self.forecaster.normalizer.normalize(
            self.forecaster.predict_requirement(&self.env.recent_totals())?,
        );
        Ok(encode_state(self.env.history(), self.env.t(), estimate, self.reward_scale))
    }
}

impl Environment for BiddingTask {
    fn state_dim(&self) -> usize {
        STATE_DIM
    }

    fn num_actions(&self) -> usize {
        NUM_ACTIONS
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        self.env.reset(seed)?;
        Ok(self.current_state()?.0.to_vec())
    }

    fn step(&mut self, action: usize) -> Result<Transition> {
        let (a1, a2) = action_decode(action)?;
        let (reward, baseline_payment) = match self.env.step(a1, a2)? {
            Some(rec) => (rec.reward, rec.baseline_payment),
            None => {
                return Err(crate::Error::InvalidArgument(
                    "episode finished; reset before stepping".into(),
                ))
            }
        };
        Ok(Transition {
            next_state: self.current_state()?.0.to_vec(),
            reward,
            terminal: false,
            done: self.env.is_done(),
            baseline_payment,
        })
    }
}
