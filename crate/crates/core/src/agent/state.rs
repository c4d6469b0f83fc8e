use crate::market::StepRecord;

/// Lags (hours) at which past bids and rewards enter the state.
pub const LAGS: [usize; 4] = [48, 24, 2, 1];
/// 8 bid ratios, 4 rewards, 1 requirement estimate.
pub const STATE_DIM: usize = 13;

/// Padding for lags before the first recorded step: true-cost bidding,
/// which earns exactly zero reward.
pub const PAD_RATIO: f64 = 1.0;
pub const PAD_REWARD: f64 = 0.0;

/// Learner state vector:
/// `[a1@48, a2@48, a1@24, a2@24, a1@2, a2@2, a1@1, a2@1, r@48, r@24, r@2, r@1, q̂]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentState(pub [f64; STATE_DIM]);

impl AgentState {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn bid_ratios(&self) -> &[f64] {
        &self.0[..8]
    }

    pub fn rewards(&self) -> &[f64] {
        &self.0[8..12]
    }

    pub fn requirement_estimate(&self) -> f64 {
        self.0[12]
    }
}

/// Build the state at step `t` (the step about to be bid) from the episode
/// history. Rewards are divided by `reward_scale`; the requirement estimate
/// is expected in normalized units and clamped to `[0, 1]`.
pub fn encode_state(
    history: &[StepRecord],
    t: usize,
    requirement_estimate: f64,
    reward_scale: f64,
) -> AgentState {
    let mut v = [0.0; STATE_DIM];
    for (k, &lag) in LAGS.iter().enumerate() {
        let rec = t.checked_sub(lag).and_then(|i| history.get(i));
        let (a1, a2, r) = match rec {
            Some(rec) => (rec.action.0, rec.action.1, rec.reward / reward_scale),
            None => (PAD_RATIO, PAD_RATIO, PAD_REWARD),
        };
        v[2 * k] = a1;
        v[2 * k + 1] = a2;
        v[8 + k] = r;
    }
    v[12] = requirement_estimate.clamp(0.0, 1.0);
    AgentState(v)
}
