use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::learner::{NfqAgent, TrainConfig};
use crate::replay::{Experience, ReplayBuffer};
use crate::{seeded_rng, Error, Result, Rng};

/// One environment transition as seen by the learner.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub next_state: Vec<f64>,
    pub reward: f64,
    /// Absorbing state: the target does not bootstrap.
    pub terminal: bool,
    /// Episode over; the next step needs a reset.
    pub done: bool,
    /// Payment the learner would have received bidding true cost. Zero for
    /// environments without such a baseline.
    pub baseline_payment: f64,
}

/// Episodic environment with a discrete action set.
pub trait Environment {
    fn state_dim(&self) -> usize;
    fn num_actions(&self) -> usize;
    /// Start a new episode and return its first state.
    fn reset(&mut self, seed: u64) -> Result<Vec<f64>>;
    fn step(&mut self, action: usize) -> Result<Transition>;
}

/// Independent seeds derived from one root: `root + offset` per consumer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedPlan {
    pub env: u64,
    pub network: u64,
    pub policy: u64,
    pub replay: u64,
    pub forecaster: u64,
}

impl SeedPlan {
    pub const ENV_OFFSET: u64 = 0;
    pub const NETWORK_OFFSET: u64 = 1 << 20;
    pub const POLICY_OFFSET: u64 = 2 << 20;
    pub const REPLAY_OFFSET: u64 = 3 << 20;
    pub const FORECASTER_OFFSET: u64 = 4 << 20;

    pub fn from_root(root: u64) -> Self {
        Self {
            env: root.wrapping_add(Self::ENV_OFFSET),
            network: root.wrapping_add(Self::NETWORK_OFFSET),
            policy: root.wrapping_add(Self::POLICY_OFFSET),
            replay: root.wrapping_add(Self::REPLAY_OFFSET),
            forecaster: root.wrapping_add(Self::FORECASTER_OFFSET),
        }
    }
}

/// One point of the learning curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    /// Sum of per-step rewards.
    pub reward: f64,
    /// ε in force during the episode.
    pub epsilon: f64,
    /// Mean |δ| over the updates made during the episode (0 if none).
    pub mean_abs_td: f64,
    pub baseline_payment: f64,
}

/// Fill `buffer` with `n` experiences from uniform-random actions. Episodes
/// are reset with seeds `*next_episode_seed`, incremented per episode.
pub fn warmup<E: Environment>(
    env: &mut E,
    buffer: &mut ReplayBuffer,
    n: usize,
    rng: &mut Rng,
    next_episode_seed: &mut u64,
) -> Result<()> {
    if n > buffer.capacity() {
        return Err(Error::config("warmup", "cannot exceed the buffer capacity"));
    }
    let mut state = None;
    for _ in 0..n {
        let s = match state.take() {
            Some(s) => s,
            None => {
                let s = env.reset(*next_episode_seed)?;
                *next_episode_seed = next_episode_seed.wrapping_add(1);
                s
            }
        };
        let action = rng.gen_range(0..env.num_actions());
        let tr = env.step(action)?;
        buffer.add(Experience {
            state: s,
            action,
            reward: tr.reward,
            next_state: tr.next_state.clone(),
            terminal: tr.terminal,
        })?;
        if !tr.done {
            state = Some(tr.next_state);
        }
    }
    Ok(())
}

/// Result of [`train`].
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub curve: Vec<EpisodeRecord>,
    pub agent: NfqAgent,
    pub buffer: ReplayBuffer,
}

/// Run warm-up then `config.episodes` training episodes. Each iteration
/// acts `steps_per_iteration` times with the target network's ε-greedy
/// policy, stores the experiences, then makes one learning update.
pub fn train<E: Environment>(env: &mut E, config: &TrainConfig, seed: u64) -> Result<TrainOutcome> {
    let mut curve = Vec::new();
    let (agent, buffer) = train_into(env, config, seed, &mut curve)?;
    Ok(TrainOutcome { curve, agent, buffer })
}

/// As [`train`], but appends to `curve` as episodes finish so the partial
/// curve survives a divergence error.
pub fn train_into<E: Environment>(
    env: &mut E,
    config: &TrainConfig,
    seed: u64,
    curve: &mut Vec<EpisodeRecord>,
) -> Result<(NfqAgent, ReplayBuffer)> {
    config.validate()?;
    if let Some(a) = config.policy_override {
        if a >= env.num_actions() {
            return Err(Error::config("policy_override", format!("action {a} out of range")));
        }
    }
    let seeds = SeedPlan::from_root(seed);
    let mut agent = NfqAgent::new(config.clone(), env.state_dim(), env.num_actions(), seeds.network)?;
    let mut buffer = agent.new_buffer()?;
    let mut policy_rng = seeded_rng(seeds.policy);
    let mut replay_rng = seeded_rng(seeds.replay);
    let mut episode_seed = seeds.env;

    warmup(env, &mut buffer, config.warmup, &mut policy_rng, &mut episode_seed)?;

    let mut state: Option<Vec<f64>> = None;
    let mut episode = 0;
    let mut reward_sum = 0.0;
    let mut baseline_sum = 0.0;
    let mut td_sum = 0.0;
    let mut td_count = 0usize;
    while episode < config.episodes {
        let epsilon = config.epsilon(episode);
        for _ in 0..config.steps_per_iteration {
            let s = match state.take() {
                Some(s) => s,
                None => {
                    let s = env.reset(episode_seed)?;
                    episode_seed = episode_seed.wrapping_add(1);
                    s
                }
            };
            let action = agent.act(&s, config.epsilon(episode), &mut policy_rng)?;
            let tr = env.step(action)?;
            reward_sum += tr.reward;
            baseline_sum += tr.baseline_payment;
            buffer.add(Experience {
                state: s,
                action,
                reward: tr.reward,
                next_state: tr.next_state.clone(),
                terminal: tr.terminal,
            })?;
            if !reward_sum.is_finite() {
                return Err(Error::Diverged {
                    iteration: agent.iterations(),
                    epsilon,
                    gamma: config.gamma,
                    reason: "episode reward is not finite".into(),
                });
            }
            if tr.done {
                curve.push(EpisodeRecord {
                    episode,
                    reward: reward_sum,
                    epsilon: config.epsilon(episode),
                    mean_abs_td: if td_count > 0 { td_sum / td_count as f64 } else { 0.0 },
                    baseline_payment: baseline_sum,
                });
                episode += 1;
                reward_sum = 0.0;
                baseline_sum = 0.0;
                td_sum = 0.0;
                td_count = 0;
                if episode == config.episodes {
                    break;
                }
            } else {
                state = Some(tr.next_state);
            }
        }
        if episode == config.episodes {
            break;
        }
        let report = agent.learn(&mut buffer, &mut replay_rng, epsilon)?;
        td_sum += report.td_errors.iter().map(|d| d.abs()).sum::<f64>() / report.td_errors.len() as f64;
        td_count += 1;
    }
    Ok((agent, buffer))
}

/// Write `episode,reward,epsilon,mean_abs_td,baseline_payment` rows.
pub fn write_curve_csv<W: std::io::Write>(curve: &[EpisodeRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for rec in curve {
        w.serialize(rec)?;
    }
    w.flush().map_err(|e| Error::io("<curve>", e))?;
    Ok(())
}

pub fn read_curve_csv<R: std::io::Read>(reader: R) -> Result<Vec<EpisodeRecord>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}
