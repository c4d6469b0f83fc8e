use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::qnet::{QNetwork, Variant};
use crate::nn::{soft_update_in_place, Optimizer, OptimizerConfig};
use crate::replay::{Experience, ReplayBuffer, ReplayConfig};
use crate::{Error, Result, Rng};

/// Learner hyperparameters. Buffer settings live in `replay`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub gamma: f64,
    pub epsilon_start: f64,
    /// Multiplicative decay applied once per finished episode.
    pub epsilon_decay: f64,
    pub epsilon_min: f64,
    pub tau: f64,
    pub batch_size: usize,
    /// Environment steps between learning updates.
    pub steps_per_iteration: usize,
    /// Random-policy experiences stored before learning starts.
    pub warmup: usize,
    pub episodes: usize,
    pub variant: Variant,
    /// Empty means the variant's default.
    pub hidden: Vec<usize>,
    pub optimizer: OptimizerConfig,
    pub replay: ReplayConfig,
    /// Always play this action instead of the learned policy.
    pub policy_override: Option<usize>,
    /// Any |Q| above this in a mini-batch counts as divergence.
    pub divergence_threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.3,
            epsilon_start: 1.0,
            epsilon_decay: 0.1,
            epsilon_min: 0.01,
            tau: 1e-3,
            batch_size: 64,
            steps_per_iteration: 24,
            warmup: 10_000,
            episodes: 1500,
            variant: Variant::Nfq2,
            hidden: Vec::new(),
            optimizer: OptimizerConfig::default(),
            replay: ReplayConfig::default(),
            policy_override: None,
            divergence_threshold: 1e6,
        }
    }
}

impl TrainConfig {
    pub fn hidden_sizes(&self) -> Vec<usize> {
        if self.hidden.is_empty() {
            self.variant.default_hidden()
        } else {
            self.hidden.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::config("gamma", "must lie in [0, 1)"));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::config("tau", "must lie in (0, 1]"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be at least 1"));
        }
        if self.steps_per_iteration == 0 {
            return Err(Error::config("steps_per_iteration", "must be at least 1"));
        }
        if self.warmup > self.replay.capacity {
            return Err(Error::config("warmup", "cannot exceed the buffer capacity"));
        }
        for (field, v) in [
            ("epsilon_start", self.epsilon_start),
            ("epsilon_decay", self.epsilon_decay),
            ("epsilon_min", self.epsilon_min),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(field, "must lie in [0, 1]"));
            }
        }
        if self.hidden_sizes().contains(&0) {
            return Err(Error::config("hidden", "layer widths must be positive"));
        }
        if self.divergence_threshold.is_nan() || self.divergence_threshold <= 0.0 {
            return Err(Error::config("divergence_threshold", "must be positive"));
        }
        Ok(())
    }

    /// ε after `episode` finished episodes.
    pub fn epsilon(&self, episode: usize) -> f64 {
        epsilon_schedule(self.epsilon_start, self.epsilon_decay, self.epsilon_min, episode)
    }
}

pub fn epsilon_schedule(start: f64, decay: f64, min: f64, k: usize) -> f64 {
    let k = i32::try_from(k).unwrap_or(i32::MAX);
    (start * (1.0 - decay).powi(k)).max(min)
}

/// Greedy index with lowest-index tie-break.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = k;
        }
    }
    best
}

/// ε-greedy choice. Always draws one uniform for the coin and, when
/// exploring, one more for the action.
pub fn select_action(qvals: &[f64], epsilon: f64, rng: &mut Rng) -> usize {
    if rng.gen::<f64>() < epsilon {
        rng.gen_range(0..qvals.len())
    } else {
        argmax(qvals)
    }
}

/// `y = r + γ·max_a' Q_target(s', a')`, or `y = r` for terminal tuples.
pub fn compute_targets(batch: &[&Experience], target: &QNetwork, gamma: f64) -> Result<Vec<f64>> {
    batch
        .iter()
        .map(|e| {
            if e.terminal || gamma == 0.0 {
                Ok(e.reward)
            } else {
                Ok(e.reward + gamma * target.max_q(&e.next_state)?)
            }
        })
        .collect()
}

/// `δ = y − Q_local(s, a)`.
pub fn td_error(exp: &Experience, local: &QNetwork, target: &QNetwork, gamma: f64) -> Result<f64> {
    let y = compute_targets(&[exp], target, gamma)?[0];
    Ok(y - local.q_value(&exp.state, exp.action)?)
}

/// What one learning update did.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnReport {
    pub indices: Vec<usize>,
    pub targets: Vec<f64>,
    /// TD errors of the local network before the update; the loss.
    pub loss: f64,
    /// TD errors after the update; these set the new priorities.
    pub td_errors: Vec<f64>,
}

/// Local and target Q-networks plus the optimizer.
#[derive(Clone, Debug)]
pub struct NfqAgent {
    config: TrainConfig,
    local: QNetwork,
    target: QNetwork,
    optimizer: Optimizer,
    iterations: usize,
}

impl NfqAgent {
    pub fn new(config: TrainConfig, state_dim: usize, num_actions: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        let local = QNetwork::new(config.variant, state_dim, num_actions, &config.hidden_sizes(), seed)?;
        Ok(Self::from_network(config, local))
    }

    /// Start from a given network; the target begins as a copy.
    pub fn from_network(config: TrainConfig, local: QNetwork) -> Self {
        let optimizer = Optimizer::new(config.optimizer, local.mlp());
        Self {
            target: local.clone(),
            local,
            optimizer,
            config,
            iterations: 0,
        }
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn local(&self) -> &QNetwork {
        &self.local
    }

    pub fn target(&self) -> &QNetwork {
        &self.target
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn new_buffer(&self) -> Result<ReplayBuffer> {
        ReplayBuffer::new(self.config.replay, self.local.state_dim(), self.local.num_actions())
    }

    /// Acting uses the target network's greedy action, with ε noise.
    pub fn act(&self, state: &[f64], epsilon: f64, rng: &mut Rng) -> Result<usize> {
        if let Some(a) = self.config.policy_override {
            return Ok(a);
        }
        Ok(select_action(&self.target.q_values(state)?, epsilon, rng))
    }

    /// Sample a mini-batch, take one optimizer step on the mean squared TD
    /// error, refresh the sampled priorities and soft-update the target.
    pub fn learn(&mut self, buffer: &mut ReplayBuffer, rng: &mut Rng, epsilon: f64) -> Result<LearnReport> {
        let m = self.config.batch_size;
        let gamma = self.config.gamma;
        let (indices, targets, loss, grads) = {
            let batch = buffer.sample(m, rng)?;
            let exps: Vec<&Experience> = batch.iter().map(|(_, e)| *e).collect();
            let targets = compute_targets(&exps, &self.target, gamma)?;
            let mut grads = self.local.mlp().zeros_like();
            let mut loss = 0.0;
            let mut max_q: f64 = 0.0;
            for (e, &y) in exps.iter().zip(&targets) {
                let (q, trace) = self.local.trace(&e.state, e.action)?;
                let delta = y - q;
                loss += delta * delta / m as f64;
                max_q = max_q.max(q.abs()).max(y.abs());
                self.local
                    .accumulate(&trace, e.action, -2.0 * delta / m as f64, &mut grads)?;
            }
            if !loss.is_finite() || max_q.is_nan() || max_q > self.config.divergence_threshold {
                return Err(Error::Diverged {
                    iteration: self.iterations,
                    epsilon,
                    gamma,
                    reason: if loss.is_finite() {
                        format!("|Q| reached {max_q:e}")
                    } else {
                        format!("loss is {loss}")
                    },
                });
            }
            (batch.iter().map(|(i, _)| *i).collect::<Vec<_>>(), targets, loss, grads)
        };
        self.optimizer
            .step(self.local.mlp_mut(), &grads)
            .map_err(|e| Error::Diverged {
                iteration: self.iterations,
                epsilon,
                gamma,
                reason: e.to_string(),
            })?;
        let td_errors = indices
            .iter()
            .zip(&targets)
            .map(|(&i, &y)| {
                let e = buffer.get(i).expect("sampled index is stored");
                Ok(y - self.local.q_value(&e.state, e.action)?)
            })
            .collect::<Result<Vec<f64>>>()?;
        buffer.update_priorities(&indices, &td_errors)?;
        soft_update_in_place(self.target.mlp_mut(), self.local.mlp(), self.config.tau)?;
        self.iterations += 1;
        Ok(LearnReport {
            indices,
            targets,
            loss,
            td_errors,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, Dense, Matrix, Mlp};
    use crate::seeded_rng;

    fn exp(state: [f64; 2], action: usize, reward: f64, next: [f64; 2], terminal: bool) -> Experience {
        Experience {
            state: state.to_vec(),
            action,
            reward,
            next_state: next.to_vec(),
            terminal,
        }
    }

    /// Linear NFQ-2 net whose output on one-hot state `s` is row `s` of `table`.
    fn table_net(table: [[f64; 2]; 2]) -> QNetwork {
        let w = Matrix::from_row_major(2, 2, vec![table[0][0], table[1][0], table[0][1], table[1][1]]).unwrap();
        let layer = Dense {
            weights: w,
            bias: vec![0.0, 0.0],
            activation: Activation::Linear,
        };
        QNetwork::from_mlp(Variant::Nfq2, 2, 2, Mlp::from_layers(vec![layer]).unwrap()).unwrap()
    }

    #[test]
    fn argmax_ties_take_lowest() {
        let mut q = vec![0.0; 81];
        q[3] = 1.0;
        q[7] = 1.0;
        assert_eq!(argmax(&q), 3);
        let mut rng = seeded_rng(0);
        assert_eq!(select_action(&q, 0.0, &mut rng), 3);
    }

    #[test]
    fn full_exploration_is_uniform() {
        let q = vec![0.0; 81];
        let mut rng = seeded_rng(5);
        let n = 100_000;
        let mut counts = [0usize; 81];
        for _ in 0..n {
            counts[select_action(&q, 1.0, &mut rng)] += 1;
        }
        let p = 1.0 / 81.0;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * p).abs() < 4.0 * sd);
        }
    }

    #[test]
    fn epsilon_schedule_decays_to_floor() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.epsilon(0), 1.0);
        assert!((cfg.epsilon(1) - 0.9).abs() < 1e-12);
        let mut prev = f64::INFINITY;
        for k in 0..200 {
            let e = cfg.epsilon(k);
            assert!(e <= prev);
            prev = e;
        }
        assert_eq!(cfg.epsilon(1000), 0.01);
    }

    #[test]
    fn targets_match_hand_backup() {
        let target = table_net([[1.0, 2.0], [5.0, -1.0]]);
        let batch = [
            exp([1.0, 0.0], 0, 1.0, [1.0, 0.0], false),
            exp([1.0, 0.0], 1, 0.0, [0.0, 1.0], false),
            exp([0.0, 1.0], 0, 3.0, [0.0, 1.0], true),
        ];
        let refs: Vec<&Experience> = batch.iter().collect();
        let y = compute_targets(&refs, &target, 0.5).unwrap();
        assert!((y[0] - (1.0 + 0.5 * 2.0)).abs() < 1e-12);
        assert!((y[1] - (0.0 + 0.5 * 5.0)).abs() < 1e-12);
        assert_eq!(y[2], 3.0);
        assert_eq!(compute_targets(&refs, &target, 0.0).unwrap(), vec![1.0, 0.0, 3.0]);
    }

    #[test]
    fn td_error_arithmetic() {
        let zero = table_net([[0.0; 2]; 2]);
        let e = exp([1.0, 0.0], 1, 1.0, [0.0, 1.0], false);
        assert_eq!(td_error(&e, &zero, &zero, 0.0).unwrap(), 1.0);
        // fixed point of the two-state chain at γ = 0.5
        let q = table_net([[2.5, 3.0], [6.0, 1.5]]);
        let chain = [
            exp([1.0, 0.0], 0, 1.0, [1.0, 0.0], false),
            exp([1.0, 0.0], 1, 0.0, [0.0, 1.0], false),
            exp([0.0, 1.0], 0, 3.0, [0.0, 1.0], false),
            exp([0.0, 1.0], 1, 0.0, [1.0, 0.0], false),
        ];
        for e in &chain {
            assert!(td_error(e, &q, &q, 0.5).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_config_names_field() {
        let cfg = TrainConfig {
            gamma: 1.0,
            ..TrainConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "gamma"));
        let cfg = TrainConfig {
            warmup: 10,
            replay: ReplayConfig {
                capacity: 5,
                ..ReplayConfig::default()
            },
            ..TrainConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "warmup"));
    }

    #[test]
    fn learn_sets_priorities_from_updated_network() {
        let cfg = TrainConfig {
            batch_size: 8,
            tau: 0.5,
            ..TrainConfig::default()
        };
        let mut agent = NfqAgent::new(cfg, 2, 2, 3).unwrap();
        let mut buf = agent.new_buffer().unwrap();
        let mut rng = seeded_rng(1);
        for k in 0..20 {
            let s = if k % 2 == 0 { [1.0, 0.0] } else { [0.0, 1.0] };
            buf.add(exp(s, k % 2, k as f64 * 0.1, [s[1], s[0]], false)).unwrap();
        }
        let target_before = agent.target().clone();
        let report = agent.learn(&mut buf, &mut rng, 0.5).unwrap();
        for &i in &report.indices {
            let e = buf.get(i).unwrap();
            let y = compute_targets(&[e], &target_before, agent.config().gamma).unwrap()[0];
            let delta = y - agent.local().q_value(&e.state, e.action).unwrap();
            assert!((buf.priority(i).unwrap() - (delta.abs() + 1e-3)).abs() < 1e-12);
        }
        assert_eq!(agent.iterations(), 1);
    }

    #[test]
    fn divergence_is_reported() {
        let cfg = TrainConfig {
            batch_size: 2,
            divergence_threshold: 0.5,
            ..TrainConfig::default()
        };
        let mut agent = NfqAgent::new(cfg, 2, 2, 0).unwrap();
        let mut buf = agent.new_buffer().unwrap();
        buf.add(exp([1.0, 0.0], 0, 10.0, [1.0, 0.0], true)).unwrap();
        let err = agent.learn(&mut buf, &mut seeded_rng(0), 0.2).unwrap_err();
        assert!(matches!(err, Error::Diverged { iteration: 0, .. }));
    }
}
