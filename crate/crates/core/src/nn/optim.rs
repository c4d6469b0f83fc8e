use serde::{Deserialize, Serialize};

use super::params::{check_same_layout, Parameters};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// iRprop⁻ constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RpropConfig {
    pub eta_plus: f64,
    pub eta_minus: f64,
    pub step_min: f64,
    pub step_max: f64,
    pub step_init: f64,
}

impl Default for RpropConfig {
    fn default() -> Self {
        Self {
            eta_plus: 1.2,
            eta_minus: 0.5,
            step_min: 1e-6,
            step_max: 50.0,
            step_init: 0.1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum OptimizerConfig {
    Adam(AdamConfig),
    Rprop(RpropConfig),
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig::Adam(AdamConfig::default())
    }
}

/// Accumulators mirror the parameter block layout of the network.
#[derive(Clone, Debug, PartialEq)]
pub enum OptimizerState {
    Adam {
        first_moment: Vec<Vec<f64>>,
        second_moment: Vec<Vec<f64>>,
        steps: u64,
    },
    Rprop {
        step_sizes: Vec<Vec<f64>>,
        previous_gradient: Vec<Vec<f64>>,
    },
}

#[derive(Clone, Debug)]
pub struct Optimizer {
    config: OptimizerConfig,
    state: OptimizerState,
}

impl Optimizer {
    pub fn new<P: Parameters>(config: OptimizerConfig, params: &P) -> Self {
        let zeros: Vec<Vec<f64>> = params.blocks().iter().map(|b| vec![0.0; b.len()]).collect();
        let state = match config {
            OptimizerConfig::Adam(_) => OptimizerState::Adam {
                first_moment: zeros.clone(),
                second_moment: zeros,
                steps: 0,
            },
            OptimizerConfig::Rprop(rp) => OptimizerState::Rprop {
                step_sizes: params
                    .blocks()
                    .iter()
                    .map(|b| vec![rp.step_init; b.len()])
                    .collect(),
                previous_gradient: zeros,
            },
        };
        Self { config, state }
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn state(&self) -> &OptimizerState {
        &self.state
    }

    /// Apply one update. Nothing is modified when an error is returned.
    pub fn step<P: Parameters>(&mut self, params: &mut P, grads: &P) -> Result<()> {
        check_same_layout(params, grads, "optimizer step")?;
        let layout: Vec<usize> = params.blocks().iter().map(|b| b.len()).collect();
        let state_layout: Vec<usize> = match &self.state {
            OptimizerState::Adam { first_moment, .. } => first_moment.iter().map(Vec::len).collect(),
            OptimizerState::Rprop { step_sizes, .. } => step_sizes.iter().map(Vec::len).collect(),
        };
        if layout != state_layout {
            return Err(Error::InvalidShape(
                "optimizer state does not match parameter layout".into(),
            ));
        }
        if let Some(index) = grads.blocks().concat().iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                index,
                context: "gradient".into(),
            });
        }

        match (&self.config, &mut self.state) {
            (
                OptimizerConfig::Adam(cfg),
                OptimizerState::Adam {
                    first_moment,
                    second_moment,
                    steps,
                },
            ) => {
                *steps += 1;
                let bc1 = 1.0 - cfg.beta1.powi(*steps as i32);
                let bc2 = 1.0 - cfg.beta2.powi(*steps as i32);
                for (((p, g), m), v) in params
                    .blocks_mut()
                    .into_iter()
                    .zip(grads.blocks())
                    .zip(first_moment.iter_mut())
                    .zip(second_moment.iter_mut())
                {
                    for k in 0..p.len() {
                        m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
                        v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
                        let m_hat = m[k] / bc1;
                        let v_hat = v[k] / bc2;
                        p[k] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
                    }
                }
            }
            (
                OptimizerConfig::Rprop(cfg),
                OptimizerState::Rprop {
                    step_sizes,
                    previous_gradient,
                },
            ) => {
                for (((p, g), step), prev) in params
                    .blocks_mut()
                    .into_iter()
                    .zip(grads.blocks())
                    .zip(step_sizes.iter_mut())
                    .zip(previous_gradient.iter_mut())
                {
                    for k in 0..p.len() {
                        let mut grad = g[k];
                        let agreement = prev[k] * grad;
                        if agreement > 0.0 {
                            step[k] = (step[k] * cfg.eta_plus).min(cfg.step_max);
                        } else if agreement < 0.0 {
                            step[k] = (step[k] * cfg.eta_minus).max(cfg.step_min);
                            // iRprop⁻: skip this update and forget the sign
                            grad = 0.0;
                        }
                        if grad > 0.0 {
                            p[k] -= step[k];
                        } else if grad < 0.0 {
                            p[k] += step[k];
                        }
                        prev[k] = grad;
                    }
                }
            }
            _ => unreachable!("optimizer state always matches its config"),
        }
        Ok(())
    }
}
