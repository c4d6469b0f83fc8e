use serde::{Deserialize, Serialize};

use crate::nn::{Mlp, MlpTrace};
use crate::{Error, Result};

/// Q-network layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// `(state, action) → Q`: one scalar output, evaluated once per action.
    Nfq1,
    /// `state → Q(·)`: one output per action.
    Nfq2,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Nfq1 => "NFQ-1",
            Variant::Nfq2 => "NFQ-2",
        }
    }

    pub fn default_hidden(self) -> Vec<usize> {
        match self {
            Variant::Nfq1 => vec![64, 64],
            Variant::Nfq2 => vec![64],
        }
    }

    pub fn layer_sizes(self, state_dim: usize, num_actions: usize, hidden: &[usize]) -> Vec<usize> {
        let (input, output) = match self {
            Variant::Nfq1 => (state_dim + 1, 1),
            Variant::Nfq2 => (state_dim, num_actions),
        };
        std::iter::once(input)
            .chain(hidden.iter().copied())
            .chain(std::iter::once(output))
            .collect()
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().replace(['-', '_'], "").as_str() {
            "NFQ1" | "1" => Ok(Variant::Nfq1),
            "NFQ2" | "2" => Ok(Variant::Nfq2),
            other => Err(Error::config("variant", format!("unknown network variant `{other}`"))),
        }
    }
}

/// NFQ-1 feeds the action as its index scaled to `[0, 1]`.
pub fn action_feature(action: usize, num_actions: usize) -> f64 {
    if num_actions <= 1 {
        0.0
    } else {
        action as f64 / (num_actions - 1) as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QNetwork {
    variant: Variant,
    state_dim: usize,
    num_actions: usize,
    net: Mlp,
}

impl QNetwork {
    pub fn new(
        variant: Variant,
        state_dim: usize,
        num_actions: usize,
        hidden: &[usize],
        seed: u64,
    ) -> Result<Self> {
        let net = Mlp::new(&variant.layer_sizes(state_dim, num_actions, hidden), seed)?;
        Self::from_mlp(variant, state_dim, num_actions, net)
    }

    pub fn from_mlp(variant: Variant, state_dim: usize, num_actions: usize, net: Mlp) -> Result<Self> {
        let expected = match variant {
            Variant::Nfq1 => (state_dim + 1, 1),
            Variant::Nfq2 => (state_dim, num_actions),
        };
        if (net.input_dim(), net.output_dim()) != expected {
            return Err(Error::InvalidShape(format!(
                "{variant} with state dim {state_dim} and {num_actions} actions needs a {}→{} network, got {}→{}",
                expected.0,
                expected.1,
                net.input_dim(),
                net.output_dim()
            )));
        }
        Ok(Self {
            variant,
            state_dim,
            num_actions,
            net,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn mlp(&self) -> &Mlp {
        &self.net
    }

    pub fn mlp_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    fn check_state(&self, state: &[f64]) -> Result<()> {
        if state.len() != self.state_dim {
            return Err(Error::InvalidShape(format!(
                "state has length {} but network expects {}",
                state.len(),
                self.state_dim
            )));
        }
        Ok(())
    }

    fn nfq1_input(&self, state: &[f64], action: usize) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.state_dim + 1);
        x.extend_from_slice(state);
        x.push(action_feature(action, self.num_actions));
        x
    }

    /// Q-value of every action.
    pub fn q_values(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.check_state(state)?;
        match self.variant {
            Variant::Nfq2 => self.net.forward(state),
            Variant::Nfq1 => (0..self.num_actions)
                .map(|a| Ok(self.net.forward(&self.nfq1_input(state, a))?[0]))
                .collect(),
        }
    }

    pub fn q_value(&self, state: &[f64], action: usize) -> Result<f64> {
        self.check_state(state)?;
        if action >= self.num_actions {
            return Err(Error::InvalidArgument(format!("action {action} out of range")));
        }
        match self.variant {
            Variant::Nfq2 => Ok(self.net.forward(state)?[action]),
            Variant::Nfq1 => Ok(self.net.forward(&self.nfq1_input(state, action))?[0]),
        }
    }

    pub fn max_q(&self, state: &[f64]) -> Result<f64> {
        Ok(self
            .q_values(state)?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Forward `Q(s, a)` keeping the trace needed for backpropagation.
    pub fn trace(&self, state: &[f64], action: usize) -> Result<(f64, MlpTrace)> {
        self.check_state(state)?;
        match self.variant {
            Variant::Nfq2 => {
                let tr = self.net.forward_trace(state)?;
                Ok((tr.output()[action], tr))
            }
            Variant::Nfq1 => {
                let tr = self.net.forward_trace(&self.nfq1_input(state, action))?;
                Ok((tr.output()[0], tr))
            }
        }
    }

    /// Add `dloss_dq · ∂Q(s, a)/∂θ` to `grads`.
    pub fn accumulate(&self, trace: &MlpTrace, action: usize, dloss_dq: f64, grads: &mut Mlp) -> Result<()> {
        let mut g = vec![0.0; self.net.output_dim()];
        match self.variant {
            Variant::Nfq2 => g[action] = dloss_dq,
            Variant::Nfq1 => g[0] = dloss_dq,
        }
        self.net.accumulate_gradient(trace, &g, grads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Parameters;

    #[test]
    fn both_variants_emit_all_actions() {
        for v in [Variant::Nfq1, Variant::Nfq2] {
            let q = QNetwork::new(v, 13, 81, &v.default_hidden(), 1).unwrap();
            assert_eq!(q.q_values(&[0.5; 13]).unwrap().len(), 81);
        }
    }

    #[test]
    fn zero_network_returns_bias() {
        for v in [Variant::Nfq1, Variant::Nfq2] {
            let mut q = QNetwork::new(v, 13, 81, &[8], 1).unwrap();
            q.mlp_mut().fill(0.0);
            let last = q.mlp_mut().layers_mut().last_mut().unwrap();
            last.bias.iter_mut().for_each(|b| *b = 0.25);
            assert!(q.q_values(&[0.3; 13]).unwrap().iter().all(|&v| v == 0.25));
        }
    }

    #[test]
    fn nfq1_matches_direct_forward() {
        let q = QNetwork::new(Variant::Nfq1, 13, 81, &[16, 16], 4).unwrap();
        let s: Vec<f64> = (0..13).map(|k| 0.1 * k as f64).collect();
        let all = q.q_values(&s).unwrap();
        for k in [0, 17, 80] {
            let mut x = s.clone();
            x.push(k as f64 / 80.0);
            assert_eq!(all[k], q.mlp().forward(&x).unwrap()[0]);
            assert_eq!(q.q_value(&s, k).unwrap(), all[k]);
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let net = Mlp::new(&[13, 8, 81], 0).unwrap();
        assert!(QNetwork::from_mlp(Variant::Nfq1, 13, 81, net.clone()).is_err());
        assert!(QNetwork::from_mlp(Variant::Nfq2, 13, 81, net).is_ok());
        let q = QNetwork::new(Variant::Nfq2, 13, 81, &[8], 0).unwrap();
        assert!(matches!(q.q_values(&[0.0; 12]), Err(Error::InvalidShape(_))));
    }

    #[test]
    fn parse_variant() {
        assert_eq!("NFQ-2".parse::<Variant>().unwrap(), Variant::Nfq2);
        assert_eq!("nfq1".parse::<Variant>().unwrap(), Variant::Nfq1);
        assert!("nfq3".parse::<Variant>().is_err());
    }
}
