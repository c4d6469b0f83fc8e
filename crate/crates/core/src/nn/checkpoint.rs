//! JSON checkpoints for networks.
//!
//! An MLP checkpoint looks like
//!
//! ```json
//! {"kind":"mlp","layer_sizes":[13,64,81],
//!  "layers":[{"activation":"relu","weights":[...],"bias":[...]}, ...]}
//! ```
//!
//! with each weight matrix stored row-major as `outputs × inputs`. An LSTM
//! checkpoint stores `input_dim`, `hidden`, then per gate (forget, input,
//! output, candidate) the row-major input and recurrent matrices and bias,
//! followed by the head weights and bias.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::lstm::{Gate, Lstm};
use super::matrix::Matrix;
use super::mlp::{Activation, Dense, Mlp};
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Checkpoint {
    Mlp {
        layer_sizes: Vec<usize>,
        layers: Vec<LayerRecord>,
    },
    Lstm {
        input_dim: usize,
        hidden: usize,
        gates: Vec<GateRecord>,
        head_weights: Vec<f64>,
        head_bias: f64,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LayerRecord {
    pub activation: Activation,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateRecord {
    pub input: Vec<f64>,
    pub recurrent: Vec<f64>,
    pub bias: Vec<f64>,
}

impl From<&Mlp> for Checkpoint {
    fn from(net: &Mlp) -> Self {
        Checkpoint::Mlp {
            layer_sizes: net.layer_sizes(),
            layers: net
                .layers()
                .iter()
                .map(|l| LayerRecord {
                    activation: l.activation,
                    weights: l.weights.as_slice().to_vec(),
                    bias: l.bias.clone(),
                })
                .collect(),
        }
    }
}

impl From<&Lstm> for Checkpoint {
    fn from(net: &Lstm) -> Self {
        let gate = |g: &Gate| GateRecord {
            input: g.input.as_slice().to_vec(),
            recurrent: g.recurrent.as_slice().to_vec(),
            bias: g.bias.clone(),
        };
        Checkpoint::Lstm {
            input_dim: net.input_dim(),
            hidden: net.hidden_size(),
            gates: vec![
                gate(&net.forget),
                gate(&net.input_gate),
                gate(&net.output),
                gate(&net.candidate),
            ],
            head_weights: net.head_weights.clone(),
            head_bias: net.head_bias[0],
        }
    }
}

impl Checkpoint {
    pub fn into_mlp(self) -> Result<Mlp> {
        let Checkpoint::Mlp {
            layer_sizes,
            layers,
        } = self
        else {
            return Err(Error::InvalidShape("checkpoint holds an LSTM, not an MLP".into()));
        };
        if layer_sizes.len() != layers.len() + 1 {
            return Err(Error::InvalidShape(format!(
                "{} layer sizes for {} layers",
                layer_sizes.len(),
                layers.len()
            )));
        }
        let dense = layers
            .into_iter()
            .zip(layer_sizes.windows(2))
            .enumerate()
            .map(|(k, (rec, dims))| {
                let weights = Matrix::from_row_major(dims[1], dims[0], rec.weights).ok_or_else(|| {
                    Error::InvalidShape(format!("layer {k}: weight count does not match header"))
                })?;
                Ok(Dense {
                    weights,
                    bias: rec.bias,
                    activation: rec.activation,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Mlp::from_layers(dense)
    }

    pub fn into_lstm(self) -> Result<Lstm> {
        let Checkpoint::Lstm {
            input_dim,
            hidden,
            gates,
            head_weights,
            head_bias,
        } = self
        else {
            return Err(Error::InvalidShape("checkpoint holds an MLP, not an LSTM".into()));
        };
        if gates.len() != 4 || head_weights.len() != hidden {
            return Err(Error::InvalidShape("malformed LSTM checkpoint".into()));
        }
        let mut net = Lstm::zeros(input_dim, hidden)?;
        let targets = [
            &mut net.forget,
            &mut net.input_gate,
            &mut net.output,
            &mut net.candidate,
        ];
        for (gate, rec) in targets.into_iter().zip(gates) {
            let bad = || Error::InvalidShape("LSTM gate size does not match header".into());
            gate.input = Matrix::from_row_major(hidden, input_dim, rec.input).ok_or_else(bad)?;
            gate.recurrent = Matrix::from_row_major(hidden, hidden, rec.recurrent).ok_or_else(bad)?;
            if rec.bias.len() != hidden {
                return Err(bad());
            }
            gate.bias = rec.bias;
        }
        net.head_weights = head_weights;
        net.head_bias = vec![head_bias];
        Ok(net)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn mlp_round_trip(seed in any::<u64>(), hidden in 1usize..20, out in 1usize..10) {
            let net = Mlp::new(&[4, hidden, out], seed).unwrap();
            let text = serde_json::to_string(&Checkpoint::from(&net)).unwrap();
            let back: Checkpoint = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back.into_mlp().unwrap(), net);
        }

        #[test]
        fn lstm_round_trip(seed in any::<u64>(), input in 1usize..4, hidden in 1usize..8) {
            let net = Lstm::new(input, hidden, seed).unwrap();
            let text = serde_json::to_string(&Checkpoint::from(&net)).unwrap();
            let back: Checkpoint = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back.into_lstm().unwrap(), net);
        }
    }

    #[test]
    fn wrong_kind_rejected() {
        let net = Mlp::new(&[2, 2], 0).unwrap();
        assert!(Checkpoint::from(&net).into_lstm().is_err());
    }

    #[test]
    fn truncated_weights_rejected() {
        let net = Mlp::new(&[3, 2], 0).unwrap();
        let mut ck = Checkpoint::from(&net);
        if let Checkpoint::Mlp { layers, .. } = &mut ck {
            layers[0].weights.pop();
        }
        assert!(matches!(ck.into_mlp(), Err(Error::InvalidShape(_))));
    }
}
