use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::params::Parameters;
use crate::{seeded_rng, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Linear => z,
        }
    }

    /// Derivative; the ReLU subgradient at exactly zero is zero.
    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }
}

/// One affine layer followed by an activation. Weights are `outputs × inputs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn inputs(&self) -> usize {
        self.weights.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.rows()
    }
}

/// Multilayer perceptron. Hidden layers use ReLU and the final layer is
/// linear, so outputs are unbounded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Dense>,
}

/// Per-layer inputs and pre-activations recorded by a forward pass.
#[derive(Clone, Debug)]
pub struct MlpTrace {
    /// `inputs[k]` is the input to layer `k`; the last entry is the output.
    inputs: Vec<Vec<f64>>,
    pre_activations: Vec<Vec<f64>>,
}

impl MlpTrace {
    pub fn output(&self) -> &[f64] {
        self.inputs.last().expect("trace always holds the input")
    }

    pub fn pre_activations(&self) -> &[Vec<f64>] {
        &self.pre_activations
    }
}

impl Mlp {
    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn new(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        validate_sizes(layer_sizes)?;
        let mut rng = seeded_rng(seed);
        let n = layer_sizes.len() - 1;
        let layers = layer_sizes
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let data = (0..fan_in * fan_out)
                    .map(|_| rng.gen_range(-limit..=limit))
                    .collect();
                Dense {
                    weights: Matrix::from_row_major(fan_out, fan_in, data).unwrap(),
                    bias: vec![0.0; fan_out],
                    activation: if k + 1 == n {
                        Activation::Linear
                    } else {
                        Activation::Relu
                    },
                }
            })
            .collect();
        Ok(Self { layers })
    }

    /// Network of the given shape with every parameter zero.
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        let mut net = Self::new(layer_sizes, 0)?;
        net.fill(0.0);
        Ok(net)
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidShape("network has no layers".into()));
        }
        for (k, layer) in layers.iter().enumerate() {
            if layer.bias.len() != layer.outputs() {
                return Err(Error::InvalidShape(format!(
                    "layer {k}: bias length {} but {} outputs",
                    layer.bias.len(),
                    layer.outputs()
                )));
            }
            if layer.inputs() == 0 || layer.outputs() == 0 {
                return Err(Error::InvalidShape(format!("layer {k} has a zero dimension")));
            }
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::InvalidShape(format!(
                    "layer {k} emits {} values but layer {} expects {}",
                    pair[0].outputs(),
                    k + 1,
                    pair[1].inputs()
                )));
            }
        }
        let net = Self { layers };
        if let Some(i) = net.to_flat().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                index: i,
                context: "network parameters".into(),
            });
        }
        Ok(net)
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().outputs()
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(Dense::outputs))
            .collect()
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut a = input.to_vec();
        for layer in &self.layers {
            let mut z = layer.bias.clone();
            layer.weights.mul_vec_acc(&a, &mut z);
            for v in z.iter_mut() {
                *v = layer.activation.apply(*v);
            }
            a = z;
        }
        Ok(a)
    }

    /// Forward pass that keeps what [`Mlp::accumulate_gradient`] needs.
    pub fn forward_trace(&self, input: &[f64]) -> Result<MlpTrace> {
        self.check_input(input)?;
        let mut inputs = Vec::with_capacity(self.layers.len() + 1);
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        inputs.push(input.to_vec());
        for layer in &self.layers {
            let mut z = layer.bias.clone();
            layer.weights.mul_vec_acc(inputs.last().unwrap(), &mut z);
            let a = z.iter().map(|&v| layer.activation.apply(v)).collect();
            pre_activations.push(z);
            inputs.push(a);
        }
        Ok(MlpTrace {
            inputs,
            pre_activations,
        })
    }

    /// Gradient of `⟨output, output_gradient⟩` with respect to every parameter.
    pub fn backward(&self, input: &[f64], output_gradient: &[f64]) -> Result<Mlp> {
        let trace = self.forward_trace(input)?;
        let mut grads = self.zeros_like();
        self.accumulate_gradient(&trace, output_gradient, &mut grads)?;
        Ok(grads)
    }

    /// Add the gradient for one traced sample into `grads`.
    pub fn accumulate_gradient(
        &self,
        trace: &MlpTrace,
        output_gradient: &[f64],
        grads: &mut Mlp,
    ) -> Result<()> {
        if output_gradient.len() != self.output_dim() {
            return Err(Error::InvalidShape(format!(
                "output gradient has length {} but network emits {}",
                output_gradient.len(),
                self.output_dim()
            )));
        }
        let mut delta: Vec<f64> = output_gradient.to_vec();
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            for (d, &z) in delta.iter_mut().zip(&trace.pre_activations[k]) {
                *d *= layer.activation.derivative(z);
            }
            let g = &mut grads.layers[k];
            g.weights.add_outer(&delta, &trace.inputs[k]);
            for (gb, &d) in g.bias.iter_mut().zip(&delta) {
                *gb += d;
            }
            if k > 0 {
                let mut below = vec![0.0; layer.inputs()];
                layer.weights.tmul_vec_acc(&delta, &mut below);
                delta = below;
            }
        }
        Ok(())
    }

    pub fn zeros_like(&self) -> Mlp {
        let mut g = self.clone();
        g.fill(0.0);
        g
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::InvalidShape(format!(
                "input has length {} but network expects {}",
                input.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }
}

fn validate_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 {
        return Err(Error::InvalidShape(format!(
            "need at least two layer sizes, got {sizes:?}"
        )));
    }
    if sizes.contains(&0) {
        return Err(Error::InvalidShape(format!("zero-sized layer in {sizes:?}")));
    }
    Ok(())
}

impl Parameters for Mlp {
    fn blocks(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_shapes() {
        let net = Mlp::new(&[13, 81], 0).unwrap();
        assert_eq!(net.layers().len(), 1);
        assert_eq!(net.layers()[0].weights.rows(), 81);
        assert_eq!(net.layers()[0].weights.cols(), 13);
        assert_eq!(net.layers()[0].bias.len(), 81);
        assert_eq!(net.layers()[0].activation, Activation::Linear);

        let net = Mlp::new(&[14, 64, 1], 3).unwrap();
        assert_eq!(net.layer_sizes(), vec![14, 64, 1]);
        assert_eq!(net.output_dim(), 1);
        assert_eq!(net.layers()[0].activation, Activation::Relu);
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = Mlp::new(&[13, 64, 81], 42).unwrap();
        let b = Mlp::new(&[13, 64, 81], 42).unwrap();
        let c = Mlp::new(&[13, 64, 81], 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let limit = (6.0f64 / (13.0 + 64.0)).sqrt();
        assert!(a.layers()[0].weights.as_slice().iter().all(|w| w.abs() <= limit));
        assert!(a.layers().iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn bad_sizes_rejected() {
        assert!(matches!(Mlp::new(&[], 0), Err(Error::InvalidShape(_))));
        assert!(matches!(Mlp::new(&[5], 0), Err(Error::InvalidShape(_))));
        assert!(matches!(Mlp::new(&[5, 0, 2], 0), Err(Error::InvalidShape(_))));
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = Mlp::zeros(&[4, 8, 3]).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 3.0, 0.5]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let layer = Dense {
            weights: Matrix::identity(3),
            bias: vec![0.0; 3],
            activation: Activation::Linear,
        };
        let net = Mlp::from_layers(vec![layer]).unwrap();
        assert_eq!(net.forward(&[0.5, -1.0, 7.0]).unwrap(), vec![0.5, -1.0, 7.0]);
    }

    #[test]
    fn forward_rejects_wrong_input() {
        let net = Mlp::new(&[3, 2], 0).unwrap();
        assert!(matches!(net.forward(&[1.0]), Err(Error::InvalidShape(_))));
        assert!(matches!(net.backward(&[1.0, 2.0, 3.0], &[1.0]), Err(Error::InvalidShape(_))));
    }

    #[test]
    fn mismatched_layers_rejected() {
        let a = Dense {
            weights: Matrix::zeros(4, 3),
            bias: vec![0.0; 4],
            activation: Activation::Relu,
        };
        let b = Dense {
            weights: Matrix::zeros(2, 5),
            bias: vec![0.0; 2],
            activation: Activation::Linear,
        };
        assert!(matches!(Mlp::from_layers(vec![a, b]), Err(Error::InvalidShape(_))));
    }

    #[test]
    fn linear_weight_gradient_is_outer_product() {
        let net = Mlp::new(&[3, 2], 7).unwrap();
        let x = [0.5, -1.0, 2.0];
        let g = [3.0, -0.25];
        let grads = net.backward(&x, &g).unwrap();
        let w = &grads.layers()[0].weights;
        for (r, gr) in g.iter().enumerate() {
            for (c, xc) in x.iter().enumerate() {
                assert_eq!(w.get(r, c), gr * xc);
            }
        }
        assert_eq!(grads.layers()[0].bias, g.to_vec());
    }

    #[test]
    fn dead_relu_blocks_gradient() {
        // hidden unit 0 has negative pre-activation, unit 1 positive
        let hidden = Dense {
            weights: Matrix::from_row_major(2, 1, vec![-1.0, 1.0]).unwrap(),
            bias: vec![0.0, 0.0],
            activation: Activation::Relu,
        };
        let out = Dense {
            weights: Matrix::from_row_major(1, 2, vec![2.0, 3.0]).unwrap(),
            bias: vec![0.0],
            activation: Activation::Linear,
        };
        let net = Mlp::from_layers(vec![hidden, out]).unwrap();
        let grads = net.backward(&[1.5], &[1.0]).unwrap();
        assert_eq!(grads.layers()[0].weights.get(0, 0), 0.0);
        assert_eq!(grads.layers()[0].bias[0], 0.0);
        assert_eq!(grads.layers()[0].weights.get(1, 0), 3.0 * 1.5);
        // ReLU output of the dead unit is 0, so its outgoing weight gets no gradient
        assert_eq!(grads.layers()[1].weights.get(0, 0), 0.0);
    }

    #[test]
    fn relu_subgradient_at_zero_is_zero() {
        let hidden = Dense {
            weights: Matrix::from_row_major(1, 1, vec![1.0]).unwrap(),
            bias: vec![0.0],
            activation: Activation::Relu,
        };
        let out = Dense {
            weights: Matrix::from_row_major(1, 1, vec![1.0]).unwrap(),
            bias: vec![0.0],
            activation: Activation::Linear,
        };
        let net = Mlp::from_layers(vec![hidden, out]).unwrap();
        let grads = net.backward(&[0.0], &[1.0]).unwrap();
        assert_eq!(grads.layers()[0].bias[0], 0.0);
    }
}
