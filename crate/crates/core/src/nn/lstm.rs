use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::matrix::{dot, Matrix};
use super::params::Parameters;
use crate::{seeded_rng, Error, Result};

/// Weights of one LSTM gate: input projection, recurrent projection, bias.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    /// `hidden × input`
    pub input: Matrix,
    /// `hidden × hidden`
    pub recurrent: Matrix,
    pub bias: Vec<f64>,
}

impl Gate {
    fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            input: Matrix::zeros(hidden, input_dim),
            recurrent: Matrix::zeros(hidden, hidden),
            bias: vec![0.0; hidden],
        }
    }

    fn preactivation(&self, x: &[f64], h_prev: &[f64]) -> Vec<f64> {
        let mut z = self.bias.clone();
        self.input.mul_vec_acc(x, &mut z);
        self.recurrent.mul_vec_acc(h_prev, &mut z);
        z
    }
}

/// Single-layer LSTM followed by a dense scalar head.
///
/// Cell recursion from zero initial state:
///
/// ```text
/// f = σ(W_f x + U_f h + b_f)    i = σ(W_i x + U_i h + b_i)
/// o = σ(W_o x + U_o h + b_o)    g = tanh(W_c x + U_c h + b_c)
/// c' = f ⊙ c + i ⊙ g            h' = o ⊙ tanh(c')
/// ```
///
/// and the prediction is `head_weights · h_T + head_bias`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lstm {
    input_dim: usize,
    hidden: usize,
    pub forget: Gate,
    pub input_gate: Gate,
    pub output: Gate,
    pub candidate: Gate,
    pub head_weights: Vec<f64>,
    /// Single element; kept as a vector so it fits the block layout.
    pub head_bias: Vec<f64>,
}

#[derive(Clone, Debug)]
struct StepCache {
    f: Vec<f64>,
    i: Vec<f64>,
    o: Vec<f64>,
    g: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
}

/// Result of [`Lstm::forward`].
#[derive(Clone, Debug, PartialEq)]
pub struct LstmOutput {
    pub hidden: Vec<f64>,
    pub prediction: f64,
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl Lstm {
    /// Glorot-uniform weights for every matrix, zero biases.
    pub fn new(input_dim: usize, hidden: usize, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(input_dim, hidden)?;
        let mut rng = seeded_rng(seed);
        let mut fill = |m: &mut Matrix| {
            let limit = (6.0 / (m.rows() + m.cols()) as f64).sqrt();
            for w in m.as_mut_slice() {
                *w = rng.gen_range(-limit..=limit);
            }
        };
        for gate in [
            &mut net.forget,
            &mut net.input_gate,
            &mut net.output,
            &mut net.candidate,
        ] {
            fill(&mut gate.input);
            fill(&mut gate.recurrent);
        }
        let mut head = Matrix::zeros(1, hidden);
        fill(&mut head);
        net.head_weights = head.as_slice().to_vec();
        Ok(net)
    }

    pub fn zeros(input_dim: usize, hidden: usize) -> Result<Self> {
        if input_dim == 0 || hidden == 0 {
            return Err(Error::InvalidShape(format!(
                "LSTM needs positive dimensions, got input {input_dim}, hidden {hidden}"
            )));
        }
        Ok(Self {
            input_dim,
            hidden,
            forget: Gate::zeros(input_dim, hidden),
            input_gate: Gate::zeros(input_dim, hidden),
            output: Gate::zeros(input_dim, hidden),
            candidate: Gate::zeros(input_dim, hidden),
            head_weights: vec![0.0; hidden],
            head_bias: vec![0.0],
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden
    }

    pub fn zeros_like(&self) -> Self {
        let mut g = self.clone();
        g.fill(0.0);
        g
    }

    pub fn forward(&self, sequence: &[Vec<f64>]) -> Result<LstmOutput> {
        let (hidden, _) = self.run(sequence)?;
        let prediction = dot(&self.head_weights, &hidden) + self.head_bias[0];
        Ok(LstmOutput { hidden, prediction })
    }

    /// Backpropagation through time of `prediction × loss_gradient`.
    pub fn backward(&self, sequence: &[Vec<f64>], loss_gradient: f64) -> Result<Lstm> {
        let mut grads = self.zeros_like();
        self.accumulate_gradient(sequence, loss_gradient, &mut grads)?;
        Ok(grads)
    }

    /// Forward then backward, adding the gradient into `grads`. Returns the
    /// prediction so training loops need only one forward pass.
    pub fn accumulate_gradient(
        &self,
        sequence: &[Vec<f64>],
        loss_gradient: f64,
        grads: &mut Lstm,
    ) -> Result<f64> {
        let (h_last, steps) = self.run(sequence)?;
        let prediction = dot(&self.head_weights, &h_last) + self.head_bias[0];
        if loss_gradient == 0.0 {
            return Ok(prediction);
        }
        let n = self.hidden;
        grads.head_bias[0] += loss_gradient;
        for (gw, &h) in grads.head_weights.iter_mut().zip(&h_last) {
            *gw += loss_gradient * h;
        }
        let mut dh: Vec<f64> = self.head_weights.iter().map(|w| w * loss_gradient).collect();
        let mut dc = vec![0.0; n];
        let zeros = vec![0.0; n];
        let mut dz_f = vec![0.0; n];
        let mut dz_i = vec![0.0; n];
        let mut dz_o = vec![0.0; n];
        let mut dz_g = vec![0.0; n];

        for t in (0..steps.len()).rev() {
            let s = &steps[t];
            let c_prev = if t > 0 { &steps[t - 1].c } else { &zeros };
            let h_prev: Vec<f64> = if t > 0 {
                let p = &steps[t - 1];
                p.o.iter().zip(&p.tanh_c).map(|(o, tc)| o * tc).collect()
            } else {
                zeros.clone()
            };
            for k in 0..n {
                let d_o = dh[k] * s.tanh_c[k];
                dc[k] += dh[k] * s.o[k] * (1.0 - s.tanh_c[k] * s.tanh_c[k]);
                let d_f = dc[k] * c_prev[k];
                let d_i = dc[k] * s.g[k];
                let d_g = dc[k] * s.i[k];
                dz_f[k] = d_f * s.f[k] * (1.0 - s.f[k]);
                dz_i[k] = d_i * s.i[k] * (1.0 - s.i[k]);
                dz_o[k] = d_o * s.o[k] * (1.0 - s.o[k]);
                dz_g[k] = d_g * (1.0 - s.g[k] * s.g[k]);
                dc[k] *= s.f[k];
            }
            let x = &sequence[t];
            let mut dh_prev = vec![0.0; n];
            for (gate, grad, dz) in [
                (&self.forget, &mut grads.forget, &dz_f),
                (&self.input_gate, &mut grads.input_gate, &dz_i),
                (&self.output, &mut grads.output, &dz_o),
                (&self.candidate, &mut grads.candidate, &dz_g),
            ] {
                grad.input.add_outer(dz, x);
                grad.recurrent.add_outer(dz, &h_prev);
                for (b, d) in grad.bias.iter_mut().zip(dz.iter()) {
                    *b += d;
                }
                gate.recurrent.tmul_vec_acc(dz, &mut dh_prev);
            }
            dh = dh_prev;
        }
        Ok(prediction)
    }

    fn run(&self, sequence: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<StepCache>)> {
        if sequence.is_empty() {
            return Err(Error::InvalidShape("empty input sequence".into()));
        }
        let n = self.hidden;
        let mut h = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut steps = Vec::with_capacity(sequence.len());
        for (t, x) in sequence.iter().enumerate() {
            if x.len() != self.input_dim {
                return Err(Error::InvalidShape(format!(
                    "sequence element {t} has length {} but LSTM expects {}",
                    x.len(),
                    self.input_dim
                )));
            }
            let f: Vec<f64> = self.forget.preactivation(x, &h).into_iter().map(sigmoid).collect();
            let i: Vec<f64> = self.input_gate.preactivation(x, &h).into_iter().map(sigmoid).collect();
            let o: Vec<f64> = self.output.preactivation(x, &h).into_iter().map(sigmoid).collect();
            let g: Vec<f64> = self.candidate.preactivation(x, &h).into_iter().map(f64::tanh).collect();
            for k in 0..n {
                c[k] = f[k] * c[k] + i[k] * g[k];
            }
            let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
            h = o.iter().zip(&tanh_c).map(|(o, tc)| o * tc).collect();
            steps.push(StepCache {
                f,
                i,
                o,
                g,
                c: c.clone(),
                tanh_c,
            });
        }
        Ok((h, steps))
    }
}

impl Parameters for Lstm {
    fn blocks(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(14);
        for gate in [&self.forget, &self.input_gate, &self.output, &self.candidate] {
            out.push(gate.input.as_slice());
            out.push(gate.recurrent.as_slice());
            out.push(gate.bias.as_slice());
        }
        out.push(&self.head_weights);
        out.push(&self.head_bias);
        out
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(14);
        for gate in [
            &mut self.forget,
            &mut self.input_gate,
            &mut self.output,
            &mut self.candidate,
        ] {
            out.push(gate.input.as_mut_slice());
            out.push(gate.recurrent.as_mut_slice());
            out.push(gate.bias.as_mut_slice());
        }
        out.push(&mut self.head_weights);
        out.push(&mut self.head_bias);
        out
    }
}
