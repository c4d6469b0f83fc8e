//! Central finite-difference gradient checks.

use super::lstm::Lstm;
use super::mlp::Mlp;
use super::params::Parameters;
use crate::Result;

/// `|a − b| / max(|a|, |b|, 1e-8)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compare `analytic` against central differences of `loss`, one parameter
/// at a time, and return the largest relative error.
pub fn check_gradients<P, F>(params: &P, analytic: &P, epsilon: f64, loss: F) -> f64
where
    P: Parameters + Clone,
    F: Fn(&P) -> f64,
{
    let analytic = analytic.to_flat();
    let mut probe = params.clone();
    let mut worst = 0.0f64;
    let mut flat_index = 0;
    let n_blocks = probe.blocks().len();
    for b in 0..n_blocks {
        let len = probe.blocks()[b].len();
        for k in 0..len {
            let original = probe.blocks()[b][k];
            probe.blocks_mut()[b][k] = original + epsilon;
            let up = loss(&probe);
            probe.blocks_mut()[b][k] = original - epsilon;
            let down = loss(&probe);
            probe.blocks_mut()[b][k] = original;
            let numeric = (up - down) / (2.0 * epsilon);
            worst = worst.max(relative_error(analytic[flat_index], numeric));
            flat_index += 1;
        }
    }
    worst
}

/// Gradient check of `⟨mlp(input), output_gradient⟩`.
pub fn mlp_grad_check(
    net: &Mlp,
    input: &[f64],
    output_gradient: &[f64],
    epsilon: f64,
) -> Result<f64> {
    let analytic = net.backward(input, output_gradient)?;
    Ok(check_gradients(net, &analytic, epsilon, |p: &Mlp| {
        let out = p.forward(input).expect("shape checked above");
        out.iter().zip(output_gradient).map(|(o, g)| o * g).sum()
    }))
}

/// Gradient check of the LSTM's scalar prediction.
pub fn lstm_grad_check(net: &Lstm, sequence: &[Vec<f64>], epsilon: f64) -> Result<f64> {
    let analytic = net.backward(sequence, 1.0)?;
    Ok(check_gradients(net, &analytic, epsilon, |p: &Lstm| {
        p.forward(sequence).expect("shape checked above").prediction
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert!((relative_error(1e-9, 0.0) - 0.1).abs() < 1e-12);
        assert!((relative_error(2.0, 1.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn linear_network_is_exact() {
        let net = Mlp::new(&[5, 3], 17).unwrap();
        let err = mlp_grad_check(&net, &[0.3, -0.1, 0.8, 1.2, -0.6], &[1.0, -2.0, 0.5], 1e-5)
            .unwrap();
        assert!(err < 1e-8, "linear grad check error {err}");
    }
}
