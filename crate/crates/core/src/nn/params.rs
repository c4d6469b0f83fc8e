use crate::{Error, Result};

/// Uniform view of a network's trainable parameters as an ordered list of
/// flat blocks. Gradients use the same type as the network they belong to,
/// so block layouts always line up.
pub trait Parameters {
    fn blocks(&self) -> Vec<&[f64]>;
    fn blocks_mut(&mut self) -> Vec<&mut [f64]>;

    fn num_params(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    /// Copy of all parameters in block order.
    fn to_flat(&self) -> Vec<f64> {
        self.blocks().concat()
    }

    fn fill(&mut self, value: f64) {
        for block in self.blocks_mut() {
            block.fill(value);
        }
    }
}

pub(crate) fn check_same_layout<P: Parameters>(a: &P, b: &P, what: &str) -> Result<()> {
    let la: Vec<usize> = a.blocks().iter().map(|b| b.len()).collect();
    let lb: Vec<usize> = b.blocks().iter().map(|b| b.len()).collect();
    if la != lb {
        return Err(Error::InvalidShape(format!(
            "{what}: parameter layouts differ ({la:?} vs {lb:?})"
        )));
    }
    Ok(())
}

/// Blend `target` toward `local`: `target ← (1 − τ)·target + τ·local`.
pub fn soft_update_in_place<P: Parameters>(target: &mut P, local: &P, tau: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidArgument(format!("tau {tau} outside [0, 1]")));
    }
    check_same_layout(target, local, "soft update")?;
    let keep = 1.0 - tau;
    for (t, l) in target.blocks_mut().into_iter().zip(local.blocks()) {
        for (tv, &lv) in t.iter_mut().zip(l) {
            *tv = keep * *tv + tau * lv;
        }
    }
    Ok(())
}

/// Non-mutating form of [`soft_update_in_place`].
pub fn soft_update<P: Parameters + Clone>(target: &P, local: &P, tau: f64) -> Result<P> {
    let mut next = target.clone();
    soft_update_in_place(&mut next, local, tau)?;
    Ok(next)
}
