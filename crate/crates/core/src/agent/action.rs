use crate::{Error, Result};

/// Magnification levels per coefficient: 1.0, 1.5, …, 5.0.
pub const LEVELS: usize = 9;
pub const NUM_ACTIONS: usize = LEVELS * LEVELS;
const STEP: f64 = 0.5;

/// Index → `(a1, a2)`, enumerated a1-major: 0 is (1, 1), 1 is (1, 1.5),
/// 80 is (5, 5).
pub fn action_decode(index: usize) -> Result<(f64, f64)> {
    if index >= NUM_ACTIONS {
        return Err(Error::InvalidArgument(format!(
            "action index {index} outside 0..{NUM_ACTIONS}"
        )));
    }
    Ok((
        1.0 + STEP * (index / LEVELS) as f64,
        1.0 + STEP * (index % LEVELS) as f64,
    ))
}

/// Inverse of [`action_decode`] for on-grid pairs.
pub fn action_encode(a1: f64, a2: f64) -> Option<usize> {
    let level = |a: f64| {
        let k = (a - 1.0) / STEP;
        (k >= -1e-9 && (k - k.round()).abs() < 1e-9 && k.round() < LEVELS as f64)
            .then(|| k.round() as usize)
    };
    Some(level(a1)? * LEVELS + level(a2)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn listing_order() {
        assert_eq!(action_decode(0).unwrap(), (1.0, 1.0));
        assert_eq!(action_decode(1).unwrap(), (1.0, 1.5));
        assert_eq!(action_decode(9).unwrap(), (1.5, 1.0));
        assert_eq!(action_decode(79).unwrap(), (5.0, 4.5));
        assert_eq!(action_decode(80).unwrap(), (5.0, 5.0));
        assert!(action_decode(81).is_err());
    }

    #[test]
    fn encode_inverts_decode() {
        for k in 0..NUM_ACTIONS {
            let (a1, a2) = action_decode(k).unwrap();
            assert_eq!(action_encode(a1, a2), Some(k));
        }
        assert_eq!(action_encode(1.2, 1.0), None);
        assert_eq!(action_encode(5.5, 1.0), None);
    }
}
