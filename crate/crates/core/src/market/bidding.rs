use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::genco::GencoParams;
use crate::{Error, Rng};

/// A submitted bid: claimed operation cost `b1` and lost opportunity cost `b2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bid {
    pub b1: f64,
    pub b2: f64,
}

impl Bid {
    pub fn truthful(genco: &GencoParams) -> Self {
        Self {
            b1: genco.c1,
            b2: genco.c2,
        }
    }

    /// Bid magnified by `(a1, a2)` over true cost.
    pub fn magnified(genco: &GencoParams, a1: f64, a2: f64) -> Self {
        Self {
            b1: a1 * genco.c1,
            b2: a2 * genco.c2,
        }
    }
}

/// How the producers other than the learner bid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RivalStrategy {
    /// B-1: magnifications `(2·d̃, 5·d̃)` with `d̃` the noisy normalized demand.
    B1,
    /// B-2: true cost.
    B2,
}

impl RivalStrategy {
    pub fn name(self) -> &'static str {
        match self {
            RivalStrategy::B1 => "B1",
            RivalStrategy::B2 => "B2",
        }
    }
}

impl std::fmt::Display for RivalStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for RivalStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_uppercase().replace('-', "").as_str() {
            "B1" => Ok(RivalStrategy::B1),
            "B2" => Ok(RivalStrategy::B2),
            other => Err(Error::config("strategy", format!("unknown strategy `{other}`"))),
        }
    }
}

/// B-1 bid for an already-perturbed demand level `d_tilde`.
pub fn demand_scaled_bid(genco: &GencoParams, d_tilde: f64) -> Bid {
    Bid::magnified(genco, 2.0 * d_tilde, 5.0 * d_tilde)
}

/// Rival bid for one step. B-1 perturbs `d_t` by uniform noise in
/// `±noise_amplitude` and clips to `[0, 1]`; B-2 draws nothing from `rng`.
pub fn rival_bid(
    strategy: RivalStrategy,
    genco: &GencoParams,
    d_t: f64,
    noise_amplitude: f64,
    rng: &mut Rng,
) -> Bid {
    match strategy {
        RivalStrategy::B1 => {
            let noise = if noise_amplitude > 0.0 {
                rng.gen_range(-noise_amplitude..=noise_amplitude)
            } else {
                0.0
            };
            demand_scaled_bid(genco, (d_t + noise).clamp(0.0, 1.0))
        }
        RivalStrategy::B2 => Bid::truthful(genco),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::ieee30_gencos;
    use crate::seeded_rng;

    #[test]
    fn demand_scaled_examples() {
        let g = &ieee30_gencos()[0];
        let bid = demand_scaled_bid(g, 1.0);
        assert!((bid.b1 - 1.46).abs() < 1e-12);
        assert!((bid.b2 - 1.50).abs() < 1e-12);
        let half = demand_scaled_bid(g, 0.5);
        assert!((half.b1 / g.c1 - 1.0).abs() < 1e-12);
        assert!((half.b2 / g.c2 - 2.5).abs() < 1e-12);
    }

    #[test]
    fn truthful_rivals_bid_cost() {
        let mut rng = seeded_rng(1);
        for g in ieee30_gencos() {
            for d in [0.0, 0.3, 1.0] {
                assert_eq!(rival_bid(RivalStrategy::B2, &g, d, 0.05, &mut rng), Bid::truthful(&g));
            }
        }
    }

    #[test]
    fn noisy_multiplier_stays_clipped() {
        let mut rng = seeded_rng(2);
        let g = &ieee30_gencos()[1];
        for _ in 0..1000 {
            let b = rival_bid(RivalStrategy::B1, g, 0.99, 0.05, &mut rng);
            let d = b.b1 / (2.0 * g.c1);
            assert!((0.94 - 1e-12..=1.0 + 1e-12).contains(&d));
            assert!((b.b2 / (5.0 * g.c2) - d).abs() < 1e-12);
        }
    }

    #[test]
    fn parse_strategy() {
        assert_eq!("B-1".parse::<RivalStrategy>().unwrap(), RivalStrategy::B1);
        assert_eq!("b2".parse::<RivalStrategy>().unwrap(), RivalStrategy::B2);
        assert!("B3".parse::<RivalStrategy>().is_err());
    }
}
