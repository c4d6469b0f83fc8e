use serde::{Deserialize, Serialize};

use super::bidding::Bid;
use super::genco::GencoParams;
use crate::{Error, Result};

/// Result of one market clearing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarketOutcome {
    /// Total dispatched quantity `qg_i = bg_i + x_i`.
    pub quantities: Vec<f64>,
    /// Incremental dispatch `x_i` above base generation.
    pub increments: Vec<f64>,
    /// Nodal marginal price `b1_i + 2·b2_i·x_i`.
    pub prices: Vec<f64>,
    /// Shadow price of the balance constraint.
    pub lambda: f64,
    pub requirement: f64,
}

impl MarketOutcome {
    pub fn total_quantity(&self) -> f64 {
        self.quantities.iter().sum()
    }

    pub fn payment(&self, i: usize) -> f64 {
        self.prices[i] * self.quantities[i]
    }
}

/// Producer profit `price·qg − c1·(qg − bg) − c2·(qg − bg)²`.
pub fn profit(price: f64, qg: f64, genco: &GencoParams) -> f64 {
    let x = qg - genco.bg;
    price * qg - genco.c1 * x - genco.c2 * x * x
}

/// Profit of producer `i` in a clearing.
pub fn outcome_profit(outcome: &MarketOutcome, i: usize, genco: &GencoParams) -> f64 {
    profit(outcome.prices[i], outcome.quantities[i], genco)
}

/// Dispatch of one unit at shadow price `lambda`. Zero-slope bids switch
/// from empty to full capacity at `lambda = b1`.
#[inline]
fn unit_supply(bid: &Bid, q_max: f64, lambda: f64) -> f64 {
    if bid.b2 > 0.0 {
        ((lambda - bid.b1) / (2.0 * bid.b2)).clamp(0.0, q_max)
    } else if lambda > bid.b1 {
        q_max
    } else {
        0.0
    }
}

/// Clear the market: minimise `Σ b1_i·x_i + b2_i·x_i²` subject to
/// `Σ x_i = requirement` and `0 ≤ x_i ≤ q_max_i`.
///
/// The optimum satisfies `x_i = clip((λ − b1_i)/(2·b2_i), 0, q_max_i)`. λ is
/// bracketed by bisection, then solved exactly over the units that end up
/// strictly inside their bounds so the balance holds to rounding.
pub fn clear_market(bids: &[Bid], requirement: f64, gencos: &[GencoParams]) -> Result<MarketOutcome> {
    if bids.len() != gencos.len() || bids.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{} bids for {} producers",
            bids.len(),
            gencos.len()
        )));
    }
    if !(requirement >= 0.0 && requirement.is_finite()) {
        return Err(Error::InvalidArgument(format!("requirement {requirement} must be >= 0")));
    }
    if let Some(b) = bids
        .iter()
        .find(|b| !(b.b1 >= 0.0 && b.b2 >= 0.0 && b.b1.is_finite() && b.b2.is_finite()))
    {
        return Err(Error::InvalidArgument(format!("bid {b:?} must be finite and nonnegative")));
    }
    let capacity: f64 = gencos.iter().map(|g| g.q_max).sum();
    if requirement > capacity * (1.0 + 1e-12) {
        return Err(Error::Infeasible {
            requested: requirement,
            max_deliverable: capacity,
        });
    }
    let demand = requirement.min(capacity);
    let n = bids.len();

    let supply = |lambda: f64| -> f64 {
        bids.iter()
            .zip(gencos)
            .map(|(b, g)| unit_supply(b, g.q_max, lambda))
            .sum()
    };

    let mut lo = bids.iter().map(|b| b.b1).fold(f64::INFINITY, f64::min);
    let mut hi = bids
        .iter()
        .zip(gencos)
        .map(|(b, g)| b.b1 + 2.0 * b.b2 * g.q_max)
        .fold(f64::NEG_INFINITY, f64::max)
        + 1.0;

    let mut lambda;
    let mut x = vec![0.0; n];
    if demand == 0.0 {
        lambda = lo;
    } else {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if supply(mid) < demand {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lambda = hi;
        let tol = 1e-12 * lambda.abs().max(1.0);
        let flat: Vec<usize> = (0..n)
            .filter(|&i| bids[i].b2 == 0.0 && (bids[i].b1 - lambda).abs() <= tol)
            .collect();

        if !flat.is_empty() {
            // Zero-slope bids sit exactly at the margin and absorb the residual.
            lambda = bids[flat[0]].b1;
            for i in 0..n {
                if !flat.contains(&i) {
                    x[i] = if bids[i].b2 == 0.0 {
                        if bids[i].b1 < lambda {
                            gencos[i].q_max
                        } else {
                            0.0
                        }
                    } else {
                        unit_supply(&bids[i], gencos[i].q_max, lambda)
                    };
                }
            }
            let residual = demand - x.iter().sum::<f64>();
            let flat_cap: f64 = flat.iter().map(|&i| gencos[i].q_max).sum();
            let share = (residual / flat_cap).clamp(0.0, 1.0);
            for &i in &flat {
                x[i] = share * gencos[i].q_max;
            }
        } else {
            for i in 0..n {
                x[i] = unit_supply(&bids[i], gencos[i].q_max, lambda);
            }
            let interior: Vec<usize> = (0..n)
                .filter(|&i| bids[i].b2 > 0.0 && x[i] > 0.0 && x[i] < gencos[i].q_max)
                .collect();
            if !interior.is_empty() {
                let fixed: f64 = (0..n).filter(|i| !interior.contains(i)).map(|i| x[i]).sum();
                let slope: f64 = interior.iter().map(|&i| 0.5 / bids[i].b2).sum();
                let offset: f64 = interior.iter().map(|&i| bids[i].b1 / (2.0 * bids[i].b2)).sum();
                lambda = (demand - fixed + offset) / slope;
                for &i in &interior {
                    x[i] = ((lambda - bids[i].b1) / (2.0 * bids[i].b2)).clamp(0.0, gencos[i].q_max);
                }
            }
        }
    }

    let prices = (0..n).map(|i| bids[i].b1 + 2.0 * bids[i].b2 * x[i]).collect();
    let quantities = (0..n).map(|i| gencos[i].bg + x[i]).collect();
    Ok(MarketOutcome {
        quantities,
        increments: x,
        prices,
        lambda,
        requirement,
    })
}

/// Bid-cost objective `Σ b1_i·x_i + b2_i·x_i²` of an allocation.
pub fn dispatch_cost(bids: &[Bid], increments: &[f64]) -> f64 {
    bids.iter()
        .zip(increments)
        .map(|(b, &x)| b.b1 * x + b.b2 * x * x)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::ieee30_gencos;

    fn unit(id: u32, c1: f64, c2: f64) -> GencoParams {
        GencoParams {
            id,
            c1,
            c2,
            bg: 0.01,
            q_max: 0.5,
        }
    }

    #[test]
    fn symmetric_pair_splits_evenly() {
        let g = vec![unit(1, 0.7, 0.4), unit(2, 0.7, 0.4)];
        let bids: Vec<Bid> = g.iter().map(Bid::truthful).collect();
        let out = clear_market(&bids, 0.4, &g).unwrap();
        assert!((out.increments[0] - 0.2).abs() < 1e-12);
        assert!((out.increments[1] - 0.2).abs() < 1e-12);
        assert!((out.prices[0] - out.lambda).abs() < 1e-12);
    }

    #[test]
    fn single_unit_takes_everything() {
        let g = vec![unit(1, 0.6, 0.5)];
        let bid = Bid { b1: 1.2, b2: 0.8 };
        let out = clear_market(&[bid], 0.3, &g).unwrap();
        assert!((out.increments[0] - 0.3).abs() < 1e-12);
        assert!((out.prices[0] - (1.2 + 2.0 * 0.8 * 0.3)).abs() < 1e-12);
        assert!((out.quantities[0] - 0.31).abs() < 1e-12);
    }

    #[test]
    fn infeasible_requirement_reports_capacity() {
        let g = ieee30_gencos();
        let bids: Vec<Bid> = g.iter().map(Bid::truthful).collect();
        match clear_market(&bids, 3.5, &g) {
            Err(Error::Infeasible { max_deliverable, .. }) => {
                assert!((max_deliverable - 3.0).abs() < 1e-12)
            }
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn zero_requirement_dispatches_nothing() {
        let g = ieee30_gencos();
        let bids: Vec<Bid> = g.iter().map(Bid::truthful).collect();
        let out = clear_market(&bids, 0.0, &g).unwrap();
        assert!(out.increments.iter().all(|&x| x == 0.0));
        assert_eq!(out.prices[0], g[0].c1);
    }

    #[test]
    fn full_capacity_requirement() {
        let g = ieee30_gencos();
        let bids: Vec<Bid> = g.iter().map(Bid::truthful).collect();
        let out = clear_market(&bids, 3.0, &g).unwrap();
        assert!((out.increments.iter().sum::<f64>() - 3.0).abs() < 1e-9);
        assert!(out.increments.iter().all(|&x| (x - 0.5).abs() < 1e-9));
    }

    #[test]
    fn zero_slope_bids_fill_at_their_price() {
        let g = vec![unit(1, 0.5, 0.3), unit(2, 0.9, 0.3), unit(3, 0.9, 0.3)];
        let bids = vec![
            Bid { b1: 0.0, b2: 0.0 },
            Bid { b1: 0.9, b2: 0.3 },
            Bid { b1: 0.9, b2: 0.3 },
        ];
        // the free unit covers the first 0.5
        let out = clear_market(&bids, 0.3, &g).unwrap();
        assert!((out.increments[0] - 0.3).abs() < 1e-12);
        assert_eq!(out.increments[1], 0.0);
        let out = clear_market(&bids, 0.7, &g).unwrap();
        assert!((out.increments[0] - 0.5).abs() < 1e-12);
        assert!((out.increments[1] - 0.1).abs() < 1e-9);
        assert!((out.increments.iter().sum::<f64>() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn expensive_unit_priced_at_its_bid() {
        let g = vec![unit(1, 0.5, 0.3), unit(2, 0.6, 0.4)];
        let bids = vec![Bid { b1: 5.0, b2: 0.3 }, Bid::truthful(&g[1])];
        let out = clear_market(&bids, 0.1, &g).unwrap();
        assert_eq!(out.increments[0], 0.0);
        assert_eq!(out.prices[0], 5.0);
        assert!((out.increments[1] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn profit_examples() {
        let g = GencoParams {
            id: 1,
            c1: 0.5,
            c2: 1.0,
            bg: 0.1,
            q_max: 0.5,
        };
        assert!((profit(1.0, 0.3, &g) - 0.16).abs() < 1e-12);
        assert!((profit(0.8, 0.1, &g) - 0.08).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = ieee30_gencos();
        let bids: Vec<Bid> = g.iter().map(Bid::truthful).collect();
        assert!(clear_market(&bids[..3], 0.1, &g).is_err());
        assert!(clear_market(&bids, -0.1, &g).is_err());
        let mut neg = bids.clone();
        neg[0].b1 = -1.0;
        assert!(clear_market(&neg, 0.1, &g).is_err());
    }
}
