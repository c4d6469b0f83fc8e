use proptest::prelude::*;
use qbid_core::market::*;
use qbid_core::seeded_rng;
use rand::Rng;

const GRID: f64 = 1e-3;

/// Exact optimum on the `GRID` lattice: hand out one grid unit at a time to
/// the producer with the cheapest next unit. For separable convex costs
/// under a sum constraint this greedy allocation is optimal on the lattice.
fn grid_oracle(bids: &[Bid], gencos: &[GencoParams], units: usize) -> Vec<f64> {
    let cap: Vec<usize> = gencos.iter().map(|g| (g.q_max / GRID).round() as usize).collect();
    let mut n = vec![0usize; bids.len()];
    let cost = |b: &Bid, k: usize| {
        let x = k as f64 * GRID;
        b.b1 * x + b.b2 * x * x
    };
    for _ in 0..units {
        let best = (0..bids.len())
            .filter(|&i| n[i] < cap[i])
            .min_by(|&i, &j| {
                let di = cost(&bids[i], n[i] + 1) - cost(&bids[i], n[i]);
                let dj = cost(&bids[j], n[j] + 1) - cost(&bids[j], n[j]);
                di.total_cmp(&dj)
            })
            .expect("instance is feasible");
        n[best] += 1;
    }
    n.into_iter().map(|k| k as f64 * GRID).collect()
}

fn random_instance(rng: &mut qbid_core::Rng) -> (Vec<GencoParams>, Vec<Bid>, usize) {
    let n = rng.gen_range(2..=6);
    let gencos: Vec<GencoParams> = (0..n)
        .map(|i| GencoParams {
            id: i as u32 + 1,
            c1: rng.gen_range(0.55..0.8),
            c2: rng.gen_range(0.25..0.95),
            bg: rng.gen_range(1.5..8.0),
            q_max: DEFAULT_Q_MAX,
        })
        .collect();
    let bids = gencos
        .iter()
        .map(|g| Bid::magnified(g, rng.gen_range(1.0..5.0), rng.gen_range(1.0..5.0)))
        .collect();
    let units = rng.gen_range(0..=(n * 500));
    (gencos, bids, units)
}

#[test]
fn clearing_matches_grid_oracle() {
    let mut rng = seeded_rng(2024);
    for _ in 0..200 {
        let (gencos, bids, units) = random_instance(&mut rng);
        let requirement = units as f64 * GRID;
        let out = clear_market(&bids, requirement, &gencos).unwrap();
        let oracle = grid_oracle(&bids, &gencos, units);
        assert!(dispatch_cost(&bids, &out.increments) <= dispatch_cost(&bids, &oracle) + 1e-6);
        for (x, o) in out.increments.iter().zip(&oracle) {
            assert!((x - o).abs() <= 2e-3, "{x} vs {o}");
        }
    }
}

#[test]
fn clearing_balances_and_prices_are_marginal() {
    let mut rng = seeded_rng(7);
    for _ in 0..200 {
        let (gencos, bids, units) = random_instance(&mut rng);
        let requirement = units as f64 * GRID;
        let out = clear_market(&bids, requirement, &gencos).unwrap();
        let total: f64 = out.increments.iter().sum();
        assert!((total - requirement).abs() < 1e-9);
        for i in 0..gencos.len() {
            let x = out.increments[i];
            assert!(x >= -1e-12 && x <= gencos[i].q_max + 1e-12);
            assert!((out.quantities[i] - gencos[i].bg - x).abs() < 1e-12);
            assert!((out.prices[i] - (bids[i].b1 + 2.0 * bids[i].b2 * x)).abs() < 1e-12);
            // interior units sit at the shadow price
            if x > 1e-9 && x < gencos[i].q_max - 1e-9 {
                assert!((out.prices[i] - out.lambda).abs() < 1e-7);
            }
        }
    }
}

proptest! {
    #[test]
    fn raising_own_bid_never_increases_own_dispatch(
        seed in 0u64..10_000,
        bump in 0.0f64..2.0,
        which in 0usize..6,
    ) {
        let mut rng = seeded_rng(seed);
        let (gencos, bids, units) = random_instance(&mut rng);
        let i = which % gencos.len();
        let requirement = units as f64 * GRID;
        let before = clear_market(&bids, requirement, &gencos).unwrap();
        let mut raised = bids.clone();
        raised[i].b1 += bump;
        let after = clear_market(&raised, requirement, &gencos).unwrap();
        prop_assert!(after.increments[i] <= before.increments[i] + 1e-9);
    }

    #[test]
    fn more_requirement_never_lowers_any_dispatch(seed in 0u64..10_000, extra in 1usize..200) {
        let mut rng = seeded_rng(seed);
        let (gencos, bids, units) = random_instance(&mut rng);
        let cap = gencos.len() * 500;
        let lo = units.min(cap - extra.min(cap));
        let a = clear_market(&bids, lo as f64 * GRID, &gencos).unwrap();
        let b = clear_market(&bids, (lo + extra.min(cap)) as f64 * GRID, &gencos).unwrap();
        for (x, y) in a.increments.iter().zip(&b.increments) {
            prop_assert!(y + 1e-9 >= *x);
        }
    }
}

#[test]
fn true_cost_bidding_earns_zero_reward_all_episode() {
    for strategy in [RivalStrategy::B1, RivalStrategy::B2] {
        for learner in 1..=6 {
            let cfg = EnvConfig {
                learner_id: learner,
                strategy,
                ..EnvConfig::default()
            };
            let mut env = MarketEnv::new(cfg, 40 + learner as u64).unwrap();
            let mut steps = 0;
            while let Some(rec) = env.step(1.0, 1.0).unwrap() {
                assert_eq!(rec.reward, 0.0);
                steps += 1;
            }
            assert_eq!(steps, 720);
        }
    }
}

#[test]
fn reward_is_profit_over_baseline() {
    let mut env = MarketEnv::new(EnvConfig::default(), 3).unwrap();
    let g = env.learner().clone();
    let i = env.learner_index();
    for k in 0..100 {
        let a1 = 1.0 + 0.5 * (k % 9) as f64;
        let a2 = 1.0 + 0.5 * ((k / 9) % 9) as f64;
        let rec = env.step(a1, a2).unwrap().unwrap().clone();
        let qg = rec.outcome.quantities[i];
        let price = rec.outcome.prices[i];
        let profit = price * qg - g.c1 * (qg - g.bg) - g.c2 * (qg - g.bg).powi(2);
        assert!((rec.profit - profit).abs() < 1e-12);
        assert!((rec.reward - (rec.profit - rec.baseline_profit)).abs() < 1e-12);
    }
}
