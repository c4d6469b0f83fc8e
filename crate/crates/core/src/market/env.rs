use std::io::Write;

use serde::{Deserialize, Serialize};

use super::bidding::{rival_bid, Bid, RivalStrategy};
use super::clearing::{clear_market, outcome_profit, MarketOutcome};
use super::demand::{demand_profile, DemandConfig, DemandSeries};
use super::genco::{ieee30_gencos, validate_table, GencoParams};
use crate::{seeded_rng, Error, Result, Rng};

/// Hours of quantity history fed to the requirement forecaster.
pub const FORECAST_WINDOW: usize = 24;

/// Bid magnifications are restricted to this range.
pub const MIN_MAGNIFICATION: f64 = 1.0;
pub const MAX_MAGNIFICATION: f64 = 5.0;

const RIVAL_STREAM: u64 = 0x5249_5641_4c00_0000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub gencos: Vec<GencoParams>,
    pub learner_id: u32,
    pub strategy: RivalStrategy,
    pub episode_steps: usize,
    pub demand: DemandConfig,
    /// Half-width of the uniform noise added to `d_t` by B-1 rivals.
    pub rival_noise: f64,
    /// When set, every episode reuses the demand series drawn from this seed.
    pub fixed_series_seed: Option<u64>,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            gencos: ieee30_gencos(),
            learner_id: 1,
            strategy: RivalStrategy::B1,
            episode_steps: 720,
            demand: DemandConfig::default(),
            rival_noise: 0.05,
            fixed_series_seed: None,
        }
    }
}

impl EnvConfig {
    pub fn learner_index(&self) -> Result<usize> {
        self.gencos
            .iter()
            .position(|g| g.id == self.learner_id)
            .ok_or_else(|| {
                Error::config("learner", format!("genco {} not in table", self.learner_id))
            })
    }

    pub fn validate(&self) -> Result<()> {
        validate_table(&self.gencos)?;
        self.learner_index()?;
        self.demand.validate()?;
        if self.episode_steps == 0 {
            return Err(Error::config("episode_steps", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.rival_noise) {
            return Err(Error::config("rival_noise", "must lie in [0, 1]"));
        }
        let capacity: f64 = self.gencos.iter().map(|g| g.q_max).sum();
        let peak = self.demand.system_peak * self.demand.participation;
        if peak * (1.0 + self.demand.noise_amplitude) > capacity {
            return Err(Error::config(
                "demand",
                format!("peak requirement {peak} can exceed capacity {capacity}"),
            ));
        }
        Ok(())
    }
}

/// Everything that happened in one hourly clearing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub d_t: f64,
    pub requirement: f64,
    /// Learner's `(a1, a2)`.
    pub action: (f64, f64),
    pub bids: Vec<Bid>,
    pub outcome: MarketOutcome,
    pub profit: f64,
    pub baseline_profit: f64,
    /// Learner payment `price·qg` had it bid true cost.
    pub baseline_payment: f64,
    pub reward: f64,
}

impl StepRecord {
    pub fn total_quantity(&self) -> f64 {
        self.outcome.total_quantity()
    }
}

/// What an agent sees right after a reset.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub t: usize,
    /// Total quantity of the previous [`FORECAST_WINDOW`] hours, oldest first.
    pub recent_totals: Vec<f64>,
}

/// Hourly reactive power market with one learning producer.
///
/// Each step clears twice: once with the learner's magnified bid and once
/// with the learner bidding true cost against the same rival bids and
/// requirement. The reward is the profit difference.
#[derive(Clone, Debug)]
pub struct MarketEnv {
    config: EnvConfig,
    learner: usize,
    series: DemandSeries,
    warmup_totals: Vec<f64>,
    rng: Rng,
    t: usize,
    history: Vec<StepRecord>,
}

impl MarketEnv {
    pub fn new(config: EnvConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let learner = config.learner_index()?;
        let mut env = Self {
            learner,
            series: DemandSeries {
                values: Vec::new(),
                normalized: Vec::new(),
            },
            warmup_totals: Vec::new(),
            rng: seeded_rng(seed),
            t: 0,
            history: Vec::new(),
            config,
        };
        env.reset(seed)?;
        Ok(env)
    }

    /// Draw a new demand series (unless fixed), clear history and return the
    /// quantity window that precedes step 0.
    pub fn reset(&mut self, seed: u64) -> Result<Observation> {
        let series_seed = self.config.fixed_series_seed.unwrap_or(seed);
        let steps = (self.config.episode_steps + FORECAST_WINDOW).max(super::demand::MIN_PROFILE_STEPS);
        self.series = demand_profile(steps, series_seed, &self.config.demand)?;
        self.rng = seeded_rng(seed ^ RIVAL_STREAM);
        self.t = 0;
        self.history.clear();
        let base: f64 = self.config.gencos.iter().map(|g| g.bg).sum();
        self.warmup_totals = self.series.values[..FORECAST_WINDOW]
            .iter()
            .map(|d| base + d)
            .collect();
        Ok(self.observation())
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn gencos(&self) -> &[GencoParams] {
        &self.config.gencos
    }

    pub fn learner_index(&self) -> usize {
        self.learner
    }

    pub fn learner(&self) -> &GencoParams {
        &self.config.gencos[self.learner]
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn episode_steps(&self) -> usize {
        self.config.episode_steps
    }

    pub fn is_done(&self) -> bool {
        self.t >= self.config.episode_steps
    }

    pub fn history(&self) -> &[StepRecord] {
        &self.history
    }

    /// Requirement (units) at episode step `t`.
    pub fn requirement(&self, t: usize) -> f64 {
        self.series.values[t + FORECAST_WINDOW]
    }

    /// Normalized demand `d_t` at episode step `t`.
    pub fn normalized_demand(&self, t: usize) -> f64 {
        self.series.normalized[t + FORECAST_WINDOW]
    }

    pub fn observation(&self) -> Observation {
        Observation {
            t: self.t,
            recent_totals: self.recent_totals(),
        }
    }

    /// Total dispatched quantity over the last [`FORECAST_WINDOW`] hours,
    /// reaching into the pre-episode window when needed.
    pub fn recent_totals(&self) -> Vec<f64> {
        let from_history = self.history.len().min(FORECAST_WINDOW);
        let mut out: Vec<f64> = self.warmup_totals[from_history..].to_vec();
        out.extend(
            self.history[self.history.len() - from_history..]
                .iter()
                .map(StepRecord::total_quantity),
        );
        out
    }

    /// Advance one hour with the learner bidding `(a1·c1, a2·c2)`.
    /// Returns `Ok(None)` once the episode is exhausted.
    pub fn step(&mut self, a1: f64, a2: f64) -> Result<Option<&StepRecord>> {
        if self.is_done() {
            return Ok(None);
        }
        let range = MIN_MAGNIFICATION..=MAX_MAGNIFICATION;
        if !range.contains(&a1) || !range.contains(&a2) {
            return Err(Error::InvalidArgument(format!(
                "magnification ({a1}, {a2}) outside [{MIN_MAGNIFICATION}, {MAX_MAGNIFICATION}]"
            )));
        }
        let t = self.t;
        let d_t = self.normalized_demand(t);
        let requirement = self.requirement(t);
        let learner = self.learner;
        let gencos = &self.config.gencos;

        let mut bids: Vec<Bid> = Vec::with_capacity(gencos.len());
        for (i, g) in gencos.iter().enumerate() {
            bids.push(if i == learner {
                Bid::magnified(g, a1, a2)
            } else {
                rival_bid(self.config.strategy, g, d_t, self.config.rival_noise, &mut self.rng)
            });
        }
        let outcome = clear_market(&bids, requirement, gencos)?;
        let mut baseline_bids = bids.clone();
        baseline_bids[learner] = Bid::truthful(&gencos[learner]);
        let baseline = if baseline_bids[learner] == bids[learner] {
            outcome.clone()
        } else {
            clear_market(&baseline_bids, requirement, gencos)?
        };

        let profit = outcome_profit(&outcome, learner, &gencos[learner]);
        let baseline_profit = outcome_profit(&baseline, learner, &gencos[learner]);
        self.history.push(StepRecord {
            t,
            d_t,
            requirement,
            action: (a1, a2),
            bids,
            baseline_payment: baseline.payment(learner),
            outcome,
            profit,
            baseline_profit,
            reward: profit - baseline_profit,
        });
        self.t += 1;
        Ok(self.history.last())
    }
}

/// Write a per-step trace: `t, d_t, requirement, a1, a2`, then per producer
/// `b1_<id>`, `b2_<id>`, `qg_<id>`, `price_<id>`, and finally `reward`.
pub fn write_trace_csv<W: Write>(
    records: &[StepRecord],
    gencos: &[GencoParams],
    writer: W,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = ["t", "d_t", "requirement", "a1", "a2"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for prefix in ["b1", "b2", "qg", "price"] {
        header.extend(gencos.iter().map(|g| format!("{prefix}_{}", g.id)));
    }
    header.push("reward".into());
    out.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.t.to_string(),
            r.d_t.to_string(),
            r.requirement.to_string(),
            r.action.0.to_string(),
            r.action.1.to_string(),
        ];
        row.extend(r.bids.iter().map(|b| b.b1.to_string()));
        row.extend(r.bids.iter().map(|b| b.b2.to_string()));
        row.extend(r.outcome.quantities.iter().map(f64::to_string));
        row.extend(r.outcome.prices.iter().map(f64::to_string));
        row.push(r.reward.to_string());
        out.write_record(&row)?;
    }
    out.flush().map_err(|e| Error::io("trace", e))?;
    Ok(())
}
