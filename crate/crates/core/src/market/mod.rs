//! Reactive power market: producer data, demand, rival bidding, clearing
//! and the baseline-relative reward.
//!
//! The system operator is modelled as a single-constraint quadratic dispatch
//! with per-producer marginal prices. Quantities are in units of 100 MVAr.

mod bidding;
mod clearing;
mod demand;
mod env;
mod genco;

pub use bidding::{demand_scaled_bid, rival_bid, Bid, RivalStrategy};
pub use clearing::{clear_market, dispatch_cost, outcome_profit, profit, MarketOutcome};
pub use demand::{autocorrelation, demand_profile, DemandConfig, DemandSeries, MIN_PROFILE_STEPS};
pub use env::{
    write_trace_csv, EnvConfig, MarketEnv, Observation, StepRecord, FORECAST_WINDOW,
    MAX_MAGNIFICATION, MIN_MAGNIFICATION,
};
pub use genco::{
    ieee30_gencos, load_gencos_csv, read_gencos_csv, validate_table, write_gencos_csv,
    GencoParams, DEFAULT_Q_MAX,
};
