use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::agent::{action_encode, TrainConfig, NUM_ACTIONS};
use crate::forecast::ForecastConfig;
use crate::market::{load_gencos_csv, EnvConfig};
use crate::nn::{AdamConfig, OptimizerConfig, RpropConfig};
use crate::replay::InitialPriority;
use crate::{Error, Result};

/// Everything needed to reproduce one experiment.
///
/// Text form is one `key = value` per line; `#` starts a comment. Unknown
/// keys are errors. [`ExperimentConfig::manifest`] writes every key back in
/// the same form.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub train: TrainConfig,
    pub forecast: ForecastConfig,
    /// Fixed magnification every producer bids in the forecaster's
    /// training episode.
    pub forecast_magnification: (f64, f64),
    pub reward_scale: f64,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub gencos_path: Option<PathBuf>,
    /// Share of final episodes averaged into the converged reward.
    pub window_fraction: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            env: EnvConfig::default(),
            train: TrainConfig::default(),
            forecast: ForecastConfig {
                units: 32,
                ..ForecastConfig::default()
            },
            forecast_magnification: (2.0, 2.0),
            reward_scale: 1.0,
            seeds: vec![1],
            output_dir: PathBuf::from("runs"),
            gencos_path: None,
            window_fraction: 0.1,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}`")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn learning_rate_mut(opt: &mut OptimizerConfig) -> Option<&mut f64> {
    match opt {
        OptimizerConfig::Adam(a) => Some(&mut a.learning_rate),
        OptimizerConfig::Rprop(_) => None,
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("line {}", n + 1), "expected `key = value`")
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Apply `key=value`.
    pub fn apply_assignment(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::config(assignment, "expected `key=value`"))?;
        self.set(key.trim(), value.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let t = &mut self.train;
        match key {
            "learner" => self.env.learner_id = parse(key, value)?,
            "strategy" => self.env.strategy = value.parse()?,
            "variant" => t.variant = value.parse()?,
            "seeds" => self.seeds = parse_list(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "gencos" => {
                let path = PathBuf::from(value);
                self.env.gencos = load_gencos_csv(&path)?;
                self.gencos_path = Some(path);
            }
            "episodes" => t.episodes = parse(key, value)?,
            "episode_steps" => self.env.episode_steps = parse(key, value)?,
            "rival_noise" => self.env.rival_noise = parse(key, value)?,
            "fixed_series_seed" => {
                self.env.fixed_series_seed = match value {
                    "" | "none" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "system_peak" => self.env.demand.system_peak = parse(key, value)?,
            "participation" => self.env.demand.participation = parse(key, value)?,
            "daily_amplitude" => self.env.demand.daily_amplitude = parse(key, value)?,
            "weekly_amplitude" => self.env.demand.weekly_amplitude = parse(key, value)?,
            "demand_noise" => self.env.demand.noise_amplitude = parse(key, value)?,
            "peak_hour" => self.env.demand.peak_hour = parse(key, value)?,
            "gamma" => t.gamma = parse(key, value)?,
            "epsilon_start" => t.epsilon_start = parse(key, value)?,
            "epsilon_decay" => t.epsilon_decay = parse(key, value)?,
            "epsilon_min" => t.epsilon_min = parse(key, value)?,
            "tau" => t.tau = parse(key, value)?,
            "batch_size" => t.batch_size = parse(key, value)?,
            "steps_per_iteration" => t.steps_per_iteration = parse(key, value)?,
            "warmup" => t.warmup = parse(key, value)?,
            "hidden" => t.hidden = parse_list(key, value)?,
            "optimizer" => {
                let lr = match &t.optimizer {
                    OptimizerConfig::Adam(a) => a.learning_rate,
                    OptimizerConfig::Rprop(_) => AdamConfig::default().learning_rate,
                };
                t.optimizer = match value.to_ascii_lowercase().as_str() {
                    "adam" => OptimizerConfig::Adam(AdamConfig {
                        learning_rate: lr,
                        ..AdamConfig::default()
                    }),
                    "rprop" => OptimizerConfig::Rprop(RpropConfig::default()),
                    other => return Err(Error::config(key, format!("unknown optimizer `{other}`"))),
                }
            }
            "learning_rate" => match learning_rate_mut(&mut t.optimizer) {
                Some(lr) => *lr = parse(key, value)?,
                None => return Err(Error::config(key, "only applies to adam")),
            },
            "buffer_capacity" => t.replay.capacity = parse(key, value)?,
            "beta" => t.replay.beta = parse(key, value)?,
            "eps_p" => t.replay.eps_p = parse(key, value)?,
            "initial_priority" => {
                t.replay.initial_priority = match value {
                    "max" => InitialPriority::RunningMax,
                    v => InitialPriority::Fixed(parse(key, v)?),
                }
            }
            "policy_override" => {
                t.policy_override = match value {
                    "" | "none" => None,
                    v => {
                        let pair: Vec<f64> = parse_list(key, v)?;
                        match pair.as_slice() {
                            [a1, a2] => Some(action_encode(*a1, *a2).ok_or_else(|| {
                                Error::config(key, format!("({a1}, {a2}) is not on the action grid"))
                            })?),
                            _ => return Err(Error::config(key, "expected `a1,a2`")),
                        }
                    }
                }
            }
            "divergence_threshold" => t.divergence_threshold = parse(key, value)?,
            "reward_scale" => self.reward_scale = parse(key, value)?,
            "window_fraction" => self.window_fraction = parse(key, value)?,
            "forecast_units" => self.forecast.units = parse(key, value)?,
            "forecast_epochs" => self.forecast.epochs = parse(key, value)?,
            "forecast_batch_size" => self.forecast.batch_size = parse(key, value)?,
            "forecast_learning_rate" => self.forecast.learning_rate = parse(key, value)?,
            "forecast_holdout" => self.forecast.holdout_fraction = parse(key, value)?,
            "forecast_magnification" => {
                let pair: Vec<f64> = parse_list(key, value)?;
                match pair.as_slice() {
                    [a1, a2] => self.forecast_magnification = (*a1, *a2),
                    _ => return Err(Error::config(key, "expected `a1,a2`")),
                }
            }
            other => return Err(Error::config(other, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed required"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("seeds", "seeds must be distinct"));
        }
        self.env.validate()?;
        self.train.validate()?;
        if self.train.episodes == 0 {
            return Err(Error::config("episodes", "must be at least 1"));
        }
        if self.env.episode_steps == 0 {
            return Err(Error::config("episode_steps", "must be at least 1"));
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return Err(Error::config("reward_scale", "must be positive"));
        }
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) {
            return Err(Error::config("window_fraction", "must lie in (0, 1]"));
        }
        if self.forecast.units == 0 || self.forecast.batch_size == 0 {
            return Err(Error::config("forecast_units", "units and batch size must be positive"));
        }
        if !(0.0..1.0).contains(&self.forecast.holdout_fraction) {
            return Err(Error::config("forecast_holdout", "must lie in [0, 1)"));
        }
        let (m1, m2) = self.forecast_magnification;
        if !((1.0..=5.0).contains(&m1) && (1.0..=5.0).contains(&m2)) {
            return Err(Error::config("forecast_magnification", "must lie in [1, 5]"));
        }
        if let Some(a) = self.train.policy_override {
            if a >= NUM_ACTIONS {
                return Err(Error::config("policy_override", "outside the action grid"));
            }
        }
        Ok(())
    }

    /// Number of final episodes averaged into the converged reward.
    pub fn window(&self) -> usize {
        ((self.train.episodes as f64 * self.window_fraction).ceil() as usize).clamp(1, self.train.episodes.max(1))
    }

    /// Resolved configuration in the file format.
    pub fn manifest(&self) -> String {
        let t = &self.train;
        let d = &self.env.demand;
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("learner", self.env.learner_id.to_string());
        put("strategy", self.env.strategy.name().to_string());
        put("variant", t.variant.name().to_string());
        put("seeds", join(&self.seeds));
        put("output_dir", self.output_dir.display().to_string());
        if let Some(p) = &self.gencos_path {
            put("gencos", p.display().to_string());
        }
        put("episodes", t.episodes.to_string());
        put("episode_steps", self.env.episode_steps.to_string());
        put("rival_noise", self.env.rival_noise.to_string());
        put(
            "fixed_series_seed",
            self.env.fixed_series_seed.map_or("none".into(), |v| v.to_string()),
        );
        put("system_peak", d.system_peak.to_string());
        put("participation", d.participation.to_string());
        put("daily_amplitude", d.daily_amplitude.to_string());
        put("weekly_amplitude", d.weekly_amplitude.to_string());
        put("demand_noise", d.noise_amplitude.to_string());
        put("peak_hour", d.peak_hour.to_string());
        put("gamma", t.gamma.to_string());
        put("epsilon_start", t.epsilon_start.to_string());
        put("epsilon_decay", t.epsilon_decay.to_string());
        put("epsilon_min", t.epsilon_min.to_string());
        put("tau", t.tau.to_string());
        put("batch_size", t.batch_size.to_string());
        put("steps_per_iteration", t.steps_per_iteration.to_string());
        put("warmup", t.warmup.to_string());
        put("hidden", join(&t.hidden));
        match &t.optimizer {
            OptimizerConfig::Adam(a) => {
                put("optimizer", "adam".into());
                put("learning_rate", a.learning_rate.to_string());
            }
            OptimizerConfig::Rprop(_) => put("optimizer", "rprop".into()),
        }
        put("buffer_capacity", t.replay.capacity.to_string());
        put("beta", t.replay.beta.to_string());
        put("eps_p", t.replay.eps_p.to_string());
        put(
            "initial_priority",
            match t.replay.initial_priority {
                InitialPriority::RunningMax => "max".into(),
                InitialPriority::Fixed(p) => p.to_string(),
            },
        );
        put(
            "policy_override",
            t.policy_override.map_or("none".into(), |a| {
                let (a1, a2) = crate::agent::action_decode(a).expect("validated index");
                format!("{a1},{a2}")
            }),
        );
        put("divergence_threshold", t.divergence_threshold.to_string());
        put("reward_scale", self.reward_scale.to_string());
        put("window_fraction", self.window_fraction.to_string());
        put("forecast_units", self.forecast.units.to_string());
        put("forecast_epochs", self.forecast.epochs.to_string());
        put("forecast_batch_size", self.forecast.batch_size.to_string());
        put("forecast_learning_rate", self.forecast.learning_rate.to_string());
        put("forecast_holdout", self.forecast.holdout_fraction.to_string());
        put(
            "forecast_magnification",
            format!("{},{}", self.forecast_magnification.0, self.forecast_magnification.1),
        );
        s
    }
}
