use std::f64::consts::TAU;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::{seeded_rng, Error, Result};

/// Shape and scale of the synthetic hourly reactive-power requirement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemandConfig {
    /// System reactive peak load in units (1.072 = 107.2 MVAr).
    pub system_peak: f64,
    /// Share of the reactive load procured through the market.
    pub participation: f64,
    pub daily_amplitude: f64,
    pub weekly_amplitude: f64,
    /// Relative noise, uniform in `±noise_amplitude`.
    pub noise_amplitude: f64,
    /// Hour of day at which the daily component peaks.
    pub peak_hour: f64,
}

impl Default for DemandConfig {
    fn default() -> Self {
        Self {
            system_peak: 1.072,
            participation: 0.6,
            daily_amplitude: 0.3,
            weekly_amplitude: 0.1,
            noise_amplitude: 0.03,
            peak_hour: 18.0,
        }
    }
}

impl DemandConfig {
    /// Level such that the noise-free series peaks at `system_peak·participation`.
    pub fn base_level(&self) -> f64 {
        self.system_peak * self.participation
            / (1.0 + self.daily_amplitude.abs() + self.weekly_amplitude.abs())
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(name, "out of range"))
            }
        };
        check("system_peak", self.system_peak > 0.0 && self.system_peak.is_finite())?;
        check("participation", self.participation > 0.0 && self.participation <= 1.0)?;
        check("daily_amplitude", (0.0..1.0).contains(&self.daily_amplitude))?;
        check("weekly_amplitude", (0.0..1.0).contains(&self.weekly_amplitude))?;
        check("noise_amplitude", (0.0..1.0).contains(&self.noise_amplitude))?;
        check("peak_hour", (0.0..24.0).contains(&self.peak_hour))
    }
}

/// Hourly requirement values (units) and their normalization `d_t = v_t / max v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemandSeries {
    pub values: Vec<f64>,
    pub normalized: Vec<f64>,
}

impl DemandSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Minimum length: the state looks back 48 hours.
pub const MIN_PROFILE_STEPS: usize = 49;

/// `v_t = base·(1 + A_d·sin(daily) + A_w·sin(weekly) + noise_t)`, clipped
/// positive. The phases use `t mod 24` and `t mod 168`, so with no noise and
/// no weekly term the series repeats exactly every 24 steps.
pub fn demand_profile(steps: usize, seed: u64, config: &DemandConfig) -> Result<DemandSeries> {
    if steps < MIN_PROFILE_STEPS {
        return Err(Error::InvalidArgument(format!(
            "demand profile needs at least {MIN_PROFILE_STEPS} steps, got {steps}"
        )));
    }
    config.validate()?;
    let mut rng = seeded_rng(seed);
    let base = config.base_level();
    let floor = 1e-6 * base;
    let values: Vec<f64> = (0..steps)
        .map(|t| {
            let hour = (t % 24) as f64;
            let daily = (TAU * (hour - config.peak_hour + 6.0) / 24.0).sin();
            let weekly = (TAU * (t % 168) as f64 / 168.0).sin();
            let noise = if config.noise_amplitude > 0.0 {
                rng.gen_range(-config.noise_amplitude..=config.noise_amplitude)
            } else {
                0.0
            };
            let v = base
                * (1.0 + config.daily_amplitude * daily + config.weekly_amplitude * weekly + noise);
            v.max(floor)
        })
        .collect();
    let peak = values.iter().copied().fold(0.0, f64::max);
    let normalized = values.iter().map(|v| v / peak).collect();
    Ok(DemandSeries { values, normalized })
}

/// Sample autocorrelation at `lag`.
pub fn autocorrelation(series: &[f64], lag: usize) -> f64 {
    let n = series.len();
    if lag >= n {
        return 0.0;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let var: f64 = series.iter().map(|v| (v - mean).powi(2)).sum();
    if var == 0.0 {
        return 1.0;
    }
    let cov: f64 = (0..n - lag)
        .map(|t| (series[t] - mean) * (series[t + lag] - mean))
        .sum();
    cov / var
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn requested_length() {
        let s = demand_profile(720, 1, &DemandConfig::default()).unwrap();
        assert_eq!(s.len(), 720);
        assert!(s.normalized.iter().all(|&d| (0.0..=1.0).contains(&d)));
        assert!(s.normalized.contains(&1.0));
    }

    #[test]
    fn too_short_rejected() {
        assert!(demand_profile(48, 0, &DemandConfig::default()).is_err());
    }

    #[test]
    fn noise_free_daily_series_is_periodic() {
        let cfg = DemandConfig {
            noise_amplitude: 0.0,
            weekly_amplitude: 0.0,
            ..DemandConfig::default()
        };
        let s = demand_profile(240, 5, &cfg).unwrap();
        for t in 24..240 {
            assert_eq!(s.values[t], s.values[t - 24]);
        }
        // peak magnitude calibrated to the participating share of the system peak
        let peak = s.values.iter().copied().fold(0.0, f64::max);
        assert!((peak - 1.072 * 0.6).abs() < 1e-12);
    }

    #[test]
    fn daily_lag_dominates_half_day() {
        let s = demand_profile(720, 9, &DemandConfig::default()).unwrap();
        assert!(autocorrelation(&s.values, 24) > autocorrelation(&s.values, 12));
    }

    #[test]
    fn seeds_change_noise_only() {
        let cfg = DemandConfig::default();
        let a = demand_profile(720, 1, &cfg).unwrap();
        let b = demand_profile(720, 2, &cfg).unwrap();
        assert_ne!(a.values, b.values);
        for s in [&a, &b] {
            assert!(autocorrelation(&s.values, 24) > 0.8);
            assert!(autocorrelation(&s.values, 24) > autocorrelation(&s.values, 12));
        }
        assert_eq!(a, demand_profile(720, 1, &cfg).unwrap());
    }
}
