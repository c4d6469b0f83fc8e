//! Next-hour total-quantity forecasting: an LSTM trained on 24-hour windows
//! and the two-lag averaging baseline it is compared against.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::market::{EnvConfig, MarketEnv, FORECAST_WINDOW};
use crate::nn::{AdamConfig, Checkpoint, Lstm, Optimizer, OptimizerConfig};
use crate::{seeded_rng, Error, Result};

/// Affine map of `[min, max]` onto `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinMax {
    pub min: f64,
    pub max: f64,
}

impl MinMax {
    pub fn fit(values: &[f64]) -> Self {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self { min, max }
    }

    fn span(&self) -> f64 {
        let s = self.max - self.min;
        if s > 0.0 {
            s
        } else {
            1.0
        }
    }

    pub fn normalize(&self, v: f64) -> f64 {
        (v - self.min) / self.span()
    }

    pub fn denormalize(&self, v: f64) -> f64 {
        v * self.span() + self.min
    }
}

/// Sliding windows of length 24 with stride 1, normalized to `[0, 1]`.
/// `inputs[k] = series[k..k + 24]`, `targets[k] = series[k + 24]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ForecastDataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub normalizer: MinMax,
}

impl ForecastDataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

pub fn make_dataset(series: &[f64]) -> Result<ForecastDataset> {
    if series.len() <= FORECAST_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "series of length {} is too short for {FORECAST_WINDOW}-step windows",
            series.len()
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("series holds non-finite values".into()));
    }
    let normalizer = MinMax::fit(series);
    let scaled: Vec<f64> = series.iter().map(|&v| normalizer.normalize(v)).collect();
    let n = series.len() - FORECAST_WINDOW;
    Ok(ForecastDataset {
        inputs: (0..n).map(|k| scaled[k..k + FORECAST_WINDOW].to_vec()).collect(),
        targets: (0..n).map(|k| scaled[k + FORECAST_WINDOW]).collect(),
        normalizer,
    })
}

/// `(Q_{t−1} + Q_{t−24}) / 2`
pub fn baseline_predict(series: &[f64], t: usize) -> Result<f64> {
    if t < FORECAST_WINDOW || t > series.len() {
        return Err(Error::InvalidArgument(format!(
            "baseline needs 24 <= t <= {}, got {t}",
            series.len()
        )));
    }
    Ok(0.5 * (series[t - 1] + series[t - FORECAST_WINDOW]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastConfig {
    pub units: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Trailing share of windows kept out of training.
    pub holdout_fraction: f64,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self {
            units: 100,
            epochs: 50,
            batch_size: 32,
            learning_rate: 1e-3,
            holdout_fraction: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastReport {
    pub train_mse: f64,
    pub holdout_mse: f64,
    pub baseline_holdout_mse: f64,
    pub train_samples: usize,
    pub holdout_samples: usize,
}

/// Trained LSTM with the normalization it was fitted under. Immutable after
/// training.
#[derive(Clone, Debug, PartialEq)]
pub struct Forecaster {
    pub lstm: Lstm,
    pub normalizer: MinMax,
}

fn as_sequence(window: &[f64]) -> Vec<Vec<f64>> {
    window.iter().map(|&v| vec![v]).collect()
}

impl Forecaster {
    /// Forecast from a window already in normalized units.
    pub fn predict_normalized(&self, window: &[f64]) -> Result<f64> {
        if window.len() != FORECAST_WINDOW {
            return Err(Error::InvalidShape(format!(
                "forecast window has length {}, expected {FORECAST_WINDOW}",
                window.len()
            )));
        }
        Ok(self.lstm.forward(&as_sequence(window))?.prediction)
    }

    /// Next-hour total quantity in physical units from the last 24 values.
    pub fn predict_requirement(&self, last_24: &[f64]) -> Result<f64> {
        let scaled: Vec<f64> = last_24.iter().map(|&v| self.normalizer.normalize(v)).collect();
        Ok(self.normalizer.denormalize(self.predict_normalized(&scaled)?))
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::from(&self.lstm)
    }
}

fn mse(model: &Lstm, inputs: &[Vec<f64>], targets: &[f64]) -> Result<f64> {
    if targets.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (x, &y) in inputs.iter().zip(targets) {
        let e = model.forward(&as_sequence(x))?.prediction - y;
        total += e * e;
    }
    Ok(total / targets.len() as f64)
}

/// Fit an LSTM(`units`) + dense head by mini-batch Adam on squared error.
/// The last `holdout_fraction` of windows is held out and scored together
/// with the two-lag baseline.
pub fn train_lstm(
    dataset: &ForecastDataset,
    config: &ForecastConfig,
    seed: u64,
) -> Result<(Forecaster, ForecastReport)> {
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("empty forecast dataset".into()));
    }
    if config.units == 0 || config.batch_size == 0 {
        return Err(Error::config("forecast", "units and batch size must be positive"));
    }
    if !(0.0..1.0).contains(&config.holdout_fraction) {
        return Err(Error::config("holdout_fraction", "must lie in [0, 1)"));
    }
    let n = dataset.len();
    let holdout = ((n as f64) * config.holdout_fraction).round() as usize;
    let split = (n - holdout).max(1);
    let (train_x, test_x) = dataset.inputs.split_at(split);
    let (train_y, test_y) = dataset.targets.split_at(split);

    let mut rng = seeded_rng(seed);
    let mut model = Lstm::new(1, config.units, seed)?;
    let adam = AdamConfig {
        learning_rate: config.learning_rate,
        ..AdamConfig::default()
    };
    let mut opt = Optimizer::new(OptimizerConfig::Adam(adam), &model);
    let mut order: Vec<usize> = (0..split).collect();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut grads = model.zeros_like();
            let scale = 2.0 / batch.len() as f64;
            for &k in batch {
                let seq = as_sequence(&train_x[k]);
                let pred = model.forward(&seq)?.prediction;
                let err = pred - train_y[k];
                epoch_loss += err * err;
                model.accumulate_gradient(&seq, scale * err, &mut grads)?;
            }
            if !epoch_loss.is_finite() {
                return Err(Error::ForecastDiverged { epoch });
            }
            opt.step(&mut model, &grads)
                .map_err(|_| Error::ForecastDiverged { epoch })?;
        }
    }

    let baseline_holdout_mse = if test_y.is_empty() {
        0.0
    } else {
        test_x
            .iter()
            .zip(test_y)
            .map(|(x, &y)| {
                let e = 0.5 * (x[FORECAST_WINDOW - 1] + x[0]) - y;
                e * e
            })
            .sum::<f64>()
            / test_y.len() as f64
    };
    let report = ForecastReport {
        train_mse: mse(&model, train_x, train_y)?,
        holdout_mse: mse(&model, test_x, test_y)?,
        baseline_holdout_mse,
        train_samples: train_y.len(),
        holdout_samples: test_y.len(),
    };
    if !report.train_mse.is_finite() {
        return Err(Error::ForecastDiverged {
            epoch: config.epochs,
        });
    }
    Ok((
        Forecaster {
            lstm: model,
            normalizer: dataset.normalizer,
        },
        report,
    ))
}

/// Total dispatched quantity for each hour of one episode in which every
/// producer, learner included, bids the fixed magnification `(a1, a2)`.
pub fn training_series(env_config: &EnvConfig, seed: u64, magnification: (f64, f64)) -> Result<Vec<f64>> {
    let mut cfg = env_config.clone();
    // rivals bid the same fixed magnification: fold it into their true costs
    // via the truthful strategy
    cfg.strategy = crate::market::RivalStrategy::B2;
    for (i, g) in cfg.gencos.iter_mut().enumerate() {
        if i != env_config.learner_index()? {
            g.c1 *= magnification.0;
            g.c2 *= magnification.1;
        }
    }
    let mut env = MarketEnv::new(cfg, seed)?;
    let mut totals = Vec::with_capacity(env.episode_steps());
    while let Some(rec) = env.step(magnification.0, magnification.1)? {
        totals.push(rec.total_quantity());
    }
    Ok(totals)
}

/// Write `t,total_quantity` rows.
pub fn write_series_csv<W: std::io::Write>(series: &[f64], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "total_quantity"])?;
    for (t, v) in series.iter().enumerate() {
        w.write_record([t.to_string(), v.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("series", e))?;
    Ok(())
}

pub fn read_series_csv<R: std::io::Read>(reader: R) -> Result<Vec<f64>> {
    #[derive(Deserialize)]
    struct Row {
        #[allow(dead_code)]
        t: usize,
        total_quantity: f64,
    }
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize::<Row>()
        .map(|row| Ok(row?.total_quantity))
        .collect()
}
