use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::agent::{train_into, write_curve_csv, BiddingTask, EpisodeRecord, SeedPlan, Variant};
use crate::forecast::{make_dataset, train_lstm, training_series, ForecastReport, Forecaster};
use crate::market::{write_trace_csv, RivalStrategy, StepRecord};
use crate::{Error, Result};

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Train the requirement forecaster on one fixed-bid episode.
pub fn train_forecaster(config: &ExperimentConfig, seed: u64) -> Result<(Forecaster, ForecastReport, Vec<f64>)> {
    let series = training_series(&config.env, seed, config.forecast_magnification)?;
    let dataset = make_dataset(&series)?;
    let (fc, report) = train_lstm(&dataset, &config.forecast, seed)?;
    Ok((fc, report, series))
}

/// Artifacts of one seed.
#[derive(Clone, Debug)]
pub struct SeedRun {
    pub seed: u64,
    pub curve: Vec<EpisodeRecord>,
    pub forecast: ForecastReport,
    /// Steps of the last episode played.
    pub trace: Vec<StepRecord>,
    /// Set when training aborted; `curve` then holds the episodes finished.
    pub failure: Option<String>,
}

impl SeedRun {
    pub fn diverged(&self) -> bool {
        self.failure.is_some()
    }
}

/// Forecaster, then warm-up and training, for one root seed.
pub fn run_seed(config: &ExperimentConfig, seed: u64) -> Result<SeedRun> {
    let plan = SeedPlan::from_root(seed);
    let (forecaster, forecast, _) = train_forecaster(config, plan.forecaster)?;
    let mut task = BiddingTask::new(config.env.clone(), forecaster, config.reward_scale, plan.env)?;
    let mut curve = Vec::new();
    let failure = match train_into(&mut task, &config.train, seed, &mut curve) {
        Ok(_) => None,
        Err(e @ Error::Diverged { .. }) => Some(e.to_string()),
        Err(e) => return Err(e),
    };
    Ok(SeedRun {
        seed,
        curve,
        forecast,
        trace: task.history().to_vec(),
        failure,
    })
}

/// Mean reward and baseline payment over the last `window` episodes.
pub fn converged(curve: &[EpisodeRecord], window: usize) -> (f64, f64) {
    let tail = &curve[curve.len().saturating_sub(window)..];
    if tail.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = tail.len() as f64;
    (
        tail.iter().map(|r| r.reward).sum::<f64>() / n,
        tail.iter().map(|r| r.baseline_payment).sum::<f64>() / n,
    )
}

/// Mean and sample standard deviation; σ is 0 for a single value.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub converged_reward: f64,
    pub converged_baseline_payment: f64,
    pub episodes: usize,
    pub forecast_holdout_mse: f64,
    pub forecast_baseline_mse: f64,
    pub status: String,
}

/// μ and σ of the per-seed converged rewards. Diverged runs are listed but
/// left out of μ and σ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub learner: u32,
    pub strategy: String,
    pub variant: String,
    pub runs: usize,
    pub diverged_runs: usize,
    pub window: usize,
    pub mu: f64,
    pub sigma: f64,
    pub mean_baseline_payment: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub summary: ExperimentSummary,
    pub seeds: Vec<SeedSummary>,
    pub runs: Vec<SeedRun>,
}

/// Run every seed (in parallel), then write into `output_dir`:
/// `manifest.txt`, `curve_seed<k>.csv`, `trace_seed<k>.csv` (last episode),
/// `seeds.csv` and `summary.csv`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let runs: Vec<SeedRun> = config
        .seeds
        .par_iter()
        .map(|&s| run_seed(config, s))
        .collect::<Result<_>>()?;
    let window = config.window();
    let seeds: Vec<SeedSummary> = runs
        .iter()
        .map(|r| {
            let (reward, payment) = converged(&r.curve, window);
            SeedSummary {
                seed: r.seed,
                converged_reward: reward,
                converged_baseline_payment: payment,
                episodes: r.curve.len(),
                forecast_holdout_mse: r.forecast.holdout_mse,
                forecast_baseline_mse: r.forecast.baseline_holdout_mse,
                status: r.failure.clone().unwrap_or_else(|| "ok".into()),
            }
        })
        .collect();
    let ok: Vec<&SeedSummary> = seeds.iter().filter(|s| s.status == "ok").collect();
    let (mu, sigma) = mean_std(&ok.iter().map(|s| s.converged_reward).collect::<Vec<_>>());
    let (mean_payment, _) = mean_std(&ok.iter().map(|s| s.converged_baseline_payment).collect::<Vec<_>>());
    let summary = ExperimentSummary {
        learner: config.env.learner_id,
        strategy: config.env.strategy.name().into(),
        variant: config.train.variant.name().into(),
        runs: runs.len(),
        diverged_runs: runs.len() - ok.len(),
        window,
        mu,
        sigma,
        mean_baseline_payment: mean_payment,
    };
    let result = ExperimentResult { summary, seeds, runs };
    write_experiment(config, &result)?;
    Ok(result)
}

fn write_experiment(config: &ExperimentConfig, result: &ExperimentResult) -> Result<()> {
    let dir = &config.output_dir;
    create_dir(dir)?;
    let manifest = dir.join("manifest.txt");
    fs::write(&manifest, config.manifest()).map_err(|e| Error::io(&manifest, e))?;
    for run in &result.runs {
        write_curve_csv(&run.curve, create(&dir.join(format!("curve_seed{}.csv", run.seed)))?)?;
        write_trace_csv(
            &run.trace,
            &config.env.gencos,
            create(&dir.join(format!("trace_seed{}.csv", run.seed)))?,
        )?;
    }
    let mut w = csv::Writer::from_writer(create(&dir.join("seeds.csv"))?);
    for s in &result.seeds {
        w.serialize(s)?;
    }
    w.flush().map_err(|e| Error::io(dir.join("seeds.csv"), e))?;
    let mut w = csv::Writer::from_writer(create(&dir.join("summary.csv"))?);
    w.serialize(&result.summary)?;
    w.flush().map_err(|e| Error::io(dir.join("summary.csv"), e))?;
    Ok(())
}

/// One cell of a matrix table.
#[derive(Clone, Debug)]
pub struct MatrixCell {
    pub learner: u32,
    pub outcome: std::result::Result<ExperimentSummary, String>,
}

/// Summaries for one `(strategy, variant)` pair, one cell per learner.
#[derive(Clone, Debug)]
pub struct MatrixTable {
    pub strategy: RivalStrategy,
    pub variant: Variant,
    pub cells: Vec<MatrixCell>,
}

impl MatrixTable {
    /// `row,<id>…` with a `mu` and a `sigma` row. Failed cells are empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["row".to_string()];
        header.extend(self.cells.iter().map(|c| c.learner.to_string()));
        w.write_record(&header)?;
        for (name, pick) in [("mu", 0), ("sigma", 1)] {
            let mut row = vec![name.to_string()];
            row.extend(self.cells.iter().map(|c| match &c.outcome {
                Ok(s) => (if pick == 0 { s.mu } else { s.sigma }).to_string(),
                Err(_) => String::new(),
            }));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<matrix>", e))?;
        Ok(())
    }

    pub fn file_name(&self) -> String {
        format!("table_{}_{}.csv", self.strategy.name(), self.variant.name())
    }
}

/// Cross product of learners × strategies × variants. Each cell writes to
/// `<output_dir>/<strategy>_<variant>/genco<id>/`; a failing cell is recorded
/// and the rest continue.
pub fn run_matrix(
    base: &ExperimentConfig,
    learners: &[u32],
    strategies: &[RivalStrategy],
    variants: &[Variant],
) -> Result<Vec<MatrixTable>> {
    for (field, empty) in [
        ("learners", learners.is_empty()),
        ("strategies", strategies.is_empty()),
        ("variants", variants.is_empty()),
    ] {
        if empty {
            return Err(Error::config(field, "list is empty"));
        }
    }
    create_dir(&base.output_dir)?;
    let mut tables = Vec::new();
    for &strategy in strategies {
        for &variant in variants {
            let cells = learners
                .iter()
                .map(|&learner| {
                    let mut cfg = base.clone();
                    cfg.env.learner_id = learner;
                    cfg.env.strategy = strategy;
                    cfg.train.variant = variant;
                    cfg.output_dir = base
                        .output_dir
                        .join(format!("{}_{}", strategy.name(), variant.name()))
                        .join(format!("genco{learner}"));
                    MatrixCell {
                        learner,
                        outcome: run_experiment(&cfg).map(|r| r.summary).map_err(|e| e.to_string()),
                    }
                })
                .collect();
            let table = MatrixTable {
                strategy,
                variant,
                cells,
            };
            table.write_csv(create(&base.output_dir.join(table.file_name()))?)?;
            tables.push(table);
        }
    }
    Ok(tables)
}

/// Hyperparameters the sweep mode can vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParameter {
    Gamma,
    BatchSize,
    EpsilonDecay,
}

impl SweepParameter {
    pub fn key(self) -> &'static str {
        match self {
            SweepParameter::Gamma => "gamma",
            SweepParameter::BatchSize => "batch_size",
            SweepParameter::EpsilonDecay => "epsilon_decay",
        }
    }
}

impl std::str::FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma" => Ok(SweepParameter::Gamma),
            "batch_size" => Ok(SweepParameter::BatchSize),
            "epsilon_decay" => Ok(SweepParameter::EpsilonDecay),
            other => Err(Error::config("parameter", format!("cannot sweep `{other}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub value: String,
    pub summary: ExperimentSummary,
    /// Per-episode reward averaged over the seeds that reached it.
    pub mean_curve: Vec<f64>,
}

impl SweepPoint {
    pub fn diverged(&self) -> bool {
        self.summary.diverged_runs > 0
    }
}

/// Run the base config once per value of `parameter`, with NFQ-2, B-1
/// rivals and GENCO 2 as learner. Writes each run under
/// `<output_dir>/<parameter>_<value>/`, plus `sweep_<parameter>.csv` (mean
/// curves side by side) and `sweep_<parameter>_summary.csv`.
pub fn sweep(base: &ExperimentConfig, parameter: SweepParameter, values: &[String]) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::config("values", "list is empty"));
    }
    let mut points = Vec::new();
    for value in values {
        let mut cfg = base.clone();
        cfg.env.learner_id = 2;
        cfg.env.strategy = RivalStrategy::B1;
        cfg.train.variant = Variant::Nfq2;
        cfg.set(parameter.key(), value)?;
        cfg.output_dir = base.output_dir.join(format!("{}_{}", parameter.key(), value));
        let result = run_experiment(&cfg)?;
        let episodes = result.runs.iter().map(|r| r.curve.len()).max().unwrap_or(0);
        let mean_curve = (0..episodes)
            .map(|k| {
                let vals: Vec<f64> = result
                    .runs
                    .iter()
                    .filter_map(|r| r.curve.get(k).map(|e| e.reward))
                    .collect();
                mean_std(&vals).0
            })
            .collect();
        points.push(SweepPoint {
            value: value.clone(),
            summary: result.summary,
            mean_curve,
        });
    }
    let key = parameter.key();
    let mut w = csv::Writer::from_writer(create(&base.output_dir.join(format!("sweep_{key}.csv")))?);
    let mut header = vec!["episode".to_string()];
    header.extend(points.iter().map(|p| format!("{key}={}", p.value)));
    w.write_record(&header)?;
    let longest = points.iter().map(|p| p.mean_curve.len()).max().unwrap_or(0);
    for k in 0..longest {
        let mut row = vec![k.to_string()];
        row.extend(points.iter().map(|p| p.mean_curve.get(k).map_or(String::new(), f64::to_string)));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<sweep>", e))?;
    let mut w = csv::Writer::from_writer(create(&base.output_dir.join(format!("sweep_{key}_summary.csv")))?);
    w.write_record([key, "mu", "sigma", "diverged_runs"])?;
    for p in &points {
        w.write_record([
            p.value.clone(),
            p.summary.mu.to_string(),
            p.summary.sigma.to_string(),
            p.summary.diverged_runs.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<sweep>", e))?;
    Ok(points)
}

/// Copy `t` and every `qg_<id>` column of a stored trace for steps
/// `start..start + length`.
pub fn emit_trace<R: std::io::Read, W: Write>(trace: R, start: usize, length: usize, out: W) -> Result<()> {
    let mut r = csv::Reader::from_reader(trace);
    let headers = r.headers()?.clone();
    let cols: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| *h == "t" || h.starts_with("qg_"))
        .map(|(i, _)| i)
        .collect();
    let rows: Vec<csv::StringRecord> = r.records().collect::<std::result::Result<_, _>>()?;
    if start + length > rows.len() || (length > 0 && start >= rows.len()) {
        return Err(Error::InvalidArgument(format!(
            "window {start}..{} outside the {}-step trace",
            start + length,
            rows.len()
        )));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(cols.iter().map(|&i| &headers[i]))?;
    for row in &rows[start..start + length] {
        w.write_record(cols.iter().map(|&i| &row[i]))?;
    }
    w.flush().map_err(|e| Error::io("<trace>", e))?;
    Ok(())
}

/// Path of the stored trace for `seed` in a run directory.
pub fn trace_path(run_dir: &Path, seed: u64) -> PathBuf {
    run_dir.join(format!("trace_seed{seed}.csv"))
}
