use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use qbid_core::agent::{SeedPlan, Variant};
use qbid_core::forecast::write_series_csv;
use qbid_core::harness::{
    emit_trace, run_experiment, run_matrix, sweep, trace_path, train_forecaster, ExperimentConfig,
    SweepParameter,
};
use qbid_core::market::RivalStrategy;

#[derive(Parser)]
#[command(name = "qbid", version, about = "Seeded bidding experiments in a reactive power market")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Configuration layering: defaults, then `--config`, then flags.
#[derive(Args, Clone)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Comma-separated root seeds.
    #[arg(long)]
    seeds: Option<String>,
    /// Output directory.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    learner: Option<u32>,
    /// B1 or B2.
    #[arg(long)]
    strategy: Option<String>,
    /// NFQ-1 or NFQ-2.
    #[arg(long)]
    variant: Option<String>,
    /// Any config key, e.g. `--set gamma=0.05`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        for a in &self.overrides {
            cfg.apply_assignment(a)?;
        }
        if let Some(s) = &self.seeds {
            cfg.set("seeds", s)?;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if let Some(l) = self.learner {
            cfg.env.learner_id = l;
        }
        if let Some(s) = &self.strategy {
            cfg.set("strategy", s)?;
        }
        if let Some(v) = &self.variant {
            cfg.set("variant", v)?;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train the requirement forecaster for each seed and report its error.
    ForecastTrain(Common),
    /// Run one experiment over all seeds.
    Run(Common),
    /// Run learners × strategies × variants and write one table per pair.
    Matrix {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "1,2,3,4,5,6")]
        learners: String,
        #[arg(long, default_value = "B1,B2")]
        strategies: String,
        #[arg(long, default_value = "NFQ-1,NFQ-2")]
        variants: String,
    },
    /// Vary one hyperparameter: gamma, batch_size or epsilon_decay.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        parameter: String,
        /// Comma-separated values.
        #[arg(long)]
        values: String,
    },
    /// Per-producer quantities over a window of a stored trace.
    Trace {
        /// Directory written by `run`.
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        start: usize,
        #[arg(long, default_value_t = 120)]
        length: usize,
        /// Defaults to stdout.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn split<T: std::str::FromStr>(list: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|e| anyhow::anyhow!("`{s}`: {e}")))
        .collect()
}

fn forecast_train(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir).with_context(|| cfg.output_dir.display().to_string())?;
    println!("seed,holdout_mse,baseline_mse,train_mse");
    for &seed in &cfg.seeds {
        let (fc, report, series) = train_forecaster(cfg, SeedPlan::from_root(seed).forecaster)?;
        write_series_csv(&series, File::create(cfg.output_dir.join(format!("series_seed{seed}.csv")))?)?;
        fc.checkpoint().save(&cfg.output_dir.join(format!("forecaster_seed{seed}.json")))?;
        println!(
            "{seed},{},{},{}",
            report.holdout_mse, report.baseline_holdout_mse, report.train_mse
        );
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::ForecastTrain(common) => forecast_train(&common.resolve()?)?,
        Command::Run(common) => {
            let result = run_experiment(&common.resolve()?)?;
            let s = &result.summary;
            println!(
                "learner {} {} {}: mu {:.4} sigma {:.4} over {} runs ({} diverged), baseline payment {:.4}",
                s.learner, s.strategy, s.variant, s.mu, s.sigma, s.runs, s.diverged_runs, s.mean_baseline_payment
            );
        }
        Command::Matrix {
            common,
            learners,
            strategies,
            variants,
        } => {
            let cfg = common.resolve()?;
            let tables = run_matrix(
                &cfg,
                &split::<u32>(&learners)?,
                &split::<RivalStrategy>(&strategies)?,
                &split::<Variant>(&variants)?,
            )?;
            for t in &tables {
                println!("{} {}", t.strategy.name(), t.variant.name());
                t.write_csv(io::stdout())?;
                for c in &t.cells {
                    if let Err(e) = &c.outcome {
                        eprintln!("learner {} failed: {e}", c.learner);
                    }
                }
            }
        }
        Command::Sweep {
            common,
            parameter,
            values,
        } => {
            let cfg = common.resolve()?;
            let parameter: SweepParameter = parameter.parse()?;
            let values: Vec<String> = split(&values)?;
            for p in sweep(&cfg, parameter, &values)? {
                println!(
                    "{}={}: mu {:.4} sigma {:.4}{}",
                    parameter.key(),
                    p.value,
                    p.summary.mu,
                    p.summary.sigma,
                    if p.diverged() { " DIVERGED" } else { "" }
                );
            }
        }
        Command::Trace {
            run,
            seed,
            start,
            length,
            out,
        } => {
            let path = trace_path(&run, seed);
            let input = File::open(&path).with_context(|| format!("no trace at {}", path.display()))?;
            let writer: Box<dyn Write> = match out {
                Some(p) => Box::new(BufWriter::new(File::create(p)?)),
                None => Box::new(io::stdout().lock()),
            };
            emit_trace(input, start, length, writer)?;
        }
    }
    Ok(())
}

