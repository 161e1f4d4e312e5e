use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use windcast::backtest::{self, BacktestConfig, ForecasterId, ModelEnvelope};
use windcast::series::{self, DEFAULT_CLAMP_EPS};
use windcast::sim::{self, SimSpec};
use windcast::{Error, Result};

#[derive(Parser)]
#[command(name = "windcast", version, about = "Density forecasts for capacity-normalized wind power")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and normalize a `timestamp,power_mw` CSV.
    Ingest {
        csv: PathBuf,
        #[arg(long)]
        capacity: f64,
        #[arg(long, default_value_t = DEFAULT_CLAMP_EPS)]
        clamp_eps: f64,
        /// Write `timestamp,power_norm` rows here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit one forecaster on the first N points and print it as JSON.
    Fit {
        #[arg(long)]
        model: String,
        #[arg(long)]
        train_len: usize,
        /// Input CSV (`power_mw` needs --capacity).
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        capacity: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_CLAMP_EPS)]
        clamp_eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a rolling-origin backtest from a JSON config.
    Backtest {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
    /// Simulate a series from a JSON spec.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the scores of a backtest report directory.
    Report {
        #[arg(long = "in")]
        dir: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("windcast: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Ingest {
            csv,
            capacity,
            clamp_eps,
            out,
        } => ingest(&csv, capacity, clamp_eps, out.as_deref()),
        Command::Fit {
            model,
            train_len,
            data,
            capacity,
            clamp_eps,
            out,
        } => fit(&model, train_len, &data, capacity, clamp_eps, out.as_deref()),
        Command::Backtest { config, out } => run_backtest(&config, &out),
        Command::Simulate { spec, out } => simulate(&spec, &out),
        Command::Report { dir } => report(&dir),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

#[derive(Serialize)]
struct IngestSummary {
    n: usize,
    cadence_minutes: u32,
    capacity: f64,
    clamped: usize,
    min: f64,
    max: f64,
    mean: f64,
}

fn ingest(csv: &Path, capacity: f64, clamp_eps: f64, out: Option<&Path>) -> Result<()> {
    let raw = series::read_csv(open(csv)?)?;
    let timestamps = raw.timestamps.clone();
    let unclamped: Vec<f64> = match raw.column {
        series::ValueColumn::PowerMw => raw.values.iter().map(|v| v / capacity).collect(),
        series::ValueColumn::Normalized => raw.values.clone(),
    };
    let s = raw.into_series(Some(capacity), clamp_eps)?;
    let v = s.values();
    let summary = IngestSummary {
        n: v.len(),
        cadence_minutes: s.cadence_minutes,
        capacity,
        clamped: v.iter().zip(&unclamped).filter(|(a, b)| a != b).count(),
        min: v.iter().copied().fold(f64::INFINITY, f64::min),
        max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean: v.iter().sum::<f64>() / v.len() as f64,
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    if let Some(out) = out {
        let file = fs::File::create(out).map_err(|e| Error::Io {
            path: out.to_path_buf(),
            source: e,
        })?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["timestamp", "power_norm"])?;
        for (t, x) in timestamps.iter().zip(v) {
            w.write_record([t.as_str(), &x.to_string()])?;
        }
        w.flush().map_err(|e| Error::Io {
            path: out.to_path_buf(),
            source: e,
        })?;
    }
    Ok(())
}

fn fit(
    model: &str,
    train_len: usize,
    data: &Path,
    capacity: Option<f64>,
    clamp_eps: f64,
    out: Option<&Path>,
) -> Result<()> {
    let id: ForecasterId = model.parse()?;
    let s = series::read_csv(open(data)?)?.into_series(capacity, clamp_eps)?;
    if train_len == 0 || train_len > s.len() {
        return Err(Error::NotEnoughData {
            needed: train_len.max(1),
            got: s.len(),
        });
    }
    let fitted = backtest::with_worker_pool(|| {
        backtest::fit_forecaster(id, &s.values()[..train_len], &Default::default())
    })??;
    let envelope = ModelEnvelope {
        id,
        train_len,
        clamp_eps,
        model: fitted,
    };
    let text = serde_json::to_string_pretty(&envelope)?;
    match out {
        Some(path) => fs::write(path, text + "\n").map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run_backtest(config_path: &Path, out: &Path) -> Result<()> {
    let config = BacktestConfig::from_json(&read_text(config_path)?)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let s = config.load_series(base)?;
    let result = backtest::run_backtest(&config, &s)?;
    for f in &result.failures {
        eprintln!("windcast: {} failed: {}", f.id, f.error);
    }
    for path in backtest::emit_report(&result, out)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn simulate(spec_path: &Path, out: &Path) -> Result<()> {
    let spec: SimSpec = serde_json::from_str(&read_text(spec_path)?)?;
    let s = sim::simulate(&spec)?;
    let file = fs::File::create(out).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    sim::write_series_csv(&s, file)
}

const REPORT_HORIZONS: [usize; 6] = [1, 4, 12, 24, 48, 96];

fn report(dir: &Path) -> Result<()> {
    let summary = backtest::read_summary(dir)?;
    println!("config {}", summary.config_hash);
    print!("{:<14}", "mean CRPS");
    for h in REPORT_HORIZONS {
        print!("{:>11}", format!("h={h}"));
    }
    println!();
    for f in &summary.forecasters {
        print!("{:<14}", f.id.as_str());
        for h in REPORT_HORIZONS {
            match f.per_horizon.get(h - 1) {
                Some(r) => print!("{:>11.6}", r.mean_crps),
                None => print!("{:>11}", "-"),
            }
        }
        println!();
        let pit_path = dir.join(format!("pit_{}.json", f.id));
        if let Ok(text) = fs::read_to_string(&pit_path) {
            let pit: backtest::PitReport = serde_json::from_str(&text)?;
            if let Some(p) = pit.per_horizon.first() {
                print!(
                    "{:<14}PIT h=1: <5% {:.1}  <50% {:.1}  <95% {:.1}  KS p {:.3}",
                    "", p.p5, p.p50, p.p95, p.ks_pvalue
                );
                if let Some(t) = &pit.top_decile {
                    print!("  top-decile tail ratio {:.2}", t.tail_ratio());
                }
                println!();
            }
        }
    }
    for f in &summary.failures {
        println!("{:<14}failed: {}", f.id.as_str(), f.error);
    }
    Ok(())
}
