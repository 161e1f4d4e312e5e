//! Rolling-origin backtest of all forecasters on a simulated series, with
//! the report files written to a temporary directory.

use windcast::backtest::{self, BacktestConfig, ForecasterId};
use windcast::sim::{self, Reversion, SimModel, SimSpace, SimSpec};
use windcast::SplitSpec;

fn main() -> windcast::Result<()> {
    let series = sim::simulate(&SimSpec {
        model: SimModel::Arima111 { phi: 0.5, theta: -0.7, sigma2: 0.01, mu: 0.0 },
        n: 4000,
        space: SimSpace::Z { start: 0.0 },
        seed: 2,
        burn_in: 200,
        reversion: Some(Reversion { rate: 0.002, target: 0.0 }),
    })?;
    let mut config = BacktestConfig::new(
        ForecasterId::ALL.to_vec(),
        SplitSpec { train_len: 3500, test_len: 500 },
    );
    config.horizons = 24;
    config.options.arima_grid = Some(vec![
        windcast::arima::ArimaGarchSpec::arima(0, 0),
        windcast::arima::ArimaGarchSpec::arima(1, 1),
    ]);
    config.options.arima_garch_grid = Some(vec![windcast::arima::ArimaGarchSpec::arima_garch(1, 1, 1, 1)]);

    let result = backtest::run_backtest(&config, &series)?;
    println!("{:<14}{:>10}{:>10}{:>10}", "mean CRPS", "h=1", "h=6", "h=24");
    for f in &result.forecasters {
        let c = |h: usize| f.per_horizon[h - 1].mean_crps;
        println!("{:<14}{:>10.5}{:>10.5}{:>10.5}", f.id.as_str(), c(1), c(6), c(24));
    }
    for f in &result.failures {
        println!("{} failed: {}", f.id, f.error);
    }
    let dir = std::env::temp_dir().join(format!("windcast-example-{}", std::process::id()));
    let files = backtest::emit_report(&result, &dir)?;
    println!("wrote {} files to {}", files.len(), dir.display());
    Ok(())
}
