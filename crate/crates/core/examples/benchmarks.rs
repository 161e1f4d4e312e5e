//! The four reference forecasters on one simulated history.

use windcast::benchmarks::{self, EwmaOptions};
use windcast::sim::{self, Reversion, SimModel, SimSpace, SimSpec};
use windcast::DensityForecast;

fn main() -> windcast::Result<()> {
    let series = sim::simulate(&SimSpec {
        model: SimModel::Arima111 { phi: 0.5, theta: -0.7, sigma2: 0.01, mu: 0.0 },
        n: 6000,
        space: SimSpace::Z { start: 0.0 },
        seed: 8,
        burn_in: 200,
        reversion: Some(Reversion { rate: 0.002, target: 0.0 }),
    })?;
    let y = series.values();
    let (train, last) = (&y[..5000], y[4999]);

    let forecasts: Vec<(&str, DensityForecast)> = vec![
        ("persistence", benchmarks::persistence_forecast(train, 48)?.into()),
        ("constant", benchmarks::constant_forecast(train)?.into()),
        ("climatology", benchmarks::fit_empirical(train, 512)?.into()),
        ("ewma", {
            let opts = EwmaOptions::default();
            let lambda = benchmarks::fit_lambda_with(train, &opts)?;
            println!("ewma: lambda {:.3}{}", lambda.lambda, if lambda.flat { " (flat likelihood)" } else { "" });
            benchmarks::ewma_density_forecast_with(train, lambda.lambda, &opts)?.density()?.into()
        }),
    ];
    println!("last observed value {last:.4}");
    for (name, d) in &forecasts {
        println!(
            "{name:<12} mean {:.4}, 10%-90% [{:.4}, {:.4}]",
            d.mean()?,
            d.quantile(0.1),
            d.quantile(0.9)
        );
    }
    Ok(())
}
