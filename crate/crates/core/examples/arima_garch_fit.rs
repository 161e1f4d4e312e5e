//! Simulate an ARIMA(1,1,1)-GARCH(1,1) series in logistic space, select a
//! model by BIC and issue a day of density forecasts.

use windcast::arima::{self, ArimaGarchParams, ArimaGarchSpec};
use windcast::sim::{self, SimModel, SimSpace, SimSpec};
use windcast::transforms::logistic_fwd;

fn main() -> windcast::Result<()> {
    let truth = ArimaGarchParams {
        mu: 0.0,
        phi: vec![0.5],
        theta: vec![-0.7],
        omega: 0.0005,
        alpha_g: vec![0.1],
        beta_g: vec![0.85],
    };
    let path = sim::simulate_path(&SimSpec {
        model: SimModel::ArimaGarch {
            spec: ArimaGarchSpec::arima_garch(1, 1, 1, 1),
            params: truth,
        },
        n: 6000,
        space: SimSpace::Z { start: 0.0 },
        seed: 42,
        burn_in: 500,
        reversion: Some(windcast::sim::Reversion { rate: 0.002, target: 0.0 }),
    })?;
    let z: Vec<f64> = path.y.iter().map(|&y| logistic_fwd(y)).collect::<Result<_, _>>()?;
    let w: Vec<f64> = z.windows(2).map(|p| p[1] - p[0]).collect();

    let grid: Vec<ArimaGarchSpec> = [(0, 0), (1, 0), (0, 1), (1, 1)]
        .iter()
        .flat_map(|&(p, q)| [ArimaGarchSpec::arima(p, q), ArimaGarchSpec::arima_garch(p, q, 1, 1)])
        .collect();
    let (spec, params, report) = arima::select_bic(&grid, &w)?;
    println!("selected {spec}: BIC {:.1}, log-lik {:.1}", report.bic, report.loglik);
    println!(
        "phi {:?} theta {:?} omega {:.2e} alpha {:?} beta {:?}",
        params.phi, params.theta, params.omega, params.alpha_g, params.beta_g
    );

    let densities = arima::forecast_density(&spec, &params, &z, 96)?;
    for h in [1, 4, 24, 96] {
        let d = &densities[h - 1];
        println!(
            "h={h:>2}: mean {:.4}, 90% interval [{:.4}, {:.4}]",
            d.mean()?,
            d.quantile(0.05),
            d.quantile(0.95)
        );
    }
    Ok(())
}
