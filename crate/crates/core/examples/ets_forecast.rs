//! Fit both exponential-smoothing forecasters to a bounded series with
//! volatility clustering and compare their forecast spreads.

use windcast::ets::{self, forecast_density_ets};
use windcast::sim::{self, Reversion, SimModel, SimSpace, SimSpec};

fn main() -> windcast::Result<()> {
    let path = sim::simulate_path(&SimSpec {
        model: SimModel::Arima111Egarch21 {
            phi: 0.4,
            theta: -0.7,
            gamma: 0.05,
            phi_v: 0.1,
            theta_v: 2.0,
            level: (1e-4f64).ln(),
            mu: 0.0,
        },
        n: 4000,
        space: SimSpace::BoundedDirect { start: 0.5, lower: 0.0, upper: 1.0 },
        seed: 5,
        burn_in: 500,
        reversion: Some(Reversion { rate: 0.002, target: 0.5 }),
    })?;

    for with_variance in [false, true] {
        let fit = ets::fit_ets(&path.y, with_variance)?;
        let p = fit.params;
        println!(
            "{}: alpha {:.3}, phi_s {:.3}, log-lik {:.1}",
            if with_variance { "smoothed variance" } else { "constant variance" },
            p.alpha,
            p.phi_s,
            fit.report.loglik
        );
        if let Some(v) = p.variance {
            println!("  gamma {:.3}, phi_v {:.3}, theta_v {:.3}", v.gamma, v.phi_v, v.theta_v);
        }
        let d = forecast_density_ets(&fit.filter, 48)?;
        for h in [1, 12, 48] {
            let f = &d[h - 1];
            println!(
                "  h={h:>2}: location {:.4}, scale {:.4}, mean {:.4}",
                f.loc(),
                f.scale2().sqrt(),
                f.mean()
            );
        }
    }
    Ok(())
}
