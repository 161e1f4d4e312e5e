//! Simulate from a JSON spec and write the series as CSV to stdout.

use windcast::sim::{self, SimSpec};

fn main() -> windcast::Result<()> {
    let spec: SimSpec = serde_json::from_str(
        r#"{
            "model": {"type": "arima111_egarch21", "phi": 0.4, "theta": -0.7,
                      "gamma": 0.05, "phi_v": 0.1, "theta_v": 2.0, "level": -9.2},
            "n": 20,
            "space": {"type": "bounded_direct", "start": 0.5},
            "seed": 7,
            "burn_in": 100,
            "reversion": {"rate": 0.002, "target": 0.5}
        }"#,
    )?;
    let path = sim::simulate_path(&spec)?;
    eprintln!(
        "innovation sd ranges over [{:.4}, {:.4}]",
        path.sigma2.iter().copied().fold(f64::INFINITY, f64::min).sqrt(),
        path.sigma2.iter().copied().fold(0.0, f64::max).sqrt()
    );
    sim::write_series_csv(&sim::simulate(&spec)?, std::io::stdout())
}
