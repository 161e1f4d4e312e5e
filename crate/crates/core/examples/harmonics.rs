//! Diurnal harmonics fitted to a series with a daily cycle, plus
//! the autocorrelation of its first differences.

use std::f64::consts::PI;

use windcast::series::{difference, fit_harmonics, sample_acf};

fn main() -> windcast::Result<()> {
    let day = 96.0;
    let y: Vec<f64> = (0..96 * 60)
        .map(|t| {
            let t = t as f64;
            0.35 + 0.08 * (2.0 * PI * t / day).sin() + 0.03 * (4.0 * PI * t / day).cos() + 0.02 * (t * 0.37).sin()
        })
        .collect();

    let fit = fit_harmonics(&y, 3, day)?;
    println!("R^2 {:.4}", fit.r_squared);
    println!("intercept {:.4}", fit.coefficients[0]);
    for j in 1..=fit.n_harmonics {
        println!(
            "harmonic {j}: sin {:+.4}, cos {:+.4}",
            fit.coefficients[2 * j - 1],
            fit.coefficients[2 * j]
        );
    }

    let acf = sample_acf(&difference(&y, 1)?, 5)?;
    println!("ACF of differences, lags 0-5: {:?}", acf.iter().map(|r| (r * 1000.0).round() / 1000.0).collect::<Vec<_>>());
    Ok(())
}
