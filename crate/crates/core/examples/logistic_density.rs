//! Gaussian forecasts in logistic space mapped back to the unit interval.

use windcast::transforms::{logistic_fwd, logistic_inv};
use windcast::LogisticNormal;

fn main() -> windcast::Result<()> {
    let y = 0.82;
    let z = logistic_fwd(y)?;
    println!("y = {y} -> z = {z:.6} -> y = {:.6}", logistic_inv(z)?);

    for (m, v) in [(0.0, 0.1), (0.0, 2.0), (1.5, 0.5), (-2.0, 0.25)] {
        let d = LogisticNormal::new(m, v)?;
        println!(
            "z ~ N({m}, {v}): mean {:.4}, median {:.4}, 90% interval [{:.4}, {:.4}], pdf(0.5) {:.4}",
            d.mean()?,
            d.quantile(0.5),
            d.quantile(0.05),
            d.quantile(0.95),
            d.pdf(0.5)
        );
    }
    Ok(())
}
