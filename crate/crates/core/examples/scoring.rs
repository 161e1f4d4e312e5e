//! Proper scores and PIT calibration for well- and badly-specified forecasts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use windcast::scoring::{self, CellScore, ScoreReport};
use windcast::{DensityForecast, TruncNorm};

fn main() -> windcast::Result<()> {
    let truth = TruncNorm::new(0.4, 0.01)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let normal = Normal::new(0.4, 0.1).expect("valid normal");
    let draws: Vec<f64> = normal
        .sample_iter(&mut rng)
        .filter(|v| *v > 0.0 && *v < 1.0)
        .take(2000)
        .collect();

    let candidates: [(&str, DensityForecast); 3] = [
        ("calibrated", truth.into()),
        ("too narrow", TruncNorm::new(0.4, 0.0025)?.into()),
        ("biased", TruncNorm::new(0.5, 0.01)?.into()),
    ];
    for (name, d) in &candidates {
        let cells: Vec<CellScore> = draws.iter().map(|&y| scoring::score_cell(d, y)).collect::<Result<_, _>>()?;
        let r = ScoreReport::from_cells(1, &cells)?;
        let pits: Vec<f64> = cells.iter().map(|c| c.pit).collect();
        let diag = scoring::pit_deviations(&pits)?;
        println!(
            "{name:<11} CRPS {:.5}  NLL {:.4}  MAE {:.4}  PIT<5% {:.1}%  KS p {:.3}  chi2 p {:.3}",
            r.mean_crps, r.mean_nll, r.mae, diag.p5, diag.ks_pvalue, diag.chi2_pvalue
        );
    }
    Ok(())
}
