use proptest::prelude::*;

use windcast::benchmarks::ewma_weights;
use windcast::ets::{omega_weights, EtsLevelState};
use windcast::scoring::{self, CellScore, ScoreReport};
use windcast::stats::gl_composite;
use windcast::transforms::{logistic_fwd, logistic_inv};
use windcast::{DensityForecast, GriddedDensity, LogisticNormal, TruncNorm};

fn truncnorm() -> impl Strategy<Value = TruncNorm> {
    (-0.5f64..1.5, 0.03f64..2.0).prop_map(|(loc, s)| TruncNorm::new(loc, s * s).unwrap())
}

fn logistic_normal() -> impl Strategy<Value = LogisticNormal> {
    (-3.0f64..3.0, 0.01f64..3.0).prop_map(|(m, v)| LogisticNormal::new(m, v).unwrap())
}

fn gridded() -> impl Strategy<Value = GriddedDensity> {
    prop::collection::vec(0.0f64..5.0, 16..64)
        .prop_filter("some mass", |v| v.iter().sum::<f64>() > 0.1)
        .prop_map(|v| GriddedDensity::from_pdf_values(v).unwrap())
}

fn density() -> impl Strategy<Value = DensityForecast> {
    prop_oneof![
        truncnorm().prop_map(DensityForecast::from),
        logistic_normal().prop_map(DensityForecast::from),
        gridded().prop_map(DensityForecast::from),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn truncnorm_mass_is_one(d in truncnorm()) {
        let mass = gl_composite(&|y| d.pdf(y), 0.0, 1.0, 400);
        prop_assert!((mass - 1.0).abs() < 1e-6, "{mass}");
    }

    #[test]
    fn cdf_is_monotone_from_zero_to_one(d in density()) {
        let mut prev = 0.0;
        for i in 1..200 {
            let c = d.cdf(i as f64 / 200.0);
            prop_assert!(c >= prev - 1e-12 && (0.0..=1.0).contains(&c));
            prev = c;
        }
        prop_assert!(d.cdf(1e-12) < 1e-3 || matches!(d, DensityForecast::Gridded(_)));
    }

    #[test]
    fn pit_and_crps_are_in_range(d in density(), y in 0.001f64..0.999) {
        let p = scoring::pit(&d, y).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        let c = scoring::crps(&d, y).unwrap();
        prop_assert!((0.0..=1.0).contains(&c));
    }

    #[test]
    fn logistic_round_trip(y in 1e-6f64..(1.0 - 1e-6)) {
        let back = logistic_inv(logistic_fwd(y).unwrap()).unwrap();
        prop_assert!((back - y).abs() <= 1e-12 * y.max(1e-3));
    }

    #[test]
    fn score_report_ignores_cell_order(
        cells in prop::collection::vec((-1.0f64..1.0, 0.0f64..1.0, -5.0f64..5.0, 0.0f64..1.0), 1..60),
        seed in any::<u64>(),
    ) {
        let cells: Vec<CellScore> = cells
            .into_iter()
            .map(|(error, crps, nll, pit)| CellScore { error, crps, nll, pit, nll_floored: false })
            .collect();
        let mut shuffled = cells.clone();
        let mut s = seed;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(
            ScoreReport::from_cells(1, &cells).unwrap(),
            ScoreReport::from_cells(1, &shuffled).unwrap()
        );
    }

    #[test]
    fn ewma_weights_sum_to_one(lambda in 0.001f64..0.999, j in 1usize..40) {
        let w = ewma_weights(lambda, j);
        prop_assert_eq!(w.len(), j);
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(w.windows(2).all(|p| p[1] <= p[0]));
    }

    #[test]
    fn ets_forecasts_follow_the_arma_recursion(
        alpha in 0.01f64..1.0,
        phi in -0.95f64..0.95,
        ys in prop::collection::vec(0.01f64..0.99, 2..40),
    ) {
        let mut s = EtsLevelState::new(alpha, phi).unwrap();
        for &y in &ys {
            s.update(y);
        }
        let f = s.forecast(20);
        // Increments of the location path decay geometrically at rate φ.
        let last = *ys.last().unwrap();
        let steps: Vec<f64> = std::iter::once(f[0] - last).chain(f.windows(2).map(|w| w[1] - w[0])).collect();
        for k in 1..steps.len() {
            prop_assert!((steps[k] - phi * steps[k - 1]).abs() < 1e-12);
        }
        // ψ-weights of ARIMA(1,1,1) with θ = α - 1 start at one and tend to α/(1-φ).
        let w = omega_weights(alpha, phi, 400);
        prop_assert!((w[0] - 1.0).abs() < 1e-12);
        prop_assert!((w[399] - alpha / (1.0 - phi)).abs() < 1e-6);
    }
}
