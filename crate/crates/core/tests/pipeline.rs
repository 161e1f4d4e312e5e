use std::fs;

use windcast::backtest::{self, BacktestConfig, ForecasterId};
use windcast::sim::{self, Reversion, SimModel, SimSpace, SimSpec};
use windcast::{Error, PowerSeries, SplitSpec};

fn random_walk(n: usize, seed: u64) -> PowerSeries {
    sim::simulate(&SimSpec {
        model: SimModel::Arima111 {
            phi: 0.0,
            theta: 0.0,
            sigma2: 0.01,
            mu: 0.0,
        },
        n,
        space: SimSpace::Z { start: 0.0 },
        seed,
        burn_in: 0,
        reversion: Some(Reversion { rate: 0.001, target: 0.0 }),
    })
    .unwrap()
}

fn arma_series(n: usize, seed: u64) -> PowerSeries {
    sim::simulate(&SimSpec {
        model: SimModel::Arima111 {
            phi: 0.5,
            theta: -0.7,
            sigma2: 0.01,
            mu: 0.0,
        },
        n,
        space: SimSpace::Z { start: 0.0 },
        seed,
        burn_in: 200,
        reversion: Some(Reversion { rate: 0.002, target: 0.0 }),
    })
    .unwrap()
}

fn small_config(ids: Vec<ForecasterId>, train: usize, test: usize, horizons: usize) -> BacktestConfig {
    let mut cfg = BacktestConfig::new(ids, SplitSpec { train_len: train, test_len: test });
    cfg.horizons = horizons;
    cfg
}

#[test]
fn dump_rescoring_reproduces_reports() {
    let mut cfg = small_config(
        vec![ForecasterId::Persistence, ForecasterId::Climatology, ForecasterId::EtsAnnEc],
        600,
        120,
        6,
    );
    cfg.dump_origins = true;
    let r = backtest::run_backtest(&cfg, &arma_series(720, 3)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    backtest::emit_report(&r, dir.path()).unwrap();
    for f in &r.forecasters {
        let dump = backtest::read_dump(&dir.path().join(format!("origins_{}.jsonl", f.id))).unwrap();
        let again = backtest::rescore_dump(&dump, cfg.horizons).unwrap();
        assert_eq!(again.len(), f.per_horizon.len());
        for (a, b) in again.iter().zip(&f.per_horizon) {
            assert_eq!(a.n, b.n);
            assert!((a.mean_crps - b.mean_crps).abs() <= 1e-12, "{} h{}", f.id, a.horizon);
            assert!((a.mean_nll - b.mean_nll).abs() <= 1e-12);
            assert!((a.mae - b.mae).abs() <= 1e-12);
        }
    }
}

#[test]
fn every_horizon_is_scored_on_the_whole_test_set() {
    let cfg = small_config(vec![ForecasterId::Persistence, ForecasterId::Constant], 400, 50, 8);
    let r = backtest::run_backtest(&cfg, &random_walk(450, 4)).unwrap();
    for f in &r.forecasters {
        assert_eq!(f.per_horizon.len(), 8);
        assert!(f.per_horizon.iter().all(|p| p.n == 50));
    }
    // Horizon-invariant forecasters score identically at every horizon.
    let c = &r.forecasters[1].per_horizon;
    assert!(c.iter().all(|p| p.mean_crps == c[0].mean_crps));
}

#[test]
fn report_directory_layout() {
    let cfg = small_config(vec![ForecasterId::Persistence, ForecasterId::Constant], 300, 40, 4);
    let r = backtest::run_backtest(&cfg, &random_walk(340, 5)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = backtest::emit_report(&r, dir.path()).unwrap();
    let csvs: Vec<_> = written
        .iter()
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    assert_eq!(csvs.len(), 2);
    for p in csvs {
        let text = fs::read_to_string(p).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("horizon,mae,rmse,crps,nll,n"));
        assert_eq!(lines.count(), 4);
    }
    let summary = backtest::read_summary(dir.path()).unwrap();
    assert_eq!(summary.config_hash, cfg.hash());
    assert_eq!(summary.forecasters.len(), 2);

    let empty = backtest::BacktestResult {
        config_hash: cfg.hash(),
        forecasters: vec![],
        failures: vec![],
    };
    let dir2 = tempfile::tempdir().unwrap();
    let out = dir2.path().join("nothing");
    assert!(matches!(backtest::emit_report(&empty, &out), Err(Error::EmptyReport)));
    assert!(!out.exists());
}

#[test]
fn config_hash_tracks_content() {
    let a = small_config(vec![ForecasterId::Persistence], 300, 40, 4);
    let mut b = a.clone();
    assert_eq!(a.hash(), b.hash());
    b.horizons = 5;
    assert_ne!(a.hash(), b.hash());
    assert_eq!(a.hash().len(), 64);
}

#[test]
fn persistence_error_grows_with_horizon_on_a_random_walk() {
    let cfg = small_config(vec![ForecasterId::Persistence], 2000, 500, 24);
    let r = backtest::run_backtest(&cfg, &random_walk(2500, 6)).unwrap();
    let crps: Vec<f64> = r.forecasters[0].per_horizon.iter().map(|p| p.mean_crps).collect();
    let increasing = crps.windows(2).filter(|w| w[1] > w[0]).count();
    assert!(increasing as f64 >= 0.9 * 23.0, "{crps:?}");
    assert!(crps[23] > 2.0 * crps[0]);
}

#[test]
fn true_model_beats_climatology_one_step_ahead() {
    for seed in [11, 12, 13] {
        let mut cfg = small_config(vec![ForecasterId::Arima, ForecasterId::Climatology], 2000, 400, 2);
        cfg.options.arima_grid = Some(vec![windcast::arima::ArimaGarchSpec::arima(1, 1)]);
        let r = backtest::run_backtest(&cfg, &arma_series(2400, seed)).unwrap();
        let arima = r.forecasters[0].per_horizon[0].mean_crps;
        let clim = r.forecasters[1].per_horizon[0].mean_crps;
        assert!(arima < clim, "seed {seed}: {arima} vs {clim}");
    }
}

#[test]
fn unavailable_forecaster_is_reported_not_fatal() {
    // The EWMA mixture needs more history than this training set holds.
    let cfg = small_config(vec![ForecasterId::Ewma, ForecasterId::Constant], 200, 30, 2);
    let r = backtest::run_backtest(&cfg, &random_walk(230, 7)).unwrap();
    assert_eq!(r.forecasters.len(), 1);
    assert_eq!(r.failures.len(), 1);
    assert_eq!(r.failures[0].id, ForecasterId::Ewma);
}

#[test]
fn invalid_configs_are_rejected() {
    let s = random_walk(300, 8);
    let mut cfg = small_config(vec![ForecasterId::Persistence], 250, 100, 4);
    assert!(backtest::run_backtest(&cfg, &s).is_err());
    cfg.split = SplitSpec { train_len: 3, test_len: 10 };
    assert!(backtest::run_backtest(&cfg, &s).is_err());
    cfg.split = SplitSpec { train_len: 250, test_len: 50 };
    cfg.horizons = 0;
    assert!(backtest::run_backtest(&cfg, &s).is_err());
    assert!("holt_winters".parse::<ForecasterId>().is_err());
}

#[test]
fn config_json_round_trip() {
    let text = r#"{
        "data": {"type": "simulate", "spec": {
            "model": {"type": "arima111", "phi": 0.5, "theta": -0.7, "sigma2": 0.01},
            "n": 500, "space": {"type": "z"}, "seed": 1}},
        "forecasters": ["persistence", "climatology"],
        "split": {"train_len": 400, "test_len": 100},
        "horizons": 4,
        "seed": 21
    }"#;
    let cfg = BacktestConfig::from_json(text).unwrap();
    assert_eq!(cfg.horizons, 4);
    let s = cfg.load_series(std::path::Path::new(".")).unwrap();
    assert_eq!(s.len(), 500);
    let again = BacktestConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(again.hash(), cfg.hash());
}
