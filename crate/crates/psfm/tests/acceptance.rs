//! End-to-end acceptance checks for the forecasting toolkit, one test per
//! guarantee: pattern algebra, weight algebra, oracle equivalence, ensemble
//! identities, recovery of structured series, benchmark quality against a
//! seasonal-naive baseline, reproducibility, and an optional smoke run on
//! external data.

use std::time::Instant;

use psfm::bench::{run_benchmark, write_report, BenchmarkOptions};
use psfm::ensemble::{homogeneous_forecast, DiversitySpec, DiversityStrategy};
use psfm::error::Result;
use psfm::eval::compute_metrics;
use psfm::models::{
    fnm_weights, forecast_single, grnn_weights, knnw_weights, nwe_weights, ModelKind, PsfmConfig,
    VariantSpec,
};
use psfm::patterns::{decode_y, encode_x, encode_y, Variant};
use psfm::series::{generate_synthetic, load_csv, MonthlySeries, SplitSpec, SyntheticSpec, YearMonth};
use psfm::tuning::{tune_series, GridSpec};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_positive_values(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(10.0..1000.0)).collect()
}

/// Input patterns must be zero-mean with unit norm, and encoding a thousand
/// windows must take well under a second.
#[test]
fn input_patterns_are_centered_unit_norm_and_fast() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let started = Instant::now();
    for _ in 0..1000 {
        let n = rng.gen_range(3..=24usize);
        let values = random_positive_values(&mut rng, n + 1);
        let pattern = encode_x(&values, n, n).unwrap();
        let sum: f64 = pattern.components().iter().sum();
        let norm: f64 = pattern.components().iter().map(|c| c * c).sum::<f64>().sqrt();
        assert!(sum.abs() <= 1e-9, "component sum {sum}");
        assert!((norm - 1.0).abs() <= 1e-9, "component norm {norm}");
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "1000 encodings took {elapsed:?}");
}

/// Encoding then decoding an output window must reproduce the original
/// values under both codings, and a thousand round trips must stay under a
/// second.
#[test]
fn output_pattern_round_trip_is_lossless_for_both_codings() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let started = Instant::now();
    for _ in 0..1000 {
        let n = rng.gen_range(3..=18usize);
        let m = rng.gen_range(2..=12usize);
        let values = random_positive_values(&mut rng, n + m);
        let origin = n - 1;
        for variant in [Variant::V1, Variant::V2] {
            let y = encode_y(&values, origin, n, m, variant, None).unwrap();
            let decoded = decode_y(y.components(), y.coding());
            for (d, v) in decoded.iter().zip(&values[n..]) {
                assert!(
                    (d - v).abs() <= 1e-9 * v.abs(),
                    "{variant:?}: decoded {d} vs {v}"
                );
            }
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "1000 round trips took {elapsed:?}");
}

/// Every weighting family must return non-negative weights that sum to one.
#[test]
fn all_weight_families_normalize_on_random_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..500 {
        let n = rng.gen_range(2..=16usize);
        let count = rng.gen_range(2..=40usize);
        let train: Vec<Vec<f64>> = (0..count)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let query: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let k = rng.gen_range(1..=count);
        let width = rng.gen_range(0.2..4.0);
        let all = [
            knnw_weights(&query, &train, k, 1.0, 0.0).unwrap(),
            fnm_weights(&query, &train, width, 2.0).unwrap(),
            nwe_weights(&query, &train, &vec![width; n]).unwrap(),
            grnn_weights(&query, &train, width).unwrap(),
        ];
        for w in all {
            assert!(w.weights().iter().all(|&x| x >= 0.0));
            let sum: f64 = w.weights().iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12, "weight sum {sum}");
        }
    }
}

/// The library weights must agree with plain brute-force implementations,
/// including the exact neighbour selection.
#[test]
fn weights_match_brute_force_oracles() {
    fn naive_dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }
    fn normalize(raw: Vec<f64>) -> Vec<f64> {
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / sum).collect()
    }
    fn assert_close(actual: &[f64], expected: &[f64], what: &str) {
        for (a, e) in actual.iter().zip(expected) {
            assert!((a - e).abs() <= 1e-12, "{what}: {a} vs {e}");
        }
    }

    let cases = [(5usize, 3usize, 2usize, 10u64), (50, 12, 7, 11), (500, 24, 12, 12)];
    for (count, n, k, seed) in cases {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let train: Vec<Vec<f64>> = (0..count)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let query: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dists: Vec<f64> = train.iter().map(|x| naive_dist(&query, x)).collect();

        let mut order: Vec<usize> = (0..count).collect();
        order.sort_by(|&a, &b| dists[a].partial_cmp(&dists[b]).unwrap().then(a.cmp(&b)));
        let selected = &order[..k];
        let d_k = dists[selected[k - 1]];

        for (rho, gamma) in [(1.0, 0.0), (0.5, 0.5)] {
            let mut raw = vec![0.0; count];
            for &i in selected {
                let r = dists[i] / d_k;
                raw[i] = rho * ((1.0 - r) / (1.0 + gamma * r) - 1.0) + 1.0;
            }
            let expected = normalize(raw);
            let got = knnw_weights(&query, &train, k, rho, gamma).unwrap();
            assert_close(got.weights(), &expected, "neighbour taper");
            if rho < 1.0 {
                let mut support = got.support();
                support.sort_unstable();
                let mut sel = selected.to_vec();
                sel.sort_unstable();
                assert_eq!(support, sel, "selected neighbour indices");
            }
        }

        let sigma = 0.8;
        let expected = normalize(dists.iter().map(|&d| (-(d / sigma).powf(2.0)).exp()).collect());
        assert_close(
            fnm_weights(&query, &train, sigma, 2.0).unwrap().weights(),
            &expected,
            "membership",
        );

        let h = 0.6;
        let expected = normalize(
            train
                .iter()
                .map(|x| {
                    query
                        .iter()
                        .zip(x)
                        .map(|(q, v)| (-((q - v) * (q - v)) / (2.0 * h * h)).exp())
                        .product()
                })
                .collect(),
        );
        assert_close(
            nwe_weights(&query, &train, &vec![h; n]).unwrap().weights(),
            &expected,
            "product kernel",
        );

        let expected = normalize(
            train
                .iter()
                .map(|x| {
                    let ss: f64 = query.iter().zip(x).map(|(q, v)| (q - v) * (q - v)).sum();
                    (-ss / (sigma * sigma)).exp()
                })
                .collect(),
        );
        assert_close(
            grnn_weights(&query, &train, sigma).unwrap().weights(),
            &expected,
            "radial basis",
        );
    }
}

/// Frozen analytical weight values, six decimal places.
#[test]
fn weights_reproduce_hand_computed_values() {
    fn assert_6dp(actual: &[f64], expected: &[f64]) {
        for (a, e) in actual.iter().zip(expected) {
            assert!((a - e).abs() < 1e-6, "{actual:?} vs {expected:?}");
        }
    }
    let spaced = vec![vec![0.0], vec![1.0], vec![2.0]];
    let w = knnw_weights(&[0.0], &spaced, 3, 1.0, 0.0).unwrap();
    assert_6dp(w.weights(), &[0.666667, 0.333333, 0.000000]);

    let near = vec![vec![0.0], vec![1.0]];
    let w = fnm_weights(&[0.0], &near, 1.0, 2.0).unwrap();
    assert_6dp(w.weights(), &[0.731059, 0.268941]);

    let w = nwe_weights(&[0.0], &near, &[1.0]).unwrap();
    assert_6dp(w.weights(), &[0.622459, 0.377541]);

    let w = grnn_weights(&[0.0], &near, 1.0).unwrap();
    assert_6dp(w.weights(), &[0.731059, 0.268941]);
}

/// Very wide kernels flatten towards uniform weights, and a zero taper
/// strength is exactly uniform over the selected neighbours.
#[test]
fn flat_limits_recover_uniform_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let count = 60;
    let n = 12;
    let train: Vec<Vec<f64>> = (0..count)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let query: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let uniform = 1.0 / count as f64;

    let wide = 1e6;
    for w in [
        fnm_weights(&query, &train, wide, 2.0).unwrap(),
        nwe_weights(&query, &train, &vec![wide; n]).unwrap(),
        grnn_weights(&query, &train, wide).unwrap(),
    ] {
        for &x in w.weights() {
            assert!((x - uniform).abs() < 1e-6 * uniform, "{x} vs {uniform}");
        }
    }

    let k = 17;
    let w = knnw_weights(&query, &train, k, 0.0, 0.0).unwrap();
    let selected = w.support();
    assert_eq!(selected.len(), k);
    for &i in &selected {
        assert_eq!(w.weights()[i], 1.0 / k as f64);
    }
}

/// With every perturbation magnitude at its degenerate value, each committee
/// member must reproduce the base model bit for bit, and a power-of-two
/// committee must aggregate back to it bit for bit.
#[test]
fn degenerate_committees_collapse_to_the_base_model_bitwise() {
    let mut spec = SyntheticSpec::new(11, 12, 150.0, 0.4, 0.2, 0.02);
    spec.id = "collapse".into();
    let series = generate_synthetic(&spec).unwrap();
    let split = SplitSpec::holdout(&series, 12).unwrap();
    let base = PsfmConfig::fnm(12, 12, VariantSpec::V2, 0.4, 2.0);
    let single = forecast_single(&series, &base, &split).unwrap();

    for strategy in DiversityStrategy::ALL {
        let mut committee = DiversitySpec::new(strategy, base.clone(), 64, 9);
        committee.train_frac = 1.0;
        committee.feature_frac = 1.0;
        committee.width_jitter_sd = 0.0;
        committee.input_noise_sd = 0.0;
        committee.output_noise_sd = 0.0;
        let out = homogeneous_forecast(&series, &committee, &split).unwrap();
        assert!(out.failures.is_empty(), "{strategy}");
        assert_eq!(out.member_patterns.len(), 64, "{strategy}");
        for pattern in &out.member_patterns {
            assert_eq!(pattern, &single.y_pattern, "{strategy} member pattern");
        }
        assert_eq!(out.y_pattern, single.y_pattern, "{strategy} committee pattern");
        assert_eq!(out.forecast, single.forecast, "{strategy} committee forecast");
    }
}

/// A committee can never score worse than the average of its members:
/// averaging forecasts and then taking percentage errors is bounded by the
/// average of the members' percentage errors.
#[test]
fn committee_error_is_bounded_by_mean_member_error() {
    let base = PsfmConfig::fnm(12, 12, VariantSpec::V2, 0.8, 2.0);
    let mut checked = 0;
    for i in 0..20u64 {
        let mut spec = SyntheticSpec::new(
            300 + i,
            9,
            80.0 + 7.0 * i as f64,
            0.3 * (i % 4) as f64,
            0.15 + 0.01 * i as f64,
            0.02,
        );
        spec.id = format!("bound{i:02}");
        let series = generate_synthetic(&spec).unwrap();
        let split = SplitSpec::holdout(&series, 12).unwrap();
        let actuals = split.actuals(&series).unwrap();
        for strategy in DiversityStrategy::ALL {
            let committee = DiversitySpec::new(strategy, base.clone(), 40, 99 + i);
            let out = homogeneous_forecast(&series, &committee, &split).unwrap();
            let ensemble_mape = compute_metrics(&out.forecast, actuals).unwrap().mape;
            let member_mean: f64 = out
                .member_forecasts
                .iter()
                .map(|f| compute_metrics(f, actuals).unwrap().mape)
                .sum::<f64>()
                / out.member_forecasts.len() as f64;
            assert!(
                ensemble_mape <= member_mean + 1e-9,
                "{} {strategy}: committee {ensemble_mape} vs members {member_mean}",
                series.id()
            );
            checked += 1;
        }
    }
    assert_eq!(checked, 100);
}

fn noisy_benchmark_corpus() -> Vec<MonthlySeries> {
    (0..12)
        .map(|i| {
            let mut spec = SyntheticSpec::new(
                100 + i as u64,
                12,
                100.0 + 10.0 * i as f64,
                0.5,
                0.2,
                0.03,
            );
            spec.id = format!("demand{i:02}");
            generate_synthetic(&spec).unwrap()
        })
        .collect()
}

/// Tuned models must recover noiseless structured series almost exactly, and
/// on a noisy corpus the full benchmark must beat the seasonal-naive
/// baseline on every row, keep the pool at or under its worst member, and
/// finish within its time budget.
#[test]
fn tuned_models_recover_structure_and_beat_the_baseline() {
    let trend = generate_synthetic(&SyntheticSpec::new(0, 10, 100.0, 1.0, 0.0, 0.0)).unwrap();
    let seasonal = generate_synthetic(&SyntheticSpec::new(0, 10, 100.0, 0.0, 0.3, 0.0)).unwrap();
    let growth_values: Vec<f64> = (0..120)
        .map(|t| {
            let phase = std::f64::consts::TAU * (t % 12) as f64 / 12.0;
            100.0 * 1.004f64.powi(t) * (1.0 + 0.25 * phase.sin())
        })
        .collect();
    let growth = MonthlySeries::new(
        "growth",
        YearMonth::new(2000, 1).unwrap(),
        growth_values,
    )
    .unwrap();

    for series in [&trend, &seasonal, &growth] {
        let split = SplitSpec::holdout(series, 12).unwrap();
        let actuals = split.actuals(series).unwrap();
        for kind in ModelKind::ALL {
            let tuned = tune_series(series, &split, kind, &VariantSpec::V2, &GridSpec::default())
                .unwrap();
            let out = forecast_single(series, &tuned.best, &split).unwrap();
            for (f, a) in out.forecast.iter().zip(actuals) {
                assert!(
                    (f - a).abs() <= 1e-6 * a.abs(),
                    "{} {kind}: {f} vs {a}",
                    series.id()
                );
            }
        }
    }

    let started = Instant::now();
    let mut options = BenchmarkOptions::new(7);
    options.data_label = "noisy-synthetic".into();
    let report = run_benchmark(&noisy_benchmark_corpus(), &options).unwrap();
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 120.0,
        "benchmark took {elapsed:?}, budget is two minutes"
    );
    assert_eq!(report.series.len(), 12, "excluded: {:?}", report.excluded);

    let baseline = report.baseline.1.mape;
    for row in report.table1.iter().chain(&report.table2) {
        assert!(
            row.mape < baseline,
            "{} mape {} is not under the baseline {baseline}",
            row.model,
            row.mape
        );
    }
    let worst_member = report.table1[..4].iter().map(|r| r.mape).fold(f64::MIN, f64::max);
    let pool = &report.table1[4];
    assert_eq!(pool.model, "E1");
    assert!(
        pool.mape <= worst_member + 1e-12,
        "pool {} vs worst member {worst_member}",
        pool.mape
    );
}

/// The same seed must produce byte-identical report files; a different seed
/// must change the forecasts.
#[test]
fn reports_rerun_byte_identically_under_a_fixed_seed() {
    let data: Vec<MonthlySeries> = (0..4)
        .map(|i| {
            let mut spec = SyntheticSpec::new(200 + i as u64, 9, 90.0 + 5.0 * i as f64, 0.4, 0.2, 0.02);
            spec.id = format!("rerun{i}");
            generate_synthetic(&spec).unwrap()
        })
        .collect();
    let mut options = BenchmarkOptions::new(5);
    options.members = 32;
    options.grid = GridSpec {
        n_values: vec![6, 12],
        k_values: vec![1, 3, 6],
        width_values: vec![0.1, 0.4, 1.6],
    };
    options.data_label = "determinism-check".into();

    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    write_report(dir_a.path(), &run_benchmark(&data, &options).unwrap()).unwrap();
    write_report(dir_b.path(), &run_benchmark(&data, &options).unwrap()).unwrap();
    let names = [
        "table1.csv",
        "table1.txt",
        "table2.csv",
        "table2.txt",
        "ranks.csv",
        "per_series_metrics.csv",
        "forecasts.csv",
        "manifest.txt",
    ];
    for name in names {
        let a = std::fs::read(dir_a.path().join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(name)).unwrap();
        assert!(!a.is_empty(), "{name} is empty");
        assert_eq!(a, b, "{name} differs between identical runs");
    }

    let mut other = options.clone();
    other.seed = 6;
    let dir_c = tempfile::tempdir().unwrap();
    write_report(dir_c.path(), &run_benchmark(&data, &other).unwrap()).unwrap();
    let forecasts_a = std::fs::read(dir_a.path().join("forecasts.csv")).unwrap();
    let forecasts_c = std::fs::read(dir_c.path().join("forecasts.csv")).unwrap();
    assert_ne!(forecasts_a, forecasts_c, "a new seed must move the committees");
    let manifest_a = std::fs::read(dir_a.path().join("manifest.txt")).unwrap();
    let manifest_c = std::fs::read(dir_c.path().join("manifest.txt")).unwrap();
    assert_ne!(manifest_a, manifest_c);
}

/// Optional smoke test against real monthly data: point `PSFM_REAL_DATA` at
/// a `id,year,month,value` CSV to run the full benchmark on it.
#[test]
fn external_data_benchmark_smoke() -> Result<()> {
    let Ok(path) = std::env::var("PSFM_REAL_DATA") else {
        eprintln!("skipped: set PSFM_REAL_DATA to a monthly-series CSV to run this check");
        return Ok(());
    };
    let data = load_csv(&path)?;
    let mut options = BenchmarkOptions::new(1);
    options.data_label = path;
    let report = run_benchmark(&data, &options)?;
    assert!(!report.series.is_empty());
    assert_eq!(report.table1.len(), 16);
    assert_eq!(report.table2.len(), 5);
    for row in report.table1.iter().chain(&report.table2) {
        assert!(row.mape.is_finite());
        assert!(row.rmse.is_finite());
    }
    Ok(())
}
