//! End-to-end tests of the command-line binary: subcommand round trips,
//! config-file merging, determinism, and the exit-code contract.

use std::path::Path;
use std::process::{Command, Output};

fn psfm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psfm"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process should exit normally")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn synth_corpus(dir: &Path, count: usize) -> String {
    let data = dir.join("data.csv");
    let out = psfm(&[
        "synth",
        "--output",
        data.to_str().unwrap(),
        "--seed",
        "30",
        "--count",
        &count.to_string(),
        "--years",
        "9",
        "--id-prefix",
        "city",
    ]);
    assert_ok(&out);
    data.to_str().unwrap().to_string()
}

#[test]
fn synth_forecast_round_trip_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_corpus(dir.path(), 2);

    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let out = psfm(&[
            "forecast",
            "--data",
            &data,
            "--model",
            "FNM",
            "--holdout",
            "--out-dir",
            out_dir.to_str().unwrap(),
            "--grid-n",
            "6,12",
            "--grid-width",
            "0.1,0.4,1.6",
        ]);
        assert_ok(&out);
    }

    let forecasts = read(&dir.path().join("a/forecasts.csv"));
    let mut lines = forecasts.lines();
    assert_eq!(lines.next(), Some("id,year,month,forecast,actual"));
    assert_eq!(forecasts.lines().count(), 1 + 2 * 12);
    let manifest = read(&dir.path().join("a/manifest.txt"));
    assert!(manifest.contains("model=FNM"));
    assert!(manifest.contains("mode=holdout"));
    assert!(manifest.contains("tuned.city00.FNM=n="));

    assert_eq!(forecasts, read(&dir.path().join("b/forecasts.csv")));
    assert_eq!(manifest, read(&dir.path().join("b/manifest.txt")));
}

#[test]
fn forecasting_past_the_end_omits_the_actual_column() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_corpus(dir.path(), 1);
    let out_dir = dir.path().join("ahead");
    let out = psfm(&[
        "forecast",
        "--data",
        &data,
        "--model",
        "SNaive",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let forecasts = read(&out_dir.join("forecasts.csv"));
    assert_eq!(forecasts.lines().next(), Some("id,year,month,forecast"));
    assert_eq!(forecasts.lines().count(), 1 + 12);
    assert!(forecasts.lines().nth(1).unwrap().starts_with("city00,2009,1,"));

    let scored = dir.path().join("metrics.csv");
    let out = psfm(&[
        "evaluate",
        "--forecasts",
        out_dir.join("forecasts.csv").to_str().unwrap(),
        "--output",
        scored.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1, "scoring a file without actuals is a data error");
    assert!(String::from_utf8_lossy(&out.stderr).contains("no actual column"));
}

#[test]
fn config_file_fills_gaps_and_command_line_wins() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_corpus(dir.path(), 1);
    let out_dir = dir.path().join("out");
    let config = dir.path().join("run.conf");
    std::fs::write(
        &config,
        format!(
            "# experiment defaults\n\
             data={data}\n\
             model=GRNN\n\
             holdout=true\n\
             out-dir={}\n\
             grid-n=6,12\n\
             grid-width=0.1,0.4\n",
            out_dir.display()
        ),
    )
    .unwrap();

    let out = psfm(&["forecast", "--config", config.to_str().unwrap(), "--model", "N-WE"]);
    assert_ok(&out);
    let manifest = read(&out_dir.join("manifest.txt"));
    assert!(manifest.contains("model=N-WE"), "the flag must override the file");
    assert!(manifest.contains("grid.n=6,12"));
    assert!(manifest.contains("mode=holdout"));
}

#[test]
fn committee_and_pool_models_run_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_corpus(dir.path(), 1);

    let no_seed = psfm(&[
        "forecast",
        "--data",
        &data,
        "--model",
        "FNMe2",
        "--out-dir",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(code(&no_seed), 2, "a committee without a seed is a config error");

    let committee_dir = dir.path().join("committee");
    let out = psfm(&[
        "forecast",
        "--data",
        &data,
        "--model",
        "FNMe2",
        "--holdout",
        "--seed",
        "4",
        "--members",
        "16",
        "--n",
        "12",
        "--width",
        "0.4",
        "--out-dir",
        committee_dir.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let manifest = read(&committee_dir.join("manifest.txt"));
    assert!(manifest.contains("seed=4"));
    assert!(manifest.contains("members=16"));
    assert!(manifest.contains("given.city00.FNM=n=12,sigma=0.4"));

    let pool_dir = dir.path().join("pool");
    let out = psfm(&[
        "forecast",
        "--data",
        &data,
        "--model",
        "E2",
        "--holdout",
        "--out-dir",
        pool_dir.to_str().unwrap(),
        "--grid-n",
        "6,12",
        "--grid-width",
        "0.1,0.4",
        "--grid-k",
        "1,3",
    ]);
    assert_ok(&out);
    let manifest = read(&pool_dir.join("manifest.txt"));
    for label in ["k-NNw+SIM", "FNM+SIM", "N-WE+SIM", "GRNN+SIM"] {
        assert!(manifest.contains(&format!("tuned.city00.{label}=")), "{label}");
    }
}

#[test]
fn tune_writes_a_score_table_with_best_rows_in_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_corpus(dir.path(), 1);
    let out_dir = dir.path().join("tuned");
    let out = psfm(&[
        "tune",
        "--data",
        &data,
        "--model",
        "GRNN+ES",
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--grid-n",
        "6,12",
        "--grid-width",
        "0.1,0.4",
    ]);
    assert_ok(&out);
    let table = read(&out_dir.join("tuning.csv"));
    assert_eq!(
        table.lines().next(),
        Some("series,model,coding,n,parameter,value,mape,folds")
    );
    assert_eq!(table.lines().count(), 1 + 4, "two lengths times two widths");
    assert!(table.contains("city00,GRNN,V1,6,sigma,0.1,"));
    let manifest = read(&out_dir.join("manifest.txt"));
    assert!(manifest.contains("best.city00.GRNN+ES=n="));

    let not_single = psfm(&[
        "tune",
        "--data",
        &data,
        "--model",
        "E1",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&not_single), 2);
}

#[test]
fn benchmark_evaluate_rank_pipeline_agrees_with_itself() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_corpus(dir.path(), 2);
    let bench_dir = dir.path().join("bench");
    let out = psfm(&[
        "benchmark",
        "--data",
        &data,
        "--seed",
        "3",
        "--members",
        "16",
        "--out-dir",
        bench_dir.to_str().unwrap(),
        "--grid-n",
        "6,12",
        "--grid-k",
        "1,3,6",
        "--grid-width",
        "0.1,0.4,1.6",
        "--label",
        "smoke",
    ]);
    assert_ok(&out);
    for name in [
        "table1.csv",
        "table1.txt",
        "table2.csv",
        "table2.txt",
        "ranks.csv",
        "per_series_metrics.csv",
        "forecasts.csv",
        "manifest.txt",
    ] {
        assert!(bench_dir.join(name).is_file(), "{name} missing");
    }

    let rescored = dir.path().join("rescored.csv");
    let out = psfm(&[
        "evaluate",
        "--forecasts",
        bench_dir.join("forecasts.csv").to_str().unwrap(),
        "--output",
        rescored.to_str().unwrap(),
    ]);
    assert_ok(&out);
    assert_eq!(
        read(&rescored),
        read(&bench_dir.join("per_series_metrics.csv")),
        "re-scoring the forecast file must reproduce the report metrics"
    );

    let ranks = dir.path().join("ranks.csv");
    let out = psfm(&[
        "rank",
        "--metrics",
        rescored.to_str().unwrap(),
        "--output",
        ranks.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let ranks = read(&ranks);
    assert_eq!(ranks.lines().next(), Some("model,avg_rank"));
    assert_eq!(ranks.lines().count(), 1 + 22, "21 zoo models plus the baseline");

    let out = psfm(&[
        "rank",
        "--metrics",
        rescored.to_str().unwrap(),
        "--output",
        dir.path().join("r2.csv").to_str().unwrap(),
        "--by",
        "flavour",
    ]);
    assert_eq!(code(&out), 2, "an unknown metric is a config error");
}

#[test]
fn exit_codes_distinguish_data_config_and_runtime_failures() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");

    let missing = psfm(&[
        "forecast",
        "--data",
        dir.path().join("absent.csv").to_str().unwrap(),
        "--model",
        "FNM",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&missing), 1, "a missing data file is a data error");
    assert!(!missing.stderr.is_empty());

    let bad_model = psfm(&[
        "forecast",
        "--data",
        dir.path().join("absent.csv").to_str().unwrap(),
        "--model",
        "oracle",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&bad_model), 2, "an unknown model is a config error");

    let holed = dir.path().join("holed.csv");
    std::fs::write(
        &holed,
        "series,model,median_ape,mape,iqr_ape,rmse\n\
         a,FNM,1,1,1,1\n\
         a,GRNN,2,2,2,2\n\
         b,FNM,1,1,1,1\n",
    )
    .unwrap();
    let incomplete = psfm(&[
        "rank",
        "--metrics",
        holed.to_str().unwrap(),
        "--output",
        dir.path().join("r.csv").to_str().unwrap(),
    ]);
    assert_eq!(code(&incomplete), 3, "a holed table is a runtime error");
    assert!(String::from_utf8_lossy(&incomplete.stderr).contains("GRNN"));
}
