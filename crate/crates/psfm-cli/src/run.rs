//! Subcommand implementations: argument structs, config-file merging, and
//! the calls into the library.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;

use psfm::bench::{
    describe_params, run_benchmark, write_report, BenchmarkOptions, ModelSelector, Route,
};
use psfm::ensemble::{
    derive_seed, heterogeneous_forecast, homogeneous_forecast, DiversitySpec, EnsembleId,
    ModelBank,
};
use psfm::error::{Error, Result};
use psfm::eval::average_ranks;
use psfm::eval::compute_metrics;
use psfm::models::{forecast_single, ModelKind, PsfmConfig};
use psfm::scalar::{forecast_scalar, ScalarHistory, ScalarModelSpec};
use psfm::series::{generate_synthetic, load_csv, write_csv, MonthlySeries, SplitSpec, SyntheticSpec};
use psfm::tuning::{tune_series, GridSpec};

use crate::config::{require, FileConfig};

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .filter(|n| !n.is_empty())
        .ok_or_else(|| Error::Config(format!("not a writable file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!("{name}.tmp"));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// Generate synthetic monthly demand series.
#[derive(Args)]
pub struct SynthArgs {
    /// Destination CSV file
    #[arg(long)]
    output: Option<PathBuf>,
    /// Generator seed; successive series use seed, seed+1, ...
    #[arg(long)]
    seed: Option<u64>,
    /// Number of series to generate [default: 1]
    #[arg(long)]
    count: Option<usize>,
    /// Years per series [default: 12]
    #[arg(long)]
    years: Option<usize>,
    /// Identifier prefix; series are named prefix00, prefix01, ... [default: synthetic]
    #[arg(long)]
    id_prefix: Option<String>,
    /// Demand level of the first series [default: 100]
    #[arg(long)]
    base: Option<f64>,
    /// Level increment between successive series [default: 10]
    #[arg(long)]
    base_step: Option<f64>,
    /// Linear trend per month [default: 0.5]
    #[arg(long)]
    trend: Option<f64>,
    /// Relative amplitude of the annual cycle [default: 0.2]
    #[arg(long)]
    seasonal_amp: Option<f64>,
    /// Relative noise level [default: 0.03]
    #[arg(long)]
    noise_sd: Option<f64>,
    /// key=value file supplying any flag not given on the command line
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn synth(mut args: SynthArgs) -> Result<()> {
    let file = FileConfig::from_arg(&args.config)?;
    file.fill(&mut args.output, "output")?;
    file.fill(&mut args.seed, "seed")?;
    file.fill(&mut args.count, "count")?;
    file.fill(&mut args.years, "years")?;
    file.fill(&mut args.id_prefix, "id-prefix")?;
    file.fill(&mut args.base, "base")?;
    file.fill(&mut args.base_step, "base-step")?;
    file.fill(&mut args.trend, "trend")?;
    file.fill(&mut args.seasonal_amp, "seasonal-amp")?;
    file.fill(&mut args.noise_sd, "noise-sd")?;

    let output = require(args.output, "output")?;
    let seed = require(args.seed, "seed")?;
    let count = args.count.unwrap_or(1);
    if count < 1 {
        return Err(Error::Config("count must be at least 1".into()));
    }
    let years = args.years.unwrap_or(12);
    let prefix = args.id_prefix.unwrap_or_else(|| "synthetic".into());
    let base = args.base.unwrap_or(100.0);
    let base_step = args.base_step.unwrap_or(10.0);

    let mut all = Vec::with_capacity(count);
    for i in 0..count {
        let mut spec = SyntheticSpec::new(
            seed + i as u64,
            years,
            base + base_step * i as f64,
            args.trend.unwrap_or(0.5),
            args.seasonal_amp.unwrap_or(0.2),
            args.noise_sd.unwrap_or(0.03),
        );
        spec.id = format!("{prefix}{i:02}");
        all.push(generate_synthetic(&spec)?);
    }
    write_csv(&all, &output)?;
    println!("wrote {} series to {}", all.len(), output.display());
    Ok(())
}

/// Flags shared by the commands that can fit model parameters.
#[derive(Args)]
pub struct GridArgs {
    /// Candidate input pattern lengths, comma separated
    #[arg(long, value_delimiter = ',')]
    grid_n: Option<Vec<usize>>,
    /// Candidate neighbour counts, comma separated
    #[arg(long, value_delimiter = ',')]
    grid_k: Option<Vec<usize>>,
    /// Candidate kernel widths, comma separated
    #[arg(long, value_delimiter = ',')]
    grid_width: Option<Vec<f64>>,
}

impl GridArgs {
    fn merge(&mut self, file: &FileConfig) -> Result<()> {
        file.fill_list(&mut self.grid_n, "grid-n")?;
        file.fill_list(&mut self.grid_k, "grid-k")?;
        file.fill_list(&mut self.grid_width, "grid-width")?;
        Ok(())
    }

    fn to_grid(&self) -> GridSpec {
        let mut grid = GridSpec::default();
        if let Some(v) = &self.grid_n {
            grid.n_values = v.clone();
        }
        if let Some(v) = &self.grid_k {
            grid.k_values = v.clone();
        }
        if let Some(v) = &self.grid_width {
            grid.width_values = v.clone();
        }
        grid
    }
}

fn grid_manifest_lines(out: &mut String, grid: &GridSpec) {
    let _ = writeln!(out, "grid.n={}", join(&grid.n_values));
    let _ = writeln!(out, "grid.k={}", join(&grid.k_values));
    let _ = writeln!(out, "grid.width={}", join(&grid.width_values));
}

/// Forecast every series in a file with one named model.
#[derive(Args)]
pub struct ForecastArgs {
    /// Input CSV of monthly series (id,year,month,value)
    #[arg(long)]
    data: Option<PathBuf>,
    /// Model name: k-NNw, FNM, N-WE, GRNN (optionally +SIM or +ES),
    /// E1..E4, FNMe1..FNMe5, or SNaive
    #[arg(long)]
    model: Option<ModelSelector>,
    /// Directory for forecasts.csv and manifest.txt
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Months to forecast [default: 12]
    #[arg(long)]
    horizon: Option<usize>,
    /// Hold out the last horizon months and include an actual column
    #[arg(long)]
    holdout: bool,
    /// Run seed; required for the randomized committees
    #[arg(long)]
    seed: Option<u64>,
    /// Committee size [default: 100]
    #[arg(long)]
    members: Option<usize>,
    /// Input pattern length; skips tuning for single models and committees
    #[arg(long)]
    n: Option<usize>,
    /// Neighbour count, used with --n for the nearest-neighbour family
    #[arg(long)]
    k: Option<usize>,
    /// Kernel width, used with --n for the other families
    #[arg(long)]
    width: Option<f64>,
    /// Neighbour taper strength [default: 1]
    #[arg(long)]
    rho: Option<f64>,
    /// Neighbour taper shape [default: 0]
    #[arg(long)]
    gamma: Option<f64>,
    /// Membership exponent [default: 2]
    #[arg(long)]
    alpha: Option<f64>,
    #[command(flatten)]
    grid: GridArgs,
    /// key=value file supplying any flag not given on the command line
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Builds the configuration of one single model, from explicit parameters
/// when `--n` was given and from a grid search otherwise. The returned note
/// records the choice for the manifest.
fn single_config(
    series: &MonthlySeries,
    split: &SplitSpec,
    kind: ModelKind,
    route: Route,
    args: &ForecastArgs,
    grid: &GridSpec,
    used_tuning: &mut bool,
) -> Result<(PsfmConfig, String)> {
    let m = split.horizon();
    let variant = route.variant();
    let label = format!("{kind}{}", route.suffix());
    if let Some(n) = args.n {
        let width = || {
            args.width.ok_or_else(|| {
                Error::Config(format!("model {label} needs --width alongside --n"))
            })
        };
        let config = match kind {
            ModelKind::Knnw => {
                let k = args.k.ok_or_else(|| {
                    Error::Config(format!("model {label} needs --k alongside --n"))
                })?;
                PsfmConfig::knnw(n, m, variant, k, args.rho.unwrap_or(1.0), args.gamma.unwrap_or(0.0))
            }
            ModelKind::Fnm => PsfmConfig::fnm(n, m, variant, width()?, args.alpha.unwrap_or(2.0)),
            ModelKind::Nwe => PsfmConfig::nwe_isotropic(n, m, variant, width()?),
            ModelKind::Grnn => PsfmConfig::grnn(n, m, variant, width()?),
        };
        config.validate()?;
        let note = format!("given.{}.{label}={}", series.id(), describe_params(&config));
        Ok((config, note))
    } else {
        *used_tuning = true;
        tuned_config(series, split, kind, route, grid)
    }
}

fn tuned_config(
    series: &MonthlySeries,
    split: &SplitSpec,
    kind: ModelKind,
    route: Route,
    grid: &GridSpec,
) -> Result<(PsfmConfig, String)> {
    let tuned = tune_series(series, split, kind, &route.variant(), grid)?;
    let note = format!(
        "tuned.{}.{kind}{}={}",
        series.id(),
        route.suffix(),
        describe_params(&tuned.best)
    );
    Ok((tuned.best, note))
}

/// Runs one selector on one series and returns the forecast plus manifest
/// notes describing the parameters it ended up using.
fn run_selector(
    series: &MonthlySeries,
    split: &SplitSpec,
    selector: ModelSelector,
    args: &ForecastArgs,
    members: usize,
    grid: &GridSpec,
    used_tuning: &mut bool,
) -> Result<(Vec<f64>, Vec<String>)> {
    match selector {
        ModelSelector::Baseline => {
            let history = ScalarHistory::new(split.train(series).to_vec())?;
            let forecast =
                forecast_scalar(&history, &ScalarModelSpec::SeasonalNaive(12), split.horizon())?;
            Ok((forecast, Vec::new()))
        }
        ModelSelector::Single { kind, route } => {
            let (config, note) = single_config(series, split, kind, route, args, grid, used_tuning)?;
            let out = forecast_single(series, &config, split)?;
            Ok((out.forecast, vec![note]))
        }
        ModelSelector::Committee(strategy) => {
            let (base, note) =
                single_config(series, split, ModelKind::Fnm, Route::Input, args, grid, used_tuning)?;
            let seed = derive_seed(args.seed.unwrap(), &format!("{}/{strategy}", series.id()));
            let spec = DiversitySpec::new(strategy, base, members, seed);
            let out = homogeneous_forecast(series, &spec, split)?;
            Ok((out.forecast, vec![note]))
        }
        ModelSelector::Pool(id) => {
            *used_tuning = true;
            let mut bank = ModelBank::new();
            let mut notes = Vec::new();
            let wants_input = matches!(id, EnsembleId::E1 | EnsembleId::E4);
            let wants_simple = matches!(id, EnsembleId::E2 | EnsembleId::E4);
            let wants_smoothing = matches!(id, EnsembleId::E3 | EnsembleId::E4);
            for kind in ModelKind::ALL {
                if wants_input {
                    let (config, note) = tuned_config(series, split, kind, Route::Input, grid)?;
                    notes.push(note);
                    bank.set_v2(config)?;
                }
                if wants_simple || wants_smoothing {
                    let (config, note) = tuned_config(series, split, kind, Route::Simple, grid)?;
                    notes.push(note);
                    if wants_smoothing {
                        bank.set_v1_smoothing(
                            config.clone().with_scalar(ScalarModelSpec::AutoSmoothing),
                        )?;
                    }
                    if wants_simple {
                        bank.set_v1_simple(config)?;
                    }
                }
            }
            let out = heterogeneous_forecast(series, &bank, id, split)?;
            Ok((out.forecast, notes))
        }
    }
}

pub fn forecast(mut args: ForecastArgs) -> Result<()> {
    let file = FileConfig::from_arg(&args.config)?;
    file.fill(&mut args.data, "data")?;
    file.fill(&mut args.model, "model")?;
    file.fill(&mut args.out_dir, "out-dir")?;
    file.fill(&mut args.horizon, "horizon")?;
    file.fill_flag(&mut args.holdout, "holdout")?;
    file.fill(&mut args.seed, "seed")?;
    file.fill(&mut args.members, "members")?;
    file.fill(&mut args.n, "n")?;
    file.fill(&mut args.k, "k")?;
    file.fill(&mut args.width, "width")?;
    file.fill(&mut args.rho, "rho")?;
    file.fill(&mut args.gamma, "gamma")?;
    file.fill(&mut args.alpha, "alpha")?;
    args.grid.merge(&file)?;

    let data_path = require(args.data.clone(), "data")?;
    let selector = require(args.model, "model")?;
    let out_dir = require(args.out_dir.clone(), "out-dir")?;
    let horizon = args.horizon.unwrap_or(12);
    let members = args.members.unwrap_or(100);
    if horizon < 1 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    if members < 1 {
        return Err(Error::Config("committees need at least one member".into()));
    }
    if matches!(selector, ModelSelector::Committee(_)) && args.seed.is_none() {
        return Err(Error::Config(
            "committee models draw random members; pass --seed to make the run reproducible".into(),
        ));
    }
    let grid = args.grid.to_grid();

    let data = load_csv(&data_path)?;
    if data.is_empty() {
        return Err(Error::InsufficientData("the data file holds no series".into()));
    }

    let mut rows = String::from(if args.holdout {
        "id,year,month,forecast,actual\n"
    } else {
        "id,year,month,forecast\n"
    });
    let mut notes = Vec::new();
    let mut used_tuning = false;
    for series in &data {
        let split = if args.holdout {
            SplitSpec::holdout(series, horizon)?
        } else {
            SplitSpec::beyond_end(series, horizon)?
        };
        let (forecast, series_notes) =
            run_selector(series, &split, selector, &args, members, &grid, &mut used_tuning)?;
        notes.extend(series_notes);
        let actuals = split.actuals(series);
        for (t, value) in forecast.iter().enumerate() {
            let month = series.month_at(split.test_origin() + t);
            let _ = write!(rows, "{},{},{},{value}", series.id(), month.year(), month.month());
            if let Some(actuals) = actuals {
                let _ = write!(rows, ",{}", actuals[t]);
            }
            rows.push('\n');
        }
    }

    let mut manifest = String::from("forecast manifest\n");
    let _ = writeln!(manifest, "tool_version={}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(manifest, "data={}", data_path.display());
    let _ = writeln!(manifest, "model={selector}");
    let _ = writeln!(manifest, "horizon={horizon}");
    let _ = writeln!(manifest, "mode={}", if args.holdout { "holdout" } else { "ahead" });
    if let Some(seed) = args.seed {
        let _ = writeln!(manifest, "seed={seed}");
    }
    if matches!(selector, ModelSelector::Committee(_)) {
        let _ = writeln!(manifest, "members={members}");
    }
    if used_tuning {
        grid_manifest_lines(&mut manifest, &grid);
    }
    let _ = writeln!(
        manifest,
        "series={}",
        data.iter().map(|s| s.id().to_string()).collect::<Vec<_>>().join(",")
    );
    for note in &notes {
        manifest.push_str(note);
        manifest.push('\n');
    }

    std::fs::create_dir_all(&out_dir)?;
    write_atomic(&out_dir.join("forecasts.csv"), &rows)?;
    write_atomic(&out_dir.join("manifest.txt"), &manifest)?;
    println!(
        "wrote forecasts.csv and manifest.txt to {} ({} series, model {selector})",
        out_dir.display(),
        data.len()
    );
    Ok(())
}

/// Grid-search one model family on every series and write the score table.
#[derive(Args)]
pub struct TuneArgs {
    /// Input CSV of monthly series (id,year,month,value)
    #[arg(long)]
    data: Option<PathBuf>,
    /// Single model to tune: k-NNw, FNM, N-WE, or GRNN, optionally +SIM or +ES
    #[arg(long)]
    model: Option<ModelSelector>,
    /// Directory for tuning.csv and manifest.txt
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Months each candidate must forecast [default: 12]
    #[arg(long)]
    horizon: Option<usize>,
    /// Tune on the data with the last horizon months held out
    #[arg(long)]
    holdout: bool,
    #[command(flatten)]
    grid: GridArgs,
    /// key=value file supplying any flag not given on the command line
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn tune(mut args: TuneArgs) -> Result<()> {
    let file = FileConfig::from_arg(&args.config)?;
    file.fill(&mut args.data, "data")?;
    file.fill(&mut args.model, "model")?;
    file.fill(&mut args.out_dir, "out-dir")?;
    file.fill(&mut args.horizon, "horizon")?;
    file.fill_flag(&mut args.holdout, "holdout")?;
    args.grid.merge(&file)?;

    let data_path = require(args.data.clone(), "data")?;
    let selector = require(args.model, "model")?;
    let out_dir = require(args.out_dir.clone(), "out-dir")?;
    let horizon = args.horizon.unwrap_or(12);
    let ModelSelector::Single { kind, route } = selector else {
        return Err(Error::Config(
            "tuning applies to single models such as FNM or k-NNw+SIM".into(),
        ));
    };
    let grid = args.grid.to_grid();

    let data = load_csv(&data_path)?;
    if data.is_empty() {
        return Err(Error::InsufficientData("the data file holds no series".into()));
    }

    let mut table = String::from("series,model,coding,n,parameter,value,mape,folds\n");
    let mut best_lines = Vec::new();
    for series in &data {
        let split = if args.holdout {
            SplitSpec::holdout(series, horizon)?
        } else {
            SplitSpec::beyond_end(series, horizon)?
        };
        let tuned = tune_series(series, &split, kind, &route.variant(), &grid)?;
        for line in tuned.table_csv().lines().skip(1) {
            let _ = writeln!(table, "{},{line}", series.id());
        }
        best_lines.push(format!(
            "best.{}.{kind}{}={},mape={:.6},folds={}",
            series.id(),
            route.suffix(),
            describe_params(&tuned.best),
            tuned.best_score.mape,
            tuned.best_score.folds
        ));
    }

    let mut manifest = String::from("tuning manifest\n");
    let _ = writeln!(manifest, "tool_version={}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(manifest, "data={}", data_path.display());
    let _ = writeln!(manifest, "model={selector}");
    let _ = writeln!(manifest, "horizon={horizon}");
    let _ = writeln!(manifest, "mode={}", if args.holdout { "holdout" } else { "full" });
    grid_manifest_lines(&mut manifest, &grid);
    let _ = writeln!(
        manifest,
        "series={}",
        data.iter().map(|s| s.id().to_string()).collect::<Vec<_>>().join(",")
    );
    for line in &best_lines {
        manifest.push_str(line);
        manifest.push('\n');
    }

    std::fs::create_dir_all(&out_dir)?;
    write_atomic(&out_dir.join("tuning.csv"), &table)?;
    write_atomic(&out_dir.join("manifest.txt"), &manifest)?;
    println!(
        "wrote tuning.csv and manifest.txt to {} ({} series, model {selector})",
        out_dir.display(),
        data.len()
    );
    Ok(())
}

/// Score forecast files that carry actuals.
#[derive(Args)]
pub struct EvaluateArgs {
    /// Forecast CSV: either id,year,month,forecast,actual or
    /// series,model,year,month,actual,forecast
    #[arg(long)]
    forecasts: Option<PathBuf>,
    /// Destination metrics CSV
    #[arg(long)]
    output: Option<PathBuf>,
    /// key=value file supplying any flag not given on the command line
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn evaluate(mut args: EvaluateArgs) -> Result<()> {
    let file = FileConfig::from_arg(&args.config)?;
    file.fill(&mut args.forecasts, "forecasts")?;
    file.fill(&mut args.output, "output")?;
    let input = require(args.forecasts, "forecasts")?;
    let output = require(args.output, "output")?;

    let mut reader = csv::Reader::from_path(&input)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
    let by_model = if headers == ["id", "year", "month", "forecast", "actual"] {
        false
    } else if headers == ["series", "model", "year", "month", "actual", "forecast"] {
        true
    } else if headers == ["id", "year", "month", "forecast"] {
        return Err(Error::InsufficientData(
            "the forecast file has no actual column; produce one with --holdout".into(),
        ));
    } else {
        return Err(Error::Parse {
            line: 1,
            message: format!("unrecognised forecast header {:?}", headers.join(",")),
        });
    };

    let mut order: Vec<String> = Vec::new();
    let mut groups: std::collections::HashMap<String, (Vec<f64>, Vec<f64>)> =
        std::collections::HashMap::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let line = idx as u64 + 2;
        let field = |i: usize| -> Result<f64> {
            record
                .get(i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Parse { line, message: format!("bad number in column {}", i + 1) })
        };
        let (key, forecast, actual) = if by_model {
            let series = record.get(0).unwrap_or_default();
            let model = record.get(1).unwrap_or_default();
            (format!("{series},{model}"), field(5)?, field(4)?)
        } else {
            (record.get(0).unwrap_or_default().to_string(), field(3)?, field(4)?)
        };
        let entry = groups.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            (Vec::new(), Vec::new())
        });
        entry.0.push(forecast);
        entry.1.push(actual);
    }
    if order.is_empty() {
        return Err(Error::InsufficientData("the forecast file has no rows".into()));
    }

    let mut out = String::from(if by_model {
        "series,model,median_ape,mape,iqr_ape,rmse\n"
    } else {
        "series,median_ape,mape,iqr_ape,rmse\n"
    });
    for key in &order {
        let (forecasts, actuals) = &groups[key];
        let metrics = compute_metrics(forecasts, actuals)?;
        let _ = writeln!(
            out,
            "{key},{:.4},{:.4},{:.4},{:.4}",
            metrics.median_ape, metrics.mape, metrics.iqr_ape, metrics.rmse
        );
    }
    write_atomic(&output, &out)?;
    println!("wrote metrics for {} groups to {}", order.len(), output.display());
    Ok(())
}

/// Turn a per-series metrics table into an average-rank leaderboard.
#[derive(Args)]
pub struct RankArgs {
    /// Metrics CSV with header series,model,median_ape,mape,iqr_ape,rmse
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Destination CSV of model,avg_rank rows
    #[arg(long)]
    output: Option<PathBuf>,
    /// Metric to rank by: median_ape, mape, iqr_ape, or rmse [default: mape]
    #[arg(long)]
    by: Option<String>,
    /// key=value file supplying any flag not given on the command line
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn rank(mut args: RankArgs) -> Result<()> {
    let file = FileConfig::from_arg(&args.config)?;
    file.fill(&mut args.metrics, "metrics")?;
    file.fill(&mut args.output, "output")?;
    file.fill(&mut args.by, "by")?;
    let input = require(args.metrics, "metrics")?;
    let output = require(args.output, "output")?;
    let by = args.by.unwrap_or_else(|| "mape".into());

    let mut reader = csv::Reader::from_path(&input)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
    if headers.len() < 3 || headers[0] != "series" || headers[1] != "model" {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected a series,model,... metrics header, got {:?}", headers.join(",")),
        });
    }
    let column = headers
        .iter()
        .position(|h| *h == by)
        .filter(|&i| i >= 2)
        .ok_or_else(|| {
            Error::Config(format!("metric {by:?} is not one of: {}", headers[2..].join(", ")))
        })?;

    let mut series_order: Vec<String> = Vec::new();
    let mut model_order: Vec<String> = Vec::new();
    let mut cells: std::collections::HashMap<(String, String), f64> =
        std::collections::HashMap::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let line = idx as u64 + 2;
        let series = record.get(0).unwrap_or_default().to_string();
        let model = record.get(1).unwrap_or_default().to_string();
        let value: f64 = record
            .get(column)
            .and_then(|v| v.parse().ok())
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| Error::Parse { line, message: format!("bad {by} value") })?;
        if !series_order.contains(&series) {
            series_order.push(series.clone());
        }
        if !model_order.contains(&model) {
            model_order.push(model.clone());
        }
        cells.insert((series, model), value);
    }

    let mut scores = Vec::with_capacity(series_order.len());
    for series in &series_order {
        let mut row = Vec::with_capacity(model_order.len());
        for model in &model_order {
            let value = cells.get(&(series.clone(), model.clone())).ok_or_else(|| {
                Error::IncompleteTable { model: model.clone(), series: series.clone() }
            })?;
            row.push(*value);
        }
        scores.push(row);
    }
    let ranks = average_ranks(&scores)?;

    let mut out = String::from("model,avg_rank\n");
    for (model, rank) in model_order.iter().zip(&ranks) {
        let _ = writeln!(out, "{model},{rank:.2}");
    }
    write_atomic(&output, &out)?;
    println!("wrote {} model ranks to {}", model_order.len(), output.display());
    Ok(())
}

/// Run the whole model zoo on a corpus and write the report tables.
#[derive(Args)]
pub struct BenchmarkArgs {
    /// Input CSV of monthly series (id,year,month,value)
    #[arg(long)]
    data: Option<PathBuf>,
    /// Directory for the report files
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Run seed driving every committee
    #[arg(long)]
    seed: Option<u64>,
    /// Months to hold out and forecast [default: 12]
    #[arg(long)]
    horizon: Option<usize>,
    /// Committee size [default: 100]
    #[arg(long)]
    members: Option<usize>,
    /// Corpus name echoed into the manifest [default: the data path]
    #[arg(long)]
    label: Option<String>,
    #[command(flatten)]
    grid: GridArgs,
    /// key=value file supplying any flag not given on the command line
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn benchmark(mut args: BenchmarkArgs) -> Result<()> {
    let file = FileConfig::from_arg(&args.config)?;
    file.fill(&mut args.data, "data")?;
    file.fill(&mut args.out_dir, "out-dir")?;
    file.fill(&mut args.seed, "seed")?;
    file.fill(&mut args.horizon, "horizon")?;
    file.fill(&mut args.members, "members")?;
    file.fill(&mut args.label, "label")?;
    args.grid.merge(&file)?;

    let data_path = require(args.data.clone(), "data")?;
    let out_dir = require(args.out_dir.clone(), "out-dir")?;
    let seed = require(args.seed, "seed")?;

    let mut options = BenchmarkOptions::new(seed);
    if let Some(h) = args.horizon {
        options.horizon = h;
    }
    if let Some(m) = args.members {
        options.members = m;
    }
    options.grid = args.grid.to_grid();
    options.data_label = args.label.unwrap_or_else(|| data_path.display().to_string());

    let data = load_csv(&data_path)?;
    let report = run_benchmark(&data, &options)?;
    for (id, reason) in &report.excluded {
        eprintln!("warning: series {id} excluded: {reason}");
    }
    std::fs::create_dir_all(&out_dir)?;
    let files = write_report(&out_dir, &report)?;
    println!(
        "benchmarked {} series ({} excluded); wrote {} files to {}",
        report.series.len(),
        report.excluded.len(),
        files.len(),
        out_dir.display()
    );
    Ok(())
}
