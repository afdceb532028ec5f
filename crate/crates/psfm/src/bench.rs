//! Multi-series benchmark: tune, forecast, score, rank, and report.
//!
//! For each series the harness holds out the final horizon, tunes the four
//! model families under both codings, and produces one forecast per row of
//! the standard zoo: the four input-window-coded models and their pool, the
//! four output-window-coded models under a simple coding forecaster and
//! their pool, the same four under a smoothing coding forecaster and their
//! pool, the pool of all twelve, the five randomized committees, and a
//! seasonal-naive baseline. A series that fails any row is excluded from
//! every table so the rankings stay complete.
//!
//! Reports are deterministic: a fixed row order, derived per-series seeds,
//! and no timestamps, so identical inputs produce byte-identical files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::ensemble::{
    aggregate_mean, derive_seed, DiversitySpec, DiversityStrategy, EnsembleId,
};
use crate::error::{Error, Result};
use crate::eval::{average_ranks, compute_metrics, render_report_csv, render_report_text, MetricSet, ReportRow};
use crate::models::{forecast_single, ModelKind, ModelParams, PsfmConfig, VariantSpec};
use crate::scalar::{forecast_scalar, ScalarHistory, ScalarModelSpec};
use crate::series::{MonthlySeries, SplitSpec, YearMonth};
use crate::tuning::{tune_series, GridSpec};

/// How an output-window-coded model predicts its coding variables, or the
/// input-window route that needs no prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Input,
    Simple,
    Smoothing,
}

impl Route {
    pub fn variant(&self) -> VariantSpec {
        match self {
            Route::Input => VariantSpec::V2,
            Route::Simple => VariantSpec::V1 { scalar: ScalarModelSpec::AutoSimple },
            Route::Smoothing => VariantSpec::V1 { scalar: ScalarModelSpec::AutoSmoothing },
        }
    }

    pub fn suffix(&self) -> &'static str {
        match self {
            Route::Input => "",
            Route::Simple => "+SIM",
            Route::Smoothing => "+ES",
        }
    }
}

/// Any forecaster the toolkit can run by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelSelector {
    Single { kind: ModelKind, route: Route },
    Pool(EnsembleId),
    Committee(DiversityStrategy),
    Baseline,
}

impl std::fmt::Display for ModelSelector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelSelector::Single { kind, route } => write!(f, "{kind}{}", route.suffix()),
            ModelSelector::Pool(id) => write!(f, "{id}"),
            ModelSelector::Committee(s) => write!(f, "{s}"),
            ModelSelector::Baseline => f.write_str("SNaive"),
        }
    }
}

impl std::str::FromStr for ModelSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (stem, route) = if let Some(stem) = lower.strip_suffix("+sim") {
            (stem, Route::Simple)
        } else if let Some(stem) = lower.strip_suffix("+es") {
            (stem, Route::Smoothing)
        } else {
            (lower.as_str(), Route::Input)
        };
        let kind = match stem {
            "knnw" | "k-nnw" => Some(ModelKind::Knnw),
            "fnm" => Some(ModelKind::Fnm),
            "nwe" | "n-we" => Some(ModelKind::Nwe),
            "grnn" => Some(ModelKind::Grnn),
            _ => None,
        };
        if let Some(kind) = kind {
            return Ok(ModelSelector::Single { kind, route });
        }
        if route != Route::Input {
            return Err(Error::Config(format!("model {s:?} cannot take a coding suffix")));
        }
        let selector = match lower.as_str() {
            "e1" | "ensemble1" => ModelSelector::Pool(EnsembleId::E1),
            "e2" | "ensemble2" => ModelSelector::Pool(EnsembleId::E2),
            "e3" | "ensemble3" => ModelSelector::Pool(EnsembleId::E3),
            "e4" | "ensemble4" => ModelSelector::Pool(EnsembleId::E4),
            "fnme1" => ModelSelector::Committee(DiversityStrategy::PairSubsample),
            "fnme2" => ModelSelector::Committee(DiversityStrategy::FeatureSubset),
            "fnme3" => ModelSelector::Committee(DiversityStrategy::WidthJitter),
            "fnme4" => ModelSelector::Committee(DiversityStrategy::InputNoise),
            "fnme5" => ModelSelector::Committee(DiversityStrategy::OutputNoise),
            "snaive" | "seasonal-naive" => ModelSelector::Baseline,
            _ => return Err(Error::Config(format!("unknown model name {s:?}"))),
        };
        Ok(selector)
    }
}

/// Benchmark settings. The seed drives every committee through derived
/// per-series streams.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkOptions {
    pub horizon: usize,
    pub seed: u64,
    pub members: usize,
    pub grid: GridSpec,
    pub data_label: String,
}

impl BenchmarkOptions {
    pub fn new(seed: u64) -> Self {
        BenchmarkOptions {
            horizon: 12,
            seed,
            members: 100,
            grid: GridSpec::default(),
            data_label: "unnamed".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if self.members < 1 {
            return Err(Error::Config("committees need at least one member".into()));
        }
        Ok(())
    }
}

/// Everything computed for one series that survived the benchmark.
#[derive(Debug, Clone)]
pub struct SeriesResult {
    pub id: String,
    /// Calendar months of the holdout horizon.
    pub months: Vec<YearMonth>,
    pub actuals: Vec<f64>,
    /// Labelled forecasts in the fixed row order, baseline last.
    pub rows: Vec<(String, Vec<f64>)>,
    /// Metric sets parallel to `rows`.
    pub metrics: Vec<(String, MetricSet)>,
    /// The eight tuned configurations, labelled `family/coding`.
    pub tuned: Vec<(String, PsfmConfig)>,
}

/// Aggregated benchmark output.
#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    /// Single models and heterogeneous pools, ranked among themselves.
    pub table1: Vec<ReportRow>,
    /// Randomized committees, ranked among themselves.
    pub table2: Vec<ReportRow>,
    /// Every zoo model ranked jointly by per-series error.
    pub joint_ranks: Vec<(String, f64)>,
    /// Seasonal-naive reference, averaged over the kept series.
    pub baseline: (String, MetricSet),
    pub series: Vec<SeriesResult>,
    /// Series dropped from every table, with the reason.
    pub excluded: Vec<(String, String)>,
    /// Deterministic run echo written alongside the tables.
    pub manifest: String,
}

/// Rows of the single-model-and-pool table, in report order.
pub const TABLE1_ROWS: usize = 16;
/// Rows of the committee table.
pub const TABLE2_ROWS: usize = 5;

/// Renders a configuration's tunable values as `key=value` pairs, the form
/// used in run manifests.
pub fn describe_params(config: &PsfmConfig) -> String {
    match &config.params {
        ModelParams::Knnw { k, rho, gamma } => {
            format!("n={},k={k},rho={rho},gamma={gamma}", config.n)
        }
        ModelParams::Fnm { sigma, alpha } => format!("n={},sigma={sigma},alpha={alpha}", config.n),
        ModelParams::Nwe { bandwidth } => format!("n={},h={}", config.n, bandwidth[0]),
        ModelParams::Grnn { sigma } => format!("n={},sigma={sigma}", config.n),
    }
}

fn run_series(
    series: &MonthlySeries,
    options: &BenchmarkOptions,
) -> std::result::Result<SeriesResult, String> {
    let split = SplitSpec::holdout(series, options.horizon).map_err(|e| format!("split: {e}"))?;
    let actuals = split
        .actuals(series)
        .expect("holdout splits keep their horizon in range")
        .to_vec();

    let mut tuned_v2 = BTreeMap::new();
    let mut tuned_v1 = BTreeMap::new();
    let mut tuned = Vec::with_capacity(8);
    for kind in ModelKind::ALL {
        let result = tune_series(series, &split, kind, &VariantSpec::V2, &options.grid)
            .map_err(|e| format!("tuning {kind}/V2: {e}"))?;
        tuned.push((format!("{kind}/V2"), result.best.clone()));
        tuned_v2.insert(kind, result.best);
        let result = tune_series(series, &split, kind, &Route::Simple.variant(), &options.grid)
            .map_err(|e| format!("tuning {kind}/V1: {e}"))?;
        tuned.push((format!("{kind}/V1"), result.best.clone()));
        tuned_v1.insert(kind, result.best);
    }

    let singles = |route: Route| -> std::result::Result<Vec<(String, Vec<f64>)>, String> {
        let mut out = Vec::with_capacity(ModelKind::ALL.len());
        for kind in ModelKind::ALL {
            let config = match route {
                Route::Input => tuned_v2[&kind].clone(),
                Route::Simple => tuned_v1[&kind].clone().with_scalar(ScalarModelSpec::AutoSimple),
                Route::Smoothing => {
                    tuned_v1[&kind].clone().with_scalar(ScalarModelSpec::AutoSmoothing)
                }
            };
            let label = format!("{kind}{}", route.suffix());
            let forecast = forecast_single(series, &config, &split)
                .map_err(|e| format!("row {label}: {e}"))?;
            out.push((label, forecast.forecast));
        }
        Ok(out)
    };
    let pool_of = |id: EnsembleId, rows: &[(String, Vec<f64>)]| -> std::result::Result<(String, Vec<f64>), String> {
        let member_rows: Vec<Vec<f64>> = rows.iter().map(|(_, f)| f.clone()).collect();
        let mean = aggregate_mean(&member_rows).map_err(|e| format!("row {id}: {e}"))?;
        Ok((id.to_string(), mean))
    };

    let v2_rows = singles(Route::Input)?;
    let sim_rows = singles(Route::Simple)?;
    let es_rows = singles(Route::Smoothing)?;
    let all_rows: Vec<(String, Vec<f64>)> = v2_rows
        .iter()
        .chain(&sim_rows)
        .chain(&es_rows)
        .cloned()
        .collect();

    let mut rows = Vec::with_capacity(TABLE1_ROWS + TABLE2_ROWS + 1);
    rows.extend(v2_rows.iter().cloned());
    rows.push(pool_of(EnsembleId::E1, &v2_rows)?);
    rows.extend(sim_rows.iter().cloned());
    rows.push(pool_of(EnsembleId::E2, &sim_rows)?);
    rows.extend(es_rows.iter().cloned());
    rows.push(pool_of(EnsembleId::E3, &es_rows)?);
    rows.push(pool_of(EnsembleId::E4, &all_rows)?);

    let base = tuned_v2[&ModelKind::Fnm].clone();
    for strategy in DiversityStrategy::ALL {
        let seed = derive_seed(options.seed, &format!("{}/{strategy}", series.id()));
        let spec = DiversitySpec::new(strategy, base.clone(), options.members, seed);
        let out = crate::ensemble::homogeneous_forecast(series, &spec, &split)
            .map_err(|e| format!("row {strategy}: {e}"))?;
        rows.push((strategy.to_string(), out.forecast));
    }

    let history = ScalarHistory::new(split.train(series).to_vec())
        .map_err(|e| format!("baseline history: {e}"))?;
    let baseline = forecast_scalar(&history, &ScalarModelSpec::SeasonalNaive(12), options.horizon)
        .map_err(|e| format!("row SNaive: {e}"))?;
    rows.push((ModelSelector::Baseline.to_string(), baseline));

    let mut metrics = Vec::with_capacity(rows.len());
    for (label, forecast) in &rows {
        let m = compute_metrics(forecast, &actuals).map_err(|e| format!("scoring {label}: {e}"))?;
        metrics.push((label.clone(), m));
    }

    let months = (0..options.horizon)
        .map(|t| series.month_at(split.test_origin() + t))
        .collect();
    Ok(SeriesResult {
        id: series.id().to_string(),
        months,
        actuals,
        rows,
        metrics,
        tuned,
    })
}

fn mean_metrics(kept: &[SeriesResult], index: usize) -> MetricSet {
    let count = kept.len() as f64;
    let mut sum = MetricSet { mape: 0.0, median_ape: 0.0, iqr_ape: 0.0, rmse: 0.0 };
    for s in kept {
        let m = s.metrics[index].1;
        sum.mape += m.mape;
        sum.median_ape += m.median_ape;
        sum.iqr_ape += m.iqr_ape;
        sum.rmse += m.rmse;
    }
    MetricSet {
        mape: sum.mape / count,
        median_ape: sum.median_ape / count,
        iqr_ape: sum.iqr_ape / count,
        rmse: sum.rmse / count,
    }
}

fn render_manifest(
    options: &BenchmarkOptions,
    kept: &[SeriesResult],
    excluded: &[(String, String)],
) -> String {
    let join_usizes = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    let mut out = String::from("benchmark manifest\n");
    out.push_str(&format!("tool_version={}\n", env!("CARGO_PKG_VERSION")));
    out.push_str(&format!("data={}\n", options.data_label));
    out.push_str(&format!("seed={}\n", options.seed));
    out.push_str(&format!("horizon={}\n", options.horizon));
    out.push_str(&format!("members={}\n", options.members));
    out.push_str(&format!("grid.n={}\n", join_usizes(&options.grid.n_values)));
    out.push_str(&format!("grid.k={}\n", join_usizes(&options.grid.k_values)));
    out.push_str(&format!(
        "grid.width={}\n",
        options.grid.width_values.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(",")
    ));
    out.push_str(&format!(
        "series={}\n",
        kept.iter().map(|s| s.id.as_str()).collect::<Vec<_>>().join(",")
    ));
    for (id, reason) in excluded {
        out.push_str(&format!("excluded={id}: {reason}\n"));
    }
    for s in kept {
        for (label, config) in &s.tuned {
            out.push_str(&format!("tuned.{}.{label}={}\n", s.id, describe_params(config)));
        }
    }
    out
}

/// Runs the complete benchmark over every series.
pub fn run_benchmark(data: &[MonthlySeries], options: &BenchmarkOptions) -> Result<BenchmarkReport> {
    options.validate()?;
    if data.is_empty() {
        return Err(Error::InsufficientData("no series to benchmark".into()));
    }
    let mut kept = Vec::new();
    let mut excluded = Vec::new();
    for series in data {
        match run_series(series, options) {
            Ok(result) => kept.push(result),
            Err(reason) => excluded.push((series.id().to_string(), reason)),
        }
    }
    if kept.is_empty() {
        let (id, reason) = &excluded[0];
        return Err(Error::InsufficientData(format!(
            "every series failed the benchmark; first exclusion: {id}: {reason}"
        )));
    }

    let labels: Vec<String> = kept[0].rows.iter().map(|(l, _)| l.clone()).collect();
    for s in &kept {
        for (want, (have, _)) in labels.iter().zip(&s.metrics) {
            if want != have {
                return Err(Error::IncompleteTable { model: want.clone(), series: s.id.clone() });
            }
        }
    }
    let zoo = TABLE1_ROWS + TABLE2_ROWS;
    let mape_matrix: Vec<Vec<f64>> = kept
        .iter()
        .map(|s| s.metrics.iter().take(zoo).map(|(_, m)| m.mape).collect())
        .collect();
    let joint = average_ranks(&mape_matrix)?;
    let t1_matrix: Vec<Vec<f64>> = mape_matrix.iter().map(|r| r[..TABLE1_ROWS].to_vec()).collect();
    let t1_ranks = average_ranks(&t1_matrix)?;
    let t2_matrix: Vec<Vec<f64>> = mape_matrix.iter().map(|r| r[TABLE1_ROWS..zoo].to_vec()).collect();
    let t2_ranks = average_ranks(&t2_matrix)?;

    let make_row = |index: usize, rank: f64| -> ReportRow {
        let m = mean_metrics(&kept, index);
        ReportRow {
            model: labels[index].clone(),
            median_ape: m.median_ape,
            mape: m.mape,
            iqr_ape: m.iqr_ape,
            rmse: m.rmse,
            avg_rank: rank,
        }
    };
    let table1: Vec<ReportRow> = (0..TABLE1_ROWS).map(|i| make_row(i, t1_ranks[i])).collect();
    let table2: Vec<ReportRow> = (TABLE1_ROWS..zoo)
        .map(|i| make_row(i, t2_ranks[i - TABLE1_ROWS]))
        .collect();
    let joint_ranks: Vec<(String, f64)> = (0..zoo).map(|i| (labels[i].clone(), joint[i])).collect();
    let baseline = (labels[zoo].clone(), mean_metrics(&kept, zoo));
    let manifest = render_manifest(options, &kept, &excluded);

    Ok(BenchmarkReport {
        table1,
        table2,
        joint_ranks,
        baseline,
        series: kept,
        excluded,
        manifest,
    })
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("not a writable file path: {}", path.display())))?;
    let mut tmp_name = name.to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes the report files into `dir`, creating it if needed. Files land
/// atomically (written next to their target, then renamed). Returns the
/// written paths.
pub fn write_report(dir: &Path, report: &BenchmarkReport) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut emit = |name: &str, contents: String| -> Result<()> {
        let path = dir.join(name);
        write_atomic(&path, &contents)?;
        written.push(path);
        Ok(())
    };

    emit("table1.csv", render_report_csv(&report.table1))?;
    emit("table1.txt", render_report_text(&report.table1))?;
    emit("table2.csv", render_report_csv(&report.table2))?;
    emit("table2.txt", render_report_text(&report.table2))?;

    let mut ranks = String::from("model,avg_rank\n");
    for (label, rank) in &report.joint_ranks {
        ranks.push_str(&format!("{label},{rank:.2}\n"));
    }
    emit("ranks.csv", ranks)?;

    let mut per_series = String::from("series,model,median_ape,mape,iqr_ape,rmse\n");
    for s in &report.series {
        for (label, m) in &s.metrics {
            per_series.push_str(&format!(
                "{},{label},{:.4},{:.4},{:.4},{:.4}\n",
                s.id, m.median_ape, m.mape, m.iqr_ape, m.rmse
            ));
        }
    }
    emit("per_series_metrics.csv", per_series)?;

    let mut forecasts = String::from("series,model,year,month,actual,forecast\n");
    for s in &report.series {
        for (label, forecast) in &s.rows {
            for (t, value) in forecast.iter().enumerate() {
                let month = s.months[t];
                forecasts.push_str(&format!(
                    "{},{label},{},{},{},{value}\n",
                    s.id,
                    month.year(),
                    month.month(),
                    s.actuals[t]
                ));
            }
        }
    }
    emit("forecasts.csv", forecasts)?;
    emit("manifest.txt", report.manifest.clone())?;
    Ok(written)
}
