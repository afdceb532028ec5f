//! Hyperparameter selection by leave-one-out cross-validation.
//!
//! Each training pattern pair takes a turn as the validation fold. The
//! remaining pairs may vote only if their windows keep clear of the fold:
//! a pair is allowed when its output window ends before the fold's input
//! window begins, or starts after the fold's output window ends. The fold
//! forecast is decoded with the fold's own coding variables and scored by
//! mean absolute percentage error against the actual values; the candidate
//! score is the mean over usable folds. A candidate needs at least three
//! usable folds.
//!
//! Grid search sweeps pattern length crossed with the family's parameter
//! (neighbour count or width) and keeps the best score. Ties prefer the
//! shorter pattern, then fewer neighbours or the wider width, then the
//! earlier grid position. Distances are computed once per pattern length
//! and shared across the grid row.

use crate::error::{Error, Result};
use crate::models::{
    distance, fnm_from_distances, grnn_from_distances, knnw_from_distances, nwe_isotropic_from_distances,
    nwe_weights, ModelKind, ModelParams, PsfmConfig, VariantSpec, WeightVector,
};
use crate::patterns::{self, CodingVars};
use crate::series::{MonthlySeries, SplitSpec};

/// Candidate values swept by the grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// Input pattern lengths.
    pub n_values: Vec<usize>,
    /// Neighbour counts, for the nearest-neighbour family.
    pub k_values: Vec<usize>,
    /// Widths, for the membership, kernel, and radial-basis families.
    pub width_values: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n_values: vec![3, 6, 9, 12, 15, 18, 24],
            k_values: (1..=12).collect(),
            width_values: (0..9).map(|j| 0.05 * 2f64.powi(j)).collect(),
        }
    }
}

impl GridSpec {
    fn validate_for(&self, kind: ModelKind) -> Result<()> {
        if self.n_values.is_empty() {
            return Err(Error::Config("the grid has no pattern lengths".into()));
        }
        if self.n_values.iter().any(|&n| n < 1) {
            return Err(Error::Config("pattern lengths must be at least 1".into()));
        }
        match kind {
            ModelKind::Knnw => {
                if self.k_values.is_empty() {
                    return Err(Error::Config("the grid has no neighbour counts".into()));
                }
                if self.k_values.iter().any(|&k| k < 1) {
                    return Err(Error::Config("neighbour counts must be at least 1".into()));
                }
            }
            _ => {
                if self.width_values.is_empty() {
                    return Err(Error::Config("the grid has no widths".into()));
                }
                if self.width_values.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    return Err(Error::Config("widths must be positive".into()));
                }
            }
        }
        Ok(())
    }
}

/// Cross-validation outcome for one candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvScore {
    /// Mean absolute percentage error over the usable folds.
    pub mape: f64,
    /// Number of usable folds.
    pub folds: usize,
}

/// One grid cell with its score; infeasible cells carry no score.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub config: PsfmConfig,
    pub score: Option<CvScore>,
}

/// Result of a grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningResult {
    pub best: PsfmConfig,
    pub best_score: CvScore,
    pub table: Vec<ScoreRow>,
}

impl TuningResult {
    /// The full grid as CSV, one row per cell, blank score when infeasible.
    pub fn table_csv(&self) -> String {
        let mut out = String::from("model,coding,n,parameter,value,mape,folds\n");
        for row in &self.table {
            let (param, value) = match &row.config.params {
                ModelParams::Knnw { k, .. } => ("k", format!("{k}")),
                ModelParams::Fnm { sigma, .. } => ("sigma", format!("{sigma}")),
                ModelParams::Nwe { bandwidth } => ("h", format!("{}", bandwidth[0])),
                ModelParams::Grnn { sigma } => ("sigma", format!("{sigma}")),
            };
            let (mape, folds) = match row.score {
                Some(s) => (format!("{:.6}", s.mape), format!("{}", s.folds)),
                None => (String::new(), String::new()),
            };
            out.push_str(&format!(
                "{},{},{},{param},{value},{mape},{folds}\n",
                row.config.kind(),
                row.config.variant.coding(),
                row.config.n
            ));
        }
        out
    }
}

/// Fold indices a validation fold may learn from: pairs whose output window
/// ends before the fold's input window, or begins after the fold's output
/// window.
pub(crate) fn allowed_indices(origins: &[usize], j: usize, n: usize, m: usize) -> Vec<usize> {
    let oj = origins[j];
    origins
        .iter()
        .enumerate()
        .filter(|&(_, &ol)| ol + n + m <= oj || ol >= oj + m)
        .map(|(l, _)| l)
        .collect()
}

/// Per-pattern-length material shared by every grid cell in the row.
struct FoldMaterial {
    ys: Vec<Vec<f64>>,
    xs: Vec<Vec<f64>>,
    codings: Vec<CodingVars>,
    actuals: Vec<Vec<f64>>,
    dists: Vec<Vec<f64>>,
    allowed: Vec<Vec<usize>>,
    m: usize,
}

impl FoldMaterial {
    fn build(train: &[f64], n: usize, m: usize, variant: patterns::Variant) -> Result<FoldMaterial> {
        let set = patterns::build_pattern_set(train, n, m, variant)?;
        let xs = set.x_components();
        let ys = set.y_components();
        let origins: Vec<usize> = set.pairs().iter().map(|p| p.origin).collect();
        let codings: Vec<CodingVars> = set.pairs().iter().map(|p| p.y.coding()).collect();
        let actuals: Vec<Vec<f64>> = origins
            .iter()
            .map(|&o| train[o + 1..o + 1 + m].to_vec())
            .collect();
        let count = xs.len();
        let mut dists = vec![vec![0.0; count]; count];
        for j in 0..count {
            for l in j + 1..count {
                let d = distance(&xs[j], &xs[l])?;
                dists[j][l] = d;
                dists[l][j] = d;
            }
        }
        let allowed = (0..count).map(|j| allowed_indices(&origins, j, n, m)).collect();
        Ok(FoldMaterial { ys, xs, codings, actuals, dists, allowed, m })
    }

    /// Scores one candidate. A fold is usable when it keeps at least
    /// `min_allowed` candidates, its weights compute, and its percentage
    /// errors are finite; fewer than three usable folds is no score.
    fn score<F>(&self, min_allowed: usize, weigher: F) -> Option<CvScore>
    where
        F: Fn(usize, &[usize], &[f64]) -> Result<WeightVector>,
    {
        let mut total = 0.0;
        let mut folds = 0usize;
        for j in 0..self.xs.len() {
            let allowed = &self.allowed[j];
            if allowed.len() < min_allowed.max(1) {
                continue;
            }
            let dists: Vec<f64> = allowed.iter().map(|&l| self.dists[j][l]).collect();
            let weights = match weigher(j, allowed, &dists) {
                Ok(w) => w,
                Err(_) => continue,
            };
            let mut y_hat = vec![0.0; self.m];
            for (w, &l) in weights.weights().iter().zip(allowed) {
                if *w == 0.0 {
                    continue;
                }
                for (o, c) in y_hat.iter_mut().zip(&self.ys[l]) {
                    *o += w * c;
                }
            }
            let coding = self.codings[j];
            let mut ape_sum = 0.0;
            let mut usable = true;
            for (c, actual) in y_hat.iter().zip(&self.actuals[j]) {
                let forecast = c * coding.dispersion() + coding.mean();
                if !(actual.is_finite() && *actual > 0.0) {
                    usable = false;
                    break;
                }
                let ape = 100.0 * (forecast - actual).abs() / actual;
                if !ape.is_finite() {
                    usable = false;
                    break;
                }
                ape_sum += ape;
            }
            if !usable {
                continue;
            }
            total += ape_sum / self.m as f64;
            folds += 1;
        }
        if folds < 3 {
            return None;
        }
        Some(CvScore { mape: total / folds as f64, folds })
    }
}

fn weights_from_distances(params: &ModelParams, dists: &[f64]) -> Result<WeightVector> {
    match params {
        ModelParams::Knnw { k, rho, gamma } => knnw_from_distances(dists, *k, *rho, *gamma),
        ModelParams::Fnm { sigma, alpha } => fnm_from_distances(dists, *sigma, *alpha),
        ModelParams::Nwe { bandwidth } => nwe_isotropic_from_distances(dists, bandwidth[0]),
        ModelParams::Grnn { sigma } => grnn_from_distances(dists, *sigma),
    }
}

fn is_isotropic(bandwidth: &[f64]) -> bool {
    bandwidth.windows(2).all(|w| w[0] == w[1])
}

/// Leave-one-out cross-validation score of one configuration on a training
/// slice. Errs when fewer than three folds are usable.
pub fn loo_cv_score(train: &[f64], config: &PsfmConfig) -> Result<CvScore> {
    config.validate()?;
    let material = FoldMaterial::build(train, config.n, config.m, config.variant.coding())?;
    let min_allowed = match &config.params {
        ModelParams::Knnw { k, .. } => *k,
        _ => 1,
    };
    let score = material.score(min_allowed, |j, allowed, dists| match &config.params {
        ModelParams::Nwe { bandwidth } if !is_isotropic(bandwidth) => {
            let subset: Vec<Vec<f64>> = allowed.iter().map(|&l| material.xs[l].clone()).collect();
            nwe_weights(&material.xs[j], &subset, bandwidth)
        }
        params => weights_from_distances(params, dists),
    });
    score.ok_or_else(|| {
        Error::InsufficientData(format!(
            "fewer than three usable validation folds for n={} m={}",
            config.n, config.m
        ))
    })
}

/// Returns true when the candidate cell beats the incumbent: lower score,
/// then shorter pattern, then smaller `param_key`. Neighbour counts use the
/// count itself as the key and widths use the negated width, so smaller
/// keys mean fewer neighbours or wider kernels.
pub(crate) fn better_cell(candidate: (f64, usize, f64), incumbent: (f64, usize, f64)) -> bool {
    match candidate.0.total_cmp(&incumbent.0) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => match candidate.1.cmp(&incumbent.1) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => candidate.2.total_cmp(&incumbent.2).is_lt(),
        },
    }
}

/// Exhaustively scores the family's grid and returns the best candidate
/// together with the full score table. Errs when every cell is infeasible.
pub fn grid_search(
    train: &[f64],
    kind: ModelKind,
    variant: &VariantSpec,
    m: usize,
    grid: &GridSpec,
) -> Result<TuningResult> {
    if m < 1 {
        return Err(Error::Config("horizon m must be at least 1".into()));
    }
    grid.validate_for(kind)?;
    if let VariantSpec::V1 { scalar } = variant {
        scalar.validate()?;
    }

    let mut table = Vec::new();
    let mut best: Option<(f64, usize, f64, usize)> = None;
    for &n in &grid.n_values {
        let material = match FoldMaterial::build(train, n, m, variant.coding()) {
            Ok(mat) => Some(mat),
            Err(Error::InsufficientData(_)) => None,
            Err(e) => return Err(e),
        };
        let cells: Vec<(PsfmConfig, usize, f64)> = match kind {
            ModelKind::Knnw => grid
                .k_values
                .iter()
                .map(|&k| (PsfmConfig::knnw(n, m, variant.clone(), k, 1.0, 0.0), k, k as f64))
                .collect(),
            ModelKind::Fnm => grid
                .width_values
                .iter()
                .map(|&w| (PsfmConfig::fnm(n, m, variant.clone(), w, 2.0), 1, -w))
                .collect(),
            ModelKind::Nwe => grid
                .width_values
                .iter()
                .map(|&w| (PsfmConfig::nwe_isotropic(n, m, variant.clone(), w), 1, -w))
                .collect(),
            ModelKind::Grnn => grid
                .width_values
                .iter()
                .map(|&w| (PsfmConfig::grnn(n, m, variant.clone(), w), 1, -w))
                .collect(),
        };
        for (config, min_allowed, param_key) in cells {
            let score = material.as_ref().and_then(|mat| {
                mat.score(min_allowed, |_, _, dists| weights_from_distances(&config.params, dists))
            });
            if let Some(s) = score {
                let key = (s.mape, n, param_key);
                let replace = match best {
                    None => true,
                    Some((mape, bn, bkey, _)) => better_cell(key, (mape, bn, bkey)),
                };
                if replace {
                    best = Some((s.mape, n, param_key, table.len()));
                }
            }
            table.push(ScoreRow { config, score });
        }
    }

    match best {
        Some((_, _, _, index)) => {
            let row = &table[index];
            Ok(TuningResult {
                best: row.config.clone(),
                best_score: row.score.expect("winning cell has a score"),
                table,
            })
        }
        None => Err(Error::Tuning(format!(
            "every grid candidate was infeasible for {kind} on {} training months",
            train.len()
        ))),
    }
}

/// Grid search on the training prefix of a split.
pub fn tune_series(
    series: &MonthlySeries,
    split: &SplitSpec,
    kind: ModelKind,
    variant: &VariantSpec,
    grid: &GridSpec,
) -> Result<TuningResult> {
    split.validate(series)?;
    grid_search(split.train(series), kind, variant, split.horizon(), grid)
}
