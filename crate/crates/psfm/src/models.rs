//! The similarity-weighted regressors and the single-series forecast path.
//!
//! Each model turns distances between a query x-pattern and the training
//! x-patterns into non-negative weights summing to one, then forecasts the
//! y-pattern as the weighted average of training y-patterns:
//!
//! * k-nearest-neighbour weighting: a rational taper over the k nearest
//!   patterns, `v = rho*((1 - d/d_k)/(1 + gamma*d/d_k) - 1) + 1`, renormalized.
//! * Fuzzy neighbourhood: every pattern participates with membership
//!   `exp(-(d/sigma)^alpha)`.
//! * Kernel regression: a product Gaussian kernel with per-component
//!   bandwidths, `exp(-sum_t (q_t - x_t)^2 / (2 h_t^2))`.
//! * Regression network: a Gaussian radial basis `exp(-d^2 / sigma^2)` with
//!   one shared width.
//!
//! Weight functions accept plain component slices rather than pattern
//! types: ensemble diversity deliberately feeds them perturbed vectors that
//! no longer satisfy the pattern invariants.

use crate::error::{Error, Result};
use crate::patterns::{self, CodingVars, Variant};
use crate::scalar::{forecast_scalar, ScalarHistory, ScalarModelSpec};
use crate::series::{MonthlySeries, SplitSpec};

/// The four model families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelKind {
    Knnw,
    Fnm,
    Nwe,
    Grnn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Knnw, ModelKind::Fnm, ModelKind::Nwe, ModelKind::Grnn];
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ModelKind::Knnw => "k-NNw",
            ModelKind::Fnm => "FNM",
            ModelKind::Nwe => "N-WE",
            ModelKind::Grnn => "GRNN",
        };
        f.write_str(name)
    }
}

/// How y-patterns are coded, and for the output-window variant, how the
/// coding variables are predicted at forecast time.
#[derive(Debug, Clone, PartialEq)]
pub enum VariantSpec {
    /// Input-window coding; everything needed is known from history.
    V2,
    /// Output-window coding; the two coding variables are forecast from
    /// their own histories with the given scalar method.
    V1 { scalar: ScalarModelSpec },
}

impl VariantSpec {
    pub fn coding(&self) -> Variant {
        match self {
            VariantSpec::V2 => Variant::V2,
            VariantSpec::V1 { .. } => Variant::V1,
        }
    }
}

/// Model-specific parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Knnw { k: usize, rho: f64, gamma: f64 },
    Fnm { sigma: f64, alpha: f64 },
    Nwe { bandwidth: Vec<f64> },
    Grnn { sigma: f64 },
}

/// Full configuration of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct PsfmConfig {
    pub n: usize,
    pub m: usize,
    pub variant: VariantSpec,
    pub params: ModelParams,
}

impl PsfmConfig {
    pub fn knnw(n: usize, m: usize, variant: VariantSpec, k: usize, rho: f64, gamma: f64) -> Self {
        PsfmConfig { n, m, variant, params: ModelParams::Knnw { k, rho, gamma } }
    }

    pub fn fnm(n: usize, m: usize, variant: VariantSpec, sigma: f64, alpha: f64) -> Self {
        PsfmConfig { n, m, variant, params: ModelParams::Fnm { sigma, alpha } }
    }

    /// Kernel regression with the same bandwidth in every component.
    pub fn nwe_isotropic(n: usize, m: usize, variant: VariantSpec, h: f64) -> Self {
        PsfmConfig { n, m, variant, params: ModelParams::Nwe { bandwidth: vec![h; n] } }
    }

    pub fn grnn(n: usize, m: usize, variant: VariantSpec, sigma: f64) -> Self {
        PsfmConfig { n, m, variant, params: ModelParams::Grnn { sigma } }
    }

    pub fn kind(&self) -> ModelKind {
        match self.params {
            ModelParams::Knnw { .. } => ModelKind::Knnw,
            ModelParams::Fnm { .. } => ModelKind::Fnm,
            ModelParams::Nwe { .. } => ModelKind::Nwe,
            ModelParams::Grnn { .. } => ModelKind::Grnn,
        }
    }

    /// Replaces the scalar method of an output-window-coded config.
    pub fn with_scalar(mut self, scalar: ScalarModelSpec) -> Self {
        if let VariantSpec::V1 { scalar: s } = &mut self.variant {
            *s = scalar;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::Config("pattern length n must be at least 1".into()));
        }
        if self.m < 1 {
            return Err(Error::Config("horizon m must be at least 1".into()));
        }
        if let VariantSpec::V1 { scalar } = &self.variant {
            scalar.validate()?;
        }
        match &self.params {
            ModelParams::Knnw { k, rho, gamma } => {
                if *k < 1 {
                    return Err(Error::Config("k must be at least 1".into()));
                }
                if !(0.0..=1.0).contains(rho) {
                    return Err(Error::Config(format!("rho {rho} outside [0, 1]")));
                }
                if !gamma.is_finite() || *gamma <= -1.0 {
                    return Err(Error::Config(format!(
                        "gamma must be finite and greater than -1, got {gamma}"
                    )));
                }
            }
            ModelParams::Fnm { sigma, alpha } => {
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return Err(Error::Config(format!("sigma must be positive, got {sigma}")));
                }
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return Err(Error::Config(format!("alpha must be positive, got {alpha}")));
                }
            }
            ModelParams::Nwe { bandwidth } => {
                if bandwidth.len() != self.n {
                    return Err(Error::Shape { expected: self.n, actual: bandwidth.len() });
                }
                if bandwidth.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
                    return Err(Error::Config("every bandwidth must be positive".into()));
                }
            }
            ModelParams::Grnn { sigma } => {
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return Err(Error::Config(format!("sigma must be positive, got {sigma}")));
                }
            }
        }
        Ok(())
    }

    /// Weights for a query against training patterns, dispatched by family.
    pub fn weights(&self, query: &[f64], train: &[Vec<f64>]) -> Result<WeightVector> {
        match &self.params {
            ModelParams::Knnw { k, rho, gamma } => knnw_weights(query, train, *k, *rho, *gamma),
            ModelParams::Fnm { sigma, alpha } => fnm_weights(query, train, *sigma, *alpha),
            ModelParams::Nwe { bandwidth } => nwe_weights(query, train, bandwidth),
            ModelParams::Grnn { sigma } => grnn_weights(query, train, *sigma),
        }
    }
}

/// Non-negative weights over the training pairs, summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    weights: Vec<f64>,
}

impl WeightVector {
    fn normalized(raw: Vec<f64>, what: &str) -> Result<Self> {
        let mut sum = 0.0;
        for &v in &raw {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Domain(format!("{what} produced invalid value {v}")));
            }
            sum += v;
        }
        if sum == 0.0 {
            return Err(Error::Underflow(format!(
                "every {what} value rounded to zero; widen sigma or the bandwidths"
            )));
        }
        let weights = raw.into_iter().map(|v| v / sum).collect();
        Ok(WeightVector { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Indices with non-zero weight.
    pub fn support(&self) -> Vec<usize> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Euclidean distance between two equal-length vectors.
pub fn distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape { expected: a.len(), actual: b.len() });
    }
    let mut ss = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        ss += d * d;
    }
    Ok(ss.sqrt())
}

fn distances_to(query: &[f64], train: &[Vec<f64>]) -> Result<Vec<f64>> {
    if train.is_empty() {
        return Err(Error::InsufficientData("no training patterns".into()));
    }
    train.iter().map(|x| distance(query, x)).collect()
}

/// Training indices ordered by ascending distance, ties by index.
pub(crate) fn sort_by_distance(dists: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dists.len()).collect();
    order.sort_by(|&a, &b| {
        dists[a]
            .partial_cmp(&dists[b])
            .expect("distances are finite")
            .then(a.cmp(&b))
    });
    order
}

/// Weights over the `k` nearest patterns from precomputed distances.
pub(crate) fn knnw_from_distances(dists: &[f64], k: usize, rho: f64, gamma: f64) -> Result<WeightVector> {
    let n_train = dists.len();
    if k < 1 || k > n_train {
        return Err(Error::Config(format!(
            "k must lie in 1..={n_train}, got {k}"
        )));
    }
    let order = sort_by_distance(dists);
    let nearest = &order[..k];
    let d_k = dists[nearest[k - 1]];

    let mut raw = vec![0.0; n_train];
    if d_k == 0.0 {
        // Every selected neighbour matches the query exactly; share evenly.
        for &i in nearest {
            raw[i] = 1.0;
        }
    } else {
        let mut sum = 0.0;
        for &i in nearest {
            let r = dists[i] / d_k;
            let v = rho * ((1.0 - r) / (1.0 + gamma * r) - 1.0) + 1.0;
            raw[i] = v;
            sum += v;
        }
        if sum == 0.0 {
            // All k neighbours sit at the cutoff distance; the taper gives
            // them all zero, so fall back to an even share.
            for &i in nearest {
                raw[i] = 1.0;
            }
        }
    }
    WeightVector::normalized(raw, "neighbour taper")
}

/// k-nearest-neighbour weighting. `rho` scales how sharply weight decays
/// towards the k-th neighbour; `gamma` bends the decay.
pub fn knnw_weights(query: &[f64], train: &[Vec<f64>], k: usize, rho: f64, gamma: f64) -> Result<WeightVector> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::Config(format!("rho {rho} outside [0, 1]")));
    }
    if !gamma.is_finite() || gamma <= -1.0 {
        return Err(Error::Config(format!(
            "gamma must be finite and greater than -1, got {gamma}"
        )));
    }
    knnw_from_distances(&distances_to(query, train)?, k, rho, gamma)
}

pub(crate) fn fnm_from_distances(dists: &[f64], sigma: f64, alpha: f64) -> Result<WeightVector> {
    let raw = dists.iter().map(|&d| (-((d / sigma).powf(alpha))).exp()).collect();
    WeightVector::normalized(raw, "membership")
}

/// Fuzzy-neighbourhood weighting with membership `exp(-(d/sigma)^alpha)`.
pub fn fnm_weights(query: &[f64], train: &[Vec<f64>], sigma: f64, alpha: f64) -> Result<WeightVector> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Config(format!("sigma must be positive, got {sigma}")));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::Config(format!("alpha must be positive, got {alpha}")));
    }
    fnm_from_distances(&distances_to(query, train)?, sigma, alpha)
}

/// Product-Gaussian kernel weighting with one bandwidth per component.
pub fn nwe_weights(query: &[f64], train: &[Vec<f64>], bandwidth: &[f64]) -> Result<WeightVector> {
    if bandwidth.len() != query.len() {
        return Err(Error::Shape { expected: query.len(), actual: bandwidth.len() });
    }
    if bandwidth.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
        return Err(Error::Config("every bandwidth must be positive".into()));
    }
    if train.is_empty() {
        return Err(Error::InsufficientData("no training patterns".into()));
    }
    let mut raw = Vec::with_capacity(train.len());
    for x in train {
        if x.len() != query.len() {
            return Err(Error::Shape { expected: query.len(), actual: x.len() });
        }
        let mut exponent = 0.0;
        for ((q, v), h) in query.iter().zip(x).zip(bandwidth) {
            let d = q - v;
            exponent += d * d / (2.0 * h * h);
        }
        raw.push((-exponent).exp());
    }
    WeightVector::normalized(raw, "kernel")
}

pub(crate) fn nwe_isotropic_from_distances(dists: &[f64], h: f64) -> Result<WeightVector> {
    let raw = dists.iter().map(|&d| (-(d * d) / (2.0 * h * h)).exp()).collect();
    WeightVector::normalized(raw, "kernel")
}

pub(crate) fn grnn_from_distances(dists: &[f64], sigma: f64) -> Result<WeightVector> {
    let raw = dists.iter().map(|&d| (-(d * d) / (sigma * sigma)).exp()).collect();
    WeightVector::normalized(raw, "activation")
}

/// Radial-basis weighting `exp(-d^2/sigma^2)` with a single shared width.
pub fn grnn_weights(query: &[f64], train: &[Vec<f64>], sigma: f64) -> Result<WeightVector> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Config(format!("sigma must be positive, got {sigma}")));
    }
    grnn_from_distances(&distances_to(query, train)?, sigma)
}

/// Weighted average of training y-patterns, component by component.
pub fn regress(weights: &WeightVector, train_y: &[Vec<f64>]) -> Result<Vec<f64>> {
    if train_y.len() != weights.len() {
        return Err(Error::Shape { expected: weights.len(), actual: train_y.len() });
    }
    let m = train_y.first().map(|y| y.len()).unwrap_or(0);
    if m == 0 {
        return Err(Error::InsufficientData("no output patterns to average".into()));
    }
    let mut out = vec![0.0; m];
    for (w, y) in weights.weights().iter().zip(train_y) {
        if y.len() != m {
            return Err(Error::Shape { expected: m, actual: y.len() });
        }
        if *w == 0.0 {
            continue;
        }
        for (o, c) in out.iter_mut().zip(y) {
            *o += w * c;
        }
    }
    Ok(out)
}

/// Everything produced by a single-model forecast.
#[derive(Debug, Clone)]
pub struct SingleForecast {
    /// Forecast on the value scale, `m` months.
    pub forecast: Vec<f64>,
    /// Forecast y-pattern before decoding.
    pub y_pattern: Vec<f64>,
    /// Coding variables used to decode.
    pub coding: CodingVars,
    /// Weights over the training pairs.
    pub weights: WeightVector,
    /// Number of training pairs used.
    pub train_pairs: usize,
    /// Degenerate windows dropped while building the training set.
    pub skipped_pairs: usize,
}

/// Forecasts the `horizon` months starting at the split's test origin,
/// using only the training prefix.
pub fn forecast_single(series: &MonthlySeries, config: &PsfmConfig, split: &SplitSpec) -> Result<SingleForecast> {
    config.validate()?;
    split.validate(series)?;
    if config.m != split.horizon() {
        return Err(Error::Config(format!(
            "config horizon {} does not match split horizon {}",
            config.m,
            split.horizon()
        )));
    }
    let train = split.train(series);
    let set = patterns::build_pattern_set(train, config.n, config.m, config.variant.coding())?;

    let query_origin = train.len() - 1;
    let query = patterns::encode_x(train, query_origin, config.n)?;

    let xs = set.x_components();
    let weights = config.weights(query.components(), &xs)?;
    let ys = set.y_components();
    let y_pattern = regress(&weights, &ys)?;

    let coding = match &config.variant {
        VariantSpec::V2 => patterns::coding_at(train, query_origin, config.n, config.m, Variant::V2)?,
        VariantSpec::V1 { scalar } => {
            let last_origin = set.pairs().last().expect("set is non-empty").origin;
            let steps = query_origin - last_origin;
            let mean_hist = ScalarHistory::new(set.coding_means())?;
            let disp_hist = ScalarHistory::new(set.coding_dispersions())?;
            let mean = *forecast_scalar(&mean_hist, scalar, steps)?
                .last()
                .expect("horizon is at least 1");
            let dispersion = *forecast_scalar(&disp_hist, scalar, steps)?
                .last()
                .expect("horizon is at least 1");
            CodingVars::new(mean, dispersion).map_err(|_| {
                Error::Domain(format!(
                    "predicted coding dispersion {dispersion} is not positive; series {}",
                    series.id()
                ))
            })?
        }
    };

    let forecast = patterns::decode_y(&y_pattern, coding);
    Ok(SingleForecast {
        forecast,
        y_pattern,
        coding,
        weights,
        train_pairs: set.len(),
        skipped_pairs: set.skipped(),
    })
}
