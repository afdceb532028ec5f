//! Ensembles: randomized homogeneous committees and heterogeneous pools.
//!
//! Homogeneous ensembles perturb one fuzzy-membership base model five ways,
//! one strategy per ensemble:
//!
//! 1. each member trains on a random subset of the pattern pairs,
//! 2. each member sees a random subset of the input components, with the
//!    width rescaled to keep average memberships comparable,
//! 3. each member jitters the width itself,
//! 4. each member multiplies input components (training and query) by
//!    Gaussian noise around one,
//! 5. each member multiplies output components by Gaussian noise around one.
//!
//! Members aggregate on the normalized output scale and decode once with the
//! unperturbed coding. A member whose memberships all underflow fails alone;
//! the committee tolerates up to ten percent of such failures.
//!
//! Heterogeneous ensembles average decoded forecasts from a bank of tuned
//! single models: the four families under input-window coding, the same four
//! under output-window coding with a simple coding-variable forecaster, the
//! same four with a smoothing forecaster, and the pool of all twelve.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::models::{fnm_weights, regress, ModelKind, ModelParams, PsfmConfig, VariantSpec};
use crate::patterns::{self, CodingVars, Variant};
use crate::scalar::ScalarModelSpec;
use crate::series::{MonthlySeries, SplitSpec};

/// The five perturbation strategies for homogeneous committees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DiversityStrategy {
    PairSubsample,
    FeatureSubset,
    WidthJitter,
    InputNoise,
    OutputNoise,
}

impl DiversityStrategy {
    pub const ALL: [DiversityStrategy; 5] = [
        DiversityStrategy::PairSubsample,
        DiversityStrategy::FeatureSubset,
        DiversityStrategy::WidthJitter,
        DiversityStrategy::InputNoise,
        DiversityStrategy::OutputNoise,
    ];
}

impl std::fmt::Display for DiversityStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            DiversityStrategy::PairSubsample => "FNMe1",
            DiversityStrategy::FeatureSubset => "FNMe2",
            DiversityStrategy::WidthJitter => "FNMe3",
            DiversityStrategy::InputNoise => "FNMe4",
            DiversityStrategy::OutputNoise => "FNMe5",
        };
        f.write_str(name)
    }
}

/// Configuration of one homogeneous committee.
#[derive(Debug, Clone, PartialEq)]
pub struct DiversitySpec {
    pub strategy: DiversityStrategy,
    /// Base model; must be the fuzzy-membership family with input-window coding.
    pub base: PsfmConfig,
    pub members: usize,
    pub seed: u64,
    /// Fraction of pattern pairs each member trains on.
    pub train_frac: f64,
    /// Fraction of input components each member sees.
    pub feature_frac: f64,
    /// Standard deviation of the multiplicative width jitter.
    pub width_jitter_sd: f64,
    /// Standard deviation of the multiplicative input noise.
    pub input_noise_sd: f64,
    /// Standard deviation of the multiplicative output noise.
    pub output_noise_sd: f64,
}

impl DiversitySpec {
    /// Committee with the standard perturbation magnitudes.
    pub fn new(strategy: DiversityStrategy, base: PsfmConfig, members: usize, seed: u64) -> Self {
        DiversitySpec {
            strategy,
            base,
            members,
            seed,
            train_frac: 0.85,
            feature_frac: 0.925,
            width_jitter_sd: 0.475,
            input_noise_sd: 0.4,
            output_noise_sd: 0.65,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.base.kind() != ModelKind::Fnm {
            return Err(Error::Config(format!(
                "homogeneous committees take an FNM base, got {}",
                self.base.kind()
            )));
        }
        if self.base.variant != VariantSpec::V2 {
            return Err(Error::Config(
                "homogeneous committees take an input-window-coded base".into(),
            ));
        }
        if self.members < 1 {
            return Err(Error::Config("a committee needs at least one member".into()));
        }
        for (name, frac) in [("train_frac", self.train_frac), ("feature_frac", self.feature_frac)] {
            if !(frac > 0.0 && frac <= 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1], got {frac}")));
            }
        }
        for (name, sd) in [
            ("width_jitter_sd", self.width_jitter_sd),
            ("input_noise_sd", self.input_noise_sd),
            ("output_noise_sd", self.output_noise_sd),
        ] {
            if !(sd.is_finite() && sd >= 0.0) {
                return Err(Error::Config(format!("{name} must be non-negative, got {sd}")));
            }
        }
        Ok(())
    }

    fn base_sigma_alpha(&self) -> (f64, f64) {
        match self.base.params {
            ModelParams::Fnm { sigma, alpha } => (sigma, alpha),
            _ => unreachable!("validated as FNM"),
        }
    }
}

/// One member's perturbed view of the training material.
pub(crate) struct MemberDraw {
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<Vec<f64>>,
    pub query: Vec<f64>,
    pub sigma: f64,
}

/// Deterministic RNG for one member: fixed seed, stream = member index.
fn member_rng(seed: u64, member_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(member_index as u64);
    rng
}

fn unit_normal_noise(sd: f64) -> Normal<f64> {
    Normal::new(1.0, sd).expect("non-negative standard deviation")
}

pub(crate) fn draw_member(
    spec: &DiversitySpec,
    xs: &[Vec<f64>],
    ys: &[Vec<f64>],
    query: &[f64],
    member_index: usize,
) -> MemberDraw {
    let mut rng = member_rng(spec.seed, member_index);
    let (sigma, _) = spec.base_sigma_alpha();
    let n_pairs = xs.len();
    let n_comp = query.len();

    match spec.strategy {
        DiversityStrategy::PairSubsample => {
            let take = ((spec.train_frac * n_pairs as f64).round() as usize).clamp(1, n_pairs);
            let mut picked = rand::seq::index::sample(&mut rng, n_pairs, take).into_vec();
            picked.sort_unstable();
            MemberDraw {
                xs: picked.iter().map(|&i| xs[i].clone()).collect(),
                ys: picked.iter().map(|&i| ys[i].clone()).collect(),
                query: query.to_vec(),
                sigma,
            }
        }
        DiversityStrategy::FeatureSubset => {
            let take = ((spec.feature_frac * n_comp as f64).floor() as usize).clamp(1, n_comp);
            let mut feats = rand::seq::index::sample(&mut rng, n_comp, take).into_vec();
            feats.sort_unstable();
            let project = |row: &[f64]| feats.iter().map(|&j| row[j]).collect::<Vec<f64>>();
            MemberDraw {
                xs: xs.iter().map(|x| project(x)).collect(),
                ys: ys.to_vec(),
                query: project(query),
                sigma: sigma * (take as f64 / n_comp as f64).sqrt(),
            }
        }
        DiversityStrategy::WidthJitter => {
            let noise = unit_normal_noise(spec.width_jitter_sd);
            let factor = noise.sample(&mut rng).max(1e-6);
            MemberDraw {
                xs: xs.to_vec(),
                ys: ys.to_vec(),
                query: query.to_vec(),
                sigma: sigma * factor,
            }
        }
        DiversityStrategy::InputNoise => {
            let noise = unit_normal_noise(spec.input_noise_sd);
            let mut perturb = |row: &[f64]| {
                row.iter().map(|v| v * noise.sample(&mut rng)).collect::<Vec<f64>>()
            };
            let xs = xs.iter().map(|x| perturb(x)).collect();
            let query = perturb(query);
            MemberDraw { xs, ys: ys.to_vec(), query, sigma }
        }
        DiversityStrategy::OutputNoise => {
            let noise = unit_normal_noise(spec.output_noise_sd);
            let ys = ys
                .iter()
                .map(|y| y.iter().map(|v| v * noise.sample(&mut rng)).collect())
                .collect();
            MemberDraw { xs: xs.to_vec(), ys, query: query.to_vec(), sigma }
        }
    }
}

pub(crate) fn within_failure_budget(failures: usize, members: usize) -> bool {
    failures * 10 <= members
}

/// Result of a homogeneous committee forecast.
#[derive(Debug, Clone)]
pub struct HomogeneousForecast {
    /// Committee forecast on the value scale.
    pub forecast: Vec<f64>,
    /// Committee output pattern before decoding.
    pub y_pattern: Vec<f64>,
    /// Coding used to decode the committee and its members.
    pub coding: CodingVars,
    /// Output patterns of the surviving members.
    pub member_patterns: Vec<Vec<f64>>,
    /// Decoded forecasts of the surviving members.
    pub member_forecasts: Vec<Vec<f64>>,
    /// Members that failed, as (one-based index, reason).
    pub failures: Vec<(usize, String)>,
}

/// Runs the committee described by `spec` on the training prefix of `split`.
pub fn homogeneous_forecast(
    series: &MonthlySeries,
    spec: &DiversitySpec,
    split: &SplitSpec,
) -> Result<HomogeneousForecast> {
    spec.validate()?;
    split.validate(series)?;
    if spec.base.m != split.horizon() {
        return Err(Error::Config(format!(
            "base horizon {} does not match split horizon {}",
            spec.base.m,
            split.horizon()
        )));
    }
    let train = split.train(series);
    let set = patterns::build_pattern_set(train, spec.base.n, spec.base.m, Variant::V2)?;
    let xs = set.x_components();
    let ys = set.y_components();
    let query_origin = train.len() - 1;
    let query = patterns::encode_x(train, query_origin, spec.base.n)?;
    let coding = patterns::coding_at(train, query_origin, spec.base.n, spec.base.m, Variant::V2)?;
    let (_, alpha) = spec.base_sigma_alpha();

    let mut member_patterns = Vec::with_capacity(spec.members);
    let mut failures = Vec::new();
    for member_index in 1..=spec.members {
        let draw = draw_member(spec, &xs, &ys, query.components(), member_index);
        let outcome = fnm_weights(&draw.query, &draw.xs, draw.sigma, alpha)
            .and_then(|w| regress(&w, &draw.ys));
        match outcome {
            Ok(pattern) => member_patterns.push(pattern),
            Err(e) => failures.push((member_index, e.to_string())),
        }
    }
    if !within_failure_budget(failures.len(), spec.members) {
        let (first_index, first_reason) = &failures[0];
        return Err(Error::Ensemble(format!(
            "{} of {} members failed (first: member {first_index}: {first_reason})",
            failures.len(),
            spec.members
        )));
    }

    let y_pattern = aggregate_mean(&member_patterns)?;
    let forecast = patterns::decode_y(&y_pattern, coding);
    let member_forecasts = member_patterns
        .iter()
        .map(|p| patterns::decode_y(p, coding))
        .collect();
    Ok(HomogeneousForecast {
        forecast,
        y_pattern,
        coding,
        member_patterns,
        member_forecasts,
        failures,
    })
}

fn pairwise_sum(rows: &[Vec<f64>], col: usize, lo: usize, hi: usize) -> f64 {
    if hi - lo == 1 {
        rows[lo][col]
    } else {
        let mid = lo + (hi - lo) / 2;
        pairwise_sum(rows, col, lo, mid) + pairwise_sum(rows, col, mid, hi)
    }
}

/// Component-wise mean of equal-length rows, summed pairwise so that the
/// mean of identical rows reproduces them exactly when the count is a power
/// of two.
pub fn aggregate_mean(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = rows
        .first()
        .ok_or_else(|| Error::Ensemble("no member forecasts to aggregate".into()))?;
    let width = first.len();
    for row in rows {
        if row.len() != width {
            return Err(Error::Shape { expected: width, actual: row.len() });
        }
    }
    let count = rows.len() as f64;
    Ok((0..width)
        .map(|col| pairwise_sum(rows, col, 0, rows.len()) / count)
        .collect())
}

/// The four heterogeneous pools.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EnsembleId {
    E1,
    E2,
    E3,
    E4,
}

impl EnsembleId {
    pub const ALL: [EnsembleId; 4] = [EnsembleId::E1, EnsembleId::E2, EnsembleId::E3, EnsembleId::E4];
}

impl std::fmt::Display for EnsembleId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            EnsembleId::E1 => "E1",
            EnsembleId::E2 => "E2",
            EnsembleId::E3 => "E3",
            EnsembleId::E4 => "E4",
        };
        f.write_str(name)
    }
}

/// Suffix distinguishing the coding-variable forecaster on member labels.
pub fn route_suffix(scalar: &ScalarModelSpec) -> &'static str {
    if is_smoothing_route(scalar) {
        "+ES"
    } else {
        "+SIM"
    }
}

fn is_smoothing_route(scalar: &ScalarModelSpec) -> bool {
    matches!(scalar, ScalarModelSpec::HoltLinear { .. } | ScalarModelSpec::AutoSmoothing)
}

fn is_simple_route(scalar: &ScalarModelSpec) -> bool {
    matches!(
        scalar,
        ScalarModelSpec::Naive
            | ScalarModelSpec::Drift
            | ScalarModelSpec::SeasonalNaive(_)
            | ScalarModelSpec::AutoSimple
    )
}

/// Tuned single-model configurations the heterogeneous pools draw from.
#[derive(Debug, Clone, Default)]
pub struct ModelBank {
    v2: BTreeMap<ModelKind, PsfmConfig>,
    v1_simple: BTreeMap<ModelKind, PsfmConfig>,
    v1_smoothing: BTreeMap<ModelKind, PsfmConfig>,
}

impl ModelBank {
    pub fn new() -> Self {
        ModelBank::default()
    }

    /// Registers an input-window-coded model under its family.
    pub fn set_v2(&mut self, config: PsfmConfig) -> Result<()> {
        config.validate()?;
        if config.variant != VariantSpec::V2 {
            return Err(Error::Config("expected an input-window-coded model".into()));
        }
        self.v2.insert(config.kind(), config);
        Ok(())
    }

    /// Registers an output-window-coded model whose coding variables come
    /// from a simple forecaster.
    pub fn set_v1_simple(&mut self, config: PsfmConfig) -> Result<()> {
        config.validate()?;
        match &config.variant {
            VariantSpec::V1 { scalar } if is_simple_route(scalar) => {}
            _ => {
                return Err(Error::Config(
                    "expected output-window coding with a simple coding forecaster".into(),
                ))
            }
        }
        self.v1_simple.insert(config.kind(), config);
        Ok(())
    }

    /// Registers an output-window-coded model whose coding variables come
    /// from an exponential-smoothing forecaster.
    pub fn set_v1_smoothing(&mut self, config: PsfmConfig) -> Result<()> {
        config.validate()?;
        match &config.variant {
            VariantSpec::V1 { scalar } if is_smoothing_route(scalar) => {}
            _ => {
                return Err(Error::Config(
                    "expected output-window coding with a smoothing coding forecaster".into(),
                ))
            }
        }
        self.v1_smoothing.insert(config.kind(), config);
        Ok(())
    }

    fn group(
        &self,
        id: EnsembleId,
        map: &BTreeMap<ModelKind, PsfmConfig>,
        suffix: &str,
    ) -> Result<Vec<(String, PsfmConfig)>> {
        let mut out = Vec::with_capacity(ModelKind::ALL.len());
        for kind in ModelKind::ALL {
            let config = map.get(&kind).ok_or_else(|| {
                Error::Ensemble(format!("pool {id} is missing a {kind}{suffix} model"))
            })?;
            out.push((format!("{kind}{suffix}"), config.clone()));
        }
        Ok(out)
    }

    /// The labelled members of a pool, in a fixed order.
    pub fn members(&self, id: EnsembleId) -> Result<Vec<(String, PsfmConfig)>> {
        match id {
            EnsembleId::E1 => self.group(id, &self.v2, ""),
            EnsembleId::E2 => self.group(id, &self.v1_simple, "+SIM"),
            EnsembleId::E3 => self.group(id, &self.v1_smoothing, "+ES"),
            EnsembleId::E4 => {
                let mut all = self.group(id, &self.v2, "")?;
                all.extend(self.group(id, &self.v1_simple, "+SIM")?);
                all.extend(self.group(id, &self.v1_smoothing, "+ES")?);
                Ok(all)
            }
        }
    }
}

/// Result of a heterogeneous pool forecast.
#[derive(Debug, Clone)]
pub struct HeterogeneousForecast {
    /// Mean of the member forecasts on the value scale.
    pub forecast: Vec<f64>,
    /// Labelled member forecasts, in pool order.
    pub members: Vec<(String, Vec<f64>)>,
}

/// Averages the decoded forecasts of every model in the pool. Any member
/// failure aborts the pool.
pub fn heterogeneous_forecast(
    series: &MonthlySeries,
    bank: &ModelBank,
    id: EnsembleId,
    split: &SplitSpec,
) -> Result<HeterogeneousForecast> {
    let mut members = Vec::new();
    let mut failures = Vec::new();
    for (label, config) in bank.members(id)? {
        match crate::models::forecast_single(series, &config, split) {
            Ok(out) => members.push((label, out.forecast)),
            Err(e) => failures.push((label, e.to_string())),
        }
    }
    if !failures.is_empty() {
        return Err(Error::Member(failures));
    }
    let rows: Vec<Vec<f64>> = members.iter().map(|(_, f)| f.clone()).collect();
    let forecast = aggregate_mean(&rows)?;
    Ok(HeterogeneousForecast { forecast, members })
}

/// Stable 64-bit seed for a labelled sub-task of a seeded run (FNV-1a over
/// the seed's little-endian bytes followed by the label).
pub fn derive_seed(run_seed: u64, label: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for b in run_seed.to_le_bytes() {
        h = (h ^ b as u64).wrapping_mul(PRIME);
    }
    for b in label.as_bytes() {
        h = (h ^ *b as u64).wrapping_mul(PRIME);
    }
    h
}
