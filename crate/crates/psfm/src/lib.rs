//! Pattern similarity-based forecasting for monthly demand series.
//!
//! Monthly series with trend and annual seasonality are turned into pairs of
//! normalized patterns: an input pattern coding the last `n` months and an
//! output pattern coding the next `m`. A forecast is the similarity-weighted
//! average of historical output patterns, decoded back to the value scale.
//!
//! The crate provides four weighting families (nearest-neighbour taper,
//! fuzzy neighbourhood, product-kernel regression, radial-basis network),
//! two coding variants, scalar methods for predicting coding variables,
//! leave-one-out grid tuning, heterogeneous and randomized homogeneous
//! ensembles, and a benchmark harness with reproducible reports.

pub mod bench;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod models;
pub mod patterns;
pub mod scalar;
pub mod series;
pub mod tuning;

pub use error::{Error, Result};

/// Compiles and runs every code block in the guide, keeping the book and
/// the library in lockstep.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/patterns.md")]
    mod patterns {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/ensembles.md")]
    mod ensembles {}
    #[doc = include_str!("../../../book/src/tuning.md")]
    mod tuning {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
