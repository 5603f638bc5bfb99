//! Local explanations of neural predictions through their latent space.
//!
//! The crate bundles a small dense network engine, the latent-neighbourhood
//! explainer, two comparison explainers, the evaluation metrics and the
//! dataset pipelines they run on.

// `!(x >= 0.0)` style guards reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baselines;
pub mod data;
pub mod error;
pub mod explanation;
pub mod lionets;
pub mod metrics;
pub mod neural;
pub mod numerics;
pub mod recipes;

pub use error::{Error, Result};
pub use explanation::{Explainer, Explanation, ExplanationFile, SurrogateSummary};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/networks.md")]
    mod networks {}
    #[doc = include_str!("../../../book/src/neighbourhoods.md")]
    mod neighbourhoods {}
    #[doc = include_str!("../../../book/src/explaining.md")]
    mod explaining {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
