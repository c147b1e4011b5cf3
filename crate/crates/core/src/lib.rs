//! Expected-utility portfolio choice in the Arbitrage Pricing Model with
//! countably many assets, studied at finite truncation.
//!
//! The crate is organized bottom-up:
//!
//! - [`scenario`]: standardized noise laws, exact product enumeration and
//!   counter-based Monte Carlo scenario sets.
//! - [`market`]: return equations, the drift reparametrization `b_i`, the
//!   asset-to-factor portfolio map and the structural assumption checks.
//! - [`utility`]: concave nondecreasing utilities with growth certificates.
//! - [`optimizer`]: the one-asset problem, the K-truncated problem and
//!   truncation ladders.
//! - [`risk_neutral`]: logistic tilting and utility-gradient measures that
//!   remove every drift.
//! - [`diagnostics`]: exponential-moment bounds, the Hölder chain, the
//!   competing tail assumptions and the report bundle.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod market;
pub mod numeric;
pub mod optimizer;
pub mod risk_neutral;
pub mod scenario;
pub mod utility;
mod verdict;

pub use error::{Error, Result};
pub use market::{build_market, AssetPortfolio, FactorStrategy, MarketModel, ModelSpec};
pub use scenario::{DistributionSpec, ScenarioSet};
pub use utility::{GrowthBounds, Utility, UtilityKind};
pub use verdict::Verdict;

// Book chapters, compiled and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/market.md")]
    mod market {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
    #[doc = include_str!("../../../book/src/utilities.md")]
    mod utilities {}
    #[doc = include_str!("../../../book/src/optimizer.md")]
    mod optimizer {}
    #[doc = include_str!("../../../book/src/measure.md")]
    mod measure {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
