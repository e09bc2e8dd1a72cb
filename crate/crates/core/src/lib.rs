//! Observational-analysis toolkit for online community governance.
//!
//! Reconstructs moderator tenures from archived roster snapshots, aggregates
//! sentiment of discussion about moderators, and estimates confounder-adjusted
//! effects with binned inverse probability of treatment weighting and
//! cohort-aligned difference-in-differences.

pub mod acquisition;
pub mod bins;
pub mod chart;
pub mod did;
pub mod discourse;
pub mod error;
pub mod linalg;
pub mod model;
pub mod propensity;
pub mod stats;
pub mod studies;
pub mod synth;
pub mod timelines;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
