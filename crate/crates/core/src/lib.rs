//! Person-anchored context mining over diachronic n-gram corpora.
//!
//! The crate follows the data flow of the pipeline:
//!
//! * [`ngram`] parses corpus shards, cleans tokens, matches roster names and
//!   aggregates per-decade context into [`context::ContextTable`]s.
//! * [`roster`] ingests labeled person exports and builds the name index.
//! * [`embedding`] loads pre-aligned per-decade word vectors.
//! * [`group_embedding`] samples contrastive positives/negatives from two
//!   groups' context tables and trains one vector per group and decade.
//! * [`diachronic`], [`semaxes`] and [`toxicity`] analyze the trained vectors
//!   and context tables.
//! * [`synth`] generates seeded fixtures with planted ground truth.

pub mod context;
pub mod diachronic;
pub mod embedding;
mod error;
pub mod group_embedding;
pub mod ngram;
pub mod roster;
pub mod semaxes;
pub mod synth;
pub mod toxicity;
mod types;

pub use error::Error;
pub use types::{bucket_by_decade, Decade, DecadeRange, Group, PersonId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
