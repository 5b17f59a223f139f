//! Wellness scoring from self-reported activity labels with a two-level
//! Mamdani fuzzy inference system.
//!
//! The crate is organized bottom-up:
//!
//! - [`fuzzy`]: membership functions, min/max norms, clipping, aggregation
//!   and centroid defuzzification.
//! - [`dsl`]: the `.fzc` text format for variables and rule bases.
//! - [`engine`]: a single Mamdani controller.
//! - [`stl`]: loess smoothing and seasonal-trend decomposition.
//! - [`ingest`]: per-user label logs and daily category fractions.
//! - [`pipeline`]: base controllers, the top controller and per-user reports.
//! - [`synth`]: seeded synthetic label logs.

pub mod dsl;
pub mod engine;
pub mod fuzzy;
pub mod ingest;
pub mod pipeline;
pub mod stl;
pub mod synth;
