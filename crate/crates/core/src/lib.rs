//! Identification of students with a migrant background in a complete
//! university register.
//!
//! Birthplace and citizenship are in the register; whether both parents were
//! Italian at birth (PA) is known only for survey respondents. This crate
//! holds the indicator algebra and the scalar traits the numeric crates are
//! generic over: `mbid-ingest`, `mbid-features`, `mbid-models`, `mbid-eval`,
//! `mbid-expand`, `mbid-synth` and `mbid-pipeline`, which wires them together.

pub mod domain;
pub mod scalar;

pub use domain::{compute_delta, compute_delta_type, BackgroundKind, MigrantBackground};
pub use scalar::{Field, Scalar};

/// Version shared by the workspace crates, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
