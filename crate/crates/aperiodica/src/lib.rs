//! Exact generation and bounded-distance analysis of aperiodic Delone sets.
//!
//! The crate provides:
//!
//! * exact region algebra for finite unions of axis-aligned boxes, with
//!   boundary-tube measures (`geometry`);
//! * generators for lattices, the rich-set example `L = Z u {1/2 + 2^n}`,
//!   Fibonacci-type cut-and-project sets and substitution tilings, all with
//!   coordinates in Q(sqrt5) (`pointsets`);
//! * density-relative discrepancy reports, c-deviance classification and
//!   van Hove diagnostics (`discrepancy`);
//! * bottleneck bipartite matching with Hall witnesses and the count-ratio
//!   test for bounded-distance inequivalence (`matcher`);
//! * constructive searches for deviant regions, opposite-sign translates,
//!   shift-robust deviant regions and repetitivity radii (`search`);
//! * the word-indexed nested-patch construction that produces hull-element
//!   windows and distinguishing evidence (`hull`);
//! * randomized verification suites for the geometric counting lemmas
//!   (`verify`) and a CLI (`cli`).
//!
//! Geometry kernels are generic over the [`scalar::Scalar`] trait; the
//! concrete aliases below fix the exact Q(sqrt5) instantiation used
//! throughout the point-set machinery.

pub mod cli;
pub mod discrepancy;
pub mod geometry;
pub mod hull;
pub mod io;
pub mod matcher;
pub mod pointsets;
pub mod scalar;
pub mod search;
pub mod verify;

pub use scalar::{Quad, Scalar};

/// Exact axis-aligned box over Q(sqrt5).
pub type QBox = geometry::AxisBox<Quad>;
/// Exact region (finite disjoint union of boxes) over Q(sqrt5).
pub type QRegion = geometry::Region<Quad>;
/// Exact point over Q(sqrt5).
pub type QPoint = geometry::Point<Quad>;
/// Exact boundary-tube measure over Q(sqrt5).
pub type QTubeMeasure = geometry::TubeMeasure<Quad>;

/// Floating-point region, used by estimators and cross-check tests.
pub type FRegion = geometry::Region<f64>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("not repetitive at this scale: {0}")]
    NotRepetitive(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("internal invariant violation: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
