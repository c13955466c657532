//! Regional adaptation toolkit.
//!
//! * [`parity`]: region partitions, quality aggregation, the GRP objective and
//!   the globalization factor.
//! * [`merge`]: tensor container I/O, linear checkpoint interpolation and
//!   interpolation-weight sweeps.
//! * [`filter`]: regional and reward filtering of JSONL corpora, translation
//!   augmentation and fine-tuning mix assembly.
//! * [`eval`]: benchmark breakdowns, reward-model agreement and rank
//!   aggregation.
//!
//! Parity and breakdown code is generic over [`Scalar`]; the aliases below
//! fix the common instantiations.

pub mod data;
pub mod eval;
pub mod filter;
pub mod io;
pub mod merge;
pub mod parity;
pub mod scalar;
pub mod seed;

pub use scalar::Scalar;

/// Exact rational scores, used to check printed tables without rounding noise.
pub type Exact = num_rational::Rational64;

pub type GrpConfig64 = parity::GrpConfig<f64>;
pub type GrpConfigExact = parity::GrpConfig<Exact>;
pub type QualitySet64 = parity::QualitySet<f64>;
pub type QualitySetExact = parity::QualitySet<Exact>;
pub type GlobalizationTable64 = parity::GlobalizationTable<f64>;
pub type GlobalizationTableExact = parity::GlobalizationTable<Exact>;
pub type Candidate64 = parity::Candidate<f64>;
pub type MetricRow64 = eval::MetricRow<f64>;
pub type MetricRowExact = eval::MetricRow<Exact>;
