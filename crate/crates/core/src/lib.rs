//! Measurement, prediction and simulation of accelerating growth in
//! user-activity systems.
//!
//! Total daily activity `F` scales with the active population `P` as
//! `F ~ P^gamma`. When individual activity follows a time-invariant power
//! law `n(f) = (f / f_max)^(-beta)`, the growth exponent is fixed by the
//! heterogeneity exponent: `gamma = 2 / beta` for `1 < beta < 2` and
//! `gamma = 1` otherwise.
//!
//! The crate is organised as:
//!
//! * [`theory`]: closed-form moments and the `gamma(beta)` law.
//! * [`sampler`]: seedable synthetic activity data.
//! * [`ingest`]: event-log parsing and daily aggregation.
//! * [`estimators`]: orthogonal regression for `gamma`, distribution
//!   collapse and maximum likelihood for `beta`, bootstrap intervals.
//! * [`experiment`]: parameter sweeps and theory-vs-fit comparisons.
//! * [`table`]: the TSV schemas shared with the command-line tool.

pub mod error;
pub mod estimators;
pub mod experiment;
pub mod ingest;
pub mod sampler;
pub mod seed;
pub mod table;
pub mod theory;

pub use error::{Error, Result};
pub use estimators::{BetaFit, BetaMethod, RescaledHistogram, TlsFit};
pub use ingest::{ActivityEvent, ActivityHistogram, DailySnapshot, DayKey, EventFormat};
pub use sampler::{Protocol, SamplerConfig, SyntheticSeries};
pub use theory::{Exponents, MomentPair};
