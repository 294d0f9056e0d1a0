//! Streaming NLMS adaptive filters with an EM-learned stepsize.
//!
//! * [`filter`]: per-sample kernels for EM-NLMS and two baselines.
//! * [`oracle`]: dense Kalman recursion and a Monte-Carlo estimator of the
//!   optimal stepsize, for cross-checking the kernels.
//! * [`sim`]: synthetic echo-cancellation scenarios and WAV/CSV I/O.
//! * [`metrics`]: system distance, normalized stepsize, trace rows.
//! * [`config`] and [`experiment`]: the reproducible experiment runner
//!   behind the `emnlms` binary.

// `!(v > 0.0)` is used on purpose so that NaN parameters are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiment;
pub mod filter;
pub mod metrics;
pub mod oracle;
pub mod sim;

pub use error::{Error, Result, WavError};
