//! Per-sample adaptation kernels.
//!
//! All three filters share the NLMS coefficient update
//! `h_hat <- h_hat + lambda * x * e` and differ only in how the stepsize
//! `lambda` is chosen:
//!
//! * [`em`]: EM-NLMS, where the stepsize follows from a scalar-covariance
//!   Kalman recursion whose noise variances are re-estimated every sample.
//! * [`adapt`]: the delay-coefficient approximation of the optimal stepsize
//!   with a recursively smoothed error power.
//! * [`conv`]: fixed normalized stepsize with an optional energy gate.
//!
//! Regressors are passed newest sample first, `x = [x_n, x_{n-1}, ..., x_{n-M+1}]`.

pub mod adapt;
pub mod conv;
pub mod em;

pub use adapt::{adapt_nlms_step, AdaptNlmsState};
pub use conv::{conv_nlms_step, ConvNlmsState};
pub use em::{
    em_nlms_e_step, em_nlms_m_step, lambda_em, EmHyper, EmNlms, EmStepReport, FilterState,
    MStepOutcome,
};

use crate::error::{Error, Result};

/// Result of one adaptation step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// A-priori error `d - x'h_hat` (coefficients before the update).
    pub e: f64,
    pub lambda: f64,
    /// Normalized stepsize `lambda * x'x`.
    pub alpha: f64,
}

impl StepOutcome {
    pub(crate) fn new(e: f64, lambda: f64, energy: f64) -> Self {
        Self {
            e,
            lambda,
            alpha: lambda * energy,
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `h_hat += gain * x`
#[inline]
pub(crate) fn axpy(h_hat: &mut [f64], gain: f64, x: &[f64]) {
    if gain == 0.0 {
        return;
    }
    for (h, xi) in h_hat.iter_mut().zip(x) {
        *h += gain * xi;
    }
}

/// A-priori error `d - x'h_hat`.
pub fn error_signal(x: &[f64], h_hat: &[f64], d: f64) -> Result<f64> {
    Error::check_len(h_hat.len(), x.len())?;
    Ok(d - dot(x, h_hat))
}

/// Regressor energy `x'x`, recomputed from scratch each call.
pub fn energy(x: &[f64]) -> f64 {
    dot(x, x)
}
