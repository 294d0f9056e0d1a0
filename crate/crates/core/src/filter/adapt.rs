//! Optimal-stepsize NLMS approximated through delay coefficients.
//!
//! The true misalignment is unobservable, so the numerator of the optimal
//! stepsize is estimated from the first `n_t` coefficients, which model an
//! artificial delay in the echo path and should ideally be zero. The error
//! power in the denominator is smoothed with forgetting factor `eta`.

use crate::error::{Error, Result};

use super::{axpy, dot, StepOutcome};

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptNlmsState {
    pub h_hat: Vec<f64>,
    /// Recursive estimate of the previous squared error.
    pub err_power: f64,
    pub n_t: usize,
    pub eta: f64,
    pub lambda_cap: Option<f64>,
}

impl AdaptNlmsState {
    pub fn new(
        taps: usize,
        n_t: usize,
        eta: f64,
        err_power0: f64,
        lambda_cap: Option<f64>,
    ) -> Result<Self> {
        if n_t == 0 || n_t > taps {
            return Err(Error::InvalidParameter(format!(
                "n_t must be in 1..={taps}, got {n_t}"
            )));
        }
        if !(0.0..1.0).contains(&eta) {
            return Err(Error::InvalidParameter(format!("eta must be in [0, 1), got {eta}")));
        }
        if !(err_power0 >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "initial error power must be >= 0, got {err_power0}"
            )));
        }
        if let Some(cap) = lambda_cap {
            if !(cap > 0.0) {
                return Err(Error::InvalidParameter(format!("lambda cap must be > 0, got {cap}")));
            }
        }
        Ok(Self {
            h_hat: vec![0.0; taps],
            err_power: err_power0,
            n_t,
            eta,
            lambda_cap,
        })
    }

    fn smooth_error_power(&self, e: f64) -> f64 {
        (1.0 - self.eta) * e * e + self.eta * self.err_power
    }

    fn capped(&self, lambda: f64) -> f64 {
        self.lambda_cap.map_or(lambda, |cap| lambda.min(cap))
    }

    /// Conventional NLMS step `mu / (x'x + eps)` used to bootstrap the
    /// coefficients; keeps the error-power recursion running. The stepsize
    /// cap applies here too.
    pub fn warm_start_step(&mut self, x: &[f64], d: f64, mu: f64, eps: f64) -> Result<StepOutcome> {
        Error::check_len(self.h_hat.len(), x.len())?;
        let energy = dot(x, x);
        let e = d - dot(x, &self.h_hat);
        let lambda = self.capped(mu / (energy + eps));
        axpy(&mut self.h_hat, lambda * e, x);
        self.err_power = self.smooth_error_power(e);
        Ok(StepOutcome::new(e, lambda, energy))
    }

    pub fn step(&mut self, x: &[f64], d: f64, eps: f64) -> Result<StepOutcome> {
        Error::check_len(self.h_hat.len(), x.len())?;
        let energy = dot(x, x);
        let e = d - dot(x, &self.h_hat);
        let smoothed = self.smooth_error_power(e);
        let delay_power: f64 = self.h_hat[..self.n_t].iter().map(|h| h * h).sum();
        let lambda = self.capped(delay_power / self.n_t as f64 / (smoothed + eps));
        axpy(&mut self.h_hat, lambda * e, x);
        // The recursion carries the raw error, independent of the cap.
        self.err_power = smoothed;
        Ok(StepOutcome::new(e, lambda, energy))
    }
}

/// One adaptation step; returns the successor state.
pub fn adapt_nlms_step(
    state: &AdaptNlmsState,
    x: &[f64],
    d: f64,
    eps: f64,
) -> Result<(AdaptNlmsState, StepOutcome)> {
    let mut next = state.clone();
    let outcome = next.step(x, d, eps)?;
    Ok((next, outcome))
}
