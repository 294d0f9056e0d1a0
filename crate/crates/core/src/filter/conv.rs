//! Conventional NLMS with a fixed normalized stepsize.

use crate::error::{Error, Result};

use super::{axpy, dot, StepOutcome};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvNlmsState {
    pub h_hat: Vec<f64>,
    pub mu: f64,
    /// Adaptation is frozen while `x'x` is below this value.
    pub gate_threshold: Option<f64>,
}

impl ConvNlmsState {
    pub fn new(taps: usize, mu: f64, gate_threshold: Option<f64>) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::InvalidParameter(format!("mu must be > 0, got {mu}")));
        }
        if let Some(g) = gate_threshold {
            if !(g >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "gate threshold must be >= 0, got {g}"
                )));
            }
        }
        Ok(Self {
            h_hat: vec![0.0; taps],
            mu,
            gate_threshold,
        })
    }

    pub fn step(&mut self, x: &[f64], d: f64, eps: f64) -> Result<StepOutcome> {
        Error::check_len(self.h_hat.len(), x.len())?;
        let energy = dot(x, x);
        let e = d - dot(x, &self.h_hat);
        let gated = self.gate_threshold.is_some_and(|g| energy < g);
        let lambda = if gated { 0.0 } else { self.mu / (energy + eps) };
        axpy(&mut self.h_hat, lambda * e, x);
        Ok(StepOutcome::new(e, lambda, energy))
    }
}

/// One adaptation step; returns the successor state.
pub fn conv_nlms_step(
    state: &ConvNlmsState,
    x: &[f64],
    d: f64,
    eps: f64,
) -> Result<(ConvNlmsState, StepOutcome)> {
    let mut next = state.clone();
    let outcome = next.step(x, d, eps)?;
    Ok((next, outcome))
}
