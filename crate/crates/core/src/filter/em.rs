//! EM-NLMS: NLMS whose stepsize comes from a state-space model of the echo
//! path with isotropic covariances.
//!
//! The E-step is a Kalman update with `C_h = c_h * I` and `C_w = c_w * I`,
//! which collapses to a scalar stepsize and a scalar posterior variance.
//! The M-step re-estimates the observation-noise variance `c_v` and the
//! process-noise variance `c_w` from the current sample; those estimates
//! parameterize the next E-step.

use crate::error::{Error, Result};

use super::{axpy, dot, StepOutcome};

/// Adaptive coefficients plus the scalar posterior variance `c_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub h_hat: Vec<f64>,
    pub c_h: f64,
}

impl FilterState {
    /// Zero coefficients with initial posterior variance `c_h`.
    pub fn new(taps: usize, c_h: f64) -> Result<Self> {
        if taps == 0 {
            return Err(Error::InvalidParameter("filter needs at least one tap".into()));
        }
        if !(c_h >= 0.0) {
            return Err(Error::InvalidParameter(format!("c_h must be >= 0, got {c_h}")));
        }
        Ok(Self {
            h_hat: vec![0.0; taps],
            c_h,
        })
    }

    pub fn taps(&self) -> usize {
        self.h_hat.len()
    }
}

/// Model parameters `{c_v, c_w}` and the stepsize regularizer `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmHyper {
    pub c_v: f64,
    pub c_w: f64,
    pub eps: f64,
}

impl EmHyper {
    pub fn new(c_v: f64, c_w: f64, eps: f64) -> Result<Self> {
        let hyper = Self { c_v, c_w, eps };
        hyper.validate()?;
        Ok(hyper)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_v >= 0.0) || !(self.c_w >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "variances must be >= 0 (c_v={}, c_w={})",
                self.c_v, self.c_w
            )));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidParameter(format!("eps must be > 0, got {}", self.eps)));
        }
        Ok(())
    }
}

impl Default for EmHyper {
    fn default() -> Self {
        Self {
            c_v: 0.1,
            c_w: 0.1,
            eps: 0.01,
        }
    }
}

/// Stepsize `(c_h + c_w) / (x'x (c_h + c_w) + c_v + eps)`.
///
/// A zero prior variance `c_h + c_w` yields exactly 0, which also covers the
/// unregularized `eps = 0` case with no uncertainty at all.
pub fn lambda_em(c_h_prev: f64, c_w: f64, c_v: f64, energy: f64, eps: f64) -> f64 {
    let prior = c_h_prev + c_w;
    if prior == 0.0 {
        return 0.0;
    }
    prior / (energy * prior + c_v + eps)
}

pub(crate) fn e_step_in_place(
    state: &mut FilterState,
    hyper: &EmHyper,
    x: &[f64],
    d: f64,
) -> Result<(StepOutcome, f64)> {
    let taps = state.h_hat.len();
    Error::check_len(taps, x.len())?;
    let energy = dot(x, x);
    let e = d - dot(x, &state.h_hat);
    let prior = state.c_h + hyper.c_w;
    let lambda = lambda_em(state.c_h, hyper.c_w, hyper.c_v, energy, hyper.eps);
    axpy(&mut state.h_hat, lambda * e, x);
    // lambda * energy < 1 <= M keeps the factor positive; max() absorbs rounding.
    state.c_h = ((1.0 - lambda * energy / taps as f64) * prior).max(0.0);
    Ok((StepOutcome::new(e, lambda, energy), energy))
}

/// E-step: MMSE coefficient update and scalar posterior variance update.
pub fn em_nlms_e_step(
    state: &FilterState,
    hyper: &EmHyper,
    x: &[f64],
    d: f64,
) -> Result<(FilterState, StepOutcome)> {
    let mut next = state.clone();
    let (outcome, _) = e_step_in_place(&mut next, hyper, x, d)?;
    Ok((next, outcome))
}

/// M-step result. `c_w_raw` is the unclamped process-noise estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MStepOutcome {
    pub hyper: EmHyper,
    pub c_w_raw: f64,
}

#[allow(clippy::too_many_arguments)]
fn m_step_from_parts(
    post_error: f64,
    energy: f64,
    c_h_new: f64,
    c_h_prev: f64,
    norm_sq_new: f64,
    norm_sq_prev: f64,
    taps: usize,
    eps: f64,
) -> MStepOutcome {
    let c_v = post_error * post_error + energy * c_h_new;
    let c_w_raw = c_h_new - c_h_prev + (norm_sq_new - norm_sq_prev) / taps as f64;
    MStepOutcome {
        hyper: EmHyper {
            c_v,
            c_w: c_w_raw.max(0.0),
            eps,
        },
        c_w_raw,
    }
}

/// M-step: instantaneous estimates of `c_v` and `c_w` for the next sample.
///
/// `after` must be the E-step output for `before` on the same `(x, d)`.
/// The observation-noise estimate uses the a-posteriori error (updated
/// coefficients). Negative process-noise estimates are floored at zero.
pub fn em_nlms_m_step(
    after: &FilterState,
    before: &FilterState,
    x: &[f64],
    d: f64,
    hyper: &EmHyper,
) -> Result<MStepOutcome> {
    let taps = after.h_hat.len();
    Error::check_len(taps, before.h_hat.len())?;
    Error::check_len(taps, x.len())?;
    Ok(m_step_from_parts(
        d - dot(x, &after.h_hat),
        dot(x, x),
        after.c_h,
        before.c_h,
        dot(&after.h_hat, &after.h_hat),
        dot(&before.h_hat, &before.h_hat),
        taps,
        hyper.eps,
    ))
}

/// Everything produced by one full EM-NLMS sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmStepReport {
    pub outcome: StepOutcome,
    /// Posterior variance after the E-step.
    pub c_h: f64,
    /// Parameters handed to the next sample.
    pub hyper: EmHyper,
    pub c_w_raw: f64,
}

/// Streaming EM-NLMS filter: E-step followed by M-step on every sample.
#[derive(Debug, Clone)]
pub struct EmNlms {
    state: FilterState,
    hyper: EmHyper,
    norm_sq: f64,
    adapt_hyper: bool,
}

impl EmNlms {
    pub fn new(taps: usize, c_h0: f64, hyper: EmHyper) -> Result<Self> {
        hyper.validate()?;
        Ok(Self {
            state: FilterState::new(taps, c_h0)?,
            hyper,
            norm_sq: 0.0,
            adapt_hyper: true,
        })
    }

    /// Keeps `c_v` and `c_w` fixed at their initial values (E-step only).
    pub fn with_fixed_hyper(mut self) -> Self {
        self.adapt_hyper = false;
        self
    }

    pub fn state(&self) -> &FilterState {
        &self.state
    }

    pub fn hyper(&self) -> &EmHyper {
        &self.hyper
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.state.h_hat
    }

    pub fn step(&mut self, x: &[f64], d: f64) -> Result<EmStepReport> {
        let c_h_prev = self.state.c_h;
        let (outcome, energy) = e_step_in_place(&mut self.state, &self.hyper, x, d)?;
        let norm_sq = dot(&self.state.h_hat, &self.state.h_hat);
        let m = m_step_from_parts(
            d - dot(x, &self.state.h_hat),
            energy,
            self.state.c_h,
            c_h_prev,
            norm_sq,
            self.norm_sq,
            self.state.taps(),
            self.hyper.eps,
        );
        self.norm_sq = norm_sq;
        if self.adapt_hyper {
            self.hyper = m.hyper;
        }
        Ok(EmStepReport {
            outcome,
            c_h: self.state.c_h,
            hyper: self.hyper,
            c_w_raw: m.c_w_raw,
        })
    }
}
