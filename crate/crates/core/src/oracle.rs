//! Slow reference implementations used to cross-check the streaming filters.
//!
//! Nothing here is on the per-sample path of an experiment: the Kalman
//! recursion keeps a dense `M x M` covariance and the ensemble estimator
//! simulates thousands of independent realizations of the state-space model.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filter::{em_nlms_e_step, EmHyper, FilterState};

/// Coefficient estimate with a dense posterior covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct FullKalmanState {
    pub h_hat: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl FullKalmanState {
    /// `h_hat` with isotropic covariance `c * I`.
    pub fn isotropic(h_hat: &[f64], c: f64) -> Self {
        let m = h_hat.len();
        Self {
            h_hat: DVector::from_column_slice(h_hat),
            cov: DMatrix::identity(m, m) * c,
        }
    }
}

/// One Kalman update for the random-walk echo path model
/// `h_n = h_{n-1} + w_n`, `d_n = x_n' h_n + v_n`.
pub fn kalman_full_step(
    state: &FullKalmanState,
    x: &[f64],
    d: f64,
    c_w: f64,
    c_v: f64,
) -> Result<FullKalmanState> {
    let m = state.h_hat.len();
    Error::check_len(m, x.len())?;
    if state.cov.nrows() != m || state.cov.ncols() != m {
        return Err(Error::NonSquare {
            rows: state.cov.nrows(),
            cols: state.cov.ncols(),
        });
    }
    let x = DVector::from_column_slice(x);
    let identity = DMatrix::<f64>::identity(m, m);
    let prior = &state.cov + &identity * c_w;
    let denom = (x.transpose() * &prior * &x)[(0, 0)] + c_v;
    if denom == 0.0 {
        return Err(Error::SingularDenominator);
    }
    let step_matrix = &prior / denom;
    let e = d - state.h_hat.dot(&x);
    let h_hat = &state.h_hat + &step_matrix * &x * e;
    let cov = (identity - &step_matrix * &x * x.transpose()) * &prior;
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok(FullKalmanState { h_hat, cov })
}

/// Mean of the diagonal.
pub fn trace_average(cov: &DMatrix<f64>) -> Result<f64> {
    if cov.nrows() != cov.ncols() || cov.nrows() == 0 {
        return Err(Error::NonSquare {
            rows: cov.nrows(),
            cols: cov.ncols(),
        });
    }
    Ok(cov.trace() / cov.nrows() as f64)
}

/// Random-walk echo path with white observation noise and white Gaussian
/// regressors; trial `i` draws from seed `seed + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerativeModel {
    pub taps: usize,
    pub c_w: f64,
    pub c_v: f64,
    pub h_init: Vec<f64>,
    pub seed: u64,
}

/// Initial state and fixed parameters of the EM-NLMS E-step under test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConstants {
    pub c_h0: f64,
    pub hyper: EmHyper,
}

/// Ensemble estimate of the optimal stepsize at the final step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    /// `(1/M) mean |h_n - h_hat_{n-1}|^2 / mean e_n^2`.
    pub value: f64,
    /// Delta-method standard error of `value`.
    pub std_error: f64,
    /// Ensemble mean of the filter's own `c_h` entering the final step.
    pub mean_c_h_prev: f64,
    pub mean_misalignment: f64,
    pub mean_sq_error: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, Copy)]
struct TrialSample {
    misalignment: f64,
    sq_error: f64,
    c_h_prev: f64,
}

fn run_trial(
    model: &GenerativeModel,
    filter: &FilterConstants,
    steps: usize,
    seed: u64,
) -> Result<TrialSample> {
    let m = model.taps;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let process = Normal::new(0.0, model.c_w.sqrt())
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let observation = Normal::new(0.0, model.c_v.sqrt())
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;

    let mut h = model.h_init.clone();
    let mut state = FilterState {
        h_hat: vec![0.0; m],
        c_h: filter.c_h0,
    };
    let mut x = vec![0.0; m];
    let mut last = None;
    for step in 0..steps {
        for tap in h.iter_mut() {
            *tap += process.sample(&mut rng);
        }
        for xi in x.iter_mut() {
            *xi = rng.sample(StandardNormal);
        }
        let v: f64 = observation.sample(&mut rng);
        let d = x.iter().zip(&h).map(|(a, b)| a * b).sum::<f64>() + v;
        if step + 1 == steps {
            let misalignment = h
                .iter()
                .zip(&state.h_hat)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let c_h_prev = state.c_h;
            let (_, outcome) = em_nlms_e_step(&state, &filter.hyper, &x, d)?;
            last = Some(TrialSample {
                misalignment,
                sq_error: outcome.e * outcome.e,
                c_h_prev,
            });
        } else {
            state = em_nlms_e_step(&state, &filter.hyper, &x, d)?.0;
        }
    }
    Ok(last.expect("steps >= 1"))
}

/// Monte-Carlo estimate of the optimal NLMS stepsize
/// `(1/M) E|h_n - h_hat_{n-1}|^2 / E e_n^2` after `steps` samples, with the
/// coefficients driven by the EM-NLMS E-step at fixed parameters.
pub fn mc_optimal_stepsize(
    model: &GenerativeModel,
    filter: &FilterConstants,
    steps: usize,
    trials: usize,
) -> Result<McEstimate> {
    if trials == 0 || steps == 0 {
        return Err(Error::InvalidParameter("need at least one trial and one step".into()));
    }
    Error::check_len(model.taps, model.h_init.len())?;
    if !(model.c_w >= 0.0 && model.c_v >= 0.0) {
        return Err(Error::InvalidParameter("model variances must be >= 0".into()));
    }

    let samples = (0..trials)
        .into_par_iter()
        .map(|i| run_trial(model, filter, steps, model.seed.wrapping_add(i as u64)))
        .collect::<Result<Vec<_>>>()?;

    // Reductions in index order so results do not depend on scheduling.
    let n = trials as f64;
    let mean = |f: fn(&TrialSample) -> f64| samples.iter().map(f).sum::<f64>() / n;
    let mean_a = mean(|s| s.misalignment);
    let mean_b = mean(|s| s.sq_error);
    if mean_b == 0.0 {
        return Err(Error::DegenerateEnsemble);
    }
    let ratio = mean_a / mean_b;
    let taps = model.taps as f64;

    let (mut var_a, mut var_b, mut cov_ab) = (0.0, 0.0, 0.0);
    for s in &samples {
        let da = s.misalignment - mean_a;
        let db = s.sq_error - mean_b;
        var_a += da * da;
        var_b += db * db;
        cov_ab += da * db;
    }
    let dof = (n - 1.0).max(1.0);
    let (var_a, var_b, cov_ab) = (var_a / dof, var_b / dof, cov_ab / dof);
    let ratio_var = (var_a - 2.0 * ratio * cov_ab + ratio * ratio * var_b) / (n * mean_b * mean_b);

    Ok(McEstimate {
        value: ratio / taps,
        std_error: ratio_var.max(0.0).sqrt() / taps,
        mean_c_h_prev: mean(|s| s.c_h_prev),
        mean_misalignment: mean_a,
        mean_sq_error: mean_b,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_average_examples() {
        assert_eq!(trace_average(&DMatrix::identity(4, 4)).unwrap(), 1.0);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        assert_eq!(trace_average(&d).unwrap(), 2.0);
        assert!(matches!(
            trace_average(&DMatrix::zeros(2, 3)),
            Err(Error::NonSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn zero_regressor_only_inflates_covariance() {
        let s = FullKalmanState::isotropic(&[0.1, -0.2, 0.3], 0.5);
        let next = kalman_full_step(&s, &[0.0; 3], 1.0, 0.25, 0.1).unwrap();
        assert_eq!(next.h_hat, s.h_hat);
        assert_eq!(next.cov, DMatrix::identity(3, 3) * 0.75);
    }

    #[test]
    fn singular_denominator() {
        let s = FullKalmanState::isotropic(&[0.0, 0.0], 0.0);
        assert!(matches!(
            kalman_full_step(&s, &[1.0, 1.0], 1.0, 0.0, 0.0),
            Err(Error::SingularDenominator)
        ));
    }

    #[test]
    fn scalar_case_matches_hand_recursion() {
        // M = 1: gain k = p/(x^2 p + c_v), h' = h + k x e, p' = (1 - k x^2) p.
        let (c_w, c_v) = (0.01, 0.2);
        let mut s = FullKalmanState::isotropic(&[0.0], 1.0);
        let (mut h, mut p) = (0.0_f64, 1.0_f64);
        for (x, d) in [(0.7, 0.3), (-1.2, -0.5), (0.1, 0.2), (2.0, 0.9)] {
            s = kalman_full_step(&s, &[x], d, c_w, c_v).unwrap();
            let prior = p + c_w;
            let k = prior / (x * x * prior + c_v);
            h += k * x * (d - x * h);
            p = (1.0 - k * x * x) * prior;
            assert!((s.h_hat[0] - h).abs() < 1e-14);
            assert!((s.cov[(0, 0)] - p).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_ensemble_is_reported() {
        let model = GenerativeModel {
            taps: 4,
            c_w: 0.0,
            c_v: 0.0,
            h_init: vec![0.0; 4],
            seed: 1,
        };
        let filter = FilterConstants {
            c_h0: 0.0,
            hyper: EmHyper {
                c_v: 0.0,
                c_w: 0.0,
                eps: 0.0,
            },
        };
        assert!(matches!(
            mc_optimal_stepsize(&model, &filter, 5, 100),
            Err(Error::DegenerateEnsemble)
        ));
    }
}
