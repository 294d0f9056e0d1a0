//! Helpers shared by the integration suites.

#![allow(dead_code)]

use emnlms::filter::{em_nlms_e_step, lambda_em, EmHyper, FilterState};
use emnlms::oracle::{
    kalman_full_step, mc_optimal_stepsize, trace_average, FilterConstants, FullKalmanState,
    GenerativeModel, McEstimate,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Worst relative disagreement between one full-matrix Kalman update from an
/// isotropic covariance and one scalar E-step (eps = 0), over `cases` random
/// draws. Returns `(coefficient error, covariance error)`.
pub fn single_step_disagreement(cases: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_h, mut worst_c) = (0.0_f64, 0.0_f64);
    for i in 0..cases {
        let m = [2, 8, 64][i % 3];
        let h: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
        let d = rng.random_range(-3.0..3.0);
        let c = rng.random_range(1e-4..1.0);
        let c_w = rng.random_range(0.0..0.1);
        let c_v = rng.random_range(1e-3..1.0);

        let full = kalman_full_step(&FullKalmanState::isotropic(&h, c), &x, d, c_w, c_v).unwrap();
        let hyper = EmHyper { c_v, c_w, eps: 0.0 };
        let (scalar, _) = em_nlms_e_step(&FilterState { h_hat: h, c_h: c }, &hyper, &x, d).unwrap();

        for (a, b) in full.h_hat.iter().zip(&scalar.h_hat) {
            worst_h = worst_h.max(rel_err(*a, *b));
        }
        worst_c = worst_c.max(rel_err(trace_average(&full.cov).unwrap(), scalar.c_h));
    }
    (worst_h, worst_c)
}

pub const MC_TAPS: usize = 16;
pub const MC_C_W: f64 = 1e-4;
pub const MC_C_V: f64 = 1e-2;
pub const MC_STEPS: usize = 50;

/// Ensemble stepsize estimate and the closed-form stepsize evaluated at the
/// ensemble-mean posterior variance with `x'x` at its expectation `M`.
pub fn mc_equivalence(trials: usize, seed: u64) -> (McEstimate, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let h_init: Vec<f64> = (0..MC_TAPS).map(|_| rng.random_range(-0.3..0.3)).collect();
    let c_h0 = h_init.iter().map(|v| v * v).sum::<f64>() / MC_TAPS as f64;
    let model = GenerativeModel {
        taps: MC_TAPS,
        c_w: MC_C_W,
        c_v: MC_C_V,
        h_init,
        seed,
    };
    let filter = FilterConstants {
        c_h0,
        hyper: EmHyper {
            c_v: MC_C_V,
            c_w: MC_C_W,
            eps: 0.0,
        },
    };
    let est = mc_optimal_stepsize(&model, &filter, MC_STEPS, trials).unwrap();
    let analytic = lambda_em(est.mean_c_h_prev, MC_C_W, MC_C_V, MC_TAPS as f64, 0.0);
    (est, analytic)
}
