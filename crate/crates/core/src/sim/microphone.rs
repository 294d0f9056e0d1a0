use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

use super::{seeded_rng, DelayLine, SignalStream};

/// Microphone signal and the noise-free echo it was built from.
#[derive(Debug, Clone)]
pub struct Microphone {
    pub d: SignalStream,
    pub clean_echo: SignalStream,
}

/// Causal direct-form convolution `y[n] = sum_k h[k] x[n-k]`, same length as `x`.
pub fn convolve(x: &[f64], h: &[f64]) -> Vec<f64> {
    let mut line = DelayLine::new(h.len().max(1));
    x.iter()
        .map(|&s| {
            line.push(s);
            line.window().iter().zip(h).map(|(a, b)| a * b).sum()
        })
        .collect()
}

/// Echo plus white Gaussian noise at a global echo-to-noise ratio.
///
/// The noise is scaled so that `10 log10(sum echo^2 / sum v^2) == snr_db`
/// over the whole signal. `snr_db = +inf` disables the noise.
pub fn simulate_microphone(
    x: &SignalStream,
    h: &[f64],
    snr_db: f64,
    seed: u64,
) -> Result<Microphone> {
    if h.is_empty() {
        return Err(Error::InvalidParameter("impulse response is empty".into()));
    }
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::InvalidParameter(format!("invalid snr_db {snr_db}")));
    }
    let echo = convolve(&x.samples, h);
    let mut d = echo.clone();
    if snr_db.is_finite() {
        let echo_energy: f64 = echo.iter().map(|v| v * v).sum();
        if echo_energy == 0.0 {
            return Err(Error::DegenerateScenario(
                "clean echo is all zeros, cannot scale noise to a finite SNR".into(),
            ));
        }
        let mut rng = seeded_rng(seed);
        let noise: Vec<f64> = (0..echo.len()).map(|_| rng.sample(StandardNormal)).collect();
        let noise_energy: f64 = noise.iter().map(|v| v * v).sum();
        let gain = (echo_energy / (noise_energy * 10f64.powf(snr_db / 10.0))).sqrt();
        for (di, v) in d.iter_mut().zip(&noise) {
            *di += gain * v;
        }
    }
    Ok(Microphone {
        d: SignalStream::new(d, x.fs, "microphone")?,
        clean_echo: SignalStream::new(echo, x.fs, "echo")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{gen_white_noise, synth_rir, RirSpec};

    fn white(n: usize, seed: u64) -> SignalStream {
        gen_white_noise(n, 16_000.0, seed).unwrap()
    }

    #[test]
    fn noiseless_mode_returns_clean_echo() {
        let x = white(2000, 1);
        let h = [0.5, -0.25, 0.125];
        let mic = simulate_microphone(&x, &h, f64::INFINITY, 9).unwrap();
        assert_eq!(mic.d.samples, mic.clean_echo.samples);
        // first samples by hand
        assert_eq!(mic.d.samples[0], 0.5 * x.samples[0]);
        assert_eq!(mic.d.samples[1], 0.5 * x.samples[1] - 0.25 * x.samples[0]);
    }

    #[test]
    fn impulse_channel_is_identity() {
        let x = white(1000, 2);
        let mut h = vec![0.0; 16];
        h[0] = 1.0;
        let mic = simulate_microphone(&x, &h, f64::INFINITY, 0).unwrap();
        assert_eq!(mic.d.samples, x.samples);
    }

    #[test]
    fn global_snr_is_exact() {
        let x = white(16_000, 3);
        let h = synth_rir(&RirSpec {
            taps: 128,
            t60: 0.1,
            fs: 16_000.0,
            seed: 4,
            pre_delay: 0,
        })
        .unwrap();
        for snr in [-5.0, 0.0, 20.0, 47.5] {
            let mic = simulate_microphone(&x, &h, snr, 5).unwrap();
            let echo: f64 = mic.clean_echo.samples.iter().map(|v| v * v).sum();
            let noise: f64 = mic
                .d
                .samples
                .iter()
                .zip(&mic.clean_echo.samples)
                .map(|(d, c)| (d - c).powi(2))
                .sum();
            let measured = 10.0 * (echo / noise).log10();
            assert!((measured - snr).abs() < 1e-9, "{measured} vs {snr}");
        }
    }

    #[test]
    fn zero_echo_with_finite_snr_is_degenerate() {
        let x = SignalStream::new(vec![0.0; 100], 16_000.0, "zeros").unwrap();
        let err = simulate_microphone(&x, &[1.0, 0.5], 20.0, 1).unwrap_err();
        assert!(matches!(err, Error::DegenerateScenario(_)));
        assert!(simulate_microphone(&x, &[1.0], f64::INFINITY, 1).is_ok());
    }

    #[test]
    fn convolution_is_linear() {
        let a = white(3000, 6);
        let b = white(3000, 7);
        let h = synth_rir(&RirSpec {
            taps: 64,
            t60: 0.05,
            fs: 16_000.0,
            seed: 8,
            pre_delay: 3,
        })
        .unwrap();
        let sum: Vec<f64> = a.samples.iter().zip(&b.samples).map(|(p, q)| p + q).collect();
        let lhs = convolve(&sum, &h);
        let ya = convolve(&a.samples, &h);
        let yb = convolve(&b.samples, &h);
        for (n, l) in lhs.iter().enumerate() {
            let r = ya[n] + yb[n];
            assert!((l - r).abs() <= 1e-10 * r.abs().max(1.0));
        }
    }
}
