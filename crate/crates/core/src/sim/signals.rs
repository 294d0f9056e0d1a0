use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

use super::seeded_rng;

/// A finite-valued sample sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalStream {
    pub samples: Vec<f64>,
    pub fs: f64,
    pub label: String,
}

impl SignalStream {
    /// Rejects NaN and infinite samples.
    pub fn new(samples: Vec<f64>, fs: f64, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if let Some(index) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFinite { label, index });
        }
        if !(fs > 0.0) {
            return Err(Error::InvalidParameter(format!("sampling rate must be > 0, got {fs}")));
        }
        Ok(Self { samples, fs, label })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

fn check_len(n_samples: usize) -> Result<()> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be >= 1".into()));
    }
    Ok(())
}

/// I.i.d. standard normal samples.
pub fn gen_white_noise(n_samples: usize, fs: f64, seed: u64) -> Result<SignalStream> {
    check_len(n_samples)?;
    let mut rng = seeded_rng(seed);
    let samples = (0..n_samples).map(|_| rng.sample(StandardNormal)).collect();
    SignalStream::new(samples, fs, "white")
}

/// Formant frequencies of the resonator, Hz.
pub const FORMANTS_HZ: [f64; 2] = [500.0, 1500.0];
const POLE_RADIUS: f64 = 0.97;
const SYLLABLE_RATE_HZ: f64 = 4.0;
const PAUSE_PROBABILITY: f64 = 0.3;
/// Fraction of a syllable spent in each raised-cosine ramp.
const RAMP_FRACTION: f64 = 0.15;

/// Speech-like excitation together with its amplitude envelope.
///
/// The envelope is exactly zero inside pauses, so `envelope[n] > 0`
/// identifies active samples.
#[derive(Debug, Clone)]
pub struct SpeechLike {
    pub stream: SignalStream,
    pub envelope: Vec<f64>,
}

impl SpeechLike {
    pub fn is_active(&self, n: usize) -> bool {
        self.envelope[n] > 0.0
    }
}

/// Resonant noise with a syllabic on/off envelope, peak-normalized to 1.
///
/// White noise runs through two cascaded two-pole resonators (one per
/// formant, pole radius 0.97). The timeline is cut into syllables at 4 Hz;
/// each syllable is silent with probability 0.3, otherwise it gets a random
/// level with raised-cosine on/off ramps.
pub fn speechlike(n_samples: usize, fs: f64, seed: u64) -> Result<SpeechLike> {
    check_len(n_samples)?;
    if !(fs > 2.0 * FORMANTS_HZ[1]) {
        return Err(Error::InvalidParameter(format!(
            "sampling rate {fs} Hz too low for the resonator"
        )));
    }
    let mut rng = seeded_rng(seed);

    let mut voiced: Vec<f64> = (0..n_samples).map(|_| rng.sample(StandardNormal)).collect();
    for f in FORMANTS_HZ {
        let theta = 2.0 * PI * f / fs;
        let a1 = 2.0 * POLE_RADIUS * theta.cos();
        let a2 = -POLE_RADIUS * POLE_RADIUS;
        let (mut y1, mut y2) = (0.0, 0.0);
        for s in voiced.iter_mut() {
            let y = *s + a1 * y1 + a2 * y2;
            y2 = y1;
            y1 = y;
            *s = y;
        }
    }

    let syllable = ((fs / SYLLABLE_RATE_HZ).round() as usize).max(1);
    let ramp = ((syllable as f64 * RAMP_FRACTION).round() as usize).max(1);
    let mut envelope = vec![0.0; n_samples];
    for (index, chunk) in envelope.chunks_mut(syllable).enumerate() {
        let pause = rng.random_bool(PAUSE_PROBABILITY);
        let level: f64 = rng.random_range(0.4..1.0);
        // The opening syllable is always voiced.
        if pause && index > 0 {
            continue;
        }
        let len = chunk.len();
        for (k, v) in chunk.iter_mut().enumerate() {
            // Offset by half a sample so ramps never touch exactly zero.
            let edge = (k.min(len - 1 - k) as f64 + 0.5) / ramp as f64;
            let shape = if edge >= 1.0 {
                1.0
            } else {
                0.5 - 0.5 * (PI * edge).cos()
            };
            *v = level * shape;
        }
    }

    let mut samples: Vec<f64> = voiced.iter().zip(&envelope).map(|(s, g)| s * g).collect();
    let peak = samples.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
    if peak > 0.0 {
        samples.iter_mut().for_each(|s| *s /= peak);
    }
    Ok(SpeechLike {
        stream: SignalStream::new(samples, fs, "speechlike")?,
        envelope,
    })
}

pub fn gen_speechlike(n_samples: usize, fs: f64, seed: u64) -> Result<SignalStream> {
    speechlike(n_samples, fs, seed).map(|s| s.stream)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_noise_is_deterministic() {
        let a = gen_white_noise(1000, 16_000.0, 7).unwrap();
        let b = gen_white_noise(1000, 16_000.0, 7).unwrap();
        let c = gen_white_noise(1000, 16_000.0, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn white_noise_moments() {
        let n = 80_000;
        let s = gen_white_noise(n, 16_000.0, 42).unwrap().samples;
        let mean = s.iter().sum::<f64>() / n as f64;
        let var = s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.1, "var {var}");
    }

    #[test]
    fn rejects_zero_length_and_non_finite() {
        assert!(gen_white_noise(0, 16_000.0, 1).is_err());
        assert!(gen_speechlike(0, 16_000.0, 1).is_err());
        let err = SignalStream::new(vec![0.0, f64::NAN], 16_000.0, "x").unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 1, .. }));
        assert!(SignalStream::new(vec![f64::INFINITY], 16_000.0, "x").is_err());
    }

    #[test]
    fn speechlike_has_silent_pauses() {
        let s = speechlike(160_000, 16_000.0, 3).unwrap();
        let (mut active_energy, mut active_n) = (0.0, 0usize);
        let (mut pause_energy, mut pause_n) = (0.0, 0usize);
        for (n, v) in s.stream.samples.iter().enumerate() {
            if s.is_active(n) {
                active_energy += v * v;
                active_n += 1;
            } else {
                pause_energy += v * v;
                pause_n += 1;
            }
        }
        assert!(pause_n > 0 && active_n > 0);
        let ratio = (pause_energy / pause_n as f64) / (active_energy / active_n as f64);
        assert!(ratio < 1e-6, "pause/active energy {ratio}");
        let pause_fraction = pause_n as f64 / s.stream.len() as f64;
        assert!((0.15..0.45).contains(&pause_fraction), "{pause_fraction}");
        let peak = s.stream.samples.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!((peak - 1.0).abs() < 1e-15);
        assert_eq!(s.stream.samples, gen_speechlike(160_000, 16_000.0, 3).unwrap().samples);
    }

    #[test]
    fn speechlike_spectrum_peaks_at_formants() {
        use rustfft::{num_complex::Complex, FftPlanner};
        let fs = 16_000.0;
        let frame = 4096;
        let x = gen_speechlike(16 * frame, fs, 11).unwrap().samples;
        let fft = FftPlanner::new().plan_fft_forward(frame);
        let mut power = vec![0.0; frame / 2];
        for chunk in x.chunks_exact(frame) {
            let mut buf: Vec<Complex<f64>> = chunk.iter().map(|&v| Complex::new(v, 0.0)).collect();
            fft.process(&mut buf);
            for (p, c) in power.iter_mut().zip(&buf) {
                *p += c.norm_sqr();
            }
        }
        let bin_hz = fs / frame as f64;
        let peak_in = |lo: f64, hi: f64| {
            let (a, b) = ((lo / bin_hz) as usize, (hi / bin_hz) as usize);
            let k = (a..b).max_by(|&i, &j| power[i].total_cmp(&power[j])).unwrap();
            k as f64 * bin_hz
        };
        let global = (0..power.len()).max_by(|&i, &j| power[i].total_cmp(&power[j])).unwrap();
        let global_hz = global as f64 * bin_hz;
        assert!(
            FORMANTS_HZ.iter().any(|f| (global_hz - f).abs() <= 100.0),
            "global peak at {global_hz} Hz"
        );
        // Each resonance is a local maximum within 100 Hz of its nominal frequency.
        for f in FORMANTS_HZ {
            let at = peak_in(f - 300.0, f + 300.0);
            assert!((at - f).abs() <= 100.0, "peak near {f} Hz found at {at} Hz");
        }
    }
}
