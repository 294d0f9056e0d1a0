use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

use super::seeded_rng;

/// Exponentially decaying Gaussian-noise impulse response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RirSpec {
    pub taps: usize,
    /// Reverberation time (60 dB decay), seconds.
    pub t60: f64,
    pub fs: f64,
    pub seed: u64,
    /// Leading zero taps.
    pub pre_delay: usize,
}

impl RirSpec {
    pub fn validate(&self) -> Result<()> {
        if self.taps == 0 {
            return Err(Error::InvalidParameter("rir needs at least one tap".into()));
        }
        if !(self.t60 > 0.0) || !self.t60.is_finite() {
            return Err(Error::InvalidParameter(format!("t60 must be > 0, got {}", self.t60)));
        }
        if !(self.fs > 0.0) || !self.fs.is_finite() {
            return Err(Error::InvalidParameter(format!("fs must be > 0, got {}", self.fs)));
        }
        if self.pre_delay >= self.taps {
            return Err(Error::InvalidParameter(format!(
                "pre_delay {} leaves no effective taps out of {}",
                self.pre_delay, self.taps
            )));
        }
        Ok(())
    }

    /// Amplitude decay constant in samples: `exp(-k / tau)` reaches -60 dB at `t60 * fs`.
    pub fn decay_samples(&self) -> f64 {
        self.t60 * self.fs / 1e3_f64.ln()
    }
}

/// Unit-norm synthetic RIR: `h[k] = g_k exp(-(k - pre_delay) / tau)` after
/// `pre_delay` exact zeros, with `g_k` standard normal from `spec.seed`.
pub fn synth_rir(spec: &RirSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let tau = spec.decay_samples();
    let mut rng = seeded_rng(spec.seed);
    let mut h = vec![0.0; spec.taps];
    for (k, tap) in h.iter_mut().enumerate().skip(spec.pre_delay) {
        let g: f64 = rng.sample(StandardNormal);
        *tap = g * (-((k - spec.pre_delay) as f64) / tau).exp();
    }
    let norm = h.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::DegenerateScenario("synthesized rir is all zeros".into()));
    }
    h.iter_mut().for_each(|v| *v /= norm);
    Ok(h)
}

const RIR_HEADER: &str = "tap_value";

/// One-column CSV with header `tap_value`.
pub fn write_rir_csv(h: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record([RIR_HEADER]).map_err(csv_err)?;
    for v in h {
        w.write_record([format!("{v:.16e}")]).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_rir_csv(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let csv_err = |message: String| Error::Csv {
        path: path.to_path_buf(),
        message,
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(e.to_string()))?;
    let headers = r.headers().map_err(|e| csv_err(e.to_string()))?;
    if headers.len() != 1 || &headers[0] != RIR_HEADER {
        return Err(csv_err(format!("expected single column `{RIR_HEADER}`")));
    }
    let mut h = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| csv_err(e.to_string()))?;
        let value: f64 = record[0]
            .trim()
            .parse()
            .map_err(|_| csv_err(format!("row {}: not a number: {:?}", line + 1, &record[0])))?;
        if !value.is_finite() {
            return Err(csv_err(format!("row {}: non-finite tap", line + 1)));
        }
        h.push(value);
    }
    if h.is_empty() {
        return Err(csv_err("no taps".into()));
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(taps: usize, pre_delay: usize) -> RirSpec {
        RirSpec {
            taps,
            t60: 0.1,
            fs: 16_000.0,
            seed: 11,
            pre_delay,
        }
    }

    #[test]
    fn unit_norm_and_leading_zeros() {
        let h = synth_rir(&spec(512, 5)).unwrap();
        let norm: f64 = h.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(h[..5].iter().all(|&v| v == 0.0));
        assert!(h[5] != 0.0);
        assert_eq!(h, synth_rir(&spec(512, 5)).unwrap());
    }

    #[test]
    fn rejects_invalid_specs() {
        assert!(synth_rir(&spec(0, 0)).is_err());
        assert!(synth_rir(&spec(8, 8)).is_err());
        assert!(synth_rir(&RirSpec { t60: 0.0, ..spec(8, 0) }).is_err());
        assert!(synth_rir(&RirSpec { fs: -1.0, ..spec(8, 0) }).is_err());
    }

    #[test]
    fn envelope_decays_sixty_db_over_t60() {
        // Long enough to cover the full T60 (1600 samples) several times.
        let s = RirSpec {
            taps: 8192,
            pre_delay: 40,
            ..spec(0, 0)
        };
        let h = synth_rir(&s).unwrap();
        let block = 64;
        let (xs, ys): (Vec<f64>, Vec<f64>) = h[s.pre_delay..]
            .chunks(block)
            .enumerate()
            .map(|(i, c)| {
                let peak = c.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                ((i * block) as f64 + block as f64 / 2.0, 20.0 * peak.log10())
            })
            .unzip();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let drop_db = -(sxy / sxx) * s.t60 * s.fs;
        assert!((drop_db - 60.0).abs() < 3.0, "drop {drop_db} dB");
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rir.csv");
        let h = synth_rir(&spec(64, 2)).unwrap();
        write_rir_csv(&h, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("tap_value\n"));
        assert_eq!(read_rir_csv(&path).unwrap(), h);
    }

    #[test]
    fn csv_rejects_wrong_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "value\n1.0\n").unwrap();
        assert!(matches!(read_rir_csv(&path), Err(Error::Csv { .. })));
    }
}
