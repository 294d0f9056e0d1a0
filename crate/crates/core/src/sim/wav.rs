//! 16-bit PCM mono WAV, samples scaled by 1/32768.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Result, WavError};

use super::SignalStream;

const FULL_SCALE: f64 = 32768.0;

fn classify(path: &Path, err: hound::Error) -> WavError {
    let path = path.to_path_buf();
    match err {
        // The file itself opened, so a failed read means it ends early.
        hound::Error::IoError(e) => WavError::MalformedHeader {
            path,
            detail: format!("file is truncated ({e})"),
        },
        hound::Error::FormatError(detail) => WavError::MalformedHeader {
            path,
            detail: detail.into(),
        },
        hound::Error::UnfinishedSample => WavError::MalformedHeader {
            path,
            detail: "data chunk ends inside a sample".into(),
        },
        other => WavError::UnsupportedEncoding {
            path,
            detail: other.to_string(),
        },
    }
}

fn write_error(path: &Path, err: hound::Error) -> WavError {
    match err {
        hound::Error::IoError(source) => WavError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => classify(path, other),
    }
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<SignalStream> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| WavError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = WavReader::new(BufReader::new(file)).map_err(|e| classify(path, e))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(WavError::UnsupportedEncoding {
            path: path.to_path_buf(),
            detail: format!("{} channels, only mono is supported", spec.channels),
        }
        .into());
    }
    if spec.sample_format != SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(WavError::UnsupportedEncoding {
            path: path.to_path_buf(),
            detail: format!(
                "{:?} with {} bits per sample, only 16-bit PCM is supported",
                spec.sample_format, spec.bits_per_sample
            ),
        }
        .into());
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| v as f64 / FULL_SCALE))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| classify(path, e))?;
    SignalStream::new(samples, spec.sample_rate as f64, "wav")
}

/// Writes 16-bit PCM mono; out-of-range samples are clamped.
pub fn write_wav(stream: &SignalStream, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let spec = WavSpec {
        channels: 1,
        sample_rate: stream.fs.round() as u32,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path, spec).map_err(|e| write_error(path, e))?;
    for &s in &stream.samples {
        let q = (s * FULL_SCALE)
            .round()
            .clamp(i16::MIN as f64, i16::MAX as f64) as i16;
        writer.write_sample(q).map_err(|e| write_error(path, e))?;
    }
    writer.finalize().map_err(|e| write_error(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn ramp_round_trip_within_one_lsb() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ramp.wav");
        let ramp: Vec<f64> = (0..1000).map(|i| -1.0 + 2.0 * i as f64 / 1000.0).collect();
        let stream = SignalStream::new(ramp.clone(), 16_000.0, "ramp").unwrap();
        write_wav(&stream, &path).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.fs, 16_000.0);
        assert_eq!(back.len(), ramp.len());
        for (a, b) in ramp.iter().zip(&back.samples) {
            assert!((a - b).abs() <= 1.0 / FULL_SCALE);
        }
    }

    #[test]
    fn writer_clamps() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clip.wav");
        let stream = SignalStream::new(vec![2.0, -3.0], 8_000.0, "clip").unwrap();
        write_wav(&stream, &path).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.samples, vec![32767.0 / FULL_SCALE, -1.0]);
    }

    #[test]
    fn truncated_file_is_malformed_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.wav");
        let stream = SignalStream::new(vec![0.1; 100], 16_000.0, "x").unwrap();
        write_wav(&stream, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..20]).unwrap();
        let err = read_wav(&path).unwrap_err();
        assert!(
            matches!(err, Error::Wav(WavError::MalformedHeader { .. })),
            "{err}"
        );
    }

    #[test]
    fn stereo_is_unsupported_and_names_channel_count() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stereo.wav");
        let spec = WavSpec {
            channels: 2,
            sample_rate: 16_000,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&path, spec).unwrap();
        for _ in 0..10 {
            w.write_sample(0i16).unwrap();
        }
        w.finalize().unwrap();
        let err = read_wav(&path).unwrap_err();
        match err {
            Error::Wav(WavError::UnsupportedEncoding { detail, .. }) => {
                assert!(detail.contains("2 channels"), "{detail}")
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn float_wav_is_unsupported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("float.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 16_000,
            bits_per_sample: 32,
            sample_format: SampleFormat::Float,
        };
        let mut w = WavWriter::create(&path, spec).unwrap();
        w.write_sample(0.5f32).unwrap();
        w.finalize().unwrap();
        assert!(matches!(
            read_wav(&path),
            Err(Error::Wav(WavError::UnsupportedEncoding { .. }))
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            read_wav("/nonexistent/dir/x.wav"),
            Err(Error::Wav(WavError::Io { .. }))
        ));
    }
}
