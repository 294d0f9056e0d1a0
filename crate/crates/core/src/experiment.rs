//! Wires a scenario together: excitation and echo path, microphone signal,
//! the selected filters on one shared regressor, and per-sample metrics.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::{AlgoConfig, Excitation, Gate, RirSource, ScenarioConfig};
use crate::error::{Error, Result};
use crate::filter::{AdaptNlmsState, ConvNlmsState, EmHyper, EmNlms, StepOutcome};
use crate::metrics::{
    format_f64, system_distance_db, write_trace_csv, Algo, EmVariances, TraceRecord,
};
use crate::sim::{
    gen_white_noise, read_rir_csv, read_wav, simulate_microphone, speechlike, synth_rir,
    write_rir_csv, DelayLine, RirSpec, SignalStream,
};

/// Running mean of the regressor energy over a fixed window, used for the
/// speech-pause gate of conventional NLMS.
#[derive(Debug, Clone)]
struct EnergyWindow {
    buf: Vec<f64>,
    next: usize,
    filled: usize,
    sum: f64,
}

impl EnergyWindow {
    fn new(len: usize) -> Self {
        Self {
            buf: vec![0.0; len.max(1)],
            next: 0,
            filled: 0,
            sum: 0.0,
        }
    }

    fn push(&mut self, energy: f64) -> f64 {
        self.sum += energy - self.buf[self.next];
        self.buf[self.next] = energy;
        self.next += 1;
        if self.next == self.buf.len() {
            self.next = 0;
            // Re-sum once per window so add/subtract rounding cannot accumulate.
            self.sum = self.buf.iter().sum();
        }
        self.filled = (self.filled + 1).min(self.buf.len());
        self.sum / self.filled as f64
    }
}

enum Runner {
    Em(EmNlms),
    Adapt {
        state: AdaptNlmsState,
        eps: f64,
        warm_left: usize,
    },
    Conv {
        state: ConvNlmsState,
        eps: f64,
        gate: Option<(f64, EnergyWindow)>,
    },
}

/// Conventional stepsize numerator used to bootstrap Adapt. NLMS.
const WARM_START_MU: f64 = 0.5;

impl Runner {
    fn new(config: &AlgoConfig, taps: usize, fs: f64) -> Result<Self> {
        Ok(match *config {
            AlgoConfig::Em(c) => Runner::Em(EmNlms::new(
                taps,
                c.c_h0,
                EmHyper::new(c.c_v0, c.c_w0, c.epsilon)?,
            )?),
            AlgoConfig::Adapt(c) => Runner::Adapt {
                state: AdaptNlmsState::new(taps, c.n_t, c.eta, c.e0_sq, c.lambda_cap)?,
                eps: c.epsilon,
                warm_left: c.warm_start,
            },
            AlgoConfig::Conv(c) => {
                let (fixed, gate) = match c.gate {
                    Gate::Off => (None, None),
                    Gate::Fixed(g) => (Some(g), None),
                    Gate::Auto { factor, window_s } => (
                        Some(0.0),
                        Some((factor, EnergyWindow::new((window_s * fs).round() as usize))),
                    ),
                };
                Runner::Conv {
                    state: ConvNlmsState::new(taps, c.mu, fixed)?,
                    eps: c.epsilon,
                    gate,
                }
            }
        })
    }

    fn step(&mut self, x: &[f64], d: f64) -> Result<(StepOutcome, Option<EmVariances>)> {
        match self {
            Runner::Em(f) => {
                let r = f.step(x, d)?;
                Ok((
                    r.outcome,
                    Some(EmVariances {
                        c_h: r.c_h,
                        c_v: r.hyper.c_v,
                        c_w: r.hyper.c_w,
                        c_w_raw: r.c_w_raw,
                    }),
                ))
            }
            Runner::Adapt {
                state,
                eps,
                warm_left,
            } => {
                // Silent frames carry no information and do not use up the warm start.
                let outcome = if *warm_left > 0 {
                    if x.iter().any(|&v| v != 0.0) {
                        *warm_left -= 1;
                    }
                    state.warm_start_step(x, d, WARM_START_MU, *eps)?
                } else {
                    state.step(x, d, *eps)?
                };
                Ok((outcome, None))
            }
            Runner::Conv { state, eps, gate } => {
                if let Some((factor, window)) = gate {
                    let energy: f64 = x.iter().map(|v| v * v).sum();
                    state.gate_threshold = Some(*factor * window.push(energy));
                }
                Ok((state.step(x, d, *eps)?, None))
            }
        }
    }

    fn coefficients(&self) -> &[f64] {
        match self {
            Runner::Em(f) => f.coefficients(),
            Runner::Adapt { state, .. } => &state.h_hat,
            Runner::Conv { state, .. } => &state.h_hat,
        }
    }
}

/// Per-algorithm results. Per-sample series are kept at full rate; `rows`
/// holds the decimated trace.
#[derive(Debug, Clone)]
pub struct AlgoTrace {
    pub algo: Algo,
    pub rows: Vec<TraceRecord>,
    pub lambda: Vec<f64>,
    pub alpha: Vec<f64>,
    pub delta_h_db: Vec<f64>,
    pub final_coefficients: Vec<f64>,
}

impl AlgoTrace {
    pub fn final_delta_h_db(&self) -> f64 {
        *self.delta_h_db.last().expect("at least one sample")
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub samples: usize,
    pub fs: f64,
    pub h_true: Vec<f64>,
    pub x: SignalStream,
    pub d: SignalStream,
    /// Speech activity per sample (speech-like excitation only).
    pub active: Option<Vec<bool>>,
    pub traces: Vec<AlgoTrace>,
}

impl RunOutput {
    pub fn trace(&self, algo: Algo) -> Option<&AlgoTrace> {
        self.traces.iter().find(|t| t.algo == algo)
    }
}

fn excitation(config: &ScenarioConfig, n: usize) -> Result<(SignalStream, Option<Vec<bool>>)> {
    match &config.excitation {
        Excitation::White => Ok((gen_white_noise(n, config.fs, config.seeds.excitation)?, None)),
        Excitation::SpeechLike => {
            let s = speechlike(n, config.fs, config.seeds.excitation)?;
            let active = s.envelope.iter().map(|&g| g > 0.0).collect();
            Ok((s.stream, Some(active)))
        }
        Excitation::Wav(path) => {
            let mut s = read_wav(path)?;
            if (s.fs - config.fs).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "{} is sampled at {} Hz, scenario expects {} Hz",
                    path.display(),
                    s.fs,
                    config.fs
                )));
            }
            if s.len() < n {
                return Err(Error::InvalidParameter(format!(
                    "{} has {} samples, scenario needs {n}",
                    path.display(),
                    s.len()
                )));
            }
            s.samples.truncate(n);
            Ok((s, None))
        }
    }
}

fn echo_path(config: &ScenarioConfig) -> Result<Vec<f64>> {
    match &config.rir.source {
        RirSource::Synthetic => synth_rir(&RirSpec {
            taps: config.rir.taps,
            t60: config.rir.t60,
            fs: config.fs,
            seed: config.seeds.rir,
            pre_delay: config.rir.pre_delay,
        }),
        RirSource::Csv(path) => {
            let h = read_rir_csv(path)?;
            Error::check_len(config.rir.taps, h.len())?;
            Ok(h)
        }
    }
}

/// Runs every configured algorithm over the same scenario.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunOutput> {
    config
        .validate()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let n = config.sample_count();
    let taps = config.rir.taps;
    let (mut x, active) = excitation(config, n)?;
    if config.excitation_gain != 1.0 {
        x.samples.iter_mut().for_each(|s| *s *= config.excitation_gain);
    }
    let h_true = echo_path(config)?;
    let mic = simulate_microphone(&x, &h_true, config.snr_db, config.seeds.noise)?;

    let mut runners = config
        .algorithms
        .iter()
        .map(|a| Runner::new(a, taps, config.fs))
        .collect::<Result<Vec<_>>>()?;
    let mut traces: Vec<AlgoTrace> = config
        .algorithms
        .iter()
        .map(|a| AlgoTrace {
            algo: a.algo(),
            rows: Vec::with_capacity(n / config.decimation + 2),
            lambda: Vec::with_capacity(n),
            alpha: Vec::with_capacity(n),
            delta_h_db: Vec::with_capacity(n),
            final_coefficients: Vec::new(),
        })
        .collect();

    let mut line = DelayLine::new(taps);
    for (idx, (&xn, &dn)) in x.samples.iter().zip(&mic.d.samples).enumerate() {
        line.push(xn);
        let regressor = line.window();
        let log_row = idx % config.decimation == 0 || idx + 1 == n;
        for (runner, trace) in runners.iter_mut().zip(traces.iter_mut()) {
            let (outcome, em) = runner.step(regressor, dn)?;
            let delta_h_db = system_distance_db(runner.coefficients(), &h_true)?;
            trace.lambda.push(outcome.lambda);
            trace.alpha.push(outcome.alpha);
            trace.delta_h_db.push(delta_h_db);
            if log_row {
                trace.rows.push(TraceRecord {
                    n: idx,
                    t: idx as f64 / config.fs,
                    algo: trace.algo,
                    e: outcome.e,
                    lambda: outcome.lambda,
                    alpha: outcome.alpha,
                    delta_h_db,
                    d: dn,
                    em,
                });
            }
        }
    }
    for (runner, trace) in runners.iter().zip(traces.iter_mut()) {
        trace.final_coefficients = runner.coefficients().to_vec();
    }

    Ok(RunOutput {
        samples: n,
        fs: config.fs,
        h_true,
        x,
        d: mic.d,
        active,
        traces,
    })
}

pub fn trace_file_name(algo: Algo) -> String {
    format!("trace_{}.csv", algo.label())
}

pub fn plot_file_name(algo: Algo) -> String {
    format!("plot_{}.csv", algo.label())
}

/// Points per downsampled plot series.
const PLOT_POINTS: usize = 2000;

/// Artifacts written by [`write_artifacts`].
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub dir: PathBuf,
    pub summary: String,
    /// `(algo, sha256 hex)` per trace CSV.
    pub hashes: Vec<(Algo, String)>,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn csv_bytes(path: &Path, rows: &[TraceRecord]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_trace_csv(&mut buf, rows).map_err(|e| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(buf)
}

/// Writes one trace CSV per algorithm, `rir.csv`, `summary.txt` and,
/// optionally, downsampled `(t, delta_h_db, alpha)` plot series.
pub fn write_artifacts(
    config: &ScenarioConfig,
    output: &RunOutput,
    dir: &Path,
    emit_plot_data: bool,
) -> Result<Artifacts> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut hashes = Vec::new();
    for trace in &output.traces {
        let path = dir.join(trace_file_name(trace.algo));
        let bytes = csv_bytes(&path, &trace.rows)?;
        write_file(&path, &bytes)?;
        hashes.push((trace.algo, hex::encode(Sha256::digest(&bytes))));

        if emit_plot_data {
            let stride = (output.samples / PLOT_POINTS).max(1);
            let mut text = String::from("t,delta_h_db,alpha\n");
            for n in (0..output.samples).step_by(stride) {
                let _ = writeln!(
                    text,
                    "{},{},{}",
                    format_f64(n as f64 / output.fs),
                    format_f64(trace.delta_h_db[n]),
                    format_f64(trace.alpha[n])
                );
            }
            write_file(&dir.join(plot_file_name(trace.algo)), text.as_bytes())?;
        }
    }
    write_rir_csv(&output.h_true, dir.join("rir.csv"))?;

    let mut summary = String::new();
    let _ = writeln!(summary, "samples={}", output.samples);
    let _ = writeln!(summary, "fs={}", output.fs);
    let labels: Vec<&str> = output.traces.iter().map(|t| t.algo.label()).collect();
    let _ = writeln!(summary, "algorithms={}", labels.join(","));
    for trace in &output.traces {
        let _ = writeln!(
            summary,
            "final_delta_h_db.{}={}",
            trace.algo,
            format_f64(trace.final_delta_h_db())
        );
    }
    for (algo, hash) in &hashes {
        let _ = writeln!(summary, "csv.{algo}={}", trace_file_name(*algo));
        let _ = writeln!(summary, "csv_sha256.{algo}={hash}");
    }
    for (section, entries) in config.entries() {
        for (key, value) in entries {
            let _ = writeln!(summary, "config.{section}.{key}={value}");
        }
    }
    write_file(&dir.join("summary.txt"), summary.as_bytes())?;

    Ok(Artifacts {
        dir: dir.to_path_buf(),
        summary,
        hashes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_window_tracks_mean() {
        let mut w = EnergyWindow::new(4);
        assert_eq!(w.push(4.0), 4.0);
        assert_eq!(w.push(2.0), 3.0);
        w.push(0.0);
        assert_eq!(w.push(2.0), 2.0);
        // first value leaves the window
        assert_eq!(w.push(0.0), 1.0);
    }

    fn small_config(extra: &str) -> ScenarioConfig {
        format!(
            "[scenario]\nduration_s = 0.25\nsnr_db = 30\ndecimation = 8\n[rir]\ntaps = 64\n{extra}"
        )
        .parse()
        .unwrap()
    }

    #[test]
    fn all_algorithms_share_row_grid() {
        let config = small_config("");
        let out = run_scenario(&config).unwrap();
        assert_eq!(out.samples, 4000);
        assert_eq!(out.traces.len(), 3);
        for t in &out.traces {
            assert_eq!(t.alpha.len(), 4000);
            // n % 8 == 0 plus the final sample
            assert_eq!(t.rows.len(), 501);
            assert_eq!(t.rows.last().unwrap().n, 3999);
            assert!(t.rows.iter().all(|r| r.delta_h_db.is_finite()));
            assert_eq!(t.rows[1].t, 8.0 / 16_000.0);
        }
        assert!(out.trace(Algo::EmNlms).unwrap().rows[0].em.is_some());
        assert!(out.trace(Algo::ConvNlms).unwrap().rows[0].em.is_none());
    }

    #[test]
    fn undecimated_rows_match_sample_count() {
        let mut config = small_config("[em_nlms]\n");
        config.decimation = 1;
        let out = run_scenario(&config).unwrap();
        assert_eq!(out.traces[0].rows.len(), out.samples);
    }

    #[test]
    fn wav_excitation_must_match_rate_and_length() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        let x = gen_white_noise(8000, 16_000.0, 5).unwrap();
        let scaled = SignalStream::new(x.samples.iter().map(|v| v * 0.1).collect(), 16_000.0, "x").unwrap();
        crate::sim::write_wav(&scaled, &path).unwrap();
        let mut config = small_config("[conv_nlms]\n");
        config.excitation = Excitation::Wav(path.clone());
        let out = run_scenario(&config).unwrap();
        assert_eq!(out.x.len(), 4000);

        config.duration_s = 1.0;
        assert!(run_scenario(&config).is_err());
    }
}
