//! Scenario configuration: flat `key = value` text with `[section]` headers.
//!
//! ```text
//! # comment
//! [scenario]
//! excitation = white          # white | speechlike | wav:<path>
//! excitation_gain = 1         # linear gain on the excitation
//! duration_s = 5
//! fs = 16000
//! snr_db = 20                 # number or inf
//! decimation = 16
//! output = out/fig3_white
//!
//! [rir]
//! taps = 512
//! t60 = 0.1
//! pre_delay = auto            # auto | <taps>; auto = adapt_nlms n_t when enabled
//! source = synthetic          # synthetic | csv:<path>
//!
//! [seeds]
//! rir = 1
//! excitation = 2
//! noise = 3
//!
//! [em_nlms]
//! c_h0 = 0.1
//! c_w0 = 0.1
//! c_v0 = 0.1
//! epsilon = 0.01
//!
//! [adapt_nlms]
//! n_t = 5
//! eta = 0.9
//! e0_sq = 0.1
//! epsilon = 0.01
//! lambda_cap = none           # none | <value>; default 0.5 for speech input
//! warm_start = 1              # conventional NLMS steps before switching
//!
//! [conv_nlms]
//! mu = 0.5
//! epsilon = 0.01
//! gate = off                  # off | auto | <threshold>; default auto for speech input
//! gate_factor = 0.001
//! gate_window_s = 1
//! ```
//!
//! Algorithm sections select the algorithms to run; an empty section runs
//! that algorithm with default constants. With no algorithm section at all,
//! all three run. Unknown sections and keys are rejected.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::metrics::Algo;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("syntax error on line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("unknown section [{section}] on line {line}")]
    UnknownSection { section: String, line: usize },

    #[error("unknown key `{key}` in [{section}] on line {line}")]
    UnknownKey {
        section: String,
        key: String,
        line: usize,
    },

    #[error("duplicate key `{key}` in [{section}] on line {line}")]
    DuplicateKey {
        section: String,
        key: String,
        line: usize,
    },

    #[error("bad value for `{key}` on line {line}: {message}")]
    BadValue {
        key: String,
        line: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Invariant(String),
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, PartialEq)]
pub enum Excitation {
    White,
    SpeechLike,
    Wav(PathBuf),
}

impl Excitation {
    /// Speech or recorded input, which enables the pause gate and the
    /// Adapt. NLMS stepsize cap by default.
    pub fn is_speech(&self) -> bool {
        !matches!(self, Excitation::White)
    }
}

impl fmt::Display for Excitation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Excitation::White => f.write_str("white"),
            Excitation::SpeechLike => f.write_str("speechlike"),
            Excitation::Wav(p) => write!(f, "wav:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RirSource {
    Synthetic,
    Csv(PathBuf),
}

impl fmt::Display for RirSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RirSource::Synthetic => f.write_str("synthetic"),
            RirSource::Csv(p) => write!(f, "csv:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RirConfig {
    pub taps: usize,
    pub t60: f64,
    pub pre_delay: usize,
    pub source: RirSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seeds {
    pub rir: u64,
    pub excitation: u64,
    pub noise: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    pub c_h0: f64,
    pub c_w0: f64,
    pub c_v0: f64,
    pub epsilon: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            c_h0: 0.1,
            c_w0: 0.1,
            c_v0: 0.1,
            epsilon: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptConfig {
    pub n_t: usize,
    pub eta: f64,
    pub e0_sq: f64,
    pub epsilon: f64,
    pub lambda_cap: Option<f64>,
    pub warm_start: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Off,
    /// `factor` times the mean regressor energy over the last `window_s` seconds.
    Auto { factor: f64, window_s: f64 },
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvConfig {
    pub mu: f64,
    pub epsilon: f64,
    pub gate: Gate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlgoConfig {
    Em(EmConfig),
    Adapt(AdaptConfig),
    Conv(ConvConfig),
}

impl AlgoConfig {
    pub fn algo(&self) -> Algo {
        match self {
            AlgoConfig::Em(_) => Algo::EmNlms,
            AlgoConfig::Adapt(_) => Algo::AdaptNlms,
            AlgoConfig::Conv(_) => Algo::ConvNlms,
        }
    }
}

/// Fully resolved scenario; every default is materialized.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub excitation: Excitation,
    /// Linear gain applied to the excitation before it enters the room.
    pub excitation_gain: f64,
    pub duration_s: f64,
    pub fs: f64,
    pub snr_db: f64,
    pub decimation: usize,
    pub output: PathBuf,
    pub rir: RirConfig,
    pub seeds: Seeds,
    /// In canonical order: em_nlms, adapt_nlms, conv_nlms.
    pub algorithms: Vec<AlgoConfig>,
}

const SCHEMA: &[(&str, &[&str])] = &[
    ("scenario", &["excitation", "excitation_gain", "duration_s", "fs", "snr_db", "decimation", "output"]),
    ("rir", &["taps", "t60", "pre_delay", "source"]),
    ("seeds", &["rir", "excitation", "noise"]),
    ("em_nlms", &["c_h0", "c_w0", "c_v0", "epsilon"]),
    ("adapt_nlms", &["n_t", "eta", "e0_sq", "epsilon", "lambda_cap", "warm_start"]),
    ("conv_nlms", &["mu", "epsilon", "gate", "gate_factor", "gate_window_s"]),
];

#[derive(Debug)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Default)]
struct Section {
    entries: BTreeMap<String, Entry>,
}

impl Section {
    fn raw(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(default),
            Some(entry) => entry.value.parse::<T>().map_err(|e| ConfigError::BadValue {
                key: key.to_string(),
                line: entry.line,
                message: e.to_string(),
            }),
        }
    }

    fn bad(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::BadValue {
            key: key.to_string(),
            line: self.raw(key).map_or(0, |e| e.line),
            message: message.into(),
        }
    }
}

fn strip_comment(line: &str) -> &str {
    let line = line.trim();
    if line.starts_with('#') || line.starts_with(';') {
        return "";
    }
    match line.find(" #") {
        Some(i) => line[..i].trim_end(),
        None => line,
    }
}

fn tokenize(text: &str) -> Result<BTreeMap<String, Section>> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<(String, &'static [&'static str])> = None;
    for (index, raw_line) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = strip_comment(raw_line);
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                line: line_no,
                message: format!("unterminated section header `{line}`"),
            })?;
            let name = name.trim();
            let keys = SCHEMA
                .iter()
                .find(|(s, _)| *s == name)
                .map(|(_, k)| *k)
                .ok_or_else(|| ConfigError::UnknownSection {
                    section: name.to_string(),
                    line: line_no,
                })?;
            if sections.contains_key(name) {
                return Err(ConfigError::Syntax {
                    line: line_no,
                    message: format!("section [{name}] appears twice"),
                });
            }
            sections.insert(name.to_string(), Section::default());
            current = Some((name.to_string(), keys));
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: line_no,
            message: format!("expected `key = value`, found `{line}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line: line_no,
                message: "empty key".into(),
            });
        }
        let (section, keys) = current.as_ref().ok_or_else(|| ConfigError::Syntax {
            line: line_no,
            message: format!("key `{key}` outside of any section"),
        })?;
        if !keys.contains(&key) {
            return Err(ConfigError::UnknownKey {
                section: section.clone(),
                key: key.to_string(),
                line: line_no,
            });
        }
        let entries = &mut sections.get_mut(section).expect("section inserted").entries;
        if entries.contains_key(key) {
            return Err(ConfigError::DuplicateKey {
                section: section.clone(),
                key: key.to_string(),
                line: line_no,
            });
        }
        entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                line: line_no,
            },
        );
    }
    Ok(sections)
}

fn parse_optional_f64(section: &Section, key: &str, default: Option<f64>) -> Result<Option<f64>> {
    match section.raw(key) {
        None => Ok(default),
        Some(e) if e.value.eq_ignore_ascii_case("none") || e.value.eq_ignore_ascii_case("off") => {
            Ok(None)
        }
        Some(_) => section.get::<f64>(key, 0.0).map(Some),
    }
}

fn parse_path_tag(section: &Section, key: &str, tag: &str) -> Option<PathBuf> {
    section
        .raw(key)
        .and_then(|e| e.value.strip_prefix(tag))
        .map(|p| PathBuf::from(p.trim()))
}

impl ScenarioConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: Self = text.parse()?;
        // Relative data paths are resolved against the config's directory.
        let base = path.parent().unwrap_or(Path::new(""));
        if let Excitation::Wav(p) = &mut config.excitation {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let RirSource::Csv(p) = &mut config.rir.source {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn sample_count(&self) -> usize {
        (self.duration_s * self.fs).round() as usize
    }

    pub fn algorithm(&self, algo: Algo) -> Option<&AlgoConfig> {
        self.algorithms.iter().find(|a| a.algo() == algo)
    }

    /// Applies `name=value` to one of the seeds.
    pub fn apply_seed_override(&mut self, spec: &str) -> Result<()> {
        let (name, value) = spec
            .split_once('=')
            .ok_or_else(|| ConfigError::Invariant(format!("seed override `{spec}` is not k=v")))?;
        let value: u64 = value.trim().parse().map_err(|_| {
            ConfigError::Invariant(format!("seed override `{spec}`: value is not an integer"))
        })?;
        match name.trim() {
            "rir" => self.seeds.rir = value,
            "excitation" => self.seeds.excitation = value,
            "noise" => self.seeds.noise = value,
            other => {
                return Err(ConfigError::Invariant(format!(
                    "unknown seed `{other}` (expected rir, excitation or noise)"
                )))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let inv = |m: String| Err(ConfigError::Invariant(m));
        if !(self.fs > 0.0) || !self.fs.is_finite() {
            return inv(format!("fs must be > 0, got {}", self.fs));
        }
        if !(self.excitation_gain > 0.0) || !self.excitation_gain.is_finite() {
            return inv(format!("excitation_gain must be > 0, got {}", self.excitation_gain));
        }
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return inv(format!("duration_s must be > 0, got {}", self.duration_s));
        }
        let exact = self.duration_s * self.fs;
        if (exact - exact.round()).abs() > 1e-6 {
            return inv(format!(
                "duration_s * fs = {exact} is not an integer sample count"
            ));
        }
        if self.sample_count() < self.rir.taps {
            return inv(format!(
                "{} samples is shorter than the filter length {}",
                self.sample_count(),
                self.rir.taps
            ));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return inv(format!("snr_db must be a number or inf, got {}", self.snr_db));
        }
        if self.decimation == 0 {
            return inv("decimation must be >= 1".into());
        }
        if self.rir.taps == 0 {
            return inv("rir taps must be >= 1".into());
        }
        if !(self.rir.t60 > 0.0) {
            return inv(format!("t60 must be > 0, got {}", self.rir.t60));
        }
        if self.rir.pre_delay >= self.rir.taps {
            return inv(format!(
                "pre_delay {} must be below taps {}",
                self.rir.pre_delay, self.rir.taps
            ));
        }
        if self.algorithms.is_empty() {
            return inv("no algorithms selected".into());
        }
        for algo in &self.algorithms {
            match *algo {
                AlgoConfig::Em(c) => {
                    if !(c.c_h0 >= 0.0 && c.c_w0 >= 0.0 && c.c_v0 >= 0.0) {
                        return inv("em_nlms variances must be >= 0".into());
                    }
                    if !(c.epsilon > 0.0) {
                        return inv("em_nlms epsilon must be > 0".into());
                    }
                }
                AlgoConfig::Adapt(c) => {
                    if c.n_t == 0 || c.n_t > self.rir.taps {
                        return inv(format!("adapt_nlms n_t must be in 1..={}", self.rir.taps));
                    }
                    if !(0.0..1.0).contains(&c.eta) {
                        return inv(format!("adapt_nlms eta must be in [0, 1), got {}", c.eta));
                    }
                    if !(c.e0_sq >= 0.0) {
                        return inv("adapt_nlms e0_sq must be >= 0".into());
                    }
                    if !(c.epsilon > 0.0) {
                        return inv("adapt_nlms epsilon must be > 0".into());
                    }
                    if c.lambda_cap.is_some_and(|v| !(v > 0.0)) {
                        return inv("adapt_nlms lambda_cap must be > 0".into());
                    }
                }
                AlgoConfig::Conv(c) => {
                    if !(c.mu > 0.0) {
                        return inv(format!("conv_nlms mu must be > 0, got {}", c.mu));
                    }
                    if !(c.epsilon > 0.0) {
                        return inv("conv_nlms epsilon must be > 0".into());
                    }
                    match c.gate {
                        Gate::Off => {}
                        Gate::Fixed(g) if g >= 0.0 => {}
                        Gate::Auto { factor, window_s } if factor >= 0.0 && window_s > 0.0 => {}
                        _ => return inv("conv_nlms gate parameters must be >= 0".into()),
                    }
                }
            }
        }
        Ok(())
    }

    /// Canonical config text with every value materialized; parses back to `self`.
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        for (section, entries) in self.entries() {
            let _ = writeln!(out, "[{section}]");
            for (k, v) in entries {
                let _ = writeln!(out, "{k} = {v}");
            }
            out.push('\n');
        }
        out
    }

    /// `(section, [(key, value)])` in schema order.
    pub fn entries(&self) -> Vec<(&'static str, Vec<(&'static str, String)>)> {
        let num = |v: f64| {
            if v == f64::INFINITY {
                "inf".to_string()
            } else {
                format!("{v}")
            }
        };
        let mut all = vec![
            (
                "scenario",
                vec![
                    ("excitation", self.excitation.to_string()),
                    ("excitation_gain", num(self.excitation_gain)),
                    ("duration_s", num(self.duration_s)),
                    ("fs", num(self.fs)),
                    ("snr_db", num(self.snr_db)),
                    ("decimation", self.decimation.to_string()),
                    ("output", self.output.display().to_string()),
                ],
            ),
            (
                "rir",
                vec![
                    ("taps", self.rir.taps.to_string()),
                    ("t60", num(self.rir.t60)),
                    ("pre_delay", self.rir.pre_delay.to_string()),
                    ("source", self.rir.source.to_string()),
                ],
            ),
            (
                "seeds",
                vec![
                    ("rir", self.seeds.rir.to_string()),
                    ("excitation", self.seeds.excitation.to_string()),
                    ("noise", self.seeds.noise.to_string()),
                ],
            ),
        ];
        for algo in &self.algorithms {
            match *algo {
                AlgoConfig::Em(c) => all.push((
                    "em_nlms",
                    vec![
                        ("c_h0", num(c.c_h0)),
                        ("c_w0", num(c.c_w0)),
                        ("c_v0", num(c.c_v0)),
                        ("epsilon", num(c.epsilon)),
                    ],
                )),
                AlgoConfig::Adapt(c) => all.push((
                    "adapt_nlms",
                    vec![
                        ("n_t", c.n_t.to_string()),
                        ("eta", num(c.eta)),
                        ("e0_sq", num(c.e0_sq)),
                        ("epsilon", num(c.epsilon)),
                        ("lambda_cap", c.lambda_cap.map_or("none".into(), num)),
                        ("warm_start", c.warm_start.to_string()),
                    ],
                )),
                AlgoConfig::Conv(c) => {
                    let (gate, factor, window) = match c.gate {
                        Gate::Off => ("off".to_string(), 1e-3, 1.0),
                        Gate::Fixed(g) => (num(g), 1e-3, 1.0),
                        Gate::Auto { factor, window_s } => ("auto".to_string(), factor, window_s),
                    };
                    all.push((
                        "conv_nlms",
                        vec![
                            ("mu", num(c.mu)),
                            ("epsilon", num(c.epsilon)),
                            ("gate", gate),
                            ("gate_factor", num(factor)),
                            ("gate_window_s", num(window)),
                        ],
                    ))
                }
            }
        }
        all
    }
}

/// Default number of conventional NLMS steps before Adapt. NLMS takes over.
pub const DEFAULT_WARM_START: usize = 1;

impl FromStr for ScenarioConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self> {
        let sections = tokenize(text)?;
        let empty = Section::default();
        let section = |name: &str| sections.get(name).unwrap_or(&empty);

        let sc = section("scenario");
        let excitation = match sc.raw("excitation").map(|e| e.value.as_str()) {
            None | Some("white") => Excitation::White,
            Some("speechlike") => Excitation::SpeechLike,
            Some(v) if v.starts_with("wav:") => {
                Excitation::Wav(parse_path_tag(sc, "excitation", "wav:").expect("prefix checked"))
            }
            Some(v) => {
                return Err(sc.bad(
                    "excitation",
                    format!("expected white, speechlike or wav:<path>, got `{v}`"),
                ))
            }
        };
        let excitation_gain = sc.get("excitation_gain", 1.0)?;
        let duration_s = sc.get("duration_s", 5.0)?;
        let fs = sc.get("fs", 16_000.0)?;
        let snr_db = sc.get("snr_db", 20.0)?;
        let decimation = sc.get("decimation", 16usize)?;
        let output = sc.get("output", PathBuf::from("out"))?;

        let adapt_section = sections.get("adapt_nlms");
        let adapt_n_t = match adapt_section {
            Some(s) => Some(s.get("n_t", 5usize)?),
            None => None,
        };

        let rs = section("rir");
        let pre_delay = match rs.raw("pre_delay").map(|e| e.value.as_str()) {
            None | Some("auto") => adapt_n_t.unwrap_or(0),
            Some(_) => rs.get("pre_delay", 0usize)?,
        };
        let source = match rs.raw("source").map(|e| e.value.as_str()) {
            None | Some("synthetic") => RirSource::Synthetic,
            Some(v) if v.starts_with("csv:") => {
                RirSource::Csv(parse_path_tag(rs, "source", "csv:").expect("prefix checked"))
            }
            Some(v) => {
                return Err(rs.bad("source", format!("expected synthetic or csv:<path>, got `{v}`")))
            }
        };
        let rir = RirConfig {
            taps: rs.get("taps", 512usize)?,
            t60: rs.get("t60", 0.1)?,
            pre_delay,
            source,
        };

        let ss = section("seeds");
        let seeds = Seeds {
            rir: ss.get("rir", 1u64)?,
            excitation: ss.get("excitation", 2u64)?,
            noise: ss.get("noise", 3u64)?,
        };

        let speech = excitation.is_speech();
        let mut algorithms = Vec::new();
        let any_algo = ["em_nlms", "adapt_nlms", "conv_nlms"]
            .iter()
            .any(|s| sections.contains_key(*s));
        let enabled = |name: &str| !any_algo || sections.contains_key(name);

        if enabled("em_nlms") {
            let s = section("em_nlms");
            let d = EmConfig::default();
            algorithms.push(AlgoConfig::Em(EmConfig {
                c_h0: s.get("c_h0", d.c_h0)?,
                c_w0: s.get("c_w0", d.c_w0)?,
                c_v0: s.get("c_v0", d.c_v0)?,
                epsilon: s.get("epsilon", d.epsilon)?,
            }));
        }
        if enabled("adapt_nlms") {
            let s = section("adapt_nlms");
            algorithms.push(AlgoConfig::Adapt(AdaptConfig {
                n_t: s.get("n_t", 5usize)?,
                eta: s.get("eta", 0.9)?,
                e0_sq: s.get("e0_sq", 0.1)?,
                epsilon: s.get("epsilon", 0.01)?,
                lambda_cap: parse_optional_f64(s, "lambda_cap", speech.then_some(0.5))?,
                warm_start: s.get("warm_start", DEFAULT_WARM_START)?,
            }));
        }
        if enabled("conv_nlms") {
            let s = section("conv_nlms");
            let factor = s.get("gate_factor", 1e-3)?;
            let window_s = s.get("gate_window_s", 1.0)?;
            let auto = Gate::Auto { factor, window_s };
            let gate = match s.raw("gate").map(|e| e.value.as_str()) {
                None if speech => auto,
                None | Some("off") | Some("none") => Gate::Off,
                Some("auto") => auto,
                Some(_) => Gate::Fixed(s.get("gate", 0.0)?),
            };
            algorithms.push(AlgoConfig::Conv(ConvConfig {
                mu: s.get("mu", 0.5)?,
                epsilon: s.get("epsilon", 0.01)?,
                gate,
            }));
        }

        let config = ScenarioConfig {
            excitation,
            excitation_gain,
            duration_s,
            fs,
            snr_db,
            decimation,
            output,
            rir,
            seeds,
            algorithms,
        };
        config.validate()?;
        Ok(config)
    }
}
