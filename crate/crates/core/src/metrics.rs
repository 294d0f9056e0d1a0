//! System distance, normalized stepsize and per-sample trace rows.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Reported in place of `-inf` for an exact identification.
pub const DISTANCE_FLOOR_DB: f64 = -300.0;

/// Normalized misalignment `10 log10(|h_hat - h|^2 / |h|^2)` in dB.
pub fn system_distance_db(h_hat: &[f64], h_true: &[f64]) -> Result<f64> {
    Error::check_len(h_true.len(), h_hat.len())?;
    let reference: f64 = h_true.iter().map(|v| v * v).sum();
    if reference == 0.0 {
        return Err(Error::UndefinedReference);
    }
    let misalignment: f64 = h_hat
        .iter()
        .zip(h_true)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    if misalignment == 0.0 {
        return Ok(DISTANCE_FLOOR_DB);
    }
    Ok((10.0 * (misalignment / reference).log10()).max(DISTANCE_FLOOR_DB))
}

/// `alpha = lambda * x'x`.
pub fn normalized_alpha(lambda: f64, energy: f64) -> f64 {
    lambda * energy
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algo {
    EmNlms,
    AdaptNlms,
    ConvNlms,
}

impl Algo {
    pub const ALL: [Algo; 3] = [Algo::EmNlms, Algo::AdaptNlms, Algo::ConvNlms];

    pub fn label(self) -> &'static str {
        match self {
            Algo::EmNlms => "em_nlms",
            Algo::AdaptNlms => "adapt_nlms",
            Algo::ConvNlms => "conv_nlms",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Algo::ALL
            .into_iter()
            .find(|a| a.label() == s)
            .ok_or_else(|| format!("unknown algorithm `{s}`"))
    }
}

/// Variances logged for EM-NLMS rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmVariances {
    pub c_h: f64,
    pub c_v: f64,
    pub c_w: f64,
    pub c_w_raw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub n: usize,
    pub t: f64,
    pub algo: Algo,
    pub e: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub delta_h_db: f64,
    pub d: f64,
    pub em: Option<EmVariances>,
}

pub const TRACE_HEADER: [&str; 12] = [
    "n",
    "t",
    "algo",
    "e",
    "lambda",
    "alpha",
    "delta_h_db",
    "d",
    "c_h",
    "c_v",
    "c_w",
    "c_w_raw",
];

/// 17 significant digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl TraceRecord {
    fn fields(&self) -> [String; 12] {
        let opt = |f: fn(&EmVariances) -> f64| self.em.as_ref().map(f).map(format_f64).unwrap_or_default();
        [
            self.n.to_string(),
            format_f64(self.t),
            self.algo.label().to_string(),
            format_f64(self.e),
            format_f64(self.lambda),
            format_f64(self.alpha),
            format_f64(self.delta_h_db),
            format_f64(self.d),
            opt(|v| v.c_h),
            opt(|v| v.c_v),
            opt(|v| v.c_w),
            opt(|v| v.c_w_raw),
        ]
    }
}

/// Writes the header and all rows.
pub fn write_trace_csv<W: Write>(out: W, records: &[TraceRecord]) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}
