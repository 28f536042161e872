use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const RESULT_HEADER: &str = "experiment,classifier,channel,speed_kmh,snr_db,pcc,trials,ci95,wall_seconds";
pub const QUANTITY_HEADER: &str = "experiment,quantity,snr_db,value,trials,wall_seconds";

/// One PCC point of one classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub classifier: String,
    pub channel: String,
    pub speed_kmh: f64,
    pub snr_db: f64,
    pub pcc: f64,
    pub trials: usize,
    pub ci95: f64,
    /// Correct and errored trial counts behind `pcc`.
    pub correct: usize,
    pub errored: usize,
    pub wall_seconds: Option<f64>,
}

impl ResultRow {
    /// `ci95 = 1.96 sqrt(p (1 - p) / n)`.
    pub fn ci95_halfwidth(pcc: f64, trials: usize) -> f64 {
        1.96 * (pcc * (1.0 - pcc) / trials as f64).sqrt()
    }
}

/// One averaged scalar (CRB or MSE) at one SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantityRow {
    pub experiment: String,
    pub quantity: String,
    pub snr_db: f64,
    pub value: f64,
    /// Successful evaluations averaged into `value`.
    pub trials: usize,
    pub errored: usize,
    pub wall_seconds: Option<f64>,
}

/// `%g`-style formatting with 6 significant digits. Rounding is applied to
/// the exact binary value, ties to even.
pub fn format_g6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn wall(v: Option<f64>) -> String {
    format_g6(v.unwrap_or(0.0))
}

pub fn results_to_csv(rows: &[ResultRow]) -> String {
    let mut out = format!("{RESULT_HEADER}\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.classifier,
            r.channel,
            format_g6(r.speed_kmh),
            format_g6(r.snr_db),
            format_g6(r.pcc),
            r.trials,
            format_g6(r.ci95),
            wall(r.wall_seconds)
        )
        .unwrap();
    }
    out
}

pub fn quantities_to_csv(rows: &[QuantityRow]) -> String {
    let mut out = format!("{QUANTITY_HEADER}\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.experiment,
            r.quantity,
            format_g6(r.snr_db),
            format_g6(r.value),
            r.trials,
            wall(r.wall_seconds)
        )
        .unwrap();
    }
    out
}

pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    std::fs::write(path, results_to_csv(rows)).map_err(|e| Error::io(path, e))
}

pub fn write_quantity_csv(rows: &[QuantityRow], path: &Path) -> Result<()> {
    std::fs::write(path, quantities_to_csv(rows)).map_err(|e| Error::io(path, e))
}
