//! Row-oriented output in CSV, TSV, or aligned text.
//!
//! Numbers are formatted by hand (Rust's formatting never consults the
//! locale): ten significant digits, scientific notation below `1e-4`.

use std::io::{self, Write};

use clap::ValueEnum;
use ks2_core::combinatorics::LogProb;
use ks2_core::PValue;
use num_rational::Ratio;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Pretty,
    Csv,
    Tsv,
}

const SIG_DIGITS: usize = 10;

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let ax = x.abs();
    if !(1e-4..1e15).contains(&ax) {
        return format!("{:.*e}", SIG_DIGITS - 1, x);
    }
    let int_digits = ax.log10().floor() as i64 + 1;
    let decimals = (SIG_DIGITS as i64 - int_digits).max(0) as usize;
    format!("{x:.decimals$}")
}

/// A probability, formatted from its log when it underflows `f64`.
pub fn fmt_prob(pv: &PValue) -> String {
    if pv.value() == 0.0 && pv.log_value().is_finite() {
        fmt_log(pv.log_prob())
    } else {
        fmt_f64(pv.value())
    }
}

pub fn fmt_log(lp: LogProb) -> String {
    let (mant, exp) = lp.to_sci();
    let shown = format!("{:.*}", SIG_DIGITS - 1, mant);
    if shown.starts_with("10") {
        format!("{:.*}e{}", SIG_DIGITS - 1, 1.0, exp + 1)
    } else {
        format!("{shown}e{exp}")
    }
}

pub fn fmt_ratio(r: Ratio<u64>) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// One output record: ordered `(column, formatted value)` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputRow {
    pub columns: Vec<(String, String)>,
}

impl OutputRow {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(mut self, name: &str, value: impl Into<String>) -> Self {
        self.columns.push((name.into(), value.into()));
        self
    }

    pub fn int(self, name: &str, value: u64) -> Self {
        self.text(name, value.to_string())
    }

    pub fn num(self, name: &str, value: f64) -> Self {
        self.text(name, fmt_f64(value))
    }

    pub fn opt_num(self, name: &str, value: Option<f64>) -> Self {
        self.text(name, value.map(fmt_f64).unwrap_or_else(|| "NA".into()))
    }

    pub fn ratio(self, name: &str, value: Ratio<u64>) -> Self {
        self.text(name, fmt_ratio(value))
    }

    pub fn prob(self, name: &str, value: &PValue) -> Self {
        self.text(name, fmt_prob(value))
    }

    fn header(&self) -> Vec<&str> {
        self.columns.iter().map(|(n, _)| n.as_str()).collect()
    }

    fn values(&self) -> Vec<&str> {
        self.columns.iter().map(|(_, v)| v.as_str()).collect()
    }
}

/// Writes rows sharing the first row's columns.
pub fn write_rows<W: Write>(out: W, rows: &[OutputRow], format: Format) -> io::Result<()> {
    let Some(first) = rows.first() else {
        return Ok(());
    };
    match format {
        Format::Csv | Format::Tsv => {
            let delim = if format == Format::Csv { b',' } else { b'\t' };
            let mut w = csv::WriterBuilder::new().delimiter(delim).from_writer(out);
            w.write_record(first.header())?;
            for r in rows {
                w.write_record(r.values())?;
            }
            w.flush()
        }
        Format::Pretty => write_pretty(out, first.header(), rows),
    }
}

fn write_pretty<W: Write>(mut out: W, header: Vec<&str>, rows: &[OutputRow]) -> io::Result<()> {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, v) in widths.iter_mut().zip(r.values()) {
            *w = (*w).max(v.len());
        }
    }
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    writeln!(out, "{}", line(header.clone()))?;
    for r in rows {
        writeln!(out, "{}", line(r.values()))?;
    }
    Ok(())
}
