//! CSV emission for simulated and theoretical BER curves.

use std::cmp::Ordering;
use std::io::{self, Write};

use crate::montecarlo::BerCurve;
use crate::receivers::ReceiverKind;
use crate::stable::NoiseModel;
use crate::theory::TheoryCurve;

pub const CSV_HEADER: &str = "kind,receiver,model,alpha,nt,nr,snr_db,ber,ci_lo,ci_hi,trials,bit_errors";

/// Row kind for simulated points.
pub const SIM_KIND: &str = "sim";

/// Simulation fields absent from theory rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimFields {
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub trials: u64,
    pub bit_errors: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsvRow {
    pub kind: &'static str,
    pub receiver: ReceiverKind,
    pub model: NoiseModel,
    pub alpha: f64,
    pub n_t: usize,
    pub n_r: usize,
    pub snr_db: f64,
    pub ber: f64,
    pub sim: Option<SimFields>,
}

/// C-style `%.9g`.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..9).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    } else {
        trim(&format!("{v:.*}", (8 - exp) as usize))
    }
}

pub fn sim_rows(curve: &BerCurve) -> Vec<CsvRow> {
    let c = &curve.config;
    curve
        .points
        .iter()
        .flat_map(|p| {
            p.stats.iter().map(move |s| CsvRow {
                kind: SIM_KIND,
                receiver: s.receiver,
                model: c.model,
                alpha: c.alpha,
                n_t: c.n_t,
                n_r: c.n_r,
                snr_db: p.snr_db,
                ber: s.ber,
                sim: Some(SimFields { ci_lo: s.ci_lo, ci_hi: s.ci_hi, trials: p.trials, bit_errors: s.bit_errors }),
            })
        })
        .collect()
}

pub fn theory_rows(curve: &TheoryCurve) -> Vec<CsvRow> {
    curve
        .points
        .iter()
        .map(|p| CsvRow {
            kind: p.kind.label(),
            receiver: p.receiver,
            model: p.model,
            alpha: p.alpha,
            n_t: p.n_t,
            n_r: p.n_r,
            snr_db: p.snr_db,
            ber: p.ber,
            sim: None,
        })
        .collect()
}

fn row_order(a: &CsvRow, b: &CsvRow) -> Ordering {
    a.receiver
        .cmp(&b.receiver)
        .then(a.snr_db.total_cmp(&b.snr_db))
        .then(a.model.cmp(&b.model))
        .then(a.n_r.cmp(&b.n_r))
        .then(a.n_t.cmp(&b.n_t))
        .then(a.alpha.total_cmp(&b.alpha))
        .then(a.kind.cmp(b.kind))
}

/// Sorts by (receiver, snr_db), then by the remaining identifying columns.
pub fn sort_rows(rows: &mut [CsvRow]) {
    rows.sort_by(row_order);
}

pub fn format_row(r: &CsvRow) -> String {
    let (ci_lo, ci_hi, trials, errors) = match r.sim {
        Some(s) => (format_sig9(s.ci_lo), format_sig9(s.ci_hi), s.trials.to_string(), s.bit_errors.to_string()),
        None => Default::default(),
    };
    format!(
        "{},{},{},{},{},{},{},{},{ci_lo},{ci_hi},{trials},{errors}",
        r.kind,
        r.receiver,
        r.model,
        format_sig9(r.alpha),
        r.n_t,
        r.n_r,
        format_sig9(r.snr_db),
        format_sig9(r.ber),
    )
}

/// Header plus rows in sorted order.
pub fn write_csv<W: Write>(rows: &[CsvRow], mut out: W) -> io::Result<()> {
    let mut rows = rows.to_vec();
    sort_rows(&mut rows);
    writeln!(out, "{CSV_HEADER}")?;
    for r in &rows {
        writeln!(out, "{}", format_row(r))?;
    }
    out.flush()
}

pub fn csv_string(rows: &[CsvRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV is ASCII")
}
