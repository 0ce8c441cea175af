//! Trace CSV files.
//!
//! Layout: `#`-prefixed comment lines, then the fixed header, then one row per
//! iteration. Comment lines of the form `# config: key = value` carry the
//! resolved run configuration; other comment lines are free-form notes.
//! Floats use 17 significant digits, so every value reads back bit-exact.
//! Optional columns are left empty when a run has no reference point,
//! objective or rate bound.

use std::fmt;
use std::io::{self, Write};

use crate::engine::TraceRow;

pub const TRACE_HEADER: &str =
    "k,residual,step,nu_k,delta_k,Delta_k,C_k,dist_to_ref,k_step_sq,k_res_sq,objective,rate_bound";
pub const CONFIG_PREFIX: &str = "# config: ";

const COLUMNS: usize = 12;

/// Float in round-trip exact scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_trace(
    out: &mut impl Write,
    config: &str,
    notes: &[String],
    rows: &[TraceRow],
) -> io::Result<()> {
    for line in config.lines() {
        writeln!(out, "{CONFIG_PREFIX}{line}")?;
    }
    for n in notes {
        for line in n.lines() {
            writeln!(out, "# {line}")?;
        }
    }
    writeln!(out, "{TRACE_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.k,
            fmt_f64(r.residual),
            fmt_f64(r.step),
            fmt_f64(r.nu_k),
            fmt_f64(r.delta_k),
            fmt_opt(r.big_delta_k),
            fmt_opt(r.c_k),
            fmt_opt(r.dist_to_ref),
            fmt_f64(r.k_step_sq),
            fmt_f64(r.k_res_sq),
            fmt_opt(r.objective),
            fmt_opt(r.rate_bound),
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsvError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for CsvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for CsvError {}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParsedTrace {
    /// The embedded configuration, one `key = value` per line.
    pub config: String,
    pub notes: Vec<String>,
    pub rows: Vec<TraceRow>,
}

pub fn parse_trace_csv(text: &str) -> Result<ParsedTrace, CsvError> {
    let mut parsed = ParsedTrace::default();
    let mut config = Vec::new();
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let err = |message: String| CsvError { line: n, message };
        if !header_seen {
            if let Some(rest) = line.strip_prefix(CONFIG_PREFIX) {
                config.push(rest);
            } else if let Some(rest) = line.strip_prefix('#') {
                parsed.notes.push(rest.strip_prefix(' ').unwrap_or(rest).to_string());
            } else if line == TRACE_HEADER {
                header_seen = true;
            } else {
                return Err(err(format!("expected comment or header, got `{}`", clip(line))));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != COLUMNS {
            return Err(err(format!("expected {COLUMNS} fields, got {}", fields.len())));
        }
        let k: usize = fields[0]
            .parse()
            .map_err(|_| err(format!("bad iteration index `{}`", clip(fields[0]))))?;
        let expected = parsed.rows.last().and_then(|r: &TraceRow| r.k.checked_add(1));
        if k == 0 || expected.is_some_and(|e| e != k) {
            return Err(err(format!("iteration index {k} out of sequence")));
        }
        let req = |j: usize| {
            fields[j]
                .parse::<f64>()
                .map_err(|_| err(format!("column {}: bad number `{}`", j + 1, clip(fields[j]))))
        };
        let opt = |j: usize| if fields[j].is_empty() { Ok(None) } else { req(j).map(Some) };
        parsed.rows.push(TraceRow {
            k,
            residual: req(1)?,
            step: req(2)?,
            nu_k: req(3)?,
            delta_k: req(4)?,
            big_delta_k: opt(5)?,
            c_k: opt(6)?,
            dist_to_ref: opt(7)?,
            k_step_sq: req(8)?,
            k_res_sq: req(9)?,
            objective: opt(10)?,
            rate_bound: opt(11)?,
            contraction: None,
        });
    }
    if !header_seen {
        return Err(CsvError {
            line: text.lines().count(),
            message: "missing header line".into(),
        });
    }
    parsed.config = config.join("\n");
    Ok(parsed)
}

fn clip(s: &str) -> String {
    s.chars().take(40).collect()
}
