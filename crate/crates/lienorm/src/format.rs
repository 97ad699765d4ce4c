//! Plain-text series format.
//!
//! ```text
//! # key = value          (optional metadata lines)
//! n_dof max_bk
//! coeff  e1 .. en  kind  k1 .. kn  bk
//! ```
//! Coefficients carry 17 significant digits so a write/read cycle is bit-exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use lienorm_core::{MAX_DOF, PoissonSeries, Term, Trig};

use crate::error::CliError;

/// Ordered `key = value` metadata.
pub type Metadata = BTreeMap<String, String>;

pub fn format_coeff(c: f64) -> String {
    format!("{c:.16e}")
}

/// Serializes a series with an optional metadata header. Terms follow the series' key order.
pub fn write_series(s: &PoissonSeries, meta: &Metadata) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        let _ = writeln!(out, "# {k} = {v}");
    }
    let n = s.n_dof();
    let _ = writeln!(out, "{} {}", n, s.max_bk());
    let mut terms: Vec<Term> = s.terms().collect();
    terms.sort_by(|a, b| (a.grade, &a.exps[..n], a.kind, &a.wave[..n]).cmp(&(b.grade, &b.exps[..n], b.kind, &b.wave[..n])));
    for t in terms {
        let _ = write!(out, "{}", format_coeff(t.coeff));
        for e in &t.exps[..n] {
            let _ = write!(out, " {e}");
        }
        let _ = write!(out, " {}", t.kind.symbol());
        for k in &t.wave[..n] {
            let _ = write!(out, " {k}");
        }
        let _ = writeln!(out, " {}", t.grade);
    }
    out
}

fn parse_err(line: usize, msg: impl Into<String>) -> CliError {
    CliError::Config(format!("series line {line}: {}", msg.into()))
}

/// Parses the format written by [`write_series`].
pub fn read_series(text: &str) -> Result<(PoissonSeries, Metadata), CliError> {
    let mut meta = Metadata::new();
    let mut header: Option<(usize, u32)> = None;
    let mut terms = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let Some((n, _)) = header else {
            if f.len() != 2 {
                return Err(parse_err(no + 1, "expected header `n_dof max_bk`"));
            }
            let n: usize = f[0].parse().map_err(|_| parse_err(no + 1, "bad n_dof"))?;
            let bk: u32 = f[1].parse().map_err(|_| parse_err(no + 1, "bad max_bk"))?;
            if n == 0 || n > MAX_DOF {
                return Err(parse_err(no + 1, format!("n_dof must be in 1..={MAX_DOF}")));
            }
            header = Some((n, bk));
            continue;
        };
        if f.len() != 2 * n + 3 {
            return Err(parse_err(no + 1, format!("expected {} fields, found {}", 2 * n + 3, f.len())));
        }
        let coeff: f64 = f[0].parse().map_err(|_| parse_err(no + 1, "bad coefficient"))?;
        let exps: Vec<u32> = f[1..=n].iter().map(|x| x.parse()).collect::<Result<_, _>>().map_err(|_| parse_err(no + 1, "bad exponent"))?;
        let mut kc = f[n + 1].chars();
        let kind = match (kc.next(), kc.next()) {
            (Some(c), None) => Trig::from_symbol(c).ok_or_else(|| parse_err(no + 1, "kind must be k, c or s"))?,
            _ => return Err(parse_err(no + 1, "kind must be k, c or s")),
        };
        let wave: Vec<i32> = f[n + 2..2 * n + 2].iter().map(|x| x.parse()).collect::<Result<_, _>>().map_err(|_| parse_err(no + 1, "bad wave number"))?;
        let grade: u32 = f[2 * n + 2].parse().map_err(|_| parse_err(no + 1, "bad grade"))?;
        terms.push(Term::new(coeff, &exps, kind, &wave, grade));
    }
    let (n, bk) = header.ok_or_else(|| CliError::Config("series text has no header".into()))?;
    let s = PoissonSeries::from_terms(n, bk, terms).map_err(CliError::Numeric)?;
    Ok((s, meta))
}

/// Writes `key = value` lines.
pub fn write_kv(meta: &Metadata) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        let _ = writeln!(out, "{k} = {v}");
    }
    out
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn read_kv(text: &str) -> Result<Metadata, CliError> {
    let mut m = Metadata::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| CliError::Config(format!("line {}: expected key = value", no + 1)))?;
        m.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(m)
}

/// Joins floats with full precision.
pub fn join_f64(v: &[f64]) -> String {
    v.iter().map(|x| format_coeff(*x)).collect::<Vec<_>>().join(" ")
}
