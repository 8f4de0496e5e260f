//! Machine-readable and human-readable output of reports.
//!
//! JSON is the canonical form. Every report is also a table: one CSV row per
//! eigenvalue, level or square, with a header row and RFC 4180 quoting.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::complex::{CommutingReport, ComplexReport, InfSup, S1Report};
use crate::elasticity::{AwCommutingReport, UnisolvenceSweep};
use crate::error::{Error, Result};

/// A named pass/fail verdict with a short explanation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            pass,
            detail: detail.into(),
        }
    }
}

/// True when every check passes.
pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

/// Tabular view of a report.
pub trait Tabular {
    fn header(&self) -> Vec<String>;
    fn rows(&self) -> Vec<Vec<String>>;
}

/// Shortest round-trip representation; empty for `None`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn strings<const N: usize>(a: [&str; N]) -> Vec<String> {
    a.iter().map(|s| s.to_string()).collect()
}

/// Writes the header and one record per row.
pub fn emit_csv<W: Write>(report: &dyn Tabular, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(report.header()).map_err(csv_err)?;
    for r in report.rows() {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(report: &dyn Tabular) -> Result<String> {
    let mut buf = Vec::new();
    emit_csv(report, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Io(std::io::Error::other(e)))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(report: &T) -> Result<String> {
    serde_json::to_string_pretty(report)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Io(std::io::Error::other(e)))
}

/// Column-aligned plain-text table.
pub fn render_table(report: &dyn Tabular) -> String {
    let header = report.header();
    let rows = report.rows();
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in &rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&width).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            s.push_str(c);
            s.extend(std::iter::repeat_n(' ', w - c.chars().count()));
        }
        s.truncate(s.trim_end().len());
        s.push('\n');
        s
    };
    let mut out = line(&header);
    let rule: Vec<String> = width.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&line(&rule));
    for r in &rows {
        out.push_str(&line(r));
    }
    out
}

/// Checks as a table, for reports that carry them.
pub fn render_checks(checks: &[Check]) -> String {
    struct T<'a>(&'a [Check]);
    impl Tabular for T<'_> {
        fn header(&self) -> Vec<String> {
            strings(["check", "result", "detail"])
        }
        fn rows(&self) -> Vec<Vec<String>> {
            self.0
                .iter()
                .map(|c| {
                    vec![
                        c.name.clone(),
                        if c.pass { "pass" } else { "FAIL" }.to_string(),
                        c.detail.clone(),
                    ]
                })
                .collect()
        }
    }
    render_table(&T(checks))
}

impl Tabular for ComplexReport {
    fn header(&self) -> Vec<String> {
        strings(["level", "dim", "rank", "kernel", "cohomology", "expected"])
    }
    fn rows(&self) -> Vec<Vec<String>> {
        self.levels
            .iter()
            .enumerate()
            .map(|(k, l)| {
                vec![
                    k.to_string(),
                    l.dim.to_string(),
                    l.rank.to_string(),
                    l.kernel.to_string(),
                    l.cohomology.to_string(),
                    self.expected_betti.get(k).map(|b| b.to_string()).unwrap_or_default(),
                ]
            })
            .collect()
    }
}

impl Tabular for CommutingReport {
    fn header(&self) -> Vec<String> {
        strings(["from", "to", "fields", "max_residual"])
    }
    fn rows(&self) -> Vec<Vec<String>> {
        self.squares
            .iter()
            .map(|s| {
                vec![
                    s.from.clone(),
                    s.to.clone(),
                    s.fields.to_string(),
                    fmt_f64(s.max_residual),
                ]
            })
            .collect()
    }
}

impl Tabular for AwCommutingReport {
    fn header(&self) -> Vec<String> {
        strings(["fields", "max_residual", "tolerance", "pass"])
    }
    fn rows(&self) -> Vec<Vec<String>> {
        vec![vec![
            self.fields.to_string(),
            fmt_f64(self.max_residual),
            fmt_f64(self.tolerance),
            self.pass.to_string(),
        ]]
    }
}

impl Tabular for UnisolvenceSweep {
    fn header(&self) -> Vec<String> {
        strings(["case", "rank", "condition"])
    }
    fn rows(&self) -> Vec<Vec<String>> {
        vec![
            vec![
                "reference".into(),
                self.reference.rank.to_string(),
                fmt_f64(self.reference.condition),
            ],
            vec![
                "reference x10".into(),
                self.scaled.rank.to_string(),
                fmt_f64(self.scaled.condition),
            ],
            vec![
                format!("{} random (seed {}, {} failures)", self.trials, self.seed, self.failures),
                self.min_rank.to_string(),
                fmt_f64(self.max_condition),
            ],
        ]
    }
}

impl Tabular for InfSup {
    fn header(&self) -> Vec<String> {
        strings(["gamma", "gamma_unrestricted", "deflated"])
    }
    fn rows(&self) -> Vec<Vec<String>> {
        vec![vec![
            fmt_f64(self.gamma),
            fmt_f64(self.gamma_unrestricted),
            self.deflated.to_string(),
        ]]
    }
}

impl Tabular for S1Report {
    fn header(&self) -> Vec<String> {
        strings(["kernel_divergence_free", "gamma1", "holds"])
    }
    fn rows(&self) -> Vec<Vec<String>> {
        vec![vec![
            self.kernel_divergence_free.to_string(),
            fmt_f64(self.gamma1),
            self.holds.to_string(),
        ]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rows(Vec<Vec<String>>);
    impl Tabular for Rows {
        fn header(&self) -> Vec<String> {
            strings(["a", "b"])
        }
        fn rows(&self) -> Vec<Vec<String>> {
            self.0.clone()
        }
    }

    #[test]
    fn csv_quoting() {
        let r = Rows(vec![vec!["x,y".into(), "say \"hi\"".into()]]);
        assert_eq!(csv_string(&r).unwrap(), "a,b\n\"x,y\",\"say \"\"hi\"\"\"\n");
        assert_eq!(csv_string(&Rows(vec![])).unwrap(), "a,b\n");
    }

    #[test]
    fn table_alignment() {
        let r = Rows(vec![vec!["1".into(), "long".into()]]);
        assert_eq!(render_table(&r), "a  b\n-  ----\n1  long\n");
    }

    #[test]
    fn non_finite_formatting() {
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(fmt_f64(0.5), "0.5");
        assert_eq!(fmt_opt(None), "");
    }
}
