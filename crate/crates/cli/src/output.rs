use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use chrono::{SecondsFormat, Utc};

/// Buffered writer for `path`, or stdout when absent.
pub fn data_sink(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Plain-text report: a timestamped header, then one line per entry.
#[derive(Debug, Default)]
pub struct Report {
    lines: Vec<String>,
}

impl Report {
    pub fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }

    /// `PASS|FAIL name residual tolerance`; passes when `residual < tol`.
    pub fn check(&mut self, name: &str, residual: f64, tol: f64) -> bool {
        let pass = residual < tol;
        self.lines.push(format!(
            "{} {name} {residual:.6e} {tol:.6e}",
            if pass { "PASS" } else { "FAIL" }
        ));
        pass
    }

    /// Writes to `path`, or stderr when absent.
    pub fn emit(&self, command: &str, path: Option<&Path>) -> io::Result<()> {
        let stamp = Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true);
        let mut out: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(io::stderr().lock()),
        };
        writeln!(out, "# fracheat {command} {stamp}")?;
        for l in &self.lines {
            writeln!(out, "{l}")?;
        }
        out.flush()
    }
}

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}
