//! File formats: diagnostics CSV, field snapshots, report tables.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use chg_core::{CellField, DiagnosticsRecord, GridSpec};

pub const SNAPSHOT_FORMAT_VERSION: u32 = 1;

pub const DIAGNOSTICS_COLUMNS: [&str; 13] = [
    "step",
    "t",
    "mass",
    "energy",
    "dE_dt",
    "diss_beta",
    "diss_cross",
    "diss_mobility",
    "mean_mu",
    "mean_mu_residual",
    "energy_identity_residual",
    "stationary_residual",
    "mass_balance_residual",
];

/// 17 significant digits; parses back to the same `f64`.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn diagnostics_row(r: &DiagnosticsRecord) -> String {
    let values = [
        r.t,
        r.mass,
        r.energy,
        r.de_dt,
        r.diss_beta,
        r.diss_cross,
        r.diss_mobility,
        r.mean_mu,
        r.mean_mu_residual,
        r.energy_identity_residual,
        r.stationary_residual,
        r.mass_balance_residual,
    ];
    let mut row = r.step.to_string();
    for v in values {
        row.push(',');
        row.push_str(&real(v));
    }
    row
}

/// Streaming writer for `diagnostics.csv`.
pub struct DiagnosticsWriter {
    out: BufWriter<File>,
}

impl DiagnosticsWriter {
    pub fn create(path: &Path) -> io::Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", DIAGNOSTICS_COLUMNS.join(","))?;
        Ok(Self { out })
    }

    pub fn record(&mut self, r: &DiagnosticsRecord) -> io::Result<()> {
        writeln!(self.out, "{}", diagnostics_row(r))
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.out.flush()
    }
}

pub fn write_snapshot(
    path: &Path,
    grid: &GridSpec,
    t: f64,
    psi: &CellField,
    mu: &CellField,
) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let join = |v: &[String]| v.join(",");
    writeln!(out, "# format_version = {SNAPSHOT_FORMAT_VERSION}")?;
    writeln!(out, "# dimension = {}", grid.dimension())?;
    writeln!(
        out,
        "# cells = {}",
        join(
            &grid
                .cells()
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
        )
    )?;
    writeln!(
        out,
        "# extents = {}",
        join(&grid.extents().iter().map(|&e| real(e)).collect::<Vec<_>>())
    )?;
    writeln!(out, "# t = {}", real(t))?;
    let columns = if grid.dimension() == 1 {
        "x,psi,mu"
    } else {
        "x,y,psi,mu"
    };
    writeln!(out, "# columns = {columns}")?;
    for k in 0..grid.cell_count() {
        let p = grid.cell_center(k);
        if grid.dimension() == 1 {
            write!(out, "{}", real(p[0]))?;
        } else {
            write!(out, "{},{}", real(p[0]), real(p[1]))?;
        }
        writeln!(out, ",{},{}", real(psi.values[k]), real(mu.values[k]))?;
    }
    out.flush()
}

/// Reads the cell rows of a snapshot back as `(psi, mu)`.
pub fn read_snapshot(text: &str) -> Option<(Vec<f64>, Vec<f64>)> {
    let (mut psi, mut mu) = (Vec::new(), Vec::new());
    for line in text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
    {
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.parse().ok())
            .collect::<Option<_>>()?;
        let n = cols.len();
        if n < 3 {
            return None;
        }
        psi.push(cols[n - 2]);
        mu.push(cols[n - 1]);
    }
    Some((psi, mu))
}

/// A report row `(scan, quantity, value, location, verdict)` or any other
/// fixed-width table; cells are escaped so commas cannot split a field.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

pub fn cell(s: impl Into<String>) -> String {
    s.into().replace(',', ";").replace('\n', " ")
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row.into_iter().map(cell).collect());
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            writeln!(out, "{}", row.join(","))?;
        }
        out.flush()
    }

    /// Aligned plain-text rendering.
    pub fn render(&self) -> String {
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
        for row in &self.rows {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let line = |cells: Vec<&str>| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let mut s = line(self.header.clone());
        for row in &self.rows {
            s.push('\n');
            s.push_str(&line(row.iter().map(String::as_str).collect()));
        }
        s
    }
}

pub fn verdict(pass: bool) -> String {
    if pass { "PASS" } else { "FAIL" }.to_string()
}
