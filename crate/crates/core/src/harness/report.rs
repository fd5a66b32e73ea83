//! Ratio tables and their CSV, JSON and plot-script forms.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::EpsilonCertificate;
use crate::error::{Error, Result};
use crate::spec_text::fmt_f64;

/// Frozen CSV column order.
pub const CSV_COLUMNS: [&str; 13] = [
    "experiment",
    "function",
    "space",
    "domain",
    "n",
    "p",
    "gamma_or_s",
    "value",
    "reference",
    "ratio",
    "flags",
    "grid",
    "seed",
];

/// One measured quantity with its reference and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub experiment: String,
    pub function: String,
    pub space: String,
    pub domain: String,
    pub n: usize,
    pub p: Option<f64>,
    pub gamma_or_s: Option<f64>,
    pub value: Option<f64>,
    pub reference: Option<f64>,
    pub ratio: Option<f64>,
    pub flags: Vec<String>,
    pub grid: String,
    pub seed: u64,
    pub policy: Option<String>,
    pub sweep: Option<String>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl RatioRow {
    /// A row with `ratio = value / reference`; `0/0` is flagged `degenerate`
    /// and other non-finite quantities are flagged `non-finite`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        experiment: &str,
        function: impl Into<String>,
        space: impl Into<String>,
        domain: impl Into<String>,
        grid: &crate::grid::Grid,
        seed: u64,
        value: f64,
        reference: Option<f64>,
    ) -> Self {
        let mut flags = Vec::new();
        let ratio = match reference {
            Some(r) if value == 0.0 && r == 0.0 => {
                flags.push("degenerate".to_string());
                None
            }
            Some(r) if r != 0.0 => finite(value / r),
            _ => None,
        };
        if !value.is_finite() || reference.is_some_and(|r| !r.is_finite()) {
            flags.push("non-finite".to_string());
        }
        Self {
            experiment: experiment.to_string(),
            function: function.into(),
            space: space.into(),
            domain: domain.into(),
            n: grid.dim(),
            p: None,
            gamma_or_s: None,
            value: finite(value),
            reference: reference.and_then(finite),
            ratio,
            flags,
            grid: grid.to_string(),
            seed,
            policy: None,
            sweep: None,
        }
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = finite(p);
        self
    }

    pub fn with_gamma_or_s(mut self, v: f64) -> Self {
        self.gamma_or_s = finite(v);
        self
    }

    pub fn with_policy(mut self, policy: impl ToString) -> Self {
        self.policy = Some(policy.to_string());
        self
    }

    pub fn with_sweep(mut self, sweep: impl Into<String>) -> Self {
        self.sweep = Some(sweep.into());
        self
    }

    pub fn flag(mut self, flag: impl Into<String>) -> Self {
        self.flags.push(flag.into());
        self
    }

    pub fn is_degenerate(&self) -> bool {
        self.flags.iter().any(|f| f == "degenerate")
    }

    fn csv_record(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        vec![
            self.experiment.clone(),
            self.function.clone(),
            self.space.clone(),
            self.domain.clone(),
            self.n.to_string(),
            opt(self.p),
            opt(self.gamma_or_s),
            opt(self.value),
            opt(self.reference),
            opt(self.ratio),
            self.flags.join(";"),
            self.grid.clone(),
            self.seed.to_string(),
        ]
    }
}

/// Pass/fail outcome of one configured check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

/// Ratio range over the rows of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub key: String,
    pub lo: f64,
    pub hi: f64,
    pub width: f64,
    /// Largest relative change of a ratio between the two grids.
    pub refinement: Option<f64>,
    pub rows: usize,
}

/// A curve for the plot script (λ-profiles, s-sweeps).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub x: String,
    pub y: String,
    pub points: Vec<(f64, f64)>,
    /// `(intercept, slope)` of a fitted line in `1 - x`.
    pub fit: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RatioTable {
    pub experiment: String,
    pub config: String,
    pub rows: Vec<RatioRow>,
    pub brackets: Vec<Bracket>,
    pub series: Vec<Series>,
    pub certificates: Vec<EpsilonCertificate>,
    pub checks: Vec<Check>,
}

impl RatioTable {
    pub fn new(experiment: &str, config: String) -> Self {
        Self { experiment: experiment.to_string(), config, ..Self::default() }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(CSV_COLUMNS).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.csv_record()).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    fn series_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["series", "x", "y"]).map_err(io)?;
        for (k, s) in self.series.iter().enumerate() {
            for (x, y) in &s.points {
                w.write_record([k.to_string(), fmt_f64(*x), fmt_f64(*y)]).map_err(io)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    /// Gnuplot script drawing every series from `<stem>.series.csv`.
    pub fn plot_script(&self, stem: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "set datafile separator ','");
        let _ = writeln!(s, "set key outside");
        if self.series.iter().any(|c| c.x == "lambda") {
            let _ = writeln!(s, "set logscale x");
        }
        let _ = writeln!(s, "set terminal pngcairo size 1200,800");
        let _ = writeln!(s, "set output '{stem}.png'");
        let mut parts = Vec::new();
        for (k, c) in self.series.iter().enumerate() {
            let label = c.label.replace('\'', "");
            parts.push(format!(
                "'{stem}.series.csv' using ($1=={k} ? $2 : 1/0):3 with linespoints title '{label}'"
            ));
            if let Some((a, b)) = c.fit {
                parts.push(format!("{} + ({})*(1-x) with lines dashtype 2 title '{label} fit'", fmt_f64(a), fmt_f64(b)));
            }
        }
        if !parts.is_empty() {
            let _ = writeln!(s, "plot {}", parts.join(", \\\n     "));
        }
        s
    }
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`, plus `<stem>.series.csv`
/// and `<stem>.gp` when the table carries series. Returns the written paths.
pub fn emit_report(table: &RatioTable, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };
    put(format!("{stem}.csv"), table.to_csv()?)?;
    put(format!("{stem}.json"), table.to_json()?)?;
    if !table.series.is_empty() {
        put(format!("{stem}.series.csv"), table.series_csv()?)?;
        put(format!("{stem}.gp"), table.plot_script(stem))?;
    }
    Ok(written)
}
