//! CSV tables with a reproducibility footer, and box-plot summaries.

use std::fmt::Write as _;

use crate::deterministic::{SolveMode, SolverOptions};
use crate::error::{Error, Result};

/// Comma-separated table, LF line endings. Footer lines start with `#`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    footer: Vec<(String, String)>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            footer: Vec::new(),
        }
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn push(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::InvalidParameter(format!(
                "row has {} fields, header has {}",
                row.len(),
                self.header.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn footer(&mut self, key: &str, value: impl Into<String>) {
        self.footer.push((key.to_string(), value.into()));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        for (k, v) in &self.footer {
            let _ = writeln!(out, "# {k}={v}");
        }
        out
    }
}

/// Shortest representation that round-trips.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn solver_summary(opts: &SolverOptions) -> String {
    let mode = match opts.mode {
        SolveMode::SweepDown => "sweep_down",
        SolveMode::Bisection => "bisection",
    };
    format!(
        "mode:{mode};sweep_step:{};sum_tolerance:{};stage_tolerance:{};max_iterations:{}",
        opts.sweep_step, opts.sum_tolerance, opts.stage_tolerance, opts.max_iterations
    )
}

/// Linearly interpolated quantile of sorted data (`q` in `[0, 1]`).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxSummary {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// Most extreme data points within 1.5 IQR of the quartiles.
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

impl BoxSummary {
    pub fn from_data(data: &[f64]) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InvalidParameter("box summary of empty data".into()));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "box summary of non-finite data".into(),
            ));
        }
        let mut s = data.to_vec();
        s.sort_by(f64::total_cmp);
        let (q1, q3) = (quantile(&s, 0.25), quantile(&s, 0.75));
        let iqr = q3 - q1;
        let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
        let inside = |x: &&f64| **x >= lo_fence && **x <= hi_fence;
        Ok(Self {
            count: s.len(),
            min: s[0],
            q1,
            median: quantile(&s, 0.5),
            q3,
            max: s[s.len() - 1],
            whisker_low: *s
                .iter()
                .find(inside)
                .expect("quartiles lie inside the fences"),
            whisker_high: *s
                .iter()
                .rev()
                .find(inside)
                .expect("quartiles lie inside the fences"),
            outliers: s.iter().copied().filter(|x| !inside(&x)).collect(),
        })
    }

    pub const HEADER: [&'static str; 10] = [
        "count",
        "min",
        "q25",
        "median",
        "q75",
        "max",
        "whisker_low",
        "whisker_high",
        "n_outliers",
        "outliers",
    ];

    pub fn fields(&self) -> Vec<String> {
        vec![
            self.count.to_string(),
            num(self.min),
            num(self.q1),
            num(self.median),
            num(self.q3),
            num(self.max),
            num(self.whisker_low),
            num(self.whisker_high),
            self.outliers.len().to_string(),
            self.outliers
                .iter()
                .map(|x| num(*x))
                .collect::<Vec<_>>()
                .join(";"),
        ]
    }
}
