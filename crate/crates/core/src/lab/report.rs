use std::io::Write;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::spec::{ExperimentSpec, Mode, OutputFormat};
use crate::error::Result;
use crate::process::{DecayFit, ProcessModel};

/// Mean, sample standard deviation and standard error.
pub fn summarize(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    (mean, sd, sd / (n as f64).sqrt())
}

/// Running means `mean(values[..=i])`.
pub fn running_means(values: &[f64]) -> Vec<f64> {
    let mut total = 0.0;
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            total += v;
            total / (i + 1) as f64
        })
        .collect()
}

/// Per-replica values of `I / |F_n|` for one mode and one `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmbRow {
    pub mode: Mode,
    pub n: u32,
    pub set_size: usize,
    pub values: Vec<f64>,
    /// Running mean over replicas.
    pub running: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
    pub se: f64,
}

impl SmbRow {
    pub fn new(mode: Mode, n: u32, set_size: usize, values: Vec<f64>) -> Self {
        let (mean, sd, se) = summarize(&values);
        Self {
            mode,
            n,
            set_size,
            running: running_means(&values),
            values,
            mean,
            sd,
            se,
        }
    }
}

/// Horoball against metric-sphere estimate of `h` at the same `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HComparison {
    pub n: u32,
    pub horoball_h: f64,
    pub horoball_se: f64,
    pub sphere_h: f64,
    pub sphere_se: f64,
    pub difference: f64,
    pub combined_se: f64,
    pub within_3_sigma: bool,
}

impl HComparison {
    pub fn new(horoball: &SmbRow, sphere: &SmbRow) -> Self {
        let combined_se = (horoball.se.powi(2) + sphere.se.powi(2)).sqrt();
        let difference = horoball.mean - sphere.mean;
        Self {
            n: horoball.n,
            horoball_h: horoball.mean,
            horoball_se: horoball.se,
            sphere_h: sphere.mean,
            sphere_se: sphere.se,
            difference,
            combined_se,
            within_3_sigma: difference.abs() <= 3.0 * combined_se,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub spec: ExperimentSpec,
    pub version: String,
    pub boundary_prefix: Option<String>,
    pub rows: Vec<SmbRow>,
    pub comparison: Option<HComparison>,
    /// Kept out of emitted files so reruns are byte-identical.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl ConvergenceReport {
    pub fn row(&self, mode: Mode, n: u32) -> Option<&SmbRow> {
        self.rows.iter().find(|r| r.mode == mode && r.n == n)
    }

    /// Rows of the spec's own mode, in increasing `n`.
    pub fn primary_rows(&self) -> impl Iterator<Item = &SmbRow> {
        self.rows.iter().filter(|r| r.mode == self.spec.mode)
    }

    /// The estimate of `h`: mean at the largest `n` of the primary mode.
    pub fn h_estimate(&self) -> Option<(f64, f64)> {
        self.primary_rows().last().map(|r| (r.mean, r.se))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiRow {
    pub kind: String,
    pub n: Option<usize>,
    pub j: Option<usize>,
    pub distance: usize,
    pub u_size: usize,
    pub v_size: usize,
    pub psi: f64,
    pub bound: Option<f64>,
    pub within_bound: Option<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PsiReport {
    pub model: ProcessModel,
    pub version: String,
    pub rows: Vec<PsiRow>,
    /// Fit over singleton pairs.
    pub fit: Option<DecayFit>,
    /// Fit over singleton and two-site pairs.
    pub fit_all: Option<DecayFit>,
    /// Every computed coefficient is zero, so there is nothing to fit.
    pub trivially_zero: bool,
    pub skipped_blocks: usize,
}

impl PsiReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.within_bound != Some(false))
    }
}

/// Absolute slack on the gap comparison, for rounding when the gap is zero
/// in exact arithmetic.
pub const GAP_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRow {
    pub n: usize,
    pub replica: usize,
    pub nu_average: f64,
    pub block_average: f64,
    pub identity_error: f64,
    pub gap: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub model: ProcessModel,
    pub version: String,
    pub c: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub c0: f64,
    pub rows: Vec<DecompositionRow>,
    /// Mean normalized gap per `n`.
    pub mean_gap: Vec<(usize, f64)>,
    pub max_identity_error: f64,
    pub identity_tolerance: f64,
}

impl DecompositionReport {
    pub fn identity_holds(&self) -> bool {
        self.max_identity_error <= self.identity_tolerance
    }

    pub fn gaps_bounded(&self) -> bool {
        self.rows.iter().all(|r| r.gap <= r.bound + GAP_SLACK)
    }

    pub fn passed(&self) -> bool {
        self.identity_holds() && self.gaps_bounded()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub r: f64,
    pub exceed: usize,
    pub empirical: f64,
    pub se: f64,
    pub bound: f64,
    /// `r` lies above the grid threshold, so the bound applies.
    pub checked: bool,
    pub violation: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MaximalReport {
    pub model: ProcessModel,
    pub version: String,
    pub boundary_prefix: String,
    pub n_range: [u32; 2],
    pub replicas: usize,
    pub r0_analytic: f64,
    pub r0_grid: Option<f64>,
    pub bound_coefficient: f64,
    pub rows: Vec<TailRow>,
    pub integral_estimate: f64,
    pub integral_se: f64,
    pub constant_c: f64,
    pub integral_within_constant: bool,
    pub violations: usize,
}

impl MaximalReport {
    pub fn passed(&self) -> bool {
        self.r0_grid.is_some() && self.violations == 0 && self.integral_within_constant
    }
}

/// A report with a canonical CSV table.
pub trait CsvTable {
    const HEADER: &'static [&'static str];
    fn write_rows<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()>;
}

#[derive(Serialize)]
struct SmbCsvRow<'a> {
    mode: &'a str,
    n: u32,
    set_size: usize,
    replica: usize,
    value: f64,
    mean: f64,
    sd: f64,
    h_running: f64,
}

impl CsvTable for ConvergenceReport {
    const HEADER: &'static [&'static str] = &[
        "mode",
        "n",
        "set_size",
        "replica",
        "value",
        "mean",
        "sd",
        "h_running",
    ];

    fn write_rows<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        for row in &self.rows {
            for (replica, (&value, &h_running)) in row.values.iter().zip(&row.running).enumerate() {
                w.serialize(SmbCsvRow {
                    mode: row.mode.name(),
                    n: row.n,
                    set_size: row.set_size,
                    replica,
                    value,
                    mean: row.mean,
                    sd: row.sd,
                    h_running,
                })?;
            }
        }
        Ok(())
    }
}

impl CsvTable for PsiReport {
    const HEADER: &'static [&'static str] = &[
        "kind",
        "n",
        "j",
        "distance",
        "u_size",
        "v_size",
        "psi",
        "bound",
        "within_bound",
    ];

    fn write_rows<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        for row in &self.rows {
            w.serialize(row)?;
        }
        Ok(())
    }
}

impl CsvTable for DecompositionReport {
    const HEADER: &'static [&'static str] = &[
        "n",
        "replica",
        "nu_average",
        "block_average",
        "identity_error",
        "gap",
        "bound",
    ];

    fn write_rows<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        for row in &self.rows {
            w.serialize(row)?;
        }
        Ok(())
    }
}

impl CsvTable for MaximalReport {
    const HEADER: &'static [&'static str] = &[
        "r",
        "exceed",
        "empirical",
        "se",
        "bound",
        "checked",
        "violation",
    ];

    fn write_rows<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        for row in &self.rows {
            w.serialize(row)?;
        }
        Ok(())
    }
}

/// Renders a report in the requested format.
pub fn render<R: Serialize + CsvTable>(report: &R, format: OutputFormat) -> Result<Vec<u8>> {
    match format {
        OutputFormat::Json => {
            let mut out = serde_json::to_vec_pretty(report)?;
            out.push(b'\n');
            Ok(out)
        }
        OutputFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(Vec::new());
            w.write_record(R::HEADER)?;
            report.write_rows(&mut w)?;
            w.into_inner().map_err(|e| e.into_error().into())
        }
    }
}

/// Writes a report to `path`.
pub fn emit_report<R: Serialize + CsvTable>(
    report: &R,
    format: OutputFormat,
    path: &Path,
) -> Result<()> {
    std::fs::write(path, render(report, format)?)?;
    Ok(())
}
