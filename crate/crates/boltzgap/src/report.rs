//! Persistence: JSON documents with a separable timestamp, plot-ready CSV
//! exports, and Markdown summary tables.  All writes go through a sibling
//! temporary file and an atomic rename.

use crate::carleman::BoundReport;
use crate::discretize::GeneratorMatrix;
use crate::evolve::{EnvelopeReport, Trajectory};
use crate::spectral::SpectrumReport;
use crate::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

/// Fixed-format float with 17 significant digits; parses back to the same
/// bits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write through a sibling `.tmp` file and rename into place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Serialization(format!("path {} has no file name", path.display())))?
        .to_string_lossy()
        .into_owned();
    let tmp = path.with_file_name(format!("{name}.tmp"));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// JSON document wrapper: a kind tag, a write timestamp, and the payload.
/// Apart from the timestamp, serialization is deterministic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Document<T> {
    pub kind: String,
    pub timestamp_unix: u64,
    pub payload: T,
}

/// Serialize a payload into a [`Document`] and write it atomically.
pub fn save_json<T: Serialize>(path: &Path, kind: &str, payload: &T) -> Result<()> {
    let timestamp_unix =
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let doc = Document { kind: kind.to_string(), timestamp_unix, payload };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

/// Read a [`Document`] back, checking the kind tag.
pub fn load_json<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    let doc: Document<T> = serde_json::from_str(&text)?;
    if doc.kind != kind {
        return Err(Error::Serialization(format!(
            "expected a {kind} document, found {} in {}",
            doc.kind,
            path.display()
        )));
    }
    Ok(doc.payload)
}

pub fn save_generator(path: &Path, gen: &GeneratorMatrix) -> Result<()> {
    save_json(path, "generator_matrix", gen)
}

pub fn load_generator(path: &Path) -> Result<GeneratorMatrix> {
    let gen: GeneratorMatrix = load_json(path, "generator_matrix")?;
    let n = gen.sigma.len();
    if gen.gain.nrows() != n
        || gen.gain.ncols() != n
        || gen.grid.nodes.len() != n
        || gen.grid.weights.len() != n
        || gen.diagonal_correction.len() != n
        || gen.rescale.as_ref().is_some_and(|r| r.len() != n)
    {
        return Err(Error::Serialization(format!(
            "generator document in {} has inconsistent dimensions",
            path.display()
        )));
    }
    Ok(gen)
}

/// Flat, serializable view of a [`SpectrumReport`], with the gap flag used
/// by soft-potential runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub lambda_star: f64,
    pub eta: f64,
    pub sigma_max: f64,
    pub mu2: f64,
    pub zero_mode_residual: f64,
    pub gap_threshold: f64,
    /// True when the gap sits below `gap_threshold`: no usable spectral
    /// gap at this truncation.
    pub no_gap: bool,
    /// Eigenvalues as (re, im) pairs, sorted by decreasing real part.
    pub eigenvalues: Vec<(f64, f64)>,
    pub zero_mode: Vec<f64>,
}

impl SpectrumSummary {
    pub fn new(rep: &SpectrumReport, gap_threshold: f64) -> Self {
        SpectrumSummary {
            lambda_star: rep.lambda_star,
            eta: rep.eta,
            sigma_max: rep.sigma_max,
            mu2: rep.mu2,
            zero_mode_residual: rep.zero_mode_residual,
            gap_threshold,
            no_gap: rep.lambda_star < gap_threshold,
            eigenvalues: rep.eigenvalues.iter().map(|z| (z.re, z.im)).collect(),
            zero_mode: rep.zero_mode.clone(),
        }
    }
}

/// Two-column eigenvalue table for plotting.
pub fn spectrum_csv(rep: &SpectrumReport) -> String {
    let mut out = String::from("re,im\n");
    for z in &rep.eigenvalues {
        let _ = writeln!(out, "{},{}", fmt_float(z.re), fmt_float(z.im));
    }
    out
}

/// Trajectory table: time, deviation norm, mass, smallest state component.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,norm,mass,min_component\n");
    for (k, &t) in traj.times.iter().enumerate() {
        let min = traj
            .states
            .get(k)
            .map(|s| s.iter().cloned().fold(f64::MAX, f64::min))
            .unwrap_or(f64::NAN);
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_float(t),
            fmt_float(traj.norms[k]),
            fmt_float(traj.mass[k]),
            fmt_float(min)
        );
    }
    out
}

/// One point of a resolvent sweep along the imaginary axis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolventSample {
    pub alpha: f64,
    pub norm: f64,
    pub theta: f64,
    pub ratio: f64,
}

pub fn resolvent_csv(samples: &[ResolventSample]) -> String {
    let mut out = String::from("alpha,norm,theta,ratio\n");
    for s in samples {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_float(s.alpha),
            fmt_float(s.norm),
            fmt_float(s.theta),
            fmt_float(s.ratio)
        );
    }
    out
}

pub fn bounds_csv(rep: &BoundReport) -> String {
    let mut out = String::from("input,lhs,rhs,ratio\n");
    for s in &rep.samples {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_float(s.input),
            fmt_float(s.lhs),
            fmt_float(s.rhs),
            fmt_float(s.ratio)
        );
    }
    out
}

pub fn envelope_csv(rep: &EnvelopeReport) -> String {
    let mut out = String::from("t,norm,envelope,ratio\n");
    for (k, &t) in rep.times.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_float(t),
            fmt_float(rep.ratios[k] * rep.envelope[k]),
            fmt_float(rep.envelope[k]),
            fmt_float(rep.ratios[k])
        );
    }
    out
}

/// Render a GitHub-style Markdown table.
pub fn markdown_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "| {} |", headers.join(" | "));
    let _ = writeln!(out, "|{}|", headers.iter().map(|_| " --- ").collect::<Vec<_>>().join("|"));
    for row in rows {
        let _ = writeln!(out, "| {} |", row.join(" | "));
    }
    out
}
