use boltzgap::discretize::Normalization;
use boltzgap::evolve::TimeMethod;
use boltzgap::model::{ModelSpec, WeightSpec};
use serde::Deserialize;
use std::path::Path;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub gamma: f64,
    pub ell_b: f64,
    #[serde(default = "default_dimension")]
    pub d: usize,
    #[serde(default)]
    pub weight: WeightSection,
}

fn default_dimension() -> usize {
    3
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum WeightSection {
    #[default]
    Unit,
    Exponential {
        a: f64,
        s: f64,
    },
    Algebraic {
        beta: f64,
    },
}

impl ModelSection {
    pub fn build(&self) -> Result<ModelSpec, CliError> {
        let weight = match self.weight {
            WeightSection::Unit => WeightSpec::Unit,
            WeightSection::Exponential { a, s } => WeightSpec::Exponential { a, s },
            WeightSection::Algebraic { beta } => WeightSpec::Algebraic { beta },
        };
        ModelSpec::new(self.d, self.gamma, self.ell_b, weight).map_err(CliError::Numerical)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n_radial: usize,
    #[serde(default = "default_n_angle")]
    pub n_angle: usize,
    pub r_max: f64,
}

fn default_n_angle() -> usize {
    16
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssembleSection {
    #[serde(default = "default_normalization")]
    pub normalization: Normalization,
}

impl Default for AssembleSection {
    fn default() -> Self {
        AssembleSection { normalization: default_normalization() }
    }
}

fn default_normalization() -> Normalization {
    Normalization::ColumnStochastic
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    #[serde(default = "default_gap_threshold")]
    pub gap_threshold: f64,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        SpectrumSection { gap_threshold: default_gap_threshold() }
    }
}

fn default_gap_threshold() -> f64 {
    1e-2
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum InitialSection {
    /// Maxwellian modulated by `1 + amplitude (r^2 - 3)`, clamped at zero.
    Bump { amplitude: f64 },
    /// `rho0 * Maxwellian + damp * L g` with `g` the bump shape, damped
    /// further until nonnegative.
    Certified { rho0: f64, damp: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSection {
    pub t_final: f64,
    pub dt: Option<f64>,
    #[serde(default = "default_method")]
    pub method: TimeMethod,
    #[serde(default = "default_store_every")]
    pub store_every: usize,
    pub initial: InitialSection,
    /// Optional time window for an exponential decay fit.
    pub fit_window: Option<(f64, f64)>,
    /// Optional constant for the decay-envelope comparison.
    pub envelope_c: Option<f64>,
}

fn default_method() -> TimeMethod {
    TimeMethod::ExponentialEuler
}

fn default_store_every() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventSection {
    pub alphas: Vec<f64>,
    #[serde(default = "default_ratio_tol")]
    pub ratio_tol: f64,
}

fn default_ratio_tol() -> f64 {
    1e-6
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default = "default_db_points")]
    pub db_points: usize,
    #[serde(default = "default_verify_order")]
    pub order: usize,
    #[serde(default = "default_exp_a")]
    pub exp_a: f64,
    #[serde(default = "default_alg_beta")]
    pub alg_beta: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            db_points: default_db_points(),
            order: default_verify_order(),
            exp_a: default_exp_a(),
            alg_beta: default_alg_beta(),
        }
    }
}

fn default_db_points() -> usize {
    200
}

fn default_verify_order() -> usize {
    16
}

fn default_exp_a() -> f64 {
    0.25
}

fn default_alg_beta() -> f64 {
    2.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub assemble: AssembleSection,
    #[serde(default)]
    pub spectrum: Option<SpectrumSection>,
    pub evolve: Option<EvolveSection>,
    pub resolvent: Option<ResolventSection>,
    #[serde(default)]
    pub verify: Option<VerifySection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    pub report: ReportSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSection {
    /// Run-summary JSON files, relative to the config file's directory.
    pub inputs: Vec<String>,
    #[serde(default = "default_title")]
    pub title: String,
}

fn default_title() -> String {
    "Verification summary".to_string()
}

pub fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
