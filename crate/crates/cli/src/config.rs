//! Experiment configuration: TOML with every table closed to unknown keys.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Coupling constant `e`.
    #[serde(default)]
    pub e: f64,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub paths: PathsConfig,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub table: TableConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormFactorKind {
    SharpCutoff,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModesKind {
    /// `k = ±(0,0,1)`, `w = 1`, `φ̂ = 1`.
    ReferencePair,
    /// Explicit `pairs`.
    Handcrafted,
    /// Product quadrature of the form factor's ball.
    Continuum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    ModeSum,
    RadialTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PolarizationKind {
    AxisCross,
    Meridian,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub k: Vec<f64>,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "three")]
    pub d: usize,
    #[serde(default = "default_ff")]
    pub form_factor: FormFactorKind,
    #[serde(default = "one")]
    pub lambda: f64,
    /// Knots and values of a tabulated radial form factor.
    #[serde(default)]
    pub knots: Vec<f64>,
    #[serde(default)]
    pub values: Vec<f64>,
    #[serde(default = "default_modes")]
    pub modes: ModesKind,
    #[serde(default)]
    pub pairs: Vec<PairConfig>,
    /// Radial, polar and azimuthal node counts for `modes = "continuum"`.
    #[serde(default = "default_quadrature")]
    pub quadrature: Vec<usize>,
    #[serde(default = "default_kernel")]
    pub kernel: KernelKind,
    #[serde(default = "default_polarization")]
    pub polarization: PolarizationKind,
    #[serde(default = "default_axis")]
    pub axis: Vec<f64>,
}

fn three() -> usize {
    3
}
fn default_ff() -> FormFactorKind {
    FormFactorKind::SharpCutoff
}
fn default_modes() -> ModesKind {
    ModesKind::ReferencePair
}
fn default_quadrature() -> Vec<usize> {
    vec![4, 4, 8]
}
fn default_kernel() -> KernelKind {
    KernelKind::ModeSum
}
fn default_polarization() -> PolarizationKind {
    PolarizationKind::AxisCross
}
fn default_axis() -> Vec<f64> {
    vec![1.0, 0.0, 0.0]
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d: 3,
            form_factor: default_ff(),
            lambda: 1.0,
            knots: Vec::new(),
            values: Vec::new(),
            modes: default_modes(),
            pairs: Vec::new(),
            quadrature: default_quadrature(),
            kernel: default_kernel(),
            polarization: default_polarization(),
            axis: default_axis(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_steps")]
    pub n_steps: usize,
    #[serde(default = "default_n_paths")]
    pub n_paths: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "yes")]
    pub antithetic: bool,
    #[serde(default = "default_batches")]
    pub n_batches: usize,
    #[serde(default)]
    pub diagonal_rule: fiberpath::action::DiagonalRule,
}

fn default_t_end() -> f64 {
    4.0
}
fn default_steps() -> usize {
    256
}
fn default_n_paths() -> usize {
    10_000
}
fn yes() -> bool {
    true
}
fn default_batches() -> usize {
    fiberpath::estimators::DEFAULT_BATCHES
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            t_end: default_t_end(),
            n_steps: default_steps(),
            n_paths: default_n_paths(),
            seed: 0,
            antithetic: true,
            n_batches: default_batches(),
            diagonal_rule: Default::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    #[serde(rename = "expN")]
    ExpN,
    #[serde(rename = "weyl")]
    Weyl,
    #[serde(rename = "green")]
    Green,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InsertionConfig {
    pub theta: Option<f64>,
    /// One real vector per mode pair.
    pub f: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreenConfig {
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    pub momenta: Vec<Vec<f64>>,
    /// `m − 1` entries; an empty table means no insertion.
    #[serde(default)]
    pub insertions: Vec<InsertionConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub quantity: Option<Quantity>,
    #[serde(default = "default_momenta")]
    pub momenta: Vec<Vec<f64>>,
    #[serde(default = "default_beta")]
    pub beta: Vec<f64>,
    /// Horizon `t` of the observables; the paths run over `[0, 2t]`.
    pub t: Option<f64>,
    #[serde(default = "default_ladder")]
    pub t_ladder: Vec<f64>,
    /// Weyl test function: one real vector per mode pair.
    #[serde(default)]
    pub f: Vec<Vec<f64>>,
    pub green: Option<GreenConfig>,
}

fn default_momenta() -> Vec<Vec<f64>> {
    vec![vec![0.0, 0.0, 0.0]]
}
fn default_beta() -> Vec<f64> {
    vec![1.0]
}
fn default_ladder() -> Vec<f64> {
    vec![2.0, 4.0]
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            quantity: None,
            momenta: default_momenta(),
            beta: default_beta(),
            t: None,
            t_ladder: default_ladder(),
            f: Vec::new(),
            green: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Spectra,
    EnergyCurves,
    Concavity,
    Uniqueness,
    Positivity,
    RelativeBound,
    Perturbation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositivityOptions {
    #[serde(default = "one")]
    pub t: f64,
    #[serde(default = "default_pos_e")]
    pub e: Vec<f64>,
    #[serde(default = "default_pos_nmax")]
    pub n_max: usize,
    #[serde(default = "default_grid")]
    pub grid_size: usize,
}

fn default_pos_e() -> Vec<f64> {
    vec![0.0, 0.4]
}
fn default_pos_nmax() -> usize {
    14
}
fn default_grid() -> usize {
    64
}

impl Default for PositivityOptions {
    fn default() -> Self {
        PositivityOptions { t: 1.0, e: default_pos_e(), n_max: 14, grid_size: 64 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_nmax")]
    pub n_max: usize,
    #[serde(default)]
    pub checks: Vec<Check>,
    #[serde(default = "default_e2")]
    pub e2: Vec<f64>,
    /// Number of lowest eigenvalues written per spectrum.
    #[serde(default = "default_levels")]
    pub levels: usize,
    /// Partition horizons compared by `compare-oracle`.
    #[serde(default = "default_oracle_t")]
    pub t: Vec<f64>,
    #[serde(default)]
    pub positivity: PositivityOptions,
    #[serde(default = "default_trials")]
    pub relative_bound_trials: usize,
}

fn default_nmax() -> usize {
    10
}
fn default_e2() -> Vec<f64> {
    (0..10).map(|i| i as f64 / 10.0).collect()
}
fn default_levels() -> usize {
    10
}
fn default_oracle_t() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}
fn default_trials() -> usize {
    1000
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            n_max: default_nmax(),
            checks: Vec::new(),
            e2: default_e2(),
            levels: default_levels(),
            t: default_oracle_t(),
            positivity: PositivityOptions::default(),
            relative_bound_trials: default_trials(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {
    /// Cache file for the radial kernel table.
    pub path: Option<String>,
    /// Defaults to the path horizon.
    pub tau_max: Option<f64>,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    /// Default steps are `0.0025/Λ` and `0.004/Λ`.
    pub h_tau: Option<f64>,
    pub h_r: Option<f64>,
}

fn default_r_max() -> f64 {
    12.0
}

impl Default for TableConfig {
    fn default() -> Self {
        TableConfig { path: None, tau_max: None, r_max: default_r_max(), h_tau: None, h_r: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: String,
}

fn default_dir() -> String {
    "fiberpath-out".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: default_dir() }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Problems common to every subcommand.
    pub fn validate_common(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let m = &self.model;
        if !self.e.is_finite() {
            errs.push("e must be finite".into());
        }
        if !(2..=3).contains(&m.d) {
            errs.push(format!("model.d must be 2 or 3, got {}", m.d));
        }
        if !(m.lambda > 0.0 && m.lambda.is_finite()) {
            errs.push("model.lambda must be positive".into());
        }
        if m.form_factor == FormFactorKind::Table && (m.knots.len() < 2 || m.knots.len() != m.values.len()) {
            errs.push("model.form_factor = \"table\" needs matching knots and values (≥ 2)".into());
        }
        if m.form_factor == FormFactorKind::SharpCutoff && (!m.knots.is_empty() || !m.values.is_empty()) {
            errs.push("model.knots/values only apply to form_factor = \"table\"".into());
        }
        match m.modes {
            ModesKind::ReferencePair if m.d != 3 => errs.push("modes = \"reference-pair\" needs d = 3".into()),
            ModesKind::Handcrafted if m.pairs.is_empty() => errs.push("modes = \"handcrafted\" needs model.pairs".into()),
            ModesKind::Continuum if m.quadrature.len() != 3 || m.quadrature.contains(&0) => {
                errs.push("model.quadrature must be [n_radial, n_polar, n_azimuth], all positive".into())
            }
            _ => {}
        }
        if m.modes != ModesKind::Handcrafted && !m.pairs.is_empty() {
            errs.push("model.pairs only apply to modes = \"handcrafted\"".into());
        }
        for (i, p) in m.pairs.iter().enumerate() {
            if p.k.len() != m.d || p.k.iter().any(|x| !x.is_finite()) || !(p.weight > 0.0) {
                errs.push(format!("model.pairs[{i}] needs a finite {}-vector k and positive weight", m.d));
            }
        }
        if m.axis.len() != 3 || ((m.axis.iter().map(|x| x * x).sum::<f64>()).sqrt() - 1.0).abs() > 1e-12 {
            errs.push("model.axis must be a unit 3-vector".into());
        }
        if m.kernel == KernelKind::RadialTable && m.d != 3 {
            errs.push("kernel = \"radial-table\" needs d = 3".into());
        }
        errs
    }

    pub fn validate_paths(&self) -> Vec<String> {
        let p = &self.paths;
        let mut errs = Vec::new();
        if !(p.t_end > 0.0 && p.t_end.is_finite()) {
            errs.push("paths.t_end must be positive".into());
        }
        if p.n_steps == 0 {
            errs.push("paths.n_steps must be positive".into());
        }
        if p.n_batches < fiberpath::estimators::MIN_BATCHES {
            errs.push(format!("paths.n_batches must be ≥ {}", fiberpath::estimators::MIN_BATCHES));
        }
        if p.n_paths < p.n_batches {
            errs.push("paths.n_paths must be at least paths.n_batches".into());
        }
        for (i, q) in self.estimator.momenta.iter().enumerate() {
            if q.len() != self.model.d || q.iter().any(|x| !x.is_finite()) {
                errs.push(format!("estimator.momenta[{i}] must be a finite {}-vector", self.model.d));
            }
        }
        errs
    }
}
