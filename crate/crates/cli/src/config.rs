//! Run configuration: a TOML file plus command-line overrides.
//!
//! Precedence is flag > file > built-in default. Relative paths in the file
//! are resolved against the directory that contains it.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use redstress::copula::CopulaFamily;
use redstress::riskmeasures::{CoherencyRule, DEFAULT_RELIABILITY_FLOOR};
use redstress::SeverityFamily;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub input: InputConfig,
    #[serde(default)]
    pub taxonomy: TaxonomyConfig,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub measures: MeasureConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub stress: StressConfig,
    #[serde(default)]
    pub factors: FactorConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    /// Flow records in the ingest CSV format.
    pub flows: Option<PathBuf>,
    /// `date,value` level series of the bond index, stock index and VIX.
    pub bond: Option<PathBuf>,
    pub stock: Option<PathBuf>,
    pub vix: Option<PathBuf>,
    /// `date,value` daily return series for the flow-performance model.
    pub fund_returns: Option<PathBuf>,
    pub market_returns: Option<PathBuf>,
}

/// Categories to report. Empty lists mean "every category in the data".
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaxonomyConfig {
    #[serde(default)]
    pub investor_categories: Vec<String>,
    #[serde(default)]
    pub fund_categories: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    #[serde(default = "default_min_tna")]
    pub min_tna: f64,
    #[serde(default)]
    pub exclude_mandates: bool,
    pub date_from: Option<NaiveDate>,
    pub date_to: Option<NaiveDate>,
}

fn default_min_tna() -> f64 {
    redstress::flowdata::DEFAULT_MIN_TNA
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig { min_tna: default_min_tna(), exclude_mandates: false, date_from: None, date_to: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    #[default]
    Mle,
    Mm,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_severity")]
    pub severity_family: SeverityFamily,
    #[serde(default = "default_copula")]
    pub copula_family: CopulaFamily,
    #[serde(default)]
    pub estimator: Estimator,
    /// Effective number of unitholders of a pooled fund (mandates and
    /// dedicated funds always count as one holder).
    #[serde(default = "one")]
    pub effective_n: f64,
    /// Herfindahl index of the funds in a cell, used by `fit-copula`.
    #[serde(default = "default_herfindahl")]
    pub herfindahl: f64,
}

fn default_severity() -> SeverityFamily {
    SeverityFamily::Beta
}
fn default_copula() -> CopulaFamily {
    CopulaFamily::Clayton
}
fn one() -> f64 {
    1.0
}
fn default_herfindahl() -> f64 {
    0.05
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            severity_family: default_severity(),
            copula_family: default_copula(),
            estimator: Estimator::default(),
            effective_n: 1.0,
            herfindahl: default_herfindahl(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Multiplier of the standard deviation in mean + c·sd.
    #[serde(default = "default_c")]
    pub c: f64,
    /// Return times in years.
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
    #[serde(default = "default_floor")]
    pub reliability_floor: usize,
}

fn default_alpha() -> f64 {
    0.99
}
fn default_c() -> f64 {
    2.0
}
fn default_t_grid() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0]
}
fn default_floor() -> usize {
    DEFAULT_RELIABILITY_FLOOR
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig { alpha: default_alpha(), c: default_c(), t_grid: default_t_grid(), reliability_floor: default_floor() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimModelKind {
    Zi,
    #[default]
    Cm,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default)]
    pub model: SimModelKind,
    /// ZI: p, μ, σ of the daily rate. CM: p̃, μ̃, σ̃ of one unitholder.
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Number of equal unitholders (CM), unless `weights` is given.
    #[serde(default = "default_n")]
    pub n: u64,
    pub weights: Option<Vec<f64>>,
    pub copula_family: Option<CopulaFamily>,
    #[serde(default)]
    pub theta: f64,
    pub severity_family: Option<SeverityFamily>,
    #[serde(default = "default_n_sims")]
    pub n_sims: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_chunk")]
    pub chunk_size: usize,
    /// Aggregation horizon in days (1 = daily).
    #[serde(default = "default_horizon")]
    pub horizon_days: usize,
    #[serde(default)]
    pub rho_time: f64,
    /// Return time (years) of the reported stress scenario.
    #[serde(default = "one")]
    pub t_years: f64,
    /// Also write the raw simulated sample.
    #[serde(default)]
    pub dump_sample: bool,
}

fn default_p() -> f64 {
    0.2
}
fn default_mu() -> f64 {
    0.5
}
fn default_sigma() -> f64 {
    0.3
}
fn default_n() -> u64 {
    10
}
fn default_n_sims() -> usize {
    100_000
}
fn default_seed() -> u64 {
    42
}
fn default_chunk() -> usize {
    10_000
}
fn default_horizon() -> usize {
    1
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            model: SimModelKind::default(),
            p: default_p(),
            mu: default_mu(),
            sigma: default_sigma(),
            n: default_n(),
            weights: None,
            copula_family: None,
            theta: 0.0,
            severity_family: None,
            n_sims: default_n_sims(),
            seed: default_seed(),
            chunk_size: default_chunk(),
            horizon_days: default_horizon(),
            rho_time: 0.0,
            t_years: 1.0,
            dump_sample: false,
        }
    }
}

/// A user-supplied (p, μ, σ) triplet.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: Option<String>,
    pub p: f64,
    pub mu: f64,
    pub sigma: f64,
    pub severity_family: Option<SeverityFamily>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherencyConfig {
    pub rule: CoherencyRule,
    #[serde(default)]
    pub s_k: Vec<f64>,
    #[serde(default)]
    pub s_j: Vec<f64>,
    #[serde(default)]
    pub m_j: Vec<f64>,
    #[serde(default)]
    pub m_k: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StressConfig {
    #[serde(default)]
    pub scenarios: Vec<Scenario>,
    /// Add one scenario per cell from ZI fits of the flow data.
    #[serde(default = "yes")]
    pub from_fits: bool,
    pub coherency: Option<CoherencyConfig>,
}

fn yes() -> bool {
    true
}

impl Default for StressConfig {
    fn default() -> Self {
        StressConfig { scenarios: Vec::new(), from_fits: true, coherency: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorConfig {
    /// Return horizon in days: 1, 5 or 10.
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_vix_threshold")]
    pub vix_threshold: f64,
    #[serde(default = "default_max_order")]
    pub max_order: usize,
    #[serde(default = "default_horizon")]
    pub lags: usize,
    #[serde(default = "default_window")]
    pub window: usize,
}

fn default_vix_threshold() -> f64 {
    redstress::factors::DEFAULT_VIX_THRESHOLD
}
fn default_max_order() -> usize {
    2
}
fn default_window() -> usize {
    redstress::factors::DEFAULT_ALPHA_WINDOW
}

impl Default for FactorConfig {
    fn default() -> Self {
        FactorConfig {
            horizon: 1,
            vix_threshold: default_vix_threshold(),
            max_order: default_max_order(),
            lags: 1,
            window: default_window(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
    #[serde(default)]
    pub format: Format,
}

fn default_out() -> PathBuf {
    PathBuf::from("redstress-out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: default_out(), format: Format::default() }
    }
}

/// Values given on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub format: Option<Format>,
}

impl RunConfig {
    /// Loads the file (if any), resolves its relative paths and applies
    /// the overrides.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                let mut cfg: RunConfig =
                    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                cfg.resolve_paths(p.parent().unwrap_or(Path::new("")));
                cfg
            }
            None => RunConfig::default(),
        };
        if let Some(v) = &overrides.input {
            cfg.input.flows = Some(v.clone());
        }
        if let Some(v) = &overrides.out {
            cfg.output.dir = v.clone();
        }
        if let Some(v) = overrides.seed {
            cfg.simulation.seed = v;
        }
        if let Some(v) = overrides.alpha {
            cfg.measures.alpha = v;
        }
        if let Some(v) = overrides.format {
            cfg.output.format = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let i = &mut self.input;
        for p in [&mut i.flows, &mut i.bond, &mut i.stock, &mut i.vix, &mut i.fund_returns, &mut i.market_returns]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if self.output.dir.is_relative() && !base.as_os_str().is_empty() {
            self.output.dir = base.join(&self.output.dir);
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        let a = self.measures.alpha;
        if !(a > 0.0 && a < 1.0) {
            return bad(format!("alpha must lie in (0, 1) (got {a})"));
        }
        if !self.measures.c.is_finite() {
            return bad("c must be finite".into());
        }
        if self.measures.t_grid.is_empty() || self.measures.t_grid.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return bad("t_grid must hold positive return times".into());
        }
        let i = &self.input;
        for p in [&i.flows, &i.bond, &i.stock, &i.vix, &i.fund_returns, &i.market_returns].into_iter().flatten() {
            if !p.exists() {
                return bad(format!("input file {} does not exist", p.display()));
            }
        }
        if let (Some(a), Some(b)) = (self.filter.date_from, self.filter.date_to) {
            if a > b {
                return bad(format!("date_from {a} is after date_to {b}"));
            }
        }
        if !matches!(self.factors.horizon, 1 | 5 | 10) {
            return bad(format!("factor horizon must be 1, 5 or 10 days (got {})", self.factors.horizon));
        }
        if !(self.model.effective_n >= 1.0) {
            return bad(format!("effective_n must be at least 1 (got {})", self.model.effective_n));
        }
        Ok(())
    }

    pub fn flows_path(&self) -> Result<&Path, CliError> {
        self.input
            .flows
            .as_deref()
            .ok_or_else(|| CliError::Config("no flow file: set [input] flows or pass --input".into()))
    }
}
