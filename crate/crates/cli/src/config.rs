//! JSON experiment configs.
//!
//! Unknown keys are rejected everywhere so that a typo such as `"lamda"`
//! fails loudly instead of silently falling back to a default.

use std::fmt;

use basket_core::aea::{common_jump_size, PideGridConfig};
use basket_core::expansion::LbaConvention;
use basket_core::lba::{LbaSettings, TruncationMode};
use basket_core::mc::McConfig;
use basket_core::{BasketSpec, CorrelationMatrix, JumpDiffusionAsset, LocalVolatility, Method};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default = "default_id")]
    pub id: String,
    pub assets: Vec<AssetConfig>,
    pub weights: Vec<f64>,
    pub correlation: CorrelationConfig,
    pub intensity: f64,
    pub maturity: f64,
    /// Absolute strike; defaults to the basket spot when neither this nor
    /// `moneyness` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strike: Option<f64>,
    /// Strikes as fractions of the basket spot.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moneyness: Option<Vec<f64>>,
    pub methods: Vec<MethodName>,
    #[serde(default)]
    pub mc: McSettings,
    #[serde(default)]
    pub pide: PideSettings,
    #[serde(default)]
    pub lba: LbaOptions,
    #[serde(default)]
    pub output: OutputFormat,
}

fn default_id() -> String {
    "config".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetConfig {
    pub spot: f64,
    #[serde(default)]
    pub jump_size: f64,
    pub vol: VolConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum VolConfig {
    BlackScholes { sigma: f64 },
    Cev { alpha: f64, beta: f64 },
    TermCev { beta: f64, times: Vec<f64>, alphas: Vec<f64> },
}

impl From<&VolConfig> for LocalVolatility {
    fn from(v: &VolConfig) -> Self {
        match v.clone() {
            VolConfig::BlackScholes { sigma } => LocalVolatility::BlackScholes { sigma },
            VolConfig::Cev { alpha, beta } => LocalVolatility::Cev { alpha, beta },
            VolConfig::TermCev { beta, times, alphas } => LocalVolatility::TermCev { beta, times, alphas },
        }
    }
}

/// A single pairwise correlation or a full matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CorrelationConfig {
    Uniform(f64),
    Matrix(Vec<Vec<f64>>),
}

/// A pricing method as spelled in configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MethodName(pub Method);

impl TryFrom<String> for MethodName {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse::<Method>().map(MethodName).map_err(|_| {
            let known: Vec<&str> = Method::ALL.iter().map(|m| m.as_str()).collect();
            format!("unknown method '{s}', expected one of {}", known.join(", "))
        })
    }
}

impl From<MethodName> for String {
    fn from(m: MethodName) -> Self {
        m.0.as_str().to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSettings {
    pub paths: usize,
    pub steps_per_year: usize,
    pub seed: u64,
    pub control_variate: bool,
    pub antithetic: bool,
}

impl Default for McSettings {
    fn default() -> Self {
        let d = McConfig::default();
        Self {
            paths: d.n_paths,
            steps_per_year: d.steps_per_year,
            seed: d.seed,
            control_variate: d.use_control_variate,
            antithetic: d.antithetic,
        }
    }
}

impl From<McSettings> for McConfig {
    fn from(s: McSettings) -> Self {
        McConfig {
            n_paths: s.paths,
            steps_per_year: s.steps_per_year,
            seed: s.seed,
            use_control_variate: s.control_variate,
            antithetic: s.antithetic,
        }
    }
}

impl fmt::Display for McSettings {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} paths, {} Euler steps per year, seed {}, control variate {}, antithetic {}",
            self.paths,
            self.steps_per_year,
            self.seed,
            if self.control_variate { "on" } else { "off" },
            if self.antithetic { "on" } else { "off" }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PideSettings {
    pub strike_intervals: usize,
    pub steps_per_year: usize,
    pub k_max_multiple: f64,
    pub min_points_per_sd: f64,
}

impl Default for PideSettings {
    fn default() -> Self {
        let d = PideGridConfig::default();
        Self {
            strike_intervals: d.n_k,
            steps_per_year: d.steps_per_year,
            k_max_multiple: d.k_max_multiple,
            min_points_per_sd: d.min_points_per_sd,
        }
    }
}

impl From<PideSettings> for PideGridConfig {
    fn from(s: PideSettings) -> Self {
        PideGridConfig {
            n_k: s.strike_intervals,
            steps_per_year: s.steps_per_year,
            k_max_multiple: s.k_max_multiple,
            min_points_per_sd: s.min_points_per_sd,
            keep_surface: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TruncationConfig {
    #[default]
    Adaptive,
    PaperCompat,
    Fixed(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ConventionConfig {
    #[default]
    Derived,
    LiteralA0,
    PublishedTables,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct LbaOptions {
    pub truncation: TruncationConfig,
    pub convention: ConventionConfig,
}

impl From<LbaOptions> for LbaSettings {
    fn from(o: LbaOptions) -> Self {
        LbaSettings {
            truncation: match o.truncation {
                TruncationConfig::Adaptive => TruncationMode::Adaptive,
                TruncationConfig::PaperCompat => TruncationMode::PaperCompat,
                TruncationConfig::Fixed(k) => TruncationMode::Fixed(k),
            },
            convention: match o.convention {
                ConventionConfig::Derived => LbaConvention::Derived,
                ConventionConfig::LiteralA0 => LbaConvention::LiteralA0,
                ConventionConfig::PublishedTables => LbaConvention::PublishedTables,
            },
            ..LbaSettings::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Markdown,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "markdown" | "md" => Ok(Self::Markdown),
            other => Err(format!("unknown format '{other}', expected csv or markdown")),
        }
    }
}

/// Parses and validates a config.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn methods(&self) -> Vec<Method> {
        self.methods.iter().map(|m| m.0).collect()
    }

    pub fn correlation_matrix(&self) -> Result<CorrelationMatrix, String> {
        match &self.correlation {
            CorrelationConfig::Uniform(rho) => Ok(CorrelationMatrix::uniform(self.assets.len(), *rho)),
            CorrelationConfig::Matrix(rows) => CorrelationMatrix::from_rows(rows).map_err(|e| e.to_string()),
        }
    }

    pub fn basket_spec(&self) -> Result<BasketSpec, ConfigError> {
        let corr = self
            .correlation_matrix()
            .map_err(|e| ConfigError::Invalid(vec![format!("correlation: {e}")]))?;
        let assets = self
            .assets
            .iter()
            .map(|a| JumpDiffusionAsset::new(a.spot, a.jump_size, LocalVolatility::from(&a.vol)))
            .collect();
        Ok(BasketSpec::new(assets, self.weights.clone(), corr, self.intensity))
    }

    /// Strikes to price, in order.
    pub fn strikes(&self) -> Vec<f64> {
        let spot: f64 = self.assets.iter().zip(&self.weights).map(|(a, w)| a.spot * w).sum();
        match (&self.strike, &self.moneyness) {
            (Some(k), _) => vec![*k],
            (None, Some(m)) => m.iter().map(|x| x * spot).collect(),
            (None, None) => vec![spot],
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let mut errors = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            errors.push(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                self.schema_version
            ));
        }
        if self.methods.is_empty() {
            errors.push("methods: at least one method is required".into());
        }
        if !(self.maturity.is_finite() && self.maturity > 0.0) {
            errors.push(format!("maturity: must be > 0, got {}", self.maturity));
        }
        if self.strike.is_some() && self.moneyness.is_some() {
            errors.push("strike/moneyness: give at most one of them".into());
        }
        if let Some(k) = self.strike {
            if !(k.is_finite() && k >= 0.0) {
                errors.push(format!("strike: must be >= 0, got {k}"));
            }
        }
        if let Some(m) = &self.moneyness {
            if m.is_empty() || m.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                errors.push("moneyness: must be a non-empty list of values >= 0".into());
            }
        }
        if self.mc.paths < 2 {
            errors.push(format!("mc.paths: must be >= 2, got {}", self.mc.paths));
        }
        if self.mc.steps_per_year < 1 {
            errors.push("mc.steps_per_year: must be >= 1".into());
        }
        if self.pide.strike_intervals < 3 || self.pide.steps_per_year < 1 || !(self.pide.k_max_multiple > 1.0)
            || !(self.pide.min_points_per_sd >= 0.0)
        {
            errors.push("pide: needs strike_intervals >= 3, steps_per_year >= 1, k_max_multiple > 1, min_points_per_sd >= 0".into());
        }
        match self.basket_spec() {
            Ok(spec) => {
                let report = spec.validate();
                errors.extend(report.violations.iter().map(|v| format!("basket: {v}")));
                if self.methods().contains(&Method::Aea) {
                    if let Err(e) = common_jump_size(&spec) {
                        errors.push(format!("methods: aea requires equal jump sizes ({e})"));
                    }
                }
            }
            Err(ConfigError::Invalid(e)) => errors.extend(e),
            Err(e) => errors.push(e.to_string()),
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errors))
        }
    }
}
