//! Run configuration: a TOML file with flat sections, then `--set` overrides.

use std::path::{Path, PathBuf};

use linkage::adf::AdfSpec;
use linkage::egarch::InnovationChoice;
use linkage::nn::forecast::{FeatureSet, GridCell};
use linkage::nn::ModelKind;
use linkage::simulate::Process;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<InputConfig>,
    pub stats: StatsConfig,
    pub coint: CointConfig,
    pub granger: GrangerConfig,
    pub var: VarConfig,
    pub egarch: EgarchConfig,
    pub forecast: ForecastConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    /// Price CSV; relative paths resolve against the config file's directory.
    pub path: PathBuf,
    #[serde(default = "default_date_column")]
    pub date_column: String,
    /// Series to keep, in order; every non-date column when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<Vec<String>>,
    /// Dependent series for the regressions and the forecast grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
}

fn default_date_column() -> String {
    "date".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StatsConfig {
    pub adf: AdfSpec,
    /// Upper bound for the AIC lag search; Schwert's rule when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adf_max_lags: Option<usize>,
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self {
            adf: AdfSpec::ConstantOnly,
            adf_max_lags: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CointConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adf_max_lags: Option<usize>,
    pub both_directions: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesScale {
    Prices,
    Returns,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrangerConfig {
    pub lags: usize,
    pub on: SeriesScale,
}

impl Default for GrangerConfig {
    fn default() -> Self {
        Self {
            lags: 1,
            on: SeriesScale::Returns,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VarConfig {
    pub p: usize,
    pub irf_horizon: usize,
    pub orthogonalized: bool,
    /// Cholesky ordering by series name; panel order when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ordering: Option<Vec<String>>,
}

impl Default for VarConfig {
    fn default() -> Self {
        Self {
            p: 1,
            irf_horizon: 10,
            orthogonalized: true,
            ordering: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EgarchConfig {
    pub innovation: InnovationChoice,
}

/// A model entry: `"mlp"`, `"cnn"`, `"lstm"` or a full architecture table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Name(String),
    Kind(ModelKind),
}

impl ModelSpec {
    pub fn kind(&self) -> Result<ModelKind, CliError> {
        match self {
            ModelSpec::Kind(k) => Ok(k.clone()),
            ModelSpec::Name(n) => match n.to_ascii_lowercase().as_str() {
                "mlp" => Ok(ModelKind::mlp()),
                "cnn" | "cnn1d" => Ok(ModelKind::cnn1d()),
                "lstm" => Ok(ModelKind::lstm()),
                other => Err(CliError::config(format!("unknown model `{other}`"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForecastConfig {
    pub grid: Vec<GridCell>,
    pub horizon: usize,
    pub train_fraction: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub models: Vec<ModelSpec>,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        let cell = |feature_set, lookback| GridCell { feature_set, lookback };
        Self {
            grid: vec![
                cell(FeatureSet::WithoutTarget, 10),
                cell(FeatureSet::WithTarget, 10),
                cell(FeatureSet::WithTarget, 5),
                cell(FeatureSet::WithTarget, 1),
            ],
            horizon: 5,
            train_fraction: 0.8,
            epochs: 100,
            learning_rate: 1e-3,
            batch_size: 32,
            models: ["mlp", "cnn", "lstm"].iter().map(|m| ModelSpec::Name(m.to_string())).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub process: Process,
    pub n: usize,
    /// Compound log returns into prices before writing.
    #[serde(default)]
    pub as_prices: bool,
    #[serde(default = "default_start_price")]
    pub start_price: f64,
    /// Replacement column names.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
}

fn default_start_price() -> f64 {
    100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Relative paths resolve against the config file's directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    pub seed: u64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: Some(PathBuf::from("out")),
            seed: 0,
        }
    }
}

/// Splits `section.key=value`; the value is read as a TOML literal and
/// falls back to a bare string.
fn parse_override(spec: &str) -> Result<(Vec<String>, toml::Value), CliError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("override `{spec}` is not key=value")))?;
    let keys: Vec<String> = path.trim().split('.').map(str::to_string).collect();
    if keys.iter().any(String::is_empty) {
        return Err(CliError::config(format!("override `{spec}` has an empty key")));
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((keys, value))
}

fn apply_override(table: &mut toml::Table, keys: &[String], value: toml::Value) -> Result<(), CliError> {
    let (last, parents) = keys.split_last().expect("non-empty key path");
    let mut cursor = table;
    for key in parents {
        let entry = cursor
            .entry(key.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| CliError::config(format!("`{key}` is not a section")))?;
    }
    cursor.insert(last.clone(), value);
    Ok(())
}

/// Parses the config text, applies overrides, then resolves relative paths
/// against `base`.
pub fn load_from_str(text: &str, overrides: &[String], base: &Path) -> Result<RunConfig, CliError> {
    let mut table: toml::Table =
        toml::from_str(text).map_err(|e| CliError::config(format!("config: {}", e.message())))?;
    for spec in overrides {
        let (keys, value) = parse_override(spec)?;
        apply_override(&mut table, &keys, value)?;
    }
    let mut config: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::config(format!("config: {}", e.message())))?;
    if let Some(input) = config.input.as_mut() {
        if input.path.is_relative() {
            input.path = base.join(&input.path);
        }
    }
    if let Some(dir) = config.output.dir.as_mut() {
        if dir.is_relative() {
            *dir = base.join(&*dir);
        }
    }
    Ok(config)
}

pub fn load(path: &Path, overrides: &[String]) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let base = parent.canonicalize().unwrap_or_else(|_| parent.to_path_buf());
    load_from_str(&text, overrides, &base)
}
