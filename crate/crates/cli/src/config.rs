//! Run configuration, read from TOML.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use weakzq::certify::Tolerances;
use weakzq::domain::Normalization;
use weakzq::forms::WeightKind;
use weakzq::upsilon::SignCase;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    #[serde(default)]
    pub upsilon: UpsilonConfig,
    #[serde(default = "default_q")]
    pub q: usize,
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default)]
    pub weight: WeightConfig,
    #[serde(default)]
    pub sampling: SamplingConfig,
    /// Checks executed by `weakzq run`, in order.
    #[serde(default)]
    pub checks: Vec<CheckKind>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing)]
    pub output: OutputConfig,
    #[serde(default)]
    pub mkh: MkhConfig,
    #[serde(default)]
    pub scaling: ScalingConfig,
    #[serde(default)]
    pub homog: HomogConfig,
    #[serde(default)]
    pub growth: GrowthConfig,
    #[serde(default)]
    pub k0: K0Config,
    #[serde(default)]
    pub model_weight: ModelWeightConfig,
}

fn default_q() -> usize {
    1
}

/// Either a builtin name or a polynomial in `x1..xn, y1..yn`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DomainConfig {
    Builtin(String),
    Table(DomainTable),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainTable {
    #[serde(default)]
    pub builtin: Option<String>,
    #[serde(default)]
    pub poly: Option<String>,
    #[serde(default)]
    pub n: Option<usize>,
    /// 1-based index of the variable `z_g` in `ρ = -Im z_g + ...`.
    #[serde(default)]
    pub graph_var: Option<usize>,
    #[serde(default)]
    pub name: Option<String>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UpsilonConfig {
    #[default]
    Zero,
    Quadric {
        #[serde(default)]
        p: Option<usize>,
    },
    Patched {
        #[serde(default = "d_r0")]
        r0: f64,
        #[serde(default = "d_r1")]
        r1: f64,
        #[serde(default)]
        r2: Option<f64>,
        #[serde(default = "d_y1")]
        y1: f64,
        #[serde(default = "d_y2")]
        y2: f64,
    },
    Upsilon1 {
        #[serde(default = "d_y1")]
        y1: f64,
    },
    Upsilon2,
    Extend {
        eps: f64,
        sign: SignCase,
        base: Box<UpsilonConfig>,
    },
}

fn d_r0() -> f64 {
    3.0
}
fn d_r1() -> f64 {
    6.0
}
fn d_y1() -> f64 {
    15.0
}
fn d_y2() -> f64 {
    30.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    #[serde(default = "d_t")]
    pub t: f64,
    #[serde(default = "d_form")]
    pub form: WeightKind,
}

fn d_t() -> f64 {
    1.0
}
fn d_form() -> WeightKind {
    WeightKind::Gauss
}

impl Default for WeightConfig {
    fn default() -> Self {
        WeightConfig { t: d_t(), form: d_form() }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    /// Explicit box in interleaved real coordinates.
    #[serde(default)]
    pub lo: Option<Vec<f64>>,
    #[serde(default)]
    pub hi: Option<Vec<f64>>,
    /// Half-width of a centered cube, used when `lo`/`hi` are absent.
    #[serde(default)]
    pub radius: Option<f64>,
    /// Nodes per real axis; a single value is repeated on every axis.
    #[serde(default)]
    pub counts: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Certify,
    LeviScan,
    MkhCheck,
    ScalingDemo,
    HomogCheck,
    K0Check,
    Growth,
    ModelWeight,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Certify => "certify",
            CheckKind::LeviScan => "levi-scan",
            CheckKind::MkhCheck => "mkh-check",
            CheckKind::ScalingDemo => "scaling-demo",
            CheckKind::HomogCheck => "homog-check",
            CheckKind::K0Check => "k0-check",
            CheckKind::Growth => "growth",
            CheckKind::ModelWeight => "model-weight",
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MkhConfig {
    pub forms: usize,
    pub n: usize,
    pub q: usize,
    pub t_values: Vec<f64>,
    pub per_axis: usize,
    pub degree: u32,
    pub max_relative: f64,
    pub min_ratio: f64,
    /// Allowed negativity of the basic-estimate margin (for `t > 0`).
    pub basic_tol: f64,
}

impl Default for MkhConfig {
    fn default() -> Self {
        MkhConfig {
            forms: 20,
            n: 2,
            q: 1,
            t_values: vec![-3.0, 0.0, 1.0, 5.0],
            per_axis: 32,
            degree: 2,
            max_relative: 1e-5,
            min_ratio: 3.5,
            basic_tol: 1e-7,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingConfig {
    pub radii: Vec<f64>,
    pub per_axis: usize,
    pub q: usize,
    pub degree: u32,
    pub max_relative: f64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            radii: vec![1.0, 2.0, 4.0],
            per_axis: 16,
            q: 1,
            degree: 2,
            max_relative: 1e-5,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomogConfig {
    /// Homogeneous polynomial in `x1..x{vars}`; the last variable is set to 1.
    pub poly: Option<String>,
    pub vars: usize,
    /// Additional random homogeneous inputs.
    pub random: usize,
    pub random_vars: usize,
    pub random_degree: u32,
    /// Sphere and boundary samples for the gradient lower bound.
    pub samples: usize,
}

impl Default for HomogConfig {
    fn default() -> Self {
        HomogConfig {
            poly: None,
            vars: 3,
            random: 10,
            random_vars: 3,
            random_degree: 4,
            samples: 200,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrowthConfig {
    pub orders: Vec<usize>,
    pub radii: Vec<f64>,
    pub per_axis: usize,
    pub max_variation: f64,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        GrowthConfig {
            orders: vec![2, 3],
            radii: vec![125.0, 250.0, 500.0, 1000.0],
            per_axis: 9,
            max_variation: 0.1,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct K0Config {
    /// Sample `y` in `[-y_max, y_max]`.
    pub y_max: f64,
    pub count: usize,
    /// Points of `K_0 \ K` must keep every eigenvalue at least this far from 1.
    pub separation: f64,
    /// Tolerance for the identities, the Levi norm and unit eigenvalues on `K`.
    pub identity_tol: f64,
}

impl Default for K0Config {
    fn default() -> Self {
        K0Config {
            y_max: 15.0,
            count: 61,
            separation: 1e-6,
            identity_tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelWeightConfig {
    pub n: usize,
    pub samples: usize,
}

impl Default for ModelWeightConfig {
    fn default() -> Self {
        ModelWeightConfig { n: 3, samples: 20000 }
    }
}

/// 1-based line and column of a byte offset.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map(|l| l.chars().count()).unwrap_or(0) + 1;
    (line, column)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map(|s| line_column(text, s.start)).unwrap_or((1, 1));
            ConfigError::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        Ok(cfg)
    }

    /// SHA-256 of the canonical JSON form of the effective configuration.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = RunConfig::parse("domain = \"ball(2)\"").unwrap();
        assert_eq!(c.q, 1);
        assert!(matches!(c.upsilon, UpsilonConfig::Zero));
    }

    #[test]
    fn parse_error_has_position() {
        let err = RunConfig::parse("domain = \"ball(2)\"\nq = \n").unwrap_err();
        let ConfigError::Parse { line, .. } = err;
        assert_eq!(line, 2);
    }

    #[test]
    fn nested_upsilon() {
        let c = RunConfig::parse(
            "domain = \"sextic_graph\"\n[upsilon]\nkind = \"extend\"\neps = 0.1\nsign = \"q_above_trace\"\nbase = { kind = \"patched\" }\n",
        )
        .unwrap();
        assert!(matches!(c.upsilon, UpsilonConfig::Extend { .. }));
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = RunConfig::parse("domain = \"ball(2)\"").unwrap();
        let b = RunConfig::parse("domain = \"ball(2)\"\n[output]\ndir = \"x\"").unwrap();
        assert_eq!(a.hash(), b.hash());
    }
}
