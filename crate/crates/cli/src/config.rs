//! JSON run configuration. Every section rejects unknown keys; command-line
//! flags override whatever the file sets.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mixgeo::flows::Method;
use mixgeo::{ComponentFamily, QuadratureSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub out: Option<PathBuf>,
    pub format: Option<Vec<Format>>,
    pub seed: Option<u64>,
    pub quiet: Option<bool>,
    pub no_timestamp: Option<bool>,
    pub wim: WimConfig,
    pub asymptotics: AsymptoticsConfig,
    pub flow: FlowConfig,
    pub heat1d: Heat1dConfig,
    pub heat2d: Heat2dConfig,
    pub extended: ExtendedConfig,
    pub verify: VerifyConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => bail!("unknown output format '{other}' (known: csv, json, svg)"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WimConfig {
    /// Path to a mixture model JSON file.
    pub model: Option<PathBuf>,
    pub limits: Vec<String>,
    pub sweep_sigma: Vec<f64>,
    pub gap: f64,
    /// Weights for the sweep and second-order modes.
    pub weights: Vec<f64>,
    pub family: ComponentFamily,
    pub second_order: bool,
    pub sigma: Option<f64>,
    pub quadrature: QuadratureSpec,
}

impl Default for WimConfig {
    fn default() -> Self {
        WimConfig {
            model: None,
            limits: Vec::new(),
            sweep_sigma: Vec::new(),
            gap: 1.0,
            weights: vec![0.3, 0.7],
            family: ComponentFamily::Gaussian,
            second_order: false,
            sigma: None,
            quadrature: QuadratureSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsymptoticsConfig {
    /// Scale ratios k for the g, g₂ and Δ₂ tables.
    pub k: Vec<f64>,
    pub sigma: Vec<f64>,
    pub weights: [f64; 2],
    pub gap: f64,
    pub family: ComponentFamily,
    /// (k₁, k₂) pairs for the perturbation table.
    pub perturbation_k: Vec<[f64; 2]>,
    pub perturbation_t: Vec<f64>,
    pub quadrature: QuadratureSpec,
}

impl Default for AsymptoticsConfig {
    fn default() -> Self {
        AsymptoticsConfig {
            k: vec![0.5, 1.0, 2.0, 3.0],
            sigma: vec![0.1, 0.07, 0.05, 0.03],
            weights: [0.3, 0.7],
            gap: 1.0,
            family: ComponentFamily::Gaussian,
            perturbation_k: vec![[1.0, 1.0], [1.0, 2.0]],
            perturbation_t: vec![5.0, 10.0, 20.0, 40.0],
            quadrature: QuadratureSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    /// `entropy`, `potential`, `interaction`, `zero`, or any internal
    /// density name (`quadratic`).
    pub energy: String,
    pub p0: Vec<f64>,
    pub potential: Vec<f64>,
    pub interaction: Vec<Vec<f64>>,
    pub method: Method,
    pub dt: f64,
    pub t_end: f64,
    pub stride: usize,
    pub max_halvings: Option<usize>,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            energy: "entropy".into(),
            p0: vec![0.2, 0.3, 0.5],
            potential: Vec::new(),
            interaction: Vec::new(),
            method: Method::ForwardEuler,
            dt: 0.01,
            t_end: 5.0,
            stride: 10,
            max_halvings: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Heat1dConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub dt: f64,
    pub t_end: f64,
    pub method: Method,
    pub stride: usize,
}

impl Default for Heat1dConfig {
    fn default() -> Self {
        Heat1dConfig {
            x_min: -5.0,
            x_max: 5.0,
            dx: 0.1,
            dt: 1e-3,
            t_end: 1.0,
            method: Method::ForwardEuler,
            stride: mixgeo::pde::DEFAULT_STRIDE,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Heat2dConfig {
    pub min: f64,
    pub max: f64,
    pub dx: f64,
    pub dt: f64,
    pub t_end: f64,
    pub method: Method,
    pub stride: usize,
}

impl Default for Heat2dConfig {
    fn default() -> Self {
        Heat2dConfig {
            min: -5.0,
            max: 5.0,
            dx: 0.1,
            dt: 1e-3,
            t_end: 1.0,
            method: Method::ForwardEuler,
            stride: mixgeo::pde::DEFAULT_STRIDE,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtendedConfig {
    pub p: Vec<f64>,
    pub mu: Vec<f64>,
    /// Component standard deviation.
    pub sigma: f64,
    pub potential: String,
    pub method: Method,
    pub dt: f64,
    pub t_end: f64,
    pub stride: usize,
}

impl Default for ExtendedConfig {
    fn default() -> Self {
        ExtendedConfig {
            p: vec![0.2, 0.5, 0.3],
            mu: vec![-1.0, 0.0, 3.0],
            sigma: 0.1,
            potential: "sin".into(),
            method: Method::ForwardEuler,
            dt: 0.01,
            t_end: 50.0,
            stride: 100,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Criterion ids or names; empty runs all.
    pub only: Vec<String>,
    pub overrides: BTreeMap<String, f64>,
    pub k_exponent_factor: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            only: Vec::new(),
            overrides: BTreeMap::new(),
            k_exponent_factor: 1.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"flow": {"dt": 0.1}}"#).is_ok());
        assert!(serde_json::from_str::<RunConfig>(r#"{"flow": {"step": 0.1}}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"plot": true}"#).is_err());
    }

    #[test]
    fn formats_parse() {
        assert_eq!("svg".parse::<Format>().unwrap(), Format::Svg);
        assert!("png".parse::<Format>().is_err());
        let c: RunConfig = serde_json::from_str(r#"{"format": ["csv"]}"#).unwrap();
        assert_eq!(c.format, Some(vec![Format::Csv]));
    }
}
