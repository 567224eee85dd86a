//! Mixture models on the line: simplex and θ coordinates, component
//! kernels and stable density/CDF evaluation.
//!
//! A θ-point (1 > θ₁ > … > θ_{N−1} > 0) maps to weights pᵢ = θᵢ₋₁ − θᵢ with
//! the implicit ends θ₀ = 1 and θ_N = 0. Components are selected through
//! the [`ComponentKernel`] registry; [`ComponentFamily`] is the serialized
//! handle.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::registry::{Named, Registry};
use crate::special::{
    log_diff_exp, log_laplace_cdf, log_laplace_sf, log_norm_cdf, log_norm_pdf, log_norm_sf,
    logsumexp,
};

/// Smallest admissible weight. Limit formulas divide by √(pᵢpᵢ₊₁), so
/// anything below is rejected rather than clamped.
pub const WEIGHT_FLOOR: f64 = 1e-15;

const SUM_TOL: f64 = 1e-12;

/// Interior point of the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexPoint {
    p: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::InvalidSimplex(format!(
                "need at least two masses, got {}",
                p.len()
            )));
        }
        if let Some((i, &v)) = p
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < WEIGHT_FLOOR)
        {
            return Err(Error::InvalidSimplex(format!(
                "mass p[{i}] = {v} is not an interior value"
            )));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidSimplex(format!("masses sum to {s}, not 1")));
        }
        Ok(SimplexPoint { p })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0 / n as f64; n])
    }

    /// Normalizes positive values onto the simplex.
    pub fn from_unnormalized(v: &[f64]) -> Result<Self> {
        let s: f64 = v.iter().sum();
        Self::new(v.iter().map(|x| x / s).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn reversed(&self) -> SimplexPoint {
        let mut p = self.p.clone();
        p.reverse();
        SimplexPoint { p }
    }
}

impl std::ops::Index<usize> for SimplexPoint {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.p[i]
    }
}

impl TryFrom<Vec<f64>> for SimplexPoint {
    type Error = Error;
    fn try_from(p: Vec<f64>) -> Result<Self> {
        SimplexPoint::new(p)
    }
}

impl From<SimplexPoint> for Vec<f64> {
    fn from(s: SimplexPoint) -> Vec<f64> {
        s.p
    }
}

/// Strictly decreasing θ-coordinates inside (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaCoords {
    theta: Vec<f64>,
}

impl ThetaCoords {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::InvalidCoordinates("θ must have at least one entry".into()));
        }
        let mut prev = 1.0;
        for (i, &t) in theta.iter().enumerate() {
            if !(t < prev && t > 0.0) {
                return Err(Error::InvalidCoordinates(format!(
                    "θ[{i}] = {t} breaks 1 > θ₁ > … > θ_(N−1) > 0"
                )));
            }
            prev = t;
        }
        Ok(ThetaCoords { theta })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }
}

/// pᵢ = θᵢ₋₁ − θᵢ with θ₀ = 1, θ_N = 0.
pub fn simplex_from_theta(theta: &ThetaCoords) -> Result<SimplexPoint> {
    let t = &theta.theta;
    let n = t.len() + 1;
    let p = (0..n)
        .map(|i| {
            let hi = if i == 0 { 1.0 } else { t[i - 1] };
            let lo = if i == n - 1 { 0.0 } else { t[i] };
            hi - lo
        })
        .collect();
    SimplexPoint::new(p)
}

/// θᵢ = 1 − Σ_{k≤i} p_k, accumulated from the tail so small θ keep their
/// relative precision.
pub fn theta_from_simplex(p: &SimplexPoint) -> ThetaCoords {
    let n = p.len();
    let mut theta = vec![0.0; n - 1];
    let mut acc = 0.0;
    for i in (0..n - 1).rev() {
        acc += p[i + 1];
        theta[i] = acc;
    }
    ThetaCoords { theta }
}

/// A location-scale component density in standardized form.
///
/// Implementations work with z = (x − μ)/σ; the σ-dependence of the density
/// is applied by the callers.
pub trait ComponentKernel: Named + Send + Sync {
    /// ln of the standard density at z.
    fn log_pdf_std(&self, z: f64) -> f64;
    /// ln F(z) for the standard CDF.
    fn log_cdf_std(&self, z: f64) -> f64;
    /// ln(1 − F(z)).
    fn log_sf_std(&self, z: f64) -> f64;
}

pub struct GaussianKernel;

impl Named for GaussianKernel {
    fn name(&self) -> &'static str {
        "gaussian"
    }
}

impl ComponentKernel for GaussianKernel {
    fn log_pdf_std(&self, z: f64) -> f64 {
        log_norm_pdf(z)
    }
    fn log_cdf_std(&self, z: f64) -> f64 {
        log_norm_cdf(z)
    }
    fn log_sf_std(&self, z: f64) -> f64 {
        log_norm_sf(z)
    }
}

/// Normalized Laplace density (1/2)e^{−|z|}.
pub struct LaplaceKernel;

impl Named for LaplaceKernel {
    fn name(&self) -> &'static str {
        "laplace"
    }
}

impl ComponentKernel for LaplaceKernel {
    fn log_pdf_std(&self, z: f64) -> f64 {
        -std::f64::consts::LN_2 - z.abs()
    }
    fn log_cdf_std(&self, z: f64) -> f64 {
        log_laplace_cdf(z)
    }
    fn log_sf_std(&self, z: f64) -> f64 {
        log_laplace_sf(z)
    }
}

/// The built-in component kernels.
pub fn kernel_registry() -> &'static Registry<dyn ComponentKernel> {
    static REG: OnceLock<Registry<dyn ComponentKernel>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut r: Registry<dyn ComponentKernel> = Registry::new("component family");
        r.register(Arc::new(GaussianKernel));
        r.register(Arc::new(LaplaceKernel));
        r
    })
}

/// Serialized name of a component kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentFamily {
    Gaussian,
    Laplace,
}

impl ComponentFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            ComponentFamily::Gaussian => "gaussian",
            ComponentFamily::Laplace => "laplace",
        }
    }

    pub fn kernel(self) -> Arc<dyn ComponentKernel> {
        kernel_registry()
            .get(self.as_str())
            .expect("built-in kernels are always registered")
    }
}

impl std::str::FromStr for ComponentFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(ComponentFamily::Gaussian),
            "laplace" => Ok(ComponentFamily::Laplace),
            other => Err(Error::UnknownStrategy {
                kind: "component family",
                name: other.to_string(),
                known: kernel_registry().names().join(", "),
            }),
        }
    }
}

fn check_scale(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidScale(sigma))
    }
}

pub fn component_log_pdf(family: ComponentFamily, x: f64, mu: f64, sigma: f64) -> Result<f64> {
    check_scale(sigma)?;
    Ok(family.kernel().log_pdf_std((x - mu) / sigma) - sigma.ln())
}

pub fn component_pdf(family: ComponentFamily, x: f64, mu: f64, sigma: f64) -> Result<f64> {
    component_log_pdf(family, x, mu, sigma).map(f64::exp)
}

pub fn component_log_cdf(family: ComponentFamily, x: f64, mu: f64, sigma: f64) -> Result<f64> {
    check_scale(sigma)?;
    Ok(family.kernel().log_cdf_std((x - mu) / sigma))
}

pub fn component_cdf(family: ComponentFamily, x: f64, mu: f64, sigma: f64) -> Result<f64> {
    component_log_cdf(family, x, mu, sigma).map(f64::exp)
}

/// One-dimensional mixture Σ pᵢ ρ((x − μᵢ)/σᵢ)/σᵢ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct MixtureModel {
    family: ComponentFamily,
    means: Vec<f64>,
    scales: Vec<f64>,
    weights: SimplexPoint,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    family: ComponentFamily,
    means: Vec<f64>,
    scales: Vec<f64>,
    weights: Vec<f64>,
}

impl TryFrom<RawModel> for MixtureModel {
    type Error = Error;
    fn try_from(r: RawModel) -> Result<Self> {
        MixtureModel::new(r.family, r.means, r.scales, SimplexPoint::new(r.weights)?)
    }
}

impl From<MixtureModel> for RawModel {
    fn from(m: MixtureModel) -> RawModel {
        RawModel {
            family: m.family,
            means: m.means,
            scales: m.scales,
            weights: m.weights.into(),
        }
    }
}

impl MixtureModel {
    pub fn new(
        family: ComponentFamily,
        means: Vec<f64>,
        scales: Vec<f64>,
        weights: SimplexPoint,
    ) -> Result<Self> {
        let n = weights.len();
        if means.len() != n || scales.len() != n {
            return Err(Error::InvalidModel(format!(
                "{} weights but {} means and {} scales",
                n,
                means.len(),
                scales.len()
            )));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidModel("means must be finite".into()));
        }
        if let Some(i) = (0..n - 1).find(|&i| means[i] >= means[i + 1]) {
            return Err(Error::InvalidModel(format!(
                "means must be strictly increasing (μ[{}] = {} ≥ μ[{}] = {})",
                i,
                means[i],
                i + 1,
                means[i + 1]
            )));
        }
        for &s in &scales {
            check_scale(s)?;
        }
        Ok(MixtureModel {
            family,
            means,
            scales,
            weights,
        })
    }

    /// All components share the scale σ.
    pub fn homogeneous(
        family: ComponentFamily,
        means: Vec<f64>,
        sigma: f64,
        weights: SimplexPoint,
    ) -> Result<Self> {
        let n = means.len();
        Self::new(family, means, vec![sigma; n], weights)
    }

    pub fn family(&self) -> ComponentFamily {
        self.family
    }
    pub fn means(&self) -> &[f64] {
        &self.means
    }
    pub fn scales(&self) -> &[f64] {
        &self.scales
    }
    pub fn weights(&self) -> &SimplexPoint {
        &self.weights
    }
    pub fn len(&self) -> usize {
        self.means.len()
    }
    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    /// Gaps dᵢ = μᵢ₊₁ − μᵢ.
    pub fn gaps(&self) -> Vec<f64> {
        self.means.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn sigma_max(&self) -> f64 {
        self.scales.iter().copied().fold(0.0, f64::max)
    }

    /// Integration window [μ₁ − Rσmax, μ_N + Rσmax].
    pub fn domain(&self, radius: f64) -> (f64, f64) {
        let s = radius * self.sigma_max();
        (self.means[0] - s, self.means[self.len() - 1] + s)
    }

    /// Means and inter-mean midpoints, sorted.
    pub fn seeds(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(2 * self.len());
        for (i, &m) in self.means.iter().enumerate() {
            s.push(m);
            if i + 1 < self.len() {
                s.push(0.5 * (m + self.means[i + 1]));
            }
        }
        s
    }

    /// Mirror image x ↦ −x: means negated and reversed, scales and weights
    /// reversed.
    pub fn reversed(&self) -> MixtureModel {
        let means = self.means.iter().rev().map(|m| -m).collect();
        let scales = self.scales.iter().rev().copied().collect();
        MixtureModel {
            family: self.family,
            means,
            scales,
            weights: self.weights.reversed(),
        }
    }

    fn z(&self, i: usize, x: f64) -> f64 {
        (x - self.means[i]) / self.scales[i]
    }

    /// ln ρᵢ(x), the unweighted component density.
    pub fn log_component_pdf(&self, i: usize, x: f64) -> f64 {
        self.family.kernel().log_pdf_std(self.z(i, x)) - self.scales[i].ln()
    }

    pub fn log_component_cdf(&self, i: usize, x: f64) -> f64 {
        self.family.kernel().log_cdf_std(self.z(i, x))
    }

    pub fn log_component_sf(&self, i: usize, x: f64) -> f64 {
        self.family.kernel().log_sf_std(self.z(i, x))
    }

    /// All ln ρᵢ(x) at once (one kernel lookup).
    pub fn log_component_pdfs(&self, x: f64, out: &mut Vec<f64>) {
        let k = self.family.kernel();
        out.clear();
        out.extend((0..self.len()).map(|i| k.log_pdf_std(self.z(i, x)) - self.scales[i].ln()));
    }

    /// ln ρ_θ(x) = ln Σ pᵢρᵢ(x).
    pub fn log_pdf(&self, x: f64) -> f64 {
        let k = self.family.kernel();
        let terms: Vec<f64> = (0..self.len())
            .map(|i| self.weights[i].ln() + k.log_pdf_std(self.z(i, x)) - self.scales[i].ln())
            .collect();
        logsumexp(&terms)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.log_pdf(x).exp()
    }

    pub fn log_cdf(&self, x: f64) -> f64 {
        let k = self.family.kernel();
        let terms: Vec<f64> = (0..self.len())
            .map(|i| self.weights[i].ln() + k.log_cdf_std(self.z(i, x)))
            .collect();
        logsumexp(&terms)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.log_cdf(x).exp()
    }

    /// Fᵢ(x) − Fⱼ(x) as (sign, ln|·|), using lower tails when both CDFs are
    /// below ½, upper tails when both are above, and plain subtraction
    /// otherwise.
    pub fn cdf_difference(&self, i: usize, j: usize, x: f64) -> (i8, f64) {
        let k = self.family.kernel();
        let (zi, zj) = (self.z(i, x), self.z(j, x));
        let (ci, cj) = (k.log_cdf_std(zi), k.log_cdf_std(zj));
        let half = -std::f64::consts::LN_2;
        if ci <= half && cj <= half {
            log_diff_exp(ci, cj)
        } else if ci >= half && cj >= half {
            log_diff_exp(k.log_sf_std(zj), k.log_sf_std(zi))
        } else {
            let d = ci.exp() - cj.exp();
            if d == 0.0 {
                (0, f64::NEG_INFINITY)
            } else {
                (if d > 0.0 { 1 } else { -1 }, d.abs().ln())
            }
        }
    }
}
