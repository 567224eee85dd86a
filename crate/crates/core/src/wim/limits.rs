//! Closed-form scaling limits of the information matrices.
//!
//! Each limit is also exposed as a [`LimitMetric`] strategy so callers can
//! pick them by name ("fisher", "wasserstein", "second-order",
//! "inhomogeneous").

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use super::asymptotics::{g_integral, g_prime_at_1};
use super::{MetricMatrix, Provenance};
use crate::error::{Error, Result};
use crate::mixtures::SimplexPoint;
use crate::quadrature::QuadratureSpec;
use crate::registry::{Named, Registry};

/// Tridiagonal limit: diagonal 1/pᵢ + 1/pᵢ₊₁, off-diagonal −1/pᵢ₊₁.
pub fn fisher_limit(p: &SimplexPoint) -> MetricMatrix {
    let n = p.len() - 1;
    let mut e = vec![vec![0.0; n]; n];
    for i in 0..n {
        e[i][i] = 1.0 / p[i] + 1.0 / p[i + 1];
        if i + 1 < n {
            e[i][i + 1] = -1.0 / p[i + 1];
            e[i + 1][i] = -1.0 / p[i + 1];
        }
    }
    MetricMatrix::new(Provenance::FisherLimit, e, None)
}

/// diag(1/√(pᵢpᵢ₊₁)); pairs with the homogeneous scaling factor K(σ).
pub fn wasserstein_limit(p: &SimplexPoint) -> MetricMatrix {
    let d: Vec<f64> = (0..p.len() - 1).map(|i| 1.0 / (p[i] * p[i + 1]).sqrt()).collect();
    MetricMatrix::diagonal(Provenance::WassersteinLimit, &d)
}

/// Second-order correction of the homogeneous Gaussian limit:
/// (1 + (π²/2 + (4/π)·L·g′(1) + (2/π)·L²)·σ²/d²)/√(pᵢpᵢ₊₁), L = log(pᵢ/pᵢ₊₁).
pub fn second_order_limit(
    p: &SimplexPoint,
    sigma: f64,
    d: f64,
    spec: &QuadratureSpec,
) -> Result<MetricMatrix> {
    if !(sigma > 0.0 && d > 0.0 && sigma / d < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "second-order limit needs 0 < σ/d < 0.5 (σ = {sigma}, d = {d})"
        )));
    }
    let gp = g_prime_at_1(spec)?;
    let r2 = (sigma / d).powi(2);
    let diag: Vec<f64> = (0..p.len() - 1)
        .map(|i| {
            let l = (p[i] / p[i + 1]).ln();
            let c = PI * PI / 2.0 + 4.0 / PI * l * gp + 2.0 / PI * l * l;
            (1.0 + c * r2) / (p[i] * p[i + 1]).sqrt()
        })
        .collect();
    Ok(MetricMatrix::diagonal(Provenance::SecondOrderLimit, &diag))
}

/// Coefficient of σ²/d² in the second-order limit for one gap.
pub fn second_order_coefficient(p_i: f64, p_next: f64, g_prime: f64) -> f64 {
    let l = (p_i / p_next).ln();
    PI * PI / 2.0 + 4.0 / PI * l * g_prime + 2.0 / PI * l * l
}

/// Inhomogeneous gaps dᵢ and component scale factors sᵢ (σᵢ = sᵢσ) that
/// satisfy the matching condition dᵢ/(sᵢ + sᵢ₊₁) = d for every gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InhomogeneousSpec {
    pub gaps: Vec<f64>,
    pub scale_factors: Vec<f64>,
    pub sigma: f64,
    pub reduced_gap: f64,
}

impl InhomogeneousSpec {
    /// Builds the spec, taking the reduced gap from the first gap and
    /// checking the rest against it (relative tolerance 1e−12).
    pub fn new(gaps: Vec<f64>, scale_factors: Vec<f64>, sigma: f64) -> Result<Self> {
        if gaps.is_empty() || scale_factors.len() != gaps.len() + 1 {
            return Err(Error::InvalidArgument(format!(
                "{} gaps need {} scale factors, got {}",
                gaps.len(),
                gaps.len() + 1,
                scale_factors.len()
            )));
        }
        if gaps.iter().chain(&scale_factors).any(|v| !(*v > 0.0)) || !(sigma > 0.0) {
            return Err(Error::InvalidArgument("gaps, scale factors and σ must be positive".into()));
        }
        let reduced_gap = gaps[0] / (scale_factors[0] + scale_factors[1]);
        let spec = InhomogeneousSpec {
            gaps,
            scale_factors,
            sigma,
            reduced_gap,
        };
        spec.check()?;
        Ok(spec)
    }

    pub fn from_means(means: &[f64], scale_factors: Vec<f64>, sigma: f64) -> Result<Self> {
        Self::new(means.windows(2).map(|w| w[1] - w[0]).collect(), scale_factors, sigma)
    }

    pub fn check(&self) -> Result<()> {
        let s = &self.scale_factors;
        for (i, &g) in self.gaps.iter().enumerate() {
            let found = g / (s[i] + s[i + 1]);
            if (found - self.reduced_gap).abs() > 1e-12 * self.reduced_gap {
                return Err(Error::MatchingViolation {
                    index: i,
                    expected: self.reduced_gap,
                    found,
                });
            }
        }
        Ok(())
    }
}

/// Diagonal limit g(sᵢ₊₁/sᵢ)·(sᵢ₊₁/pᵢ₊₁)^{sᵢ₊₁/(sᵢ+sᵢ₊₁)}·(sᵢ/pᵢ)^{sᵢ/(sᵢ+sᵢ₊₁)}·sᵢ,
/// paired with K_in(σ) at the reduced gap.
pub fn inhomogeneous_limit(
    p: &SimplexPoint,
    ispec: &InhomogeneousSpec,
    spec: &QuadratureSpec,
) -> Result<MetricMatrix> {
    ispec.check()?;
    if p.len() != ispec.scale_factors.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} weights for {} components",
            p.len(),
            ispec.scale_factors.len()
        )));
    }
    let s = &ispec.scale_factors;
    let diag = (0..p.len() - 1)
        .map(|i| {
            let (a, b) = (s[i], s[i + 1]);
            let g = g_integral(b / a, spec)?;
            Ok(g * (b / p[i + 1]).powf(b / (a + b)) * (a / p[i]).powf(a / (a + b)) * a)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(MetricMatrix::diagonal(Provenance::InhomogeneousLimit, &diag))
}

/// Inputs a limit strategy may need.
#[derive(Debug, Clone)]
pub struct LimitContext {
    pub p: SimplexPoint,
    pub sigma: Option<f64>,
    pub gap: Option<f64>,
    pub inhomogeneous: Option<InhomogeneousSpec>,
    pub spec: QuadratureSpec,
}

impl LimitContext {
    pub fn new(p: SimplexPoint) -> Self {
        LimitContext {
            p,
            sigma: None,
            gap: None,
            inhomogeneous: None,
            spec: QuadratureSpec::default(),
        }
    }

    fn need(&self, v: Option<f64>, what: &str, limit: &str) -> Result<f64> {
        v.ok_or_else(|| Error::InvalidArgument(format!("the {limit} limit needs {what}")))
    }
}

/// A closed-form limit metric selectable by name.
pub trait LimitMetric: Named + Send + Sync {
    fn compute(&self, ctx: &LimitContext) -> Result<MetricMatrix>;
}

struct FisherLimit;
struct WassersteinLimit;
struct SecondOrder;
struct Inhomogeneous;

impl Named for FisherLimit {
    fn name(&self) -> &'static str {
        "fisher"
    }
}
impl LimitMetric for FisherLimit {
    fn compute(&self, ctx: &LimitContext) -> Result<MetricMatrix> {
        Ok(fisher_limit(&ctx.p))
    }
}

impl Named for WassersteinLimit {
    fn name(&self) -> &'static str {
        "wasserstein"
    }
}
impl LimitMetric for WassersteinLimit {
    fn compute(&self, ctx: &LimitContext) -> Result<MetricMatrix> {
        Ok(wasserstein_limit(&ctx.p))
    }
}

impl Named for SecondOrder {
    fn name(&self) -> &'static str {
        "second-order"
    }
}
impl LimitMetric for SecondOrder {
    fn compute(&self, ctx: &LimitContext) -> Result<MetricMatrix> {
        let sigma = ctx.need(ctx.sigma, "σ", "second-order")?;
        let d = ctx.need(ctx.gap, "a gap", "second-order")?;
        second_order_limit(&ctx.p, sigma, d, &ctx.spec)
    }
}

impl Named for Inhomogeneous {
    fn name(&self) -> &'static str {
        "inhomogeneous"
    }
}
impl LimitMetric for Inhomogeneous {
    fn compute(&self, ctx: &LimitContext) -> Result<MetricMatrix> {
        let is = ctx.inhomogeneous.as_ref().ok_or_else(|| {
            Error::InvalidArgument("the inhomogeneous limit needs scale factors".into())
        })?;
        inhomogeneous_limit(&ctx.p, is, &ctx.spec)
    }
}

/// The built-in limit metrics.
pub fn limit_registry() -> &'static Registry<dyn LimitMetric> {
    static REG: OnceLock<Registry<dyn LimitMetric>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut r: Registry<dyn LimitMetric> = Registry::new("limit metric");
        r.register(Arc::new(FisherLimit))
            .register(Arc::new(WassersteinLimit))
            .register(Arc::new(SecondOrder))
            .register(Arc::new(Inhomogeneous));
        r
    })
}
