//! Information matrices of mixture models.
//!
//! Numeric Fisher and Wasserstein matrices come from quadrature of the
//! score-function integrals; the closed-form scaling limits live in
//! [`limits`], the asymptotic integrals and matching points in
//! [`asymptotics`], the extended (θ, μ) metric in [`extended`] and the
//! finite-σ bounds in [`bounds`].
//!
//! Everything that grows like e^{d²/8σ²} is handled as a
//! [`LogScaledValue`]; a [`MetricMatrix`] with `log_scale = Some(s)` stores
//! entries that must be multiplied by e^{s}.

pub mod asymptotics;
pub mod bounds;
pub mod extended;
pub mod limits;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixtures::{ComponentFamily, MixtureModel};
use crate::quadrature::{integrate, integrate_log_scaled, LogScaledValue, QuadratureSpec};
use crate::special::HALF_LN_2PI;

pub use asymptotics::{
    delta2_asymptotic_ratio, g2_integral, g_integral, g_prime_at_1, matching_point,
    perturbation_lemma_check, perturbation_ratio,
};
pub use bounds::{diagonal_sandwich, gap_integral, off_diagonal_bound};
pub use extended::{extended_limit, extended_numeric, sigma_matrix, wig_relation_check, ExtendedMetric};
pub use limits::{
    fisher_limit, inhomogeneous_limit, limit_registry, second_order_coefficient, second_order_limit,
    wasserstein_limit,
    InhomogeneousSpec, LimitContext, LimitMetric,
};

/// Tail constant √(2πe)/2 of the off-diagonal bound.
pub const TAIL_CONSTANT_M: f64 = 2.066_365_677_061_246_4;

/// Where a metric matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    NumericFisher,
    NumericWasserstein,
    FisherLimit,
    WassersteinLimit,
    SecondOrderLimit,
    InhomogeneousLimit,
}

/// (N−1)×(N−1) information matrix in θ-coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct MetricMatrix {
    pub provenance: Provenance,
    entries: Vec<Vec<f64>>,
    /// True matrix = entries · e^{log_scale}.
    pub log_scale: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMatrix {
    provenance: Provenance,
    n: usize,
    entries: Vec<Vec<f64>>,
    #[serde(default)]
    log_scale: Option<f64>,
}

impl TryFrom<RawMatrix> for MetricMatrix {
    type Error = Error;
    fn try_from(r: RawMatrix) -> Result<Self> {
        if r.entries.len() != r.n || r.entries.iter().any(|row| row.len() != r.n) {
            return Err(Error::ShapeMismatch(format!(
                "metric declared {}×{} but entries have another shape",
                r.n, r.n
            )));
        }
        Ok(MetricMatrix {
            provenance: r.provenance,
            entries: r.entries,
            log_scale: r.log_scale,
        })
    }
}

impl From<MetricMatrix> for RawMatrix {
    fn from(m: MetricMatrix) -> RawMatrix {
        RawMatrix {
            provenance: m.provenance,
            n: m.entries.len(),
            entries: m.entries,
            log_scale: m.log_scale,
        }
    }
}

impl MetricMatrix {
    pub fn new(provenance: Provenance, entries: Vec<Vec<f64>>, log_scale: Option<f64>) -> Self {
        MetricMatrix {
            provenance,
            entries,
            log_scale,
        }
    }

    pub fn diagonal(provenance: Provenance, diag: &[f64]) -> Self {
        let n = diag.len();
        let mut e = vec![vec![0.0; n]; n];
        for (i, &d) in diag.iter().enumerate() {
            e[i][i] = d;
        }
        MetricMatrix::new(provenance, e, None)
    }

    pub fn n(&self) -> usize {
        self.entries.len()
    }

    /// Stored (scaled) entries.
    pub fn entries(&self) -> &[Vec<f64>] {
        &self.entries
    }

    /// Stored entry (i, j); multiply by e^{log_scale} for the true value.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i][j]
    }

    /// True entry as a log-scaled value.
    pub fn entry_log(&self, i: usize, j: usize) -> LogScaledValue {
        LogScaledValue::from_f64(self.entries[i][j]).scale_log(self.log_scale.unwrap_or(0.0))
    }

    /// Same matrix expressed with a different scale: entries become
    /// true / e^{log_scale}.
    pub fn rescaled_to(&self, log_scale: f64) -> MetricMatrix {
        let f = (self.log_scale.unwrap_or(0.0) - log_scale).exp();
        let entries = self
            .entries
            .iter()
            .map(|row| row.iter().map(|v| v * f).collect())
            .collect();
        MetricMatrix::new(self.provenance, entries, Some(log_scale))
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| self.entries[i][j])
    }

    pub fn is_tridiagonal(&self) -> bool {
        let n = self.n();
        (0..n).all(|i| (0..n).all(|j| i.abs_diff(j) <= 1 || self.entries[i][j] == 0.0))
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.n();
        (0..n).all(|i| (0..n).all(|j| i == j || self.entries[i][j] == 0.0))
    }

    /// Largest |Gᵢⱼ − Gⱼᵢ| relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let n = self.n();
        let scale = self
            .entries
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.entries[i][j] - self.entries[j][i]).abs());
            }
        }
        worst / scale
    }

    /// Smallest eigenvalue of the stored entries divided by their trace.
    pub fn min_eigen_over_trace(&self) -> f64 {
        let m = self.to_dmatrix();
        let tr = m.trace();
        let eig = m.symmetric_eigen().eigenvalues;
        eig.iter().copied().fold(f64::INFINITY, f64::min) / tr
    }

    /// Index-reversed counterpart (i, j) ↦ (n−1−i, n−1−j).
    pub fn anti_transposed(&self) -> MetricMatrix {
        let n = self.n();
        let entries = (0..n)
            .map(|i| (0..n).map(|j| self.entries[n - 1 - j][n - 1 - i]).collect())
            .collect();
        MetricMatrix::new(self.provenance, entries, self.log_scale)
    }
}

/// Homogeneous vs inhomogeneous scaling factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingVariant {
    Homogeneous,
    Inhomogeneous,
}

/// ln K for the divergence rate of the diagonal WIM entries:
/// Gaussian √(2π³)(σ³/d)e^{d²/8σ²}, Laplace πσ²e^{d/2σ}, and for unequal
/// scales √(2π)(σ³/d)e^{d²/2σ²} with d the reduced gap.
pub fn scaling_factor(
    family: ComponentFamily,
    sigma: f64,
    d: f64,
    variant: ScalingVariant,
) -> Result<LogScaledValue> {
    if !(sigma > 0.0 && d > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "scaling factor needs σ > 0 and d > 0 (σ = {sigma}, d = {d})"
        )));
    }
    use std::f64::consts::PI;
    let l = match (family, variant) {
        (ComponentFamily::Gaussian, ScalingVariant::Homogeneous) => {
            0.5 * (2.0 * PI.powi(3)).ln() + 3.0 * sigma.ln() - d.ln() + d * d / (8.0 * sigma * sigma)
        }
        (ComponentFamily::Laplace, ScalingVariant::Homogeneous) => {
            PI.ln() + 2.0 * sigma.ln() + d / (2.0 * sigma)
        }
        (ComponentFamily::Gaussian, ScalingVariant::Inhomogeneous) => {
            HALF_LN_2PI + 3.0 * sigma.ln() - d.ln() + d * d / (2.0 * sigma * sigma)
        }
        (ComponentFamily::Laplace, ScalingVariant::Inhomogeneous) => {
            return Err(Error::Unsupported(
                "no inhomogeneous scaling factor for Laplace components".into(),
            ))
        }
    };
    Ok(LogScaledValue::from_log(l))
}

/// A scaling factor with the gap and scale it was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingConstants {
    pub k: LogScaledValue,
    pub d: f64,
    pub sigma: f64,
}

impl ScalingConstants {
    pub fn new(family: ComponentFamily, sigma: f64, d: f64, variant: ScalingVariant) -> Result<Self> {
        Ok(ScalingConstants {
            k: scaling_factor(family, sigma, d, variant)?,
            d,
            sigma,
        })
    }
}

/// Breakpoints for the metric integrands: means, midpoints and, where they
/// exist, the matching points of neighbouring components.
pub fn metric_seeds(model: &MixtureModel) -> Vec<f64> {
    let mut seeds = model.seeds();
    let (m, s, p) = (model.means(), model.scales(), model.weights());
    for i in 0..model.len() - 1 {
        let d = m[i + 1] - m[i];
        if let Ok(l) = matching_point(model.family(), p[i], p[i + 1], s[i + 1] / s[i], s[i], d) {
            seeds.push(m[i] + l);
        }
    }
    seeds.sort_by(f64::total_cmp);
    seeds
}

/// Truncation window. Laplace tails decay like e^{−R} rather than e^{−R²/2},
/// so the radius is widened to R²/2 to neglect the same tail mass.
pub fn metric_domain(model: &MixtureModel, spec: &QuadratureSpec) -> (f64, f64) {
    let r = spec.truncation_radius;
    match model.family() {
        ComponentFamily::Gaussian => model.domain(r),
        ComponentFamily::Laplace => model.domain(0.5 * r * r),
    }
}

fn upper_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
}

fn assemble(n: usize, pairs: &[(usize, usize)], vals: &[f64]) -> Vec<Vec<f64>> {
    let mut e = vec![vec![0.0; n]; n];
    for (&(i, j), &v) in pairs.iter().zip(vals) {
        e[i][j] = v;
        e[j][i] = v;
    }
    e
}

/// Gᵢⱼ = ∫ (ρᵢ₊₁ − ρᵢ)(ρⱼ₊₁ − ρⱼ)/ρ_θ dx.
///
/// Evaluated as ρ_θ·(rᵢ₊₁ − rᵢ)(rⱼ₊₁ − rⱼ) with rₖ = ρₖ/ρ_θ, which stays
/// bounded where the densities themselves underflow.
pub fn fisher_matrix_numeric(model: &MixtureModel, spec: &QuadratureSpec) -> Result<MetricMatrix> {
    let n = model.len() - 1;
    let (a, b) = metric_domain(model, spec);
    let seeds = metric_seeds(model);
    let pairs = upper_pairs(n);
    let vals: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            integrate(
                |x| {
                    let lr = model.log_pdf(x);
                    let r = |k: usize| (model.log_component_pdf(k, x) - lr).exp();
                    lr.exp() * (r(i + 1) - r(i)) * (r(j + 1) - r(j))
                },
                a,
                b,
                spec,
                &seeds,
            )
            .map_err(|e| e.at(i, j))
        })
        .collect::<Result<_>>()?;
    Ok(MetricMatrix::new(Provenance::NumericFisher, assemble(n, &pairs, &vals), None))
}

/// Gᵢⱼ = ∫ (Fᵢ₊₁ − Fᵢ)(Fⱼ₊₁ − Fⱼ)/ρ_θ dx, diagonal entries log-scaled.
///
/// The result carries `log_scale` equal to the largest diagonal
/// log-magnitude, so stored entries are O(1) even when K(σ) overflows.
pub fn wasserstein_matrix_numeric(
    model: &MixtureModel,
    spec: &QuadratureSpec,
) -> Result<MetricMatrix> {
    let n = model.len() - 1;
    let (a, b) = metric_domain(model, spec);
    let seeds = metric_seeds(model);
    let pairs = upper_pairs(n);
    let vals: Vec<LogScaledValue> = pairs
        .par_iter()
        .map(|&(i, j)| {
            if i == j {
                integrate_log_scaled(
                    |x| 2.0 * model.cdf_difference(i, i + 1, x).1 - model.log_pdf(x),
                    a,
                    b,
                    spec,
                    &seeds,
                )
            } else {
                integrate(
                    |x| {
                        let (si, li) = model.cdf_difference(i, i + 1, x);
                        let (sj, lj) = model.cdf_difference(j, j + 1, x);
                        if si == 0 || sj == 0 {
                            return 0.0;
                        }
                        (si * sj) as f64 * (li + lj - model.log_pdf(x)).exp()
                    },
                    a,
                    b,
                    spec,
                    &seeds,
                )
                .map(LogScaledValue::from_f64)
            }
            .map_err(|e| e.at(i, j))
        })
        .collect::<Result<_>>()?;
    let scale = pairs
        .iter()
        .zip(&vals)
        .filter(|((i, j), _)| i == j)
        .map(|(_, v)| v.log_magnitude)
        .fold(f64::NEG_INFINITY, f64::max);
    let scale = if scale.is_finite() { scale } else { 0.0 };
    let stored: Vec<f64> = vals.iter().map(|v| v.scale_log(-scale).to_f64()).collect();
    Ok(MetricMatrix::new(
        Provenance::NumericWasserstein,
        assemble(n, &pairs, &stored),
        Some(scale),
    ))
}

/// WIM over the mean tangents: (G_W)ᵢⱼ = pᵢpⱼ∫ρᵢρⱼ/ρ_θ dx (N×N).
pub fn wasserstein_mean_block(model: &MixtureModel, spec: &QuadratureSpec) -> Result<DMatrix<f64>> {
    let n = model.len();
    let (a, b) = metric_domain(model, spec);
    let seeds = metric_seeds(model);
    let p = model.weights();
    let pairs = upper_pairs(n);
    let vals: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (lpi, lpj) = (p[i].ln(), p[j].ln());
            integrate(
                |x| {
                    (lpi + model.log_component_pdf(i, x) + lpj + model.log_component_pdf(j, x)
                        - model.log_pdf(x))
                    .exp()
                },
                a,
                b,
                spec,
                &seeds,
            )
            .map_err(|e| e.at(i, j))
        })
        .collect::<Result<_>>()?;
    let e = assemble(n, &pairs, &vals);
    Ok(DMatrix::from_fn(n, n, |i, j| e[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixtures::SimplexPoint;
    use std::f64::consts::PI;

    fn gmm(means: Vec<f64>, sigma: f64, p: Vec<f64>) -> MixtureModel {
        MixtureModel::homogeneous(ComponentFamily::Gaussian, means, sigma, SimplexPoint::new(p).unwrap())
            .unwrap()
    }

    #[test]
    fn m_constant() {
        assert!((TAIL_CONSTANT_M - (2.0 * PI * std::f64::consts::E).sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn scaling_factor_examples() {
        let k = scaling_factor(ComponentFamily::Gaussian, 0.1, 1.0, ScalingVariant::Homogeneous).unwrap();
        let expect = ((2.0 * PI.powi(3)).sqrt() * 1e-3).ln() + 12.5;
        assert!((k.log_magnitude - expect).abs() < 1e-13);
        let k = scaling_factor(ComponentFamily::Laplace, 0.1, 1.0, ScalingVariant::Homogeneous).unwrap();
        assert!((k.log_magnitude - ((PI * 0.01).ln() + 5.0)).abs() < 1e-13);
        let k = scaling_factor(ComponentFamily::Gaussian, 0.02, 1.0, ScalingVariant::Homogeneous).unwrap();
        assert!(k.log_magnitude > 300.0 && k.log_magnitude.is_finite());
        assert!(k.to_f64().is_finite()); // e^{305.6} still fits; σ = 0.01 does not
        let k = scaling_factor(ComponentFamily::Gaussian, 0.01, 1.0, ScalingVariant::Homogeneous).unwrap();
        assert!(k.to_f64().is_infinite());
        // worked inhomogeneous example: reduced gap ½ gives 2√(2π)σ³e^{1/8σ²}
        let s: f64 = 0.04;
        let k = scaling_factor(ComponentFamily::Gaussian, s, 0.5, ScalingVariant::Inhomogeneous).unwrap();
        let expect = (2.0 * (2.0 * PI).sqrt() * s.powi(3)).ln() + 1.0 / (8.0 * s * s);
        assert!((k.log_magnitude - expect).abs() < 1e-12);
        assert!(matches!(
            scaling_factor(ComponentFamily::Laplace, 0.1, 1.0, ScalingVariant::Inhomogeneous),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn fisher_numeric_two_components() {
        let m = gmm(vec![0.0, 1.0], 0.01, vec![0.5, 0.5]);
        let g = fisher_matrix_numeric(&m, &QuadratureSpec::default()).unwrap();
        assert!((g.get(0, 0) / 4.0 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn fisher_numeric_off_diagonal() {
        let m = gmm(vec![0.0, 1.0, 2.0], 0.01, vec![1.0 / 3.0; 3]);
        let g = fisher_matrix_numeric(&m, &QuadratureSpec::default()).unwrap();
        assert!((g.get(0, 1) / -3.0 - 1.0).abs() < 1e-2);
        assert!(g.asymmetry() == 0.0);
        assert!(g.min_eigen_over_trace() >= -1e-8);
    }

    #[test]
    fn wasserstein_numeric_second_order_example() {
        let m = gmm(vec![0.0, 1.0], 0.1, vec![0.5, 0.5]);
        let g = wasserstein_matrix_numeric(&m, &QuadratureSpec::default()).unwrap();
        let k = scaling_factor(ComponentFamily::Gaussian, 0.1, 1.0, ScalingVariant::Homogeneous).unwrap();
        let ratio = g.entry_log(0, 0).div(k).to_f64();
        let predicted = 2.0 * (1.0 + PI * PI / 2.0 * 0.01);
        assert!((ratio / predicted - 1.0).abs() < 0.01, "ratio {ratio}");
    }

    #[test]
    fn wasserstein_numeric_is_psd_and_reflects() {
        let m = gmm(vec![-0.3, 0.7, 1.9], 0.3, vec![0.2, 0.5, 0.3]);
        let spec = QuadratureSpec::default();
        let g = wasserstein_matrix_numeric(&m, &spec).unwrap();
        assert!(g.asymmetry() < 1e-9);
        assert!(g.min_eigen_over_trace() >= -1e-8);
        let r = wasserstein_matrix_numeric(&m.reversed(), &spec).unwrap();
        let anti = r.anti_transposed().rescaled_to(g.log_scale.unwrap());
        for i in 0..2 {
            for j in 0..2 {
                assert!((anti.get(i, j) - g.get(i, j)).abs() < 1e-8 * g.get(i, i).abs(), "({i},{j})");
            }
        }
    }

    #[test]
    fn wasserstein_small_sigma_does_not_overflow() {
        let m = gmm(vec![0.0, 1.0], 0.02, vec![0.5, 0.5]);
        let g = wasserstein_matrix_numeric(&m, &QuadratureSpec::default()).unwrap();
        let ls = g.log_scale.unwrap();
        assert!(ls > 300.0 && ls.is_finite());
        // leading order: G/K → 1/√(p₁p₂) = 2, with a (π²/2)σ² correction
        let k = scaling_factor(ComponentFamily::Gaussian, 0.02, 1.0, ScalingVariant::Homogeneous).unwrap();
        let r = g.entry_log(0, 0).div(k).to_f64();
        assert!((r / (2.0 * (1.0 + PI * PI / 2.0 * 4e-4)) - 1.0).abs() < 2e-3, "{r}");
    }

    #[test]
    fn metric_json_round_trip() {
        let g = MetricMatrix::new(Provenance::FisherLimit, vec![vec![4.0]], None);
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"provenance":"fisher_limit","n":1,"entries":[[4.0]],"log_scale":null}"#);
        let back: MetricMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        let bad = r#"{"provenance":"fisher_limit","n":2,"entries":[[4.0]]}"#;
        assert!(serde_json::from_str::<MetricMatrix>(bad).is_err());
    }
}
