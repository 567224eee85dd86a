//! The extended model whose means are free parameters, and the relation
//! G_F = Σ G_W Σᵀ between its Fisher and Wasserstein blocks.
//!
//! In the σ → 0 limit the θθ block grows like K(σ) while the θμ and μμ
//! blocks stay O(1); rescaling θ-tangents by K^{−1/2} removes the cross
//! blocks.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{
    fisher_matrix_numeric, metric_domain, metric_seeds, scaling_factor, wasserstein_limit,
    wasserstein_matrix_numeric, wasserstein_mean_block, ScalingVariant,
};
use crate::error::{Error, Result};
use crate::mixtures::{ComponentFamily, MixtureModel, SimplexPoint};
use crate::quadrature::{integrate, LogScaledValue, QuadratureSpec};

/// Block metric over (θ, μ) tangents.
///
/// `theta_theta` is stored divided by K: the true block is
/// `theta_theta · K`. The other blocks are stored as is.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedMetric {
    pub theta_theta: DMatrix<f64>,
    pub theta_mu: DMatrix<f64>,
    pub mu_mu: DMatrix<f64>,
    pub k: LogScaledValue,
}

impl ExtendedMetric {
    /// Full (2N−1)×(2N−1) matrix after scaling θ-tangents by K^{−1/2}:
    /// the θθ block becomes `theta_theta`, the cross blocks pick up
    /// K^{−1/2} (which underflows to zero for tiny σ).
    pub fn rescaled(&self) -> DMatrix<f64> {
        let f = (-0.5 * self.k.log_magnitude).exp();
        self.assemble(f)
    }

    /// The σ → 0 rescaled metric: block-diagonal with exactly zero cross
    /// blocks.
    pub fn rescaled_limit(&self) -> DMatrix<f64> {
        self.assemble(0.0)
    }

    fn assemble(&self, cross: f64) -> DMatrix<f64> {
        let m = self.theta_theta.nrows();
        let n = self.mu_mu.nrows();
        let mut g = DMatrix::zeros(m + n, m + n);
        g.view_mut((0, 0), (m, m)).copy_from(&self.theta_theta);
        g.view_mut((m, m), (n, n)).copy_from(&self.mu_mu);
        let c = &self.theta_mu * cross;
        g.view_mut((0, m), (m, n)).copy_from(&c);
        g.view_mut((m, 0), (n, m)).copy_from(&c.transpose());
        g
    }
}

fn homogeneous_gap(means: &[f64]) -> Result<f64> {
    let d = means[1] - means[0];
    if means.windows(2).any(|w| ((w[1] - w[0]) - d).abs() > 1e-9 * d.abs()) {
        return Err(Error::InvalidModel("the extended metric needs equally spaced means".into()));
    }
    Ok(d)
}

/// Limit blocks: θθ = K(σ)·diag(1/√(pᵢpᵢ₊₁)), μμ = diag(p), θμ bidiagonal
/// with (μᵢ₊₁ − μᵢ)/2 at columns i and i + 1 of row i.
pub fn extended_limit(
    p: &SimplexPoint,
    means: &[f64],
    sigma: f64,
    family: ComponentFamily,
) -> Result<ExtendedMetric> {
    if family != ComponentFamily::Gaussian {
        return Err(Error::Unsupported("the extended limit is derived for Gaussian components".into()));
    }
    let n = p.len();
    if means.len() != n {
        return Err(Error::ShapeMismatch(format!("{} means for {} weights", means.len(), n)));
    }
    let d = homogeneous_gap(means)?;
    let k = scaling_factor(family, sigma, d, ScalingVariant::Homogeneous)?;
    Ok(ExtendedMetric {
        theta_theta: wasserstein_limit(p).to_dmatrix(),
        theta_mu: DMatrix::from_fn(n - 1, n, |i, j| {
            if j == i || j == i + 1 {
                0.5 * (means[i + 1] - means[i])
            } else {
                0.0
            }
        }),
        mu_mu: DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(p.as_slice())),
        k,
    })
}

/// Quadrature counterpart of [`extended_limit`] for a homogeneous model.
///
/// θμ entries are ∫ (Fᵢ − Fᵢ₊₁)·pⱼρⱼ/ρ_θ dx (the product of the two
/// Wasserstein score functions).
pub fn extended_numeric(model: &MixtureModel, spec: &QuadratureSpec) -> Result<ExtendedMetric> {
    let d = homogeneous_gap(model.means())?;
    let sigma = model.scales()[0];
    if model.scales().iter().any(|&s| s != sigma) {
        return Err(Error::InvalidModel("the extended metric needs equal scales".into()));
    }
    let k = scaling_factor(model.family(), sigma, d, ScalingVariant::Homogeneous)?;
    let w = wasserstein_matrix_numeric(model, spec)?.rescaled_to(k.log_magnitude);
    let mu_mu = wasserstein_mean_block(model, spec)?;
    let n = model.len();
    let (a, b) = metric_domain(model, spec);
    let seeds = metric_seeds(model);
    let p = model.weights();
    let cells: Vec<(usize, usize)> = (0..n - 1).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let vals: Vec<f64> = cells
        .par_iter()
        .map(|&(i, j)| {
            let lpj = p[j].ln();
            integrate(
                |x| {
                    let (s, l) = model.cdf_difference(i, i + 1, x);
                    if s == 0 {
                        return 0.0;
                    }
                    s as f64 * (l + lpj + model.log_component_pdf(j, x) - model.log_pdf(x)).exp()
                },
                a,
                b,
                spec,
                &seeds,
            )
            .map_err(|e| e.at(i, j))
        })
        .collect::<Result<_>>()?;
    Ok(ExtendedMetric {
        theta_theta: w.to_dmatrix(),
        theta_mu: DMatrix::from_row_slice(n - 1, n, &vals),
        mu_mu,
        k,
    })
}

/// Σ ∈ ℝ^{(N−1)×N}: row i has −1/pᵢ at column i and 1/pᵢ₊₁ at column i+1.
pub fn sigma_matrix(p: &SimplexPoint) -> DMatrix<f64> {
    let n = p.len();
    DMatrix::from_fn(n - 1, n, |i, j| {
        if j == i {
            -1.0 / p[i]
        } else if j == i + 1 {
            1.0 / p[i + 1]
        } else {
            0.0
        }
    })
}

/// ‖G_F − Σ G_W Σᵀ‖_F / ‖G_F‖_F with both sides computed by quadrature.
pub fn wig_relation_check(model: &MixtureModel, spec: &QuadratureSpec) -> Result<f64> {
    let gf = fisher_matrix_numeric(model, spec)?.to_dmatrix();
    let gw = wasserstein_mean_block(model, spec)?;
    let s = sigma_matrix(model.weights());
    let rhs = &s * gw * s.transpose();
    Ok((&gf - rhs).norm() / gf.norm())
}
