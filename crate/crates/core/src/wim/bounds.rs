//! Finite-σ bounds on the homogeneous Gaussian WIM.
//!
//! Off-diagonal entries are O(σ²) while diagonal entries are squeezed
//! around Iᵢ = ∫_{μᵢ}^{μᵢ₊₁} dx/(pᵢρᵢ + pᵢ₊₁ρᵢ₊₁).

use super::{metric_seeds, TAIL_CONSTANT_M};
use crate::error::{Error, Result};
use crate::mixtures::MixtureModel;
use crate::quadrature::{integrate_log_scaled, LogScaledValue, QuadratureSpec};
use crate::special::logaddexp;

/// (3dσ²M/min p)·(1 + (2σ²/3d²)e^{−d²/2σ²}).
pub fn off_diagonal_bound(sigma: f64, d: f64, p_min: f64) -> f64 {
    let s2 = sigma * sigma;
    3.0 * d * s2 * TAIL_CONSTANT_M / p_min * (1.0 + 2.0 * s2 / (3.0 * d * d) * (-d * d / (2.0 * s2)).exp())
}

/// Iᵢ for the gap between components i and i + 1, log-scaled.
pub fn gap_integral(model: &MixtureModel, i: usize, spec: &QuadratureSpec) -> Result<LogScaledValue> {
    if i + 1 >= model.len() {
        return Err(Error::InvalidArgument(format!("no gap {i} in a {}-component model", model.len())));
    }
    let (a, b) = (model.means()[i], model.means()[i + 1]);
    let p = model.weights();
    let (lpi, lpn) = (p[i].ln(), p[i + 1].ln());
    let seeds: Vec<f64> = metric_seeds(model);
    integrate_log_scaled(
        |x| -logaddexp(lpi + model.log_component_pdf(i, x), lpn + model.log_component_pdf(i + 1, x)),
        a,
        b,
        spec,
        &seeds,
    )
}

/// Lower and upper bounds for the diagonal entry of gap i:
/// σ⁴M²/(2 max p) + (1 − √(2σ/π)e^{−1/2σ} − e^{−d²/2σ²}/min p)·Iᵢ and
/// σ⁴M²/(2 min p) + Iᵢ, with p ranging over the two adjacent weights.
pub fn diagonal_sandwich(
    sigma: f64,
    d: f64,
    p_i: f64,
    p_next: f64,
    gap_integral: LogScaledValue,
) -> (LogScaledValue, LogScaledValue) {
    let (pmin, pmax) = (p_i.min(p_next), p_i.max(p_next));
    let m2 = TAIL_CONSTANT_M * TAIL_CONSTANT_M;
    let s4 = sigma.powi(4);
    let c = 1.0
        - (2.0 * sigma / std::f64::consts::PI).sqrt() * (-1.0 / (2.0 * sigma)).exp()
        - (-d * d / (2.0 * sigma * sigma)).exp() / pmin;
    let lower = LogScaledValue::from_f64(s4 * m2 / (2.0 * pmax))
        .add(gap_integral.mul(LogScaledValue::from_f64(c)));
    let upper = LogScaledValue::from_f64(s4 * m2 / (2.0 * pmin)).add(gap_integral);
    (lower, upper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixtures::{ComponentFamily, SimplexPoint};
    use crate::wim::wasserstein_matrix_numeric;

    #[test]
    fn bounds_hold_for_three_components() {
        let p = SimplexPoint::new(vec![0.2, 0.5, 0.3]).unwrap();
        let spec = QuadratureSpec::default();
        for sigma in [0.1, 0.07] {
            let m = MixtureModel::homogeneous(ComponentFamily::Gaussian, vec![0.0, 1.0, 2.0], sigma, p.clone())
                .unwrap();
            let g = wasserstein_matrix_numeric(&m, &spec).unwrap();
            assert!(g.entry_log(0, 1).to_f64().abs() <= off_diagonal_bound(sigma, 1.0, 0.2));
            for i in 0..2 {
                let ii = gap_integral(&m, i, &spec).unwrap();
                let (lo, hi) = diagonal_sandwich(sigma, 1.0, p[i], p[i + 1], ii);
                let gii = g.entry_log(i, i);
                assert!(gii.log_magnitude >= lo.log_magnitude && gii.log_magnitude <= hi.log_magnitude);
            }
        }
    }
}
