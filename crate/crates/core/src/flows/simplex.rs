//! Gradient flow of an energy on the simplex under the scaling Wasserstein
//! metric.

use serde::{Deserialize, Serialize};

use super::energy::EnergyFunctional;
use super::stepper::{advance, stage_error, IntegratorSpec};
use crate::error::{Error, Result};
use crate::mixtures::SimplexPoint;

/// One accepted state of a simplex flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub t: f64,
    pub p: SimplexPoint,
}

fn check_interior(p: &[f64]) -> Result<()> {
    if p.len() < 2 {
        return Err(Error::InvalidSimplex("a flow needs at least two nodes".into()));
    }
    if let Some(i) = p.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::InvalidSimplex(format!("p[{i}] = {} is not interior", p[i])));
    }
    Ok(())
}

/// (∇_θF)ᵢ = ∂F/∂pᵢ₊₁ − ∂F/∂pᵢ.
pub fn theta_gradient(energy: &EnergyFunctional, p: &SimplexPoint) -> Result<Vec<f64>> {
    energy.gap_gradient(p.as_slice())
}

/// Velocity field on raw masses. Exposed for integrators whose
/// intermediate stages are not exactly normalized.
pub fn flow_rhs_raw(energy: &EnergyFunctional, p: &[f64]) -> Result<Vec<f64>> {
    check_interior(p)?;
    let g = energy.gap_gradient(p)?;
    // flux through gap i; ṗ is its discrete divergence, so Σṗ telescopes
    let flux: Vec<f64> = (0..g.len()).map(|i| (p[i] * p[i + 1]).sqrt() * g[i]).collect();
    let n = p.len();
    Ok((0..n)
        .map(|i| {
            let right = if i + 1 < n { flux[i] } else { 0.0 };
            let left = if i > 0 { flux[i - 1] } else { 0.0 };
            right - left
        })
        .collect())
}

/// ṗᵢ = −√(pᵢpᵢ₋₁)(∇_θF)ᵢ₋₁ + √(pᵢpᵢ₊₁)(∇_θF)ᵢ, with terms reaching past
/// either end dropped.
pub fn flow_rhs(energy: &EnergyFunctional, p: &SimplexPoint) -> Result<Vec<f64>> {
    flow_rhs_raw(energy, p.as_slice())
}

/// Entropy flow written out directly: ṗᵢ = −√(pᵢpᵢ₋₁)log(pᵢ/pᵢ₋₁)
/// + √(pᵢpᵢ₊₁)log(pᵢ₊₁/pᵢ).
pub fn entropy_flow_rhs(p: &SimplexPoint) -> Vec<f64> {
    let p = p.as_slice();
    let n = p.len();
    (0..n)
        .map(|i| {
            let mut v = 0.0;
            if i > 0 {
                v -= (p[i] * p[i - 1]).sqrt() * (p[i] / p[i - 1]).ln();
            }
            if i + 1 < n {
                v += (p[i] * p[i + 1]).sqrt() * (p[i + 1] / p[i]).ln();
            }
            v
        })
        .collect()
}

/// Integrates the flow with the metric multiplied by `c` (velocities
/// divided by `c`) from `p0` to `t_end`.
///
/// With `c = 1` this is the plain flow. Every macro step of size Δt is
/// recorded; masses are never renormalized.
pub fn integrate_flow_scaled(
    energy: &EnergyFunctional,
    p0: &SimplexPoint,
    spec: &IntegratorSpec,
    t_end: f64,
    c: f64,
) -> Result<Vec<FlowState>> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("metric scale must be positive, got {c}")));
    }
    let steps = spec.steps_to(t_end)?;
    energy.value(p0.as_slice())?;
    let stepper = spec.method.stepper();
    let rhs = |y: &[f64]| -> Result<Vec<f64>> {
        let v = flow_rhs_raw(energy, y).map_err(stage_error)?;
        Ok(v.into_iter().map(|x| x / c).collect())
    };
    let floor = spec.positivity_threshold(p0.as_slice());
    let admissible = |y: &[f64]| y.iter().all(|v| *v > floor);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(FlowState { t: 0.0, p: p0.clone() });
    let mut y = p0.as_slice().to_vec();
    for k in 0..steps {
        let t = k as f64 * spec.dt;
        y = advance(stepper.as_ref(), &rhs, &y, t, spec.dt, spec, &admissible)?;
        // conservation is structural; losing it means the integrator broke
        let p = SimplexPoint::new(y.clone()).map_err(|e| {
            log::error!("flow left the simplex: {e}");
            Error::StiffnessError {
                t: t + spec.dt,
                halvings: 0,
                state: y.clone(),
            }
        })?;
        out.push(FlowState {
            t: (k + 1) as f64 * spec.dt,
            p,
        });
    }
    Ok(out)
}

/// Integrates the gradient flow of `energy` from `p0` up to `t_end`.
pub fn integrate_flow(
    energy: &EnergyFunctional,
    p0: &SimplexPoint,
    spec: &IntegratorSpec,
    t_end: f64,
) -> Result<Vec<FlowState>> {
    integrate_flow_scaled(energy, p0, spec, t_end, 1.0)
}
