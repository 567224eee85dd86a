//! Potential flow on the extended Gaussian mixture (weights and means).

use serde::{Deserialize, Serialize};

use super::energy::{EnergyFunctional, SmoothPotential};
use super::stepper::{advance, IntegratorSpec};
use crate::error::{Error, Result};
use crate::mixtures::ComponentFamily;
use crate::quadrature::LogScaledValue;
use crate::wim::{scaling_factor, ScalingVariant};

/// Above this ln K the 1/K couplings are flushed to zero.
pub const LOG_K_FLUSH: f64 = 700.0;

/// Relative gap (to the span of the means) below which two means merge.
pub const MERGE_TOL: f64 = 1e-9;

const SUM_TOL: f64 = 1e-12;

/// State of the extended flow. `k` holds the scaling factor of every gap
/// at the current means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedFlowState {
    pub t: f64,
    pub p: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma: f64,
    pub k: Vec<LogScaledValue>,
}

/// Two neighbouring components fused into one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub t: f64,
    /// Index of the left component before the merge.
    pub index: usize,
    pub mu: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedTrajectory {
    pub states: Vec<ExtendedFlowState>,
    pub merges: Vec<MergeEvent>,
}

fn gap_scaling(mu: &[f64], sigma: f64) -> Result<Vec<LogScaledValue>> {
    mu.windows(2)
        .map(|w| scaling_factor(ComponentFamily::Gaussian, sigma, w[1] - w[0], ScalingVariant::Homogeneous))
        .collect()
}

impl ExtendedFlowState {
    /// Validated state at t = 0. A single component (p = [1]) is allowed.
    pub fn new(p: Vec<f64>, mu: Vec<f64>, sigma: f64) -> Result<Self> {
        if p.is_empty() || p.len() != mu.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} weights for {} means",
                p.len(),
                mu.len()
            )));
        }
        if p.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidSimplex("weights must be positive".into()));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidSimplex(format!("weights sum to {s}, not 1")));
        }
        if mu.iter().any(|m| !m.is_finite()) || mu.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidModel("means must be finite and strictly increasing".into()));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidScale(sigma));
        }
        let k = gap_scaling(&mu, sigma)?;
        Ok(ExtendedFlowState { t: 0.0, p, mu, sigma, k })
    }

    /// Three components at −1, 0, 3 with weights (0.2, 0.5, 0.3) and
    /// standard deviation 0.1.
    pub fn transport_example() -> Self {
        Self::new(vec![0.2, 0.5, 0.3], vec![-1.0, 0.0, 3.0], 0.1).expect("valid built-in state")
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    fn packed(&self) -> Vec<f64> {
        self.p.iter().chain(&self.mu).copied().collect()
    }
}

fn inv_k(k: LogScaledValue) -> f64 {
    if k.log_magnitude > LOG_K_FLUSH {
        0.0
    } else {
        (-k.log_magnitude).exp()
    }
}

/// (θ̇, μ̇) at the given weights and means.
fn rhs_parts(p: &[f64], mu: &[f64], sigma: f64, v: &dyn SmoothPotential) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = p.len();
    if mu.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::EvaluationError("means crossed".into()));
    }
    if p.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::EvaluationError("nonpositive weight".into()));
    }
    let vv: Vec<f64> = mu.iter().map(|&m| v.value(m)).collect();
    let dv: Vec<f64> = mu.iter().map(|&m| v.derivative(m)).collect();
    let d: Vec<f64> = mu.windows(2).map(|w| w[1] - w[0]).collect();
    let ik: Vec<f64> = gap_scaling(mu, sigma)?.into_iter().map(inv_k).collect();
    let theta_dot: Vec<f64> = (0..n.saturating_sub(1))
        .map(|i| {
            let trapezoid = (vv[i + 1] - vv[i]) - 0.5 * d[i] * (dv[i] + dv[i + 1]);
            -(p[i] * p[i + 1]).sqrt() * ik[i] * trapezoid
        })
        .collect();
    let mu_dot: Vec<f64> = (0..n)
        .map(|i| {
            let mut m = -dv[i];
            // endpoint means keep whichever neighbour term exists
            if i + 1 < n {
                m += ik[i] * (p[i + 1] / p[i]).sqrt() * 0.5 * d[i] * (vv[i + 1] - vv[i]);
            }
            if i > 0 {
                m += ik[i - 1] * (p[i - 1] / p[i]).sqrt() * 0.5 * d[i - 1] * (vv[i] - vv[i - 1]);
            }
            m
        })
        .collect();
    Ok((theta_dot, mu_dot))
}

fn smooth_of(energy: &EnergyFunctional) -> Result<&dyn SmoothPotential> {
    energy.smooth().map(|s| s.as_ref()).ok_or_else(|| {
        Error::InvalidArgument("the extended flow needs a potential with a smooth V".into())
    })
}

/// θ̇ (one entry per gap) and μ̇ (one per component).
pub fn extended_flow_rhs(state: &ExtendedFlowState, energy: &EnergyFunctional) -> Result<(Vec<f64>, Vec<f64>)> {
    rhs_parts(&state.p, &state.mu, state.sigma, smooth_of(energy)?)
}

/// Merges neighbours closer than [`MERGE_TOL`] times the span of the
/// means, summing weights and averaging means by weight.
fn merge_collapsed(p: &mut Vec<f64>, mu: &mut Vec<f64>, t: f64, events: &mut Vec<MergeEvent>) {
    loop {
        let n = mu.len();
        if n < 2 {
            return;
        }
        let span = mu[n - 1] - mu[0];
        let Some(i) = (0..n - 1).find(|&i| mu[i + 1] - mu[i] < MERGE_TOL * span) else {
            return;
        };
        let w = p[i] + p[i + 1];
        let m = (p[i] * mu[i] + p[i + 1] * mu[i + 1]) / w;
        log::info!("t = {t}: means {} and {} merged at {m}", mu[i], mu[i + 1]);
        p[i] = w;
        mu[i] = m;
        p.remove(i + 1);
        mu.remove(i + 1);
        events.push(MergeEvent { t, index: i, mu: m, p: w });
    }
}

/// Integrates the extended flow from `state0` up to `t_end`, merging
/// collapsed means after every step.
pub fn integrate_extended_flow(
    state0: &ExtendedFlowState,
    energy: &EnergyFunctional,
    spec: &IntegratorSpec,
    t_end: f64,
) -> Result<ExtendedTrajectory> {
    let v = smooth_of(energy)?;
    let steps = spec.steps_to(t_end)?;
    let stepper = spec.method.stepper();
    let sigma = state0.sigma;
    let floor = spec.positivity_threshold(&state0.p);
    let mut states = Vec::with_capacity(steps + 1);
    let mut merges = Vec::new();
    let mut cur = state0.clone();
    states.push(cur.clone());
    for s in 0..steps {
        let n = cur.len();
        let rhs = |y: &[f64]| -> Result<Vec<f64>> {
            let (td, md) = rhs_parts(&y[..n], &y[n..], sigma, v)?;
            let mut out: Vec<f64> = (0..n)
                .map(|i| {
                    let left = if i > 0 { td[i - 1] } else { 0.0 };
                    let right = if i + 1 < n { td[i] } else { 0.0 };
                    left - right
                })
                .collect();
            out.extend(md);
            Ok(out)
        };
        let admissible = |y: &[f64]| y[..n].iter().all(|x| *x > floor) && y[n..].windows(2).all(|w| w[1] > w[0]);
        let y = advance(stepper.as_ref(), &rhs, &cur.packed(), cur.t, spec.dt, spec, &admissible)?;
        let t = (s + 1) as f64 * spec.dt;
        let (mut p, mut mu) = (y[..n].to_vec(), y[n..].to_vec());
        merge_collapsed(&mut p, &mut mu, t, &mut merges);
        let k = gap_scaling(&mu, sigma)?;
        cur = ExtendedFlowState { t, p, mu, sigma, k };
        states.push(cur.clone());
    }
    Ok(ExtendedTrajectory { states, merges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::energy::{potential_registry, QuadraticPotential, SinPotential, ZeroPotential};
    use crate::flows::stepper::Method;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn euler(dt: f64) -> IntegratorSpec {
        IntegratorSpec::new(Method::ForwardEuler, dt)
    }

    #[test]
    fn constant_potential_is_static() {
        let e = EnergyFunctional::smooth_potential(Arc::new(ZeroPotential));
        let s = ExtendedFlowState::transport_example();
        let (td, md) = extended_flow_rhs(&s, &e).unwrap();
        assert!(td.iter().chain(&md).all(|v| *v == 0.0));
    }

    #[test]
    fn flushed_coupling_is_pure_descent() {
        // σ = 0.01 at unit gaps gives ln K ≈ 1240
        let e = EnergyFunctional::smooth_potential(Arc::new(SinPotential));
        let s = ExtendedFlowState::new(vec![0.3, 0.7], vec![0.0, 1.0], 0.01).unwrap();
        assert!(s.k[0].log_magnitude > LOG_K_FLUSH);
        let (td, md) = extended_flow_rhs(&s, &e).unwrap();
        assert_eq!(td, vec![0.0]);
        assert_eq!(md, vec![-1.0, -(1f64.cos())]);
    }

    #[test]
    fn needs_smooth_potential() {
        let s = ExtendedFlowState::transport_example();
        let e = EnergyFunctional::potential(vec![0.0, 1.0, 2.0]).unwrap();
        assert!(matches!(extended_flow_rhs(&s, &e), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn rejects_bad_states() {
        assert!(ExtendedFlowState::new(vec![0.5, 0.5], vec![1.0, 0.0], 0.1).is_err());
        assert!(ExtendedFlowState::new(vec![0.5, 0.6], vec![0.0, 1.0], 0.1).is_err());
        assert!(ExtendedFlowState::new(vec![1.0], vec![0.0], 0.0).is_err());
        assert!(ExtendedFlowState::new(vec![1.0], vec![0.0], 0.1).is_ok());
    }

    #[test]
    fn single_component_relaxes_exponentially() {
        let e = EnergyFunctional::smooth_potential(Arc::new(QuadraticPotential));
        let s = ExtendedFlowState::new(vec![1.0], vec![2.0], 0.1).unwrap();
        let traj = integrate_extended_flow(&s, &e, &IntegratorSpec::new(Method::RungeKutta4, 0.01), 3.0).unwrap();
        let last = traj.states.last().unwrap();
        assert!((last.mu[0] - 2.0 * (-3.0f64).exp()).abs() < 1e-9);
        let traj = integrate_extended_flow(&s, &e, &euler(0.01), 3.0).unwrap();
        assert!((traj.states.last().unwrap().mu[0] - 2.0 * 0.99f64.powi(300)).abs() < 1e-14);
    }

    #[test]
    fn sin_transport_collapses_first_two_means() {
        let e = EnergyFunctional::smooth_potential(potential_registry().get("sin").unwrap());
        let s = ExtendedFlowState::transport_example();
        let traj = integrate_extended_flow(&s, &e, &euler(0.01), 50.0).unwrap();
        assert_eq!(traj.states.len(), 5001);
        assert_eq!(traj.merges.len(), 1);
        assert_eq!(traj.merges[0].index, 0);
        let last = traj.states.last().unwrap();
        assert_eq!(last.len(), 2);
        assert!((last.mu[0] + PI / 2.0).abs() < 1e-2);
        assert!((last.mu[1] - 1.5 * PI).abs() < 1e-2);
        for st in &traj.states {
            assert!((st.p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn merge_bookkeeping() {
        let mut p = vec![0.2, 0.3, 0.5];
        let mut mu = vec![0.0, 1e-12, 2.0];
        let mut ev = Vec::new();
        merge_collapsed(&mut p, &mut mu, 1.0, &mut ev);
        assert_eq!(p, vec![0.5, 0.5]);
        assert!((mu[0] - 0.6e-12).abs() < 1e-24);
        assert_eq!(ev.len(), 1);
    }
}
