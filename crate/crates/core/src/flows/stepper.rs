//! Explicit one-step integrators and the fixed-step driver with local
//! step halving.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::registry::{Named, Registry};

/// Right-hand side y ↦ ẏ.
pub type Rhs<'a> = dyn Fn(&[f64]) -> Result<Vec<f64>> + 'a;

/// One explicit step of size `dt` from `y`.
pub trait Stepper: Named + Send + Sync {
    fn step(&self, f: &Rhs<'_>, y: &[f64], dt: f64) -> Result<Vec<f64>>;
    fn order(&self) -> u32;
}

fn axpy(y: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(y, k)| y + a * k).collect()
}

pub struct ForwardEuler;

impl Named for ForwardEuler {
    fn name(&self) -> &'static str {
        "euler"
    }
}

impl Stepper for ForwardEuler {
    fn step(&self, f: &Rhs<'_>, y: &[f64], dt: f64) -> Result<Vec<f64>> {
        Ok(axpy(y, dt, &f(y)?))
    }
    fn order(&self) -> u32 {
        1
    }
}

pub struct RungeKutta4;

impl Named for RungeKutta4 {
    fn name(&self) -> &'static str {
        "rk4"
    }
}

impl Stepper for RungeKutta4 {
    fn step(&self, f: &Rhs<'_>, y: &[f64], dt: f64) -> Result<Vec<f64>> {
        let k1 = f(y)?;
        let k2 = f(&axpy(y, 0.5 * dt, &k1))?;
        let k3 = f(&axpy(y, 0.5 * dt, &k2))?;
        let k4 = f(&axpy(y, dt, &k3))?;
        Ok((0..y.len())
            .map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect())
    }
    fn order(&self) -> u32 {
        4
    }
}

pub fn stepper_registry() -> &'static Registry<dyn Stepper> {
    static REG: OnceLock<Registry<dyn Stepper>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut r: Registry<dyn Stepper> = Registry::new("time stepper");
        r.register(Arc::new(ForwardEuler)).register(Arc::new(RungeKutta4));
        r
    })
}

/// Time integration method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Method {
    #[default]
    #[serde(rename = "euler")]
    ForwardEuler,
    #[serde(rename = "rk4")]
    RungeKutta4,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ForwardEuler => "euler",
            Method::RungeKutta4 => "rk4",
        }
    }

    pub fn stepper(self) -> Arc<dyn Stepper> {
        stepper_registry()
            .get(self.as_str())
            .expect("built-in steppers are registered")
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Method::ForwardEuler),
            "rk4" => Ok(Method::RungeKutta4),
            other => Err(Error::UnknownStrategy {
                kind: "time stepper",
                name: other.to_string(),
                known: stepper_registry().names().join(", "),
            }),
        }
    }
}

/// Step control for the flow and heat integrators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    #[serde(default)]
    pub method: Method,
    pub dt: f64,
    #[serde(default = "default_halvings")]
    pub max_halvings: usize,
    #[serde(default = "default_floor")]
    pub positivity_floor: f64,
}

fn default_halvings() -> usize {
    20
}

fn default_floor() -> f64 {
    1e-13
}

impl IntegratorSpec {
    pub fn new(method: Method, dt: f64) -> Self {
        IntegratorSpec {
            method,
            dt,
            max_halvings: default_halvings(),
            positivity_floor: default_floor(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("Δt must be positive, got {}", self.dt)));
        }
        if !(self.positivity_floor >= 0.0) || self.max_halvings > 60 {
            return Err(Error::InvalidArgument(
                "positivity floor must be ≥ 0 and max_halvings ≤ 60".into(),
            ));
        }
        Ok(())
    }

    /// Positivity threshold for a run starting at `y0`: the floor, lowered
    /// to half the smallest initial value when the data already sit below it.
    pub fn positivity_threshold(&self, y0: &[f64]) -> f64 {
        let min0 = y0.iter().copied().fold(f64::INFINITY, f64::min);
        self.positivity_floor.min(0.5 * min0)
    }

    /// Number of Δt steps reaching `t_end`; the two must agree to 1e−9.
    pub fn steps_to(&self, t_end: f64) -> Result<usize> {
        self.validate()?;
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!("t_end must be ≥ 0, got {t_end}")));
        }
        let n = (t_end / self.dt).round();
        if (n * self.dt - t_end).abs() > 1e-9 * t_end.max(self.dt) {
            return Err(Error::InvalidArgument(format!(
                "t_end = {t_end} is not a whole number of steps of Δt = {}",
                self.dt
            )));
        }
        Ok(n as usize)
    }
}

/// Maps a right-hand side's rejection of a non-interior stage (as RK4
/// stages can be even when the step itself would not be) to an
/// [`Error::EvaluationError`], which [`advance`] retries at half size.
pub fn stage_error(e: Error) -> Error {
    match e {
        Error::InvalidSimplex(m) | Error::InvalidField(m) => Error::EvaluationError(m),
        other => other,
    }
}

/// Advances `y` by one macro step `dt`.
///
/// A sub-step that errors, goes non-finite or leaves the admissible set is
/// retried at half the size; the smaller size is kept for the rest of the
/// macro step. Gives up with [`Error::StiffnessError`] after
/// `spec.max_halvings` halvings.
pub fn advance(
    stepper: &dyn Stepper,
    f: &Rhs<'_>,
    y: &[f64],
    t: f64,
    dt: f64,
    spec: &IntegratorSpec,
    admissible: &dyn Fn(&[f64]) -> bool,
) -> Result<Vec<f64>> {
    let mut cur = y.to_vec();
    let mut level = 0usize;
    let mut done: u64 = 0;
    while done < 1u64 << level {
        let h = dt / (1u64 << level) as f64;
        let attempt = stepper.step(f, &cur, h);
        match attempt {
            Ok(next) if next.iter().all(|v| v.is_finite()) && admissible(&next) => {
                cur = next;
                done += 1;
            }
            Err(e) if !matches!(e, Error::EvaluationError(_)) && !e.is_numerical() => return Err(e),
            _ => {
                if level == spec.max_halvings {
                    return Err(Error::StiffnessError {
                        t: t + dt * done as f64 / (1u64 << level) as f64,
                        halvings: level,
                        state: cur,
                    });
                }
                level += 1;
                done *= 2;
            }
        }
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(y: &[f64]) -> Result<Vec<f64>> {
        Ok(y.iter().map(|v| -v).collect())
    }

    #[test]
    fn orders() {
        for (m, expected) in [(Method::ForwardEuler, 1.0), (Method::RungeKutta4, 4.0)] {
            let s = m.stepper();
            let err = |n: usize| {
                let mut y = vec![1.0];
                for _ in 0..n {
                    y = s.step(&decay, &y, 1.0 / n as f64).unwrap();
                }
                (y[0] - (-1f64).exp()).abs()
            };
            let slope = (err(20) / err(40)).log2();
            assert!((slope - expected).abs() < 0.15, "{m:?}: {slope}");
        }
    }

    #[test]
    fn halving_restores_positivity() {
        // Euler on ẏ = −30y at Δt = 0.1 overshoots below zero
        let f = |y: &[f64]| -> Result<Vec<f64>> { Ok(vec![-30.0 * y[0]]) };
        let spec = IntegratorSpec::new(Method::ForwardEuler, 0.1);
        let y = advance(&ForwardEuler, &f, &[1.0], 0.0, 0.1, &spec, &|y| y[0] > 0.0).unwrap();
        assert!(y[0] > 0.0 && y[0] < 0.1);
    }

    #[test]
    fn stiffness_reported() {
        let f = |y: &[f64]| -> Result<Vec<f64>> { Ok(vec![-1.0 - y[0]]) };
        let spec = IntegratorSpec {
            max_halvings: 3,
            ..IntegratorSpec::new(Method::ForwardEuler, 1.0)
        };
        match advance(&ForwardEuler, &f, &[0.0], 2.0, 1.0, &spec, &|y| y[0] >= 0.0) {
            Err(Error::StiffnessError { t, halvings, state }) => {
                assert_eq!(halvings, 3);
                assert_eq!(t, 2.0);
                assert_eq!(state, vec![0.0]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn steps_must_divide_horizon() {
        let s = IntegratorSpec::new(Method::ForwardEuler, 0.01);
        assert_eq!(s.steps_to(50.0).unwrap(), 5000);
        assert!(s.steps_to(0.015).is_err());
        assert!(IntegratorSpec::new(Method::ForwardEuler, -1.0).validate().is_err());
    }

    #[test]
    fn method_parsing_and_json() {
        assert_eq!("rk4".parse::<Method>().unwrap(), Method::RungeKutta4);
        assert!("midpoint".parse::<Method>().is_err());
        let s: IntegratorSpec = serde_json::from_str(r#"{"dt":0.5,"method":"rk4"}"#).unwrap();
        assert_eq!(s.max_halvings, 20);
        assert_eq!(s.positivity_floor, 1e-13);
        assert!(serde_json::from_str::<IntegratorSpec>(r#"{"dt":0.5,"step":1}"#).is_err());
    }
}
