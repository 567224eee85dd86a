//! Time loop for the parametric heat schemes, and trajectory comparison.

use serde::{Deserialize, Serialize};

use super::cn::{crank_nicolson_1d, crank_nicolson_2d};
use super::grid::{Field, Grid1D, Grid2D};
use super::ops::{heat2d_rhs, periodic_log_flux};
use crate::error::{Error, Result};
use crate::flows::stepper::{advance, stage_error, IntegratorSpec, Method};
use crate::registry::Named;

/// Default number of steps between stored snapshots.
pub const DEFAULT_STRIDE: usize = 100;

/// A spatial operator together with its grid.
pub trait HeatOperator: Named + Send + Sync {
    /// ṗ for the flattened field values.
    fn rhs(&self, values: &[f64]) -> Result<Vec<f64>>;
    /// Smallest grid spacing, for the stability warning.
    fn min_spacing(&self) -> f64;
    fn shape(&self) -> (usize, usize);
    /// Crank–Nicolson reference for the same problem.
    fn reference(&self, field0: &Field, dt: f64, steps: usize) -> Result<Field>;
}

pub struct Heat1D(pub Grid1D);

impl Named for Heat1D {
    fn name(&self) -> &'static str {
        "heat1d"
    }
}

impl HeatOperator for Heat1D {
    fn rhs(&self, values: &[f64]) -> Result<Vec<f64>> {
        let s = 1.0 / (self.0.dx() * self.0.dx());
        Ok(periodic_log_flux(values)?.into_iter().map(|v| v * s).collect())
    }
    fn min_spacing(&self) -> f64 {
        self.0.dx()
    }
    fn shape(&self) -> (usize, usize) {
        (self.0.n, 1)
    }
    fn reference(&self, field0: &Field, dt: f64, steps: usize) -> Result<Field> {
        crank_nicolson_1d(field0, &self.0, dt, steps)
    }
}

pub struct Heat2D(pub Grid2D);

impl Named for Heat2D {
    fn name(&self) -> &'static str {
        "heat2d"
    }
}

impl HeatOperator for Heat2D {
    fn rhs(&self, values: &[f64]) -> Result<Vec<f64>> {
        let f = Field::raw(self.0.x.n, self.0.y.n, values.to_vec());
        heat2d_rhs(&f, &self.0)
    }
    fn min_spacing(&self) -> f64 {
        self.0.x.dx().min(self.0.y.dx())
    }
    fn shape(&self) -> (usize, usize) {
        (self.0.x.n, self.0.y.n)
    }
    fn reference(&self, field0: &Field, dt: f64, steps: usize) -> Result<Field> {
        crank_nicolson_2d(field0, &self.0, dt, steps)
    }
}

/// Snapshots of a field over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub fields: Vec<Field>,
}

impl Trajectory {
    pub fn last(&self) -> &Field {
        self.fields.last().expect("trajectories hold the initial field")
    }
}

/// Integrates ṗ = op(p) for `steps` steps, storing every `stride`-th state
/// plus the initial and final ones.
pub fn run_scheme(
    op: &dyn HeatOperator,
    field0: &Field,
    spec: &IntegratorSpec,
    steps: usize,
    stride: usize,
) -> Result<Trajectory> {
    spec.validate()?;
    if field0.shape() != op.shape() {
        return Err(Error::ShapeMismatch(format!(
            "field {:?} for a {:?} operator",
            field0.shape(),
            op.shape()
        )));
    }
    if stride == 0 {
        return Err(Error::InvalidArgument("snapshot stride must be ≥ 1".into()));
    }
    let h = op.min_spacing();
    if spec.method == Method::ForwardEuler && spec.dt > 0.5 * h * h {
        log::warn!(
            "Δt = {} exceeds Δx²/2 = {}; forward Euler may be unstable",
            spec.dt,
            0.5 * h * h
        );
    }
    let stepper = spec.method.stepper();
    let rhs = |y: &[f64]| op.rhs(y).map_err(stage_error);
    let floor = spec.positivity_threshold(field0.values());
    let admissible = |y: &[f64]| y.iter().all(|v| *v > floor);
    let mut times = vec![0.0];
    let mut fields = vec![field0.clone()];
    let mut y = field0.values().to_vec();
    for k in 0..steps {
        y = advance(stepper.as_ref(), &rhs, &y, k as f64 * spec.dt, spec.dt, spec, &admissible)?;
        if (k + 1) % stride == 0 || k + 1 == steps {
            times.push((k + 1) as f64 * spec.dt);
            fields.push(field0.with_values(y.clone()));
        }
    }
    Ok(Trajectory { times, fields })
}

/// Crank–Nicolson reference sampled at the same times as a scheme run.
pub fn reference_trajectory(op: &dyn HeatOperator, field0: &Field, dt: f64, times: &[f64]) -> Result<Trajectory> {
    let mut fields = Vec::with_capacity(times.len());
    let mut cur = field0.clone();
    let mut done = 0usize;
    for &t in times {
        let target = (t / dt).round() as usize;
        if target < done {
            return Err(Error::InvalidArgument("snapshot times must increase".into()));
        }
        cur = op.reference(&cur, dt, target - done)?;
        done = target;
        fields.push(cur.clone());
    }
    Ok(Trajectory {
        times: times.to_vec(),
        fields,
    })
}

/// Differences between two trajectories at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub t: f64,
    pub max_abs: f64,
    pub l2: f64,
    pub mass_diff: f64,
    /// Largest value of the second trajectory, for relative readings.
    pub peak: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
}

impl ErrorReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,max_abs,l2,mass_diff,peak\n");
        for r in &self.rows {
            s.push_str(&format!("{:e},{:e},{:e},{:e},{:e}\n", r.t, r.max_abs, r.l2, r.mass_diff, r.peak));
        }
        s
    }

    /// Largest max_abs/peak over all rows.
    pub fn worst_relative(&self) -> f64 {
        self.rows.iter().map(|r| r.max_abs / r.peak).fold(0.0, f64::max)
    }
}

/// Pointwise comparison of two trajectories with matching shapes and times.
pub fn error_report(a: &Trajectory, b: &Trajectory) -> Result<ErrorReport> {
    if a.times.len() != b.times.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} snapshots against {}",
            a.times.len(),
            b.times.len()
        )));
    }
    let mut rows = Vec::with_capacity(a.times.len());
    for k in 0..a.times.len() {
        let (ta, tb) = (a.times[k], b.times[k]);
        if (ta - tb).abs() > 1e-12 * ta.abs().max(1.0) {
            return Err(Error::ShapeMismatch(format!("snapshot {k} at t = {ta} against t = {tb}")));
        }
        let (fa, fb) = (&a.fields[k], &b.fields[k]);
        if fa.shape() != fb.shape() {
            return Err(Error::ShapeMismatch(format!(
                "snapshot {k}: shape {:?} against {:?}",
                fa.shape(),
                fb.shape()
            )));
        }
        let mut max_abs: f64 = 0.0;
        let mut sq = 0.0;
        for (x, y) in fa.values().iter().zip(fb.values()) {
            let d = (x - y).abs();
            max_abs = max_abs.max(d);
            sq += d * d;
        }
        rows.push(ErrorRow {
            t: ta,
            max_abs,
            l2: sq.sqrt(),
            mass_diff: fa.mass() - fb.mass(),
            peak: fb.max(),
        });
    }
    Ok(ErrorReport { rows })
}

/// Standard normal density in one and two dimensions, the initial data of
/// the heat experiments.
pub fn gaussian_density_1d(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn gaussian_density_2d(x: f64, y: f64) -> f64 {
    (-0.5 * (x * x + y * y)).exp() / (2.0 * std::f64::consts::PI)
}
