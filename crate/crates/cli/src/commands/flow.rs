use anyhow::{bail, Result};
use clap::Args;
use mixgeo::flows::{internal_registry, integrate_flow, EnergyFunctional, FlowState, IntegratorSpec, Method};
use mixgeo::SimplexPoint;
use nalgebra::DMatrix;
use serde::Serialize;

use crate::config::FlowConfig;
use crate::output::{num, Output};
use crate::svg::{LinePlot, Series};

#[derive(Debug, Args)]
pub struct FlowArgs {
    /// entropy, potential, interaction, zero, or an internal density name.
    #[arg(long)]
    pub energy: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub p0: Option<Vec<f64>>,
    /// Node values of the potential energy.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub potential: Option<Vec<f64>>,
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Steps between trajectory rows.
    #[arg(long)]
    pub stride: Option<usize>,
}

impl FlowArgs {
    pub fn apply(self, c: &mut FlowConfig) {
        if let Some(v) = self.energy {
            c.energy = v;
        }
        if let Some(v) = self.p0 {
            c.p0 = v;
        }
        if let Some(v) = self.potential {
            c.potential = v;
        }
        if let Some(v) = self.method {
            c.method = v;
        }
        if let Some(v) = self.dt {
            c.dt = v;
        }
        if let Some(v) = self.t_end {
            c.t_end = v;
        }
        if let Some(v) = self.stride {
            c.stride = v;
        }
    }
}

fn energy(c: &FlowConfig, n: usize) -> Result<EnergyFunctional> {
    Ok(match c.energy.as_str() {
        "entropy" => EnergyFunctional::entropy(),
        "zero" => EnergyFunctional::potential(vec![0.0; n])?,
        "potential" => {
            if c.potential.len() != n {
                bail!("the potential energy needs {n} node values, got {}", c.potential.len());
            }
            EnergyFunctional::potential(c.potential.clone())?
        }
        "interaction" => {
            let w = &c.interaction;
            if w.len() != n || w.iter().any(|r| r.len() != n) {
                bail!("the interaction energy needs an {n}x{n} kernel");
            }
            EnergyFunctional::interaction(DMatrix::from_fn(n, n, |i, j| w[i][j]))?
        }
        other => EnergyFunctional::Internal(internal_registry().get(other)?),
    })
}

#[derive(Serialize)]
struct Summary<'a> {
    energy: &'a str,
    method: Method,
    dt: f64,
    t_end: f64,
    steps: usize,
    initial: &'a FlowState,
    last: &'a FlowState,
    initial_energy: f64,
    final_energy: f64,
    mass_drift: f64,
}

pub fn run(c: &FlowConfig, out: &mut Output) -> Result<()> {
    if c.stride == 0 {
        bail!("stride must be at least 1");
    }
    let p0 = SimplexPoint::new(c.p0.clone())?;
    let e = energy(c, p0.len())?;
    let mut spec = IntegratorSpec::new(c.method, c.dt);
    if let Some(h) = c.max_halvings {
        spec.max_halvings = h;
    }
    let states = integrate_flow(&e, &p0, &spec, c.t_end)?;
    let n = p0.len();
    let last = states.last().expect("a trajectory holds its initial state");

    let mut csv = String::from("t");
    for i in 1..=n {
        csv.push_str(&format!(",p_{i}"));
    }
    csv.push('\n');
    let kept: Vec<&FlowState> = states
        .iter()
        .enumerate()
        .filter(|(k, _)| k % c.stride == 0 || k + 1 == states.len())
        .map(|(_, s)| s)
        .collect();
    for s in &kept {
        csv.push_str(&num(s.t));
        for v in s.p.as_slice() {
            csv.push(',');
            csv.push_str(&num(*v));
        }
        csv.push('\n');
    }
    out.csv("trajectory.csv", &csv)?;

    let f0 = e.value(p0.as_slice())?;
    let f1 = e.value(last.p.as_slice())?;
    let mass: f64 = last.p.as_slice().iter().sum();
    out.json(
        "flow.json",
        &Summary {
            energy: &c.energy,
            method: c.method,
            dt: c.dt,
            t_end: c.t_end,
            steps: states.len() - 1,
            initial: &states[0],
            last,
            initial_energy: f0,
            final_energy: f1,
            mass_drift: mass - 1.0,
        },
    )?;
    let plot = LinePlot {
        title: format!("{} flow", c.energy),
        x_label: "t".into(),
        y_label: "p".into(),
        log_y: false,
        series: (0..n)
            .map(|i| Series::new(format!("p_{}", i + 1), kept.iter().map(|s| (s.t, s.p[i])).collect()))
            .collect(),
    };
    out.svg("flow.svg", &plot.render())?;
    out.say(format!(
        "{} flow to t = {}: energy {:.12e} -> {:.12e}, final p = {:?}",
        c.energy,
        last.t,
        f0,
        f1,
        last.p.as_slice()
    ));
    Ok(())
}
