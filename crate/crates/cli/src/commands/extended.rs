use anyhow::{bail, Result};
use clap::Args;
use mixgeo::flows::{
    integrate_extended_flow, potential_registry, EnergyFunctional, ExtendedFlowState, ExtendedTrajectory,
    IntegratorSpec, Method,
};
use serde::Serialize;

use crate::config::ExtendedConfig;
use crate::output::{num, Output};
use crate::svg::{LinePlot, Series};

#[derive(Debug, Args)]
pub struct ExtendedArgs {
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub mu: Option<Vec<f64>>,
    /// Component standard deviation.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Smooth potential V: sin, quadratic or zero.
    #[arg(long)]
    pub potential: Option<String>,
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub stride: Option<usize>,
}

impl ExtendedArgs {
    pub fn apply(self, c: &mut ExtendedConfig) {
        if let Some(v) = self.p {
            c.p = v;
        }
        if let Some(v) = self.mu {
            c.mu = v;
        }
        if let Some(v) = self.sigma {
            c.sigma = v;
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

/// Wide rows with one column per initial component. After a merge the
/// fused component sits in the column of its leftmost original member and
/// the absorbed columns are left empty.
fn columns(tr: &ExtendedTrajectory, n0: usize) -> Result<Vec<Vec<Option<usize>>>> {
    // owner[j] = current index holding original component j's column
    let mut groups: Vec<usize> = (0..n0).collect();
    let mut merges = tr.merges.iter().peekable();
    let mut out = Vec::with_capacity(tr.states.len());
    for s in &tr.states {
        while let Some(m) = merges.next_if(|m| m.t <= s.t) {
            if m.index + 1 >= groups.len() {
                bail!("merge at index {} does not fit {} components", m.index, groups.len());
            }
            groups.remove(m.index + 1);
        }
        if groups.len() != s.len() {
            bail!("state at t = {} has {} components, expected {}", s.t, s.len(), groups.len());
        }
        let mut cols = vec![None; n0];
        for (cur, &orig) in groups.iter().enumerate() {
            cols[orig] = Some(cur);
        }
        out.push(cols);
    }
    Ok(out)
}

#[derive(Serialize)]
struct Summary<'a> {
    potential: &'a str,
    sigma: f64,
    method: Method,
    dt: f64,
    t_end: f64,
    initial: &'a ExtendedFlowState,
    last: &'a ExtendedFlowState,
    merges: &'a [mixgeo::flows::MergeEvent],
}

pub fn run(c: &ExtendedConfig, out: &mut Output) -> Result<()> {
    if c.stride == 0 {
        bail!("stride must be at least 1");
    }
    let state0 = ExtendedFlowState::new(c.p.clone(), c.mu.clone(), c.sigma)?;
    let energy = EnergyFunctional::smooth_potential(potential_registry().get(&c.potential)?);
    let spec = IntegratorSpec::new(c.method, c.dt);
    let tr = integrate_extended_flow(&state0, &energy, &spec, c.t_end)?;
    let n0 = state0.len();
    let cols = columns(&tr, n0)?;

    let mut csv = String::from("t");
    for i in 1..=n0 {
        csv.push_str(&format!(",p_{i}"));
    }
    for i in 1..=n0 {
        csv.push_str(&format!(",mu_{i}"));
    }
    csv.push('\n');
    let kept: Vec<usize> = (0..tr.states.len())
        .filter(|k| k % c.stride == 0 || k + 1 == tr.states.len())
        .collect();
    let cell = |v: Option<f64>| v.map(num).unwrap_or_default();
    for &k in &kept {
        let s = &tr.states[k];
        csv.push_str(&num(s.t));
        for col in &cols[k] {
            csv.push(',');
            csv.push_str(&cell(col.map(|i| s.p[i])));
        }
        for col in &cols[k] {
            csv.push(',');
            csv.push_str(&cell(col.map(|i| s.mu[i])));
        }
        csv.push('\n');
    }
    out.csv("trajectory.csv", &csv)?;
    let mut mcsv = String::from("t,index,mu,p\n");
    for m in &tr.merges {
        mcsv.push_str(&format!("{},{},{},{}\n", num(m.t), m.index, num(m.mu), num(m.p)));
    }
    out.csv("merges.csv", &mcsv)?;

    let last = tr.states.last().expect("a trajectory holds its initial state");
    out.json(
        "extended.json",
        &Summary {
            potential: &c.potential,
            sigma: c.sigma,
            method: c.method,
            dt: c.dt,
            t_end: c.t_end,
            initial: &tr.states[0],
            last,
            merges: &tr.merges,
        },
    )?;
    let series = (0..n0)
        .map(|j| {
            let pts = kept
                .iter()
                .map(|&k| (tr.states[k].t, cols[k][j].map(|i| tr.states[k].mu[i]).unwrap_or(f64::NAN)))
                .collect();
            Series::new(format!("mu_{}", j + 1), pts)
        })
        .collect();
    let plot = LinePlot {
        title: format!("extended flow of V = {}: means", c.potential),
        x_label: "t".into(),
        y_label: "μ".into(),
        log_y: false,
        series,
    };
    out.svg("means.svg", &plot.render())?;
    for m in &tr.merges {
        out.say(format!("merge at t = {:.6}: components {} and {} at μ = {:.9}", m.t, m.index, m.index + 1, m.mu));
    }
    out.say(format!("final means {:?}, weights {:?}", last.mu, last.p));
    Ok(())
}
