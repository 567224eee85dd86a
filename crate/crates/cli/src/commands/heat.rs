use anyhow::{bail, Result};
use clap::Args;
use mixgeo::flows::{IntegratorSpec, Method};
use mixgeo::pde::{
    error_report, gaussian_density_1d, gaussian_density_2d, reference_trajectory, run_scheme, ErrorReport, Field,
    Grid1D, Grid2D, Heat1D, Heat2D, HeatOperator, Trajectory,
};
use serde::Serialize;

use crate::config::{Heat1dConfig, Heat2dConfig};
use crate::output::{row, Output};
use crate::svg::{Heatmap, LinePlot, Series};

#[derive(Debug, Args)]
pub struct HeatArgs {
    #[arg(long)]
    pub dx: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub method: Option<Method>,
    /// Steps between stored snapshots.
    #[arg(long)]
    pub stride: Option<usize>,
}

impl HeatArgs {
    pub fn apply_1d(self, c: &mut Heat1dConfig) {
        if let Some(v) = self.dx {
            c.dx = v;
        }
        if let Some(v) = self.dt {
            c.dt = v;
        }
        if let Some(v) = self.t_end {
            c.t_end = v;
        }
        if let Some(v) = self.method {
            c.method = v;
        }
        if let Some(v) = self.stride {
            c.stride = v;
        }
    }

    pub fn apply_2d(self, c: &mut Heat2dConfig) {
        if let Some(v) = self.dx {
            c.dx = v;
        }
        if let Some(v) = self.dt {
            c.dt = v;
        }
        if let Some(v) = self.t_end {
            c.t_end = v;
        }
        if let Some(v) = self.method {
            c.method = v;
        }
        if let Some(v) = self.stride {
            c.stride = v;
        }
    }
}

#[derive(Serialize)]
struct Summary {
    operator: &'static str,
    method: Method,
    dx: f64,
    dt: f64,
    t_end: f64,
    worst_relative_error: f64,
    initial_mass: f64,
    final_mass: f64,
    report: ErrorReport,
}

struct Run {
    scheme: Trajectory,
    reference: Trajectory,
    report: ErrorReport,
}

fn simulate(op: &dyn HeatOperator, f0: &Field, method: Method, dt: f64, t_end: f64, stride: usize) -> Result<Run> {
    if stride == 0 {
        bail!("stride must be at least 1");
    }
    let spec = IntegratorSpec::new(method, dt);
    let steps = spec.steps_to(t_end)?;
    let scheme = run_scheme(op, f0, &spec, steps, stride)?;
    let reference = reference_trajectory(op, f0, dt, &scheme.times)?;
    let report = error_report(&scheme, &reference)?;
    Ok(Run { scheme, reference, report })
}

fn error_plot(title: &str, r: &ErrorReport) -> String {
    LinePlot {
        title: title.into(),
        x_label: "t".into(),
        y_label: "error".into(),
        log_y: true,
        series: vec![
            Series::new("max abs", r.rows.iter().map(|e| (e.t, e.max_abs)).collect()),
            Series::new("l2", r.rows.iter().map(|e| (e.t, e.l2)).collect()),
        ],
    }
    .render()
}

fn finish(out: &mut Output, name: &'static str, c: (Method, f64, f64, f64), run: &Run) -> Result<()> {
    out.csv("error.csv", &run.report.to_csv())?;
    out.svg("error.svg", &error_plot(&format!("{name}: scheme against Crank–Nicolson"), &run.report))?;
    let worst = run.report.worst_relative();
    out.json(
        "summary.json",
        &Summary {
            operator: name,
            method: c.0,
            dx: c.1,
            dt: c.2,
            t_end: c.3,
            worst_relative_error: worst,
            initial_mass: run.scheme.fields[0].mass(),
            final_mass: run.scheme.last().mass(),
            report: run.report.clone(),
        },
    )?;
    out.say(format!(
        "{name}: {} snapshots, worst max-abs/peak against Crank–Nicolson {worst:.6e}, mass drift {:.3e}",
        run.scheme.times.len(),
        run.scheme.last().mass() - run.scheme.fields[0].mass()
    ));
    Ok(())
}

pub fn run_1d(c: &Heat1dConfig, out: &mut Output) -> Result<()> {
    let g = Grid1D::with_spacing(c.x_min, c.x_max, c.dx)?;
    let f0 = Field::from_density_1d(&g, gaussian_density_1d)?;
    let op = Heat1D(g);
    let run = simulate(&op, &f0, c.method, c.dt, c.t_end, c.stride)?;

    let dx = g.dx();
    let mut csv = String::from("t,x,scheme,reference\n");
    for (k, &t) in run.scheme.times.iter().enumerate() {
        let (a, b) = (run.scheme.fields[k].values(), run.reference.fields[k].values());
        for i in 0..g.n {
            csv.push_str(&format!("{}\n", row(&[t, g.x(i), a[i] / dx, b[i] / dx])));
        }
    }
    out.csv("snapshots.csv", &csv)?;
    let last = run.scheme.times.len() - 1;
    let mut series = Vec::new();
    for (label, tr) in [("scheme", &run.scheme), ("Crank–Nicolson", &run.reference)] {
        for k in [0, last] {
            let vals = tr.fields[k].values();
            series.push(Series::new(
                format!("{label}, t = {}", tr.times[k]),
                (0..g.n).map(|i| (g.x(i), vals[i] / dx)).collect(),
            ));
        }
    }
    let overlay = LinePlot {
        title: "1D heat: density".into(),
        x_label: "x".into(),
        y_label: "ρ".into(),
        log_y: false,
        series,
    };
    out.svg("overlay.svg", &overlay.render())?;
    finish(out, "heat1d", (c.method, dx, c.dt, c.t_end), &run)
}

pub fn run_2d(c: &Heat2dConfig, out: &mut Output) -> Result<()> {
    let g1 = Grid1D::with_spacing(c.min, c.max, c.dx)?;
    let g = Grid2D::new(g1, g1)?;
    let f0 = Field::from_density_2d(&g, gaussian_density_2d)?;
    let op = Heat2D(g);
    let run = simulate(&op, &f0, c.method, c.dt, c.t_end, c.stride)?;

    out.csv("scheme_final.csv", &run.scheme.last().to_csv_2d(&g)?)?;
    out.csv("reference_final.csv", &run.reference.last().to_csv_2d(&g)?)?;
    let area = g.cell_area();
    let (s, r) = (run.scheme.last().values(), run.reference.last().values());
    let map = |title: String, values: Vec<f64>| Heatmap {
        title,
        nx: g.x.n,
        ny: g.y.n,
        x_range: (g.x.x_min, g.x.x_max),
        y_range: (g.y.x_min, g.y.x_max),
        values,
    };
    let t = run.scheme.times.last().copied().unwrap_or(0.0);
    out.svg(
        "density.svg",
        &map(format!("2D heat: density at t = {t}"), s.iter().map(|v| v / area).collect()).render(),
    )?;
    out.svg(
        "abs_error.svg",
        &map(
            format!("2D heat: |scheme − Crank–Nicolson| at t = {t}"),
            s.iter().zip(r).map(|(a, b)| (a - b).abs() / area).collect(),
        )
        .render(),
    )?;
    finish(out, "heat2d", (c.method, g1.dx(), c.dt, c.t_end), &run)
}
