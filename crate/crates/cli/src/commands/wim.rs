use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use mixgeo::wim::{
    fisher_matrix_numeric, limit_registry, scaling_factor, second_order_limit, wasserstein_limit,
    wasserstein_matrix_numeric, InhomogeneousSpec, LimitContext, MetricMatrix, ScalingVariant,
};
use mixgeo::{ComponentFamily, MixtureModel, SimplexPoint};
use serde::Serialize;

use crate::config::WimConfig;
use crate::output::{num, Output};
use crate::svg::{LinePlot, Series};

#[derive(Debug, Args)]
pub struct WimArgs {
    /// Mixture model JSON: {"family", "means", "scales", "weights"}.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Closed-form limits to compare against (fisher, wasserstein,
    /// second-order, inhomogeneous).
    #[arg(long, value_delimiter = ',')]
    pub limits: Option<Vec<String>>,
    /// σ values for a convergence table of the diagonal WIM.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub sweep_sigma: Option<Vec<f64>>,
    #[arg(long)]
    pub gap: Option<f64>,
    /// Weights for the sweep and second-order modes.
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    #[arg(long)]
    pub family: Option<String>,
    /// Tabulate the second-order expansion of the diagonal at --sigma.
    #[arg(long)]
    pub second_order: bool,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Relative tolerance of the quadrature.
    #[arg(long)]
    pub rel_tol: Option<f64>,
}

impl WimArgs {
    pub fn apply(self, c: &mut WimConfig) -> Result<()> {
        if let Some(v) = self.model {
            c.model = Some(v);
        }
        if let Some(v) = self.limits {
            c.limits = v;
        }
        if let Some(v) = self.sweep_sigma {
            c.sweep_sigma = v;
        }
        if let Some(v) = self.gap {
            c.gap = v;
        }
        if let Some(v) = self.weights {
            c.weights = v;
        }
        if let Some(v) = self.family {
            c.family = v.parse()?;
        }
        c.second_order |= self.second_order;
        if let Some(v) = self.sigma {
            c.sigma = Some(v);
        }
        if let Some(v) = self.rel_tol {
            c.quadrature.rel_tol = v;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct RatioRow {
    limit: String,
    i: usize,
    j: usize,
    log_numeric: f64,
    log_limit: f64,
    log_ratio: f64,
}

pub fn run(c: &WimConfig, out: &mut Output) -> Result<()> {
    c.quadrature.validate()?;
    if c.model.is_none() && c.sweep_sigma.is_empty() && !c.second_order {
        bail!("wim needs --model, --sweep-sigma or --second-order");
    }
    if let Some(path) = &c.model {
        model_mode(c, path, out)?;
    }
    if !c.sweep_sigma.is_empty() {
        sweep_mode(c, out)?;
    }
    if c.second_order {
        second_order_mode(c, out)?;
    }
    Ok(())
}

fn equal_scale(model: &MixtureModel) -> Option<f64> {
    let s = model.scales();
    s.iter().all(|v| (v - s[0]).abs() <= 1e-12 * s[0]).then_some(s[0])
}

fn model_mode(c: &WimConfig, path: &PathBuf, out: &mut Output) -> Result<()> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading model {}", path.display()))?;
    let model: MixtureModel =
        serde_json::from_str(&text).with_context(|| format!("parsing model {}", path.display()))?;
    if model.len() < 2 {
        bail!("an information matrix needs at least two components");
    }
    let spec = c.quadrature;
    let fim = fisher_matrix_numeric(&model, &spec)?;
    let wim = wasserstein_matrix_numeric(&model, &spec)?;
    out.json("fim.json", &fim)?;
    out.json("wim.json", &wim)?;

    let sigma = equal_scale(&model);
    let gaps = model.gaps();
    let uniform_gap = gaps.iter().all(|g| (g - gaps[0]).abs() <= 1e-12 * gaps[0]).then_some(gaps[0]);
    let s_min = model.scales().iter().copied().fold(f64::INFINITY, f64::min);
    let mut ctx = LimitContext::new(model.weights().clone());
    ctx.sigma = sigma;
    ctx.gap = uniform_gap;
    ctx.spec = spec;

    let mut rows = Vec::new();
    for name in &c.limits {
        let strategy = limit_registry().get(name)?;
        if name == "inhomogeneous" && ctx.inhomogeneous.is_none() {
            let factors = model.scales().iter().map(|s| s / s_min).collect();
            ctx.inhomogeneous = Some(InhomogeneousSpec::from_means(model.means(), factors, s_min)?);
        }
        let lim = strategy.compute(&ctx)?;
        out.json(&format!("limit_{name}.json"), &lim)?;
        if name == "fisher" {
            for i in 0..fim.n() {
                for j in i..fim.n() {
                    if lim.get(i, j) != 0.0 && fim.get(i, j) != 0.0 {
                        let (a, b) = (fim.entry_log(i, j).log_magnitude, lim.entry_log(i, j).log_magnitude);
                        rows.push(RatioRow { limit: name.clone(), i, j, log_numeric: a, log_limit: b, log_ratio: a - b });
                    }
                }
            }
            continue;
        }
        for i in 0..wim.n() {
            let log_k = match (name.as_str(), &ctx.inhomogeneous) {
                ("inhomogeneous", Some(is)) => {
                    scaling_factor(ComponentFamily::Gaussian, is.sigma, is.reduced_gap, ScalingVariant::Inhomogeneous)?
                }
                _ => {
                    let s = sigma.context("the Wasserstein limits need equal component scales")?;
                    scaling_factor(model.family(), s, gaps[i], ScalingVariant::Homogeneous)?
                }
            }
            .log_magnitude;
            let a = wim.entry_log(i, i).log_magnitude;
            let b = lim.entry_log(i, i).log_magnitude + log_k;
            rows.push(RatioRow { limit: name.clone(), i, j: i, log_numeric: a, log_limit: b, log_ratio: a - b });
        }
    }
    if !rows.is_empty() {
        let mut csv = String::from("limit,i,j,log_numeric,log_limit,log_ratio\n");
        for r in &rows {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.limit,
                r.i,
                r.j,
                num(r.log_numeric),
                num(r.log_limit),
                num(r.log_ratio)
            ));
        }
        out.csv("ratios.csv", &csv)?;
        out.json("ratios.json", &rows)?;
        out.say("limit          i  j  log ratio");
        for r in &rows {
            out.say(format!("{:<14} {:<2} {:<2} {:+.6e}", r.limit, r.i, r.j, r.log_ratio));
        }
    }
    out.say(format!("wrote FIM and WIM for {} components", model.len()));
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    sigma: f64,
    log_numeric: f64,
    log_limit: f64,
    abs_log_error: f64,
}

fn two_component(c: &WimConfig, sigma: f64) -> Result<MixtureModel> {
    let p = SimplexPoint::new(c.weights.clone())?;
    let means = (0..p.len()).map(|i| i as f64 * c.gap).collect();
    Ok(MixtureModel::homogeneous(c.family, means, sigma, p)?)
}

fn sweep_mode(c: &WimConfig, out: &mut Output) -> Result<()> {
    let mut rows = Vec::new();
    for &s in &c.sweep_sigma {
        let model = two_component(c, s)?;
        let wim = wasserstein_matrix_numeric(&model, &c.quadrature)?;
        let lim = wasserstein_limit(model.weights());
        let log_k = scaling_factor(c.family, s, c.gap, ScalingVariant::Homogeneous)?.log_magnitude;
        // worst diagonal entry
        let (mut a, mut b, mut err) = (0.0, 0.0, -1.0);
        for i in 0..wim.n() {
            let x = wim.entry_log(i, i).log_magnitude;
            let y = lim.entry_log(i, i).log_magnitude + log_k;
            if (x - y).abs() > err {
                (a, b, err) = (x, y, (x - y).abs());
            }
        }
        rows.push(SweepRow { sigma: s, log_numeric: a, log_limit: b, abs_log_error: err });
    }
    let mut csv = String::from("sigma,log_numeric,log_limit,abs_log_error\n");
    out.say("sigma          |log ratio - log limit|");
    for r in &rows {
        csv.push_str(&format!("{},{},{},{}\n", num(r.sigma), num(r.log_numeric), num(r.log_limit), num(r.abs_log_error)));
        out.say(format!("{:<14} {:.6e}", r.sigma, r.abs_log_error));
    }
    let monotone = rows.windows(2).all(|w| (w[1].sigma < w[0].sigma) == (w[1].abs_log_error < w[0].abs_log_error));
    if !monotone {
        log::warn!("the σ sweep error is not monotone in σ");
    }
    out.csv("sweep.csv", &csv)?;
    out.json("sweep.json", &rows)?;
    let plot = LinePlot {
        title: "WIM diagonal against K(σ)·limit".into(),
        x_label: "σ".into(),
        y_label: "|log ratio|".into(),
        log_y: true,
        series: vec![Series::new("error", rows.iter().map(|r| (r.sigma, r.abs_log_error)).collect())],
    };
    out.svg("sweep.svg", &plot.render())?;
    Ok(())
}

fn second_order_mode(c: &WimConfig, out: &mut Output) -> Result<()> {
    let sigma = c.sigma.context("--second-order needs --sigma")?;
    let p = SimplexPoint::new(c.weights.clone())?;
    let first = wasserstein_limit(&p);
    let second: MetricMatrix = second_order_limit(&p, sigma, c.gap, &c.quadrature)?;
    out.json("second_order.json", &second)?;
    let mut csv = String::from("i,first_order,second_order\n");
    out.say(format!("second-order diagonal at σ = {sigma}, gap {}", c.gap));
    for i in 0..second.n() {
        csv.push_str(&format!("{i},{},{}\n", num(first.get(i, i)), num(second.get(i, i))));
        out.say(format!("{i}  {:.12e}  (first order {:.12e})", second.get(i, i), first.get(i, i)));
    }
    out.csv("second_order.csv", &csv)?;
    Ok(())
}
