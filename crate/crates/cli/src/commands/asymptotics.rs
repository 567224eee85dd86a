use anyhow::Result;
use clap::Args;
use mixgeo::special::g_closed_form;
use mixgeo::wim::asymptotics::matching_point_expansion;
use mixgeo::wim::{delta2_asymptotic_ratio, g2_integral, g_integral, matching_point, perturbation_lemma_check, perturbation_ratio};
use serde::Serialize;

use crate::config::AsymptoticsConfig;
use crate::output::{row, Output};
use crate::svg::{LinePlot, Series};

#[derive(Debug, Args)]
pub struct AsymptoticsArgs {
    /// Scale ratios k.
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<f64>>,
    /// σ values for the matching-point and Δ₂ tables.
    #[arg(long, value_delimiter = ',')]
    pub sigma: Option<Vec<f64>>,
    #[arg(long)]
    pub gap: Option<f64>,
    #[arg(long)]
    pub family: Option<String>,
    /// t values for the perturbation table.
    #[arg(long, value_delimiter = ',')]
    pub t: Option<Vec<f64>>,
}

impl AsymptoticsArgs {
    pub fn apply(self, c: &mut AsymptoticsConfig) -> Result<()> {
        if let Some(v) = self.k {
            c.k = v;
        }
        if let Some(v) = self.sigma {
            c.sigma = v;
        }
        if let Some(v) = self.gap {
            c.gap = v;
        }
        if let Some(v) = self.family {
            c.family = v.parse()?;
        }
        if let Some(v) = self.t {
            c.perturbation_t = v;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct GRow {
    k: f64,
    g: f64,
    g_closed_form: f64,
    g2: f64,
}

#[derive(Serialize)]
struct MatchingRow {
    k: f64,
    sigma: f64,
    l: f64,
    expansion: f64,
}

#[derive(Serialize)]
struct Delta2Row {
    k: f64,
    sigma: f64,
    ratio: f64,
    g: f64,
    relative_gap: f64,
}

#[derive(Serialize)]
struct PerturbationRow {
    k1: f64,
    k2: f64,
    t: f64,
    value: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct Tables {
    g: Vec<GRow>,
    matching: Vec<MatchingRow>,
    delta2: Vec<Delta2Row>,
    perturbation: Vec<PerturbationRow>,
}

pub fn run(c: &AsymptoticsConfig, out: &mut Output) -> Result<()> {
    let spec = c.quadrature;
    spec.validate()?;
    let [pi, pn] = c.weights;

    let mut g = Vec::new();
    for &k in &c.k {
        g.push(GRow {
            k,
            g: g_integral(k, &spec)?,
            g_closed_form: g_closed_form(k),
            g2: g2_integral(k, &spec)?,
        });
    }
    let mut matching = Vec::new();
    let mut delta2 = Vec::new();
    for &k in &c.k {
        let gk = g_integral(k, &spec)?;
        for &s in &c.sigma {
            matching.push(MatchingRow {
                k,
                sigma: s,
                l: matching_point(c.family, pi, pn, k, s, c.gap)?,
                expansion: matching_point_expansion(pi, pn, k, s, c.gap),
            });
            let ratio = delta2_asymptotic_ratio(c.family, pi, pn, k, s, c.gap, &spec)?;
            delta2.push(Delta2Row { k, sigma: s, ratio, g: gk, relative_gap: ratio / gk - 1.0 });
        }
    }
    let mut perturbation = Vec::new();
    for &[k1, k2] in &c.perturbation_k {
        for &t in &c.perturbation_t {
            perturbation.push(PerturbationRow {
                k1,
                k2,
                t,
                value: perturbation_lemma_check(k1, k2, t, &spec)?,
                ratio: perturbation_ratio(k1, k2, t, &spec)?,
            });
        }
    }

    out.say("k        g(k)                    g2(k)");
    for r in &g {
        out.say(format!("{:<8} {:.17e} {:.17e}", r.k, r.g, r.g2));
    }

    let mut csv = String::from("k,g,g_closed_form,g2\n");
    for r in &g {
        csv.push_str(&format!("{}\n", row(&[r.k, r.g, r.g_closed_form, r.g2])));
    }
    out.csv("g.csv", &csv)?;
    let mut csv = String::from("k,sigma,l,expansion\n");
    for r in &matching {
        csv.push_str(&format!("{}\n", row(&[r.k, r.sigma, r.l, r.expansion])));
    }
    out.csv("matching.csv", &csv)?;
    let mut csv = String::from("k,sigma,ratio,g,relative_gap\n");
    for r in &delta2 {
        csv.push_str(&format!("{}\n", row(&[r.k, r.sigma, r.ratio, r.g, r.relative_gap])));
    }
    out.csv("delta2.csv", &csv)?;
    let mut csv = String::from("k1,k2,t,value,ratio\n");
    for r in &perturbation {
        csv.push_str(&format!("{}\n", row(&[r.k1, r.k2, r.t, r.value, r.ratio])));
    }
    out.csv("perturbation.csv", &csv)?;

    let series = c
        .k
        .iter()
        .map(|&k| {
            Series::new(
                format!("k = {k}"),
                delta2.iter().filter(|r| r.k == k).map(|r| (r.sigma, r.relative_gap.abs())).collect(),
            )
        })
        .collect();
    let plot = LinePlot {
        title: "Δ₂ ratio against g(k)".into(),
        x_label: "σ".into(),
        y_label: "|ratio/g − 1|".into(),
        log_y: true,
        series,
    };
    out.svg("delta2.svg", &plot.render())?;
    out.json("asymptotics.json", &Tables { g, matching, delta2, perturbation })?;
    Ok(())
}
