use anyhow::{Context, Result};
use clap::Args;
use mixgeo::verify::{run_all, VerifyOptions};

use crate::config::VerifyConfig;
use crate::output::Output;

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Criterion id or name to run (repeatable); default all.
    #[arg(long = "criterion")]
    pub criteria: Vec<String>,
    /// Tolerance override `<id>.<check>=<value>` (repeatable).
    #[arg(long = "tolerance", value_parser = parse_override)]
    pub tolerances: Vec<(String, f64)>,
    /// Multiplies the exponent of every K(σ); values other than 1 are a
    /// mutation check and should make the suite fail.
    #[arg(long)]
    pub k_exponent_factor: Option<f64>,
}

fn parse_override(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected <id>.<check>=<value>, got '{s}'"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("bad tolerance '{v}': {e}"))?;
    if !k.contains('.') {
        return Err(format!("override key '{k}' must look like <id>.<check>"));
    }
    Ok((k.trim().to_string(), v))
}

impl VerifyArgs {
    pub fn apply(self, c: &mut VerifyConfig) {
        if !self.criteria.is_empty() {
            c.only = self.criteria;
        }
        c.overrides.extend(self.tolerances);
        if let Some(v) = self.k_exponent_factor {
            c.k_exponent_factor = v;
        }
    }
}

/// Runs the suite and writes `report.json`; returns whether everything passed.
pub fn run(c: &VerifyConfig, seed: Option<u64>, out: &mut Output) -> Result<bool> {
    let mut opts = VerifyOptions {
        overrides: c.overrides.clone(),
        k_exponent_factor: c.k_exponent_factor,
        ..VerifyOptions::default()
    };
    if let Some(s) = seed {
        opts.seed = s;
    }
    let report = run_all(&opts, &c.only).context("selecting criteria")?;
    for r in &report.criteria {
        out.say(r.summary());
    }
    out.json("report.json", &report)?;
    let failed = report.criteria.iter().filter(|r| !r.passed).count();
    out.say(format!(
        "{} of {} criteria passed",
        report.criteria.len() - failed,
        report.criteria.len()
    ));
    Ok(report.passed)
}
