//! Acceptance criteria as a registry of runnable checks.
//!
//! Each [`Criterion`] records named checks of the form `value ≤ tolerance`
//! plus free-form diagnostics. Tolerances can be overridden by key
//! (`"<id>.<check>"`); overridden checks are flagged in the report. The
//! `k_exponent_factor` option multiplies the exponent of every scaling
//! factor used by the criteria, which is how the suite is mutation-tested.

mod criteria;

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::quadrature::QuadratureSpec;
use crate::registry::{Named, Registry};

pub use criteria::k_exponent_shift;

/// Run-time knobs shared by all criteria.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyOptions {
    /// Replacement tolerances keyed by `"<id>.<check>"`.
    pub overrides: BTreeMap<String, f64>,
    /// Multiplies the exponent of K(σ); 1 leaves it intact.
    pub k_exponent_factor: f64,
    /// Seed for randomized initial data.
    pub seed: u64,
    pub quadrature: QuadratureSpec,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            overrides: BTreeMap::new(),
            k_exponent_factor: 1.0,
            seed: 20240607,
            quadrature: QuadratureSpec::default(),
        }
    }
}

/// One `value ≤ tolerance` comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub overridden: bool,
}

/// Collects the checks and diagnostics of one criterion run.
#[derive(Debug)]
pub struct CheckSet<'a> {
    id: u32,
    opts: &'a VerifyOptions,
    checks: Vec<Check>,
    diagnostics: BTreeMap<String, f64>,
}

impl<'a> CheckSet<'a> {
    fn new(id: u32, opts: &'a VerifyOptions) -> Self {
        CheckSet {
            id,
            opts,
            checks: Vec::new(),
            diagnostics: BTreeMap::new(),
        }
    }

    /// Records `value ≤ tolerance`; NaN never passes.
    pub fn le(&mut self, name: &str, value: f64, tolerance: f64) -> bool {
        let key = format!("{}.{name}", self.id);
        let (tolerance, overridden) = match self.opts.overrides.get(&key) {
            Some(&t) => (t, true),
            None => (tolerance, false),
        };
        let passed = value <= tolerance;
        self.checks.push(Check {
            name: name.to_string(),
            value,
            tolerance,
            passed,
            overridden,
        });
        passed
    }

    /// Records a yes/no condition as a 0/1 value against tolerance 0.
    pub fn holds(&mut self, name: &str, ok: bool) -> bool {
        self.le(name, if ok { 0.0 } else { 1.0 }, 0.0)
    }

    pub fn diag(&mut self, name: &str, value: f64) {
        self.diagnostics.insert(name.to_string(), value);
    }

    pub fn options(&self) -> &VerifyOptions {
        self.opts
    }
}

/// An acceptance criterion.
pub trait Criterion: Named + Send + Sync {
    fn id(&self) -> u32;
    fn title(&self) -> &'static str;
    fn budget_secs(&self) -> f64;
    fn evaluate(&self, checks: &mut CheckSet<'_>) -> Result<()>;
}

/// Outcome of one criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u32,
    pub name: String,
    pub title: String,
    pub passed: bool,
    pub elapsed_secs: f64,
    pub budget_secs: f64,
    pub checks: Vec<Check>,
    pub diagnostics: BTreeMap<String, f64>,
    pub error: Option<String>,
}

impl CriterionReport {
    /// `PASS`/`FAIL` line followed by indented check lines.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "{} criterion {:>2} {} ({:.2} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed_secs
        );
        for c in &self.checks {
            s.push_str(&format!(
                "\n    {} {} = {:.6e} (tol {:.3e}{})",
                if c.passed { "ok  " } else { "FAIL" },
                c.name,
                c.value,
                c.tolerance,
                if c.overridden { ", overridden" } else { "" }
            ));
        }
        for (k, v) in &self.diagnostics {
            s.push_str(&format!("\n    info {k} = {v:.9e}"));
        }
        if let Some(e) = &self.error {
            s.push_str(&format!("\n    error: {e}"));
        }
        s
    }
}

/// Full acceptance report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub options: VerifyOptions,
    pub criteria: Vec<CriterionReport>,
}

pub fn criteria_registry() -> &'static Registry<dyn Criterion> {
    static REG: OnceLock<Registry<dyn Criterion>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut r: Registry<dyn Criterion> = Registry::new("criterion");
        for c in criteria::all() {
            r.register(c);
        }
        r
    })
}

/// Criteria in id order.
pub fn criteria_in_order() -> Vec<Arc<dyn Criterion>> {
    let mut v: Vec<_> = criteria_registry().iter().cloned().collect();
    v.sort_by_key(|c| c.id());
    v
}

/// Looks a criterion up by id or name.
pub fn find_criterion(key: &str) -> Result<Arc<dyn Criterion>> {
    if let Ok(id) = key.parse::<u32>() {
        if let Some(c) = criteria_in_order().into_iter().find(|c| c.id() == id) {
            return Ok(c);
        }
    }
    criteria_registry().get(key)
}

/// Runs one criterion. Library errors become a failed report.
pub fn run_criterion(c: &dyn Criterion, opts: &VerifyOptions) -> CriterionReport {
    let start = Instant::now();
    let mut set = CheckSet::new(c.id(), opts);
    let result = c.evaluate(&mut set);
    let elapsed = start.elapsed().as_secs_f64();
    set.le("runtime_secs", elapsed, c.budget_secs());
    let error = result.err().map(|e| e.to_string());
    let passed = error.is_none() && set.checks.iter().all(|k| k.passed);
    CriterionReport {
        id: c.id(),
        name: c.name().to_string(),
        title: c.title().to_string(),
        passed,
        elapsed_secs: elapsed,
        budget_secs: c.budget_secs(),
        checks: set.checks,
        diagnostics: set.diagnostics,
        error,
    }
}

/// Runs the selected criteria (all when `only` is empty).
pub fn run_all(opts: &VerifyOptions, only: &[String]) -> Result<VerifyReport> {
    let selected = if only.is_empty() {
        criteria_in_order()
    } else {
        only.iter().map(|k| find_criterion(k)).collect::<Result<Vec<_>>>()?
    };
    let criteria: Vec<CriterionReport> = selected.iter().map(|c| run_criterion(c.as_ref(), opts)).collect();
    Ok(VerifyReport {
        passed: criteria.iter().all(|c| c.passed),
        options: opts.clone(),
        criteria,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirteen_criteria_with_unique_ids() {
        let v = criteria_in_order();
        assert_eq!(v.len(), 13);
        for (k, c) in v.iter().enumerate() {
            assert_eq!(c.id() as usize, k + 1);
        }
        assert_eq!(find_criterion("1").unwrap().name(), "asymptotic-constants");
        assert!(find_criterion("99").is_err());
    }

    #[test]
    fn overrides_are_flagged() {
        let mut opts = VerifyOptions::default();
        opts.overrides.insert("1.g_at_1".into(), 1e-30);
        let r = run_criterion(find_criterion("1").unwrap().as_ref(), &opts);
        let c = r.checks.iter().find(|c| c.name == "g_at_1").unwrap();
        assert!(c.overridden);
        assert_eq!(c.tolerance, 1e-30);
        assert!(r.checks.iter().filter(|c| c.name != "g_at_1").all(|c| !c.overridden));
    }

    #[test]
    fn nan_fails_a_check() {
        let opts = VerifyOptions::default();
        let mut s = CheckSet::new(0, &opts);
        assert!(!s.le("x", f64::NAN, 1.0));
        assert!(s.holds("y", true));
    }

    #[test]
    fn options_json() {
        let o: VerifyOptions = serde_json::from_str(r#"{"k_exponent_factor": 1.1}"#).unwrap();
        assert_eq!(o.seed, VerifyOptions::default().seed);
        assert!(serde_json::from_str::<VerifyOptions>(r#"{"k_factor": 1.1}"#).is_err());
    }
}
