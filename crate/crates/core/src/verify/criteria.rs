use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CheckSet, Criterion};
use crate::error::Result;
use crate::flows::{
    integrate_extended_flow, integrate_flow, potential_registry, EnergyFunctional, ExtendedFlowState,
    IntegratorSpec, Method,
};
use crate::mixtures::{ComponentFamily, MixtureModel, SimplexPoint};
use crate::pde::{
    error_report, gaussian_density_1d, gaussian_density_2d, heat1d_rhs, heat2d_columnwise, heat2d_rhs,
    heat2d_rowwise, reference_trajectory, run_scheme, Field, Grid1D, Grid2D, Heat1D, Heat2D, HeatOperator,
    DEFAULT_STRIDE,
};
use crate::registry::Named;
use crate::wim::{
    diagonal_sandwich, extended_numeric, fisher_limit, fisher_matrix_numeric, g2_integral, g_integral,
    g_prime_at_1, gap_integral, off_diagonal_bound, perturbation_ratio, scaling_factor,
    second_order_coefficient, wasserstein_matrix_numeric, wig_relation_check, ScalingVariant,
};

/// Extra ln K added when the exponent of K(σ) is multiplied by `factor`.
pub fn k_exponent_shift(family: ComponentFamily, sigma: f64, d: f64, factor: f64) -> f64 {
    let exponent = match family {
        ComponentFamily::Gaussian => d * d / (8.0 * sigma * sigma),
        ComponentFamily::Laplace => d / (2.0 * sigma),
    };
    (factor - 1.0) * exponent
}

fn log_k(c: &CheckSet<'_>, family: ComponentFamily, sigma: f64, d: f64, variant: ScalingVariant) -> Result<f64> {
    let base = scaling_factor(family, sigma, d, variant)?.log_magnitude;
    let exponent = match variant {
        ScalingVariant::Homogeneous => k_exponent_shift(family, sigma, d, c.options().k_exponent_factor),
        ScalingVariant::Inhomogeneous => (c.options().k_exponent_factor - 1.0) * d * d / (2.0 * sigma * sigma),
    };
    Ok(base + exponent)
}

fn two_component(family: ComponentFamily, sigma: f64, p: &[f64]) -> Result<MixtureModel> {
    MixtureModel::homogeneous(family, vec![0.0, 1.0], sigma, SimplexPoint::new(p.to_vec())?)
}

fn three_component(sigma: f64) -> Result<MixtureModel> {
    MixtureModel::homogeneous(
        ComponentFamily::Gaussian,
        vec![0.0, 1.0, 2.0],
        sigma,
        SimplexPoint::new(vec![0.2, 0.5, 0.3])?,
    )
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

macro_rules! named {
    ($t:ident, $name:literal) => {
        pub struct $t;
        impl Named for $t {
            fn name(&self) -> &'static str {
                $name
            }
        }
    };
}

named!(AsymptoticConstants, "asymptotic-constants");
named!(GaussianLimit, "gaussian-limit");
named!(LaplaceLimit, "laplace-limit");
named!(FisherLimit, "fisher-limit");
named!(OffDiagonalBound, "off-diagonal-bound");
named!(InhomogeneousExample, "inhomogeneous-example");
named!(WigIdentity, "wig-identity");
named!(ExtendedMetricBlocks, "extended-metric");
named!(PerturbationLemma, "perturbation-lemma");
named!(FlowConservation, "flow-conservation");
named!(Heat1DExperiment, "heat-1d");
named!(Heat2DExperiment, "heat-2d");
named!(ExtendedTransport, "extended-transport");

pub(super) fn all() -> Vec<Arc<dyn Criterion>> {
    vec![
        Arc::new(AsymptoticConstants),
        Arc::new(GaussianLimit),
        Arc::new(LaplaceLimit),
        Arc::new(FisherLimit),
        Arc::new(OffDiagonalBound),
        Arc::new(InhomogeneousExample),
        Arc::new(WigIdentity),
        Arc::new(ExtendedMetricBlocks),
        Arc::new(PerturbationLemma),
        Arc::new(FlowConservation),
        Arc::new(Heat1DExperiment),
        Arc::new(Heat2DExperiment),
        Arc::new(ExtendedTransport),
    ]
}

impl Criterion for AsymptoticConstants {
    fn id(&self) -> u32 {
        1
    }
    fn title(&self) -> &'static str {
        "g(1), g2(1) and g'(1) against their closed forms"
    }
    fn budget_secs(&self) -> f64 {
        1.0
    }
    fn evaluate(&self, c: &mut CheckSet<'_>) -> Result<()> {
        let spec = c.options().quadrature;
        let g1 = g_integral(1.0, &spec)?;
        let g2 = g2_integral(1.0, &spec)?;
        let gp = g_prime_at_1(&spec)?;
        c.le("g_at_1", (g1 - PI / 2.0).abs(), 1e-10);
        c.le("g2_at_1", (g2 - PI.powi(3) / 8.0).abs(), 1e-8);
        c.le("g_prime_at_1", (gp - PI / 4.0).abs(), 1e-7);
        Ok(())
    }
}

/// exp(log G₁₁ − log K)·√(p₁p₂) − 1 for a two-component model.
fn normalized_residual(c: &CheckSet<'_>, family: ComponentFamily, sigma: f64, p: &[f64]) -> Result<f64> {
    let m = two_component(family, sigma, p)?;
    let g = wasserstein_matrix_numeric(&m, &c.options().quadrature)?;
    let lk = log_k(c, family, sigma, 1.0, ScalingVariant::Homogeneous)?;
    Ok((g.entry_log(0, 0).log_magnitude - lk).exp() * (p[0] * p[1]).sqrt() - 1.0)
}

impl Criterion for GaussianLimit {
    fn id(&self) -> u32 {
        2
    }
    fn title(&self) -> &'static str {
        "homogeneous Gaussian WIM over K(σ) converges with the second-order rate"
    }
    fn budget_secs(&self) -> f64 {
        30.0
    }
    fn evaluate(&self, c: &mut CheckSet<'_>) -> Result<()> {
        let p = [0.3f64, 0.7];
        let sigmas = [0.1, 0.07, 0.05, 0.03];
        let gp = g_prime_at_1(&c.options().quadrature)?;
        let coeff = second_order_coefficient(p[0], p[1], gp);
        let l = (p[0] / p[1]).ln();
        let rederived = PI * PI / 2.0 + 0.5 * l * l;
        let mut res = Vec::new();
        for &s in &sigmas {
            let r = normalized_residual(c, ComponentFamily::Gaussian, s, &p)?;
            c.diag(&format!("residual_sigma_{s}"), r);
            c.diag(&format!("residual_over_prediction_sigma_{s}"), r / (coeff * s * s));
            c.diag(&format!("residual_over_rederived_sigma_{s}"), r / (rederived * s * s));
            res.push(r);
        }
        let monotone = res.windows(2).all(|w| w[1].abs() < w[0].abs()) && res.iter().all(|r| *r > 0.0);
        c.holds("monotone_convergence", monotone);
        let worst = sigmas
            .iter()
            .zip(&res)
            .map(|(s, r)| r.abs() / (coeff * s * s) - 1.0)
            .fold(f64::NEG_INFINITY, f64::max);
        c.le("residual_within_prediction_plus_50pct", worst, 0.5);
        c.le("second_order_at_0.05", rel(res[2], coeff * 0.05 * 0.05), 0.1);
        c.diag("second_order_coefficient", coeff);
        c.diag("rederived_coefficient", rederived);
        Ok(())
    }
}

impl Criterion for LaplaceLimit {
    fn id(&self) -> u32 {
        3
    }
    fn title(&self) -> &'static str {
        "Laplace mixture WIM over πσ²e^{d/2σ} converges to 1/√(p1p2)"
    }
    fn budget_secs(&self) -> f64 {
        10.0
    }
    fn evaluate(&self, c: &mut CheckSet<'_>) -> Result<()> {
        let p = [0.3, 0.7];
        let mut res = Vec::new();
        for s in [0.1, 0.05, 0.02] {
            let r = normalized_residual(c, ComponentFamily::Laplace, s, &p)?;
            c.diag(&format!("residual_sigma_{s}"), r);
            res.push(r);
        }
        c.holds("residual_decreases", res[2].abs() < res[0].abs());
        c.le("residual_at_0.02", res[2].abs(), 0.01);
        Ok(())
    }
}

impl Criterion for FisherLimit {
    fn id(&self) -> u32 {
        4
    }
    fn title(&self) -> &'static str {
        "numeric FIM at σ = 0.01 matches the tridiagonal limit"
    }
    fn budget_secs(&self) -> f64 {
        10.0
    }
    fn evaluate(&self, c: &mut CheckSet<'_>) -> Result<()> {
        let m = three_component(0.01)?;
        let f = fisher_matrix_numeric(&m, &c.options().quadrature)?;
        let lim = fisher_limit(m.weights());
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let e = rel(f.get(i, j), lim.get(i, j));
                c.diag(&format!("entry_{i}{j}"), f.get(i, j));
                worst = worst.max(e);
            }
        }
        c.le("max_relative_entry_error", worst, 1e-2);
        Ok(())
    }
}

impl Criterion for OffDiagonalBound {
    fn id(&self) -> u32 {
        5
    }
    fn title(&self) -> &'static str {
        "off-diagonal bound and diagonal sandwich at finite σ"
    }
    fn budget_secs(&self) -> f64 {
        30.0
    }
    fn evaluate(&self, c: &mut CheckSet<'_>) -> Result<()> {
        let spec = c.options().quadrature;
        for sigma in [0.05, 0.1] {
            let m = three_component(sigma)?;
            let p = m.weights().clone();
            let g = wasserstein_matrix_numeric(&m, &spec)?;
            let off = g.entry_log(0, 1).to_f64().abs();
            let bound = off_diagonal_bound(sigma, 1.0, 0.2);
            c.le(&format!("off_diagonal_over_bound_sigma_{sigma}"), off / bound, 1.0);
            for i in 0..2 {
                let ii = gap_integral(&m, i, &spec)?;
                let (lo, hi) = diagonal_sandwich(sigma, 1.0, p[i], p[i + 1], ii);
                let gii = g.entry_log(i, i).log_magnitude;
                // log-space margins: positive means outside the sandwich
                c.le(&format!("below_lower_sigma_{sigma}_gap_{i}"), lo.log_magnitude - gii, 0.0);
                c.le(&format!("above_upper_sigma_{sigma}_gap_{i}"), gii - hi.log_magnitude, 0.0);
            }
        }
        Ok(())
    }
}

impl Criterion for InhomogeneousExample {
    fn id(&self) -> u32 {
        6
    }
    fn title(&self) -> &'static str {
        "inhomogeneous three-component example at σ = 0.04"
    }
    fn budget_secs(&self) -> f64 {
        30.0
    }
    fn evaluate(&self, c: &mut CheckSet<'_>) -> Result<()> {
        let sigma = 0.04;
        let p = SimplexPoint::new(vec![0.3, 0.4, 0.3])?;
        let s = [1.0, 1.0, 3.0];
        let m = MixtureModel::new(
            ComponentFamily::Gaussian,
            vec![-1.0, 0.0, 2.0],
            s.iter().map(|v| v * sigma).collect(),
            p.clone(),
        )?;
        let g = wasserstein_matrix_numeric(&m, &c.options().quadrature)?;
        // reduced gap 1/2: K = √(2π)σ³/(1/2)·e^{1/8σ²}
        let lk = log_k(c, ComponentFamily::Gaussian, sigma, 0.5, ScalingVariant::Inhomogeneous)?;
        let g3 = g_integral(3.0, &c.options().quadrature)?;
        let expected = [
            PI / (2.0 * (p[0] * p[1]).sqrt()),
            3f64.powf(0.75) * g3 / (p[1].powf(0.25) * p[2].powf(0.75)),
        ];
        for i in 0..2 {
            let v = (g.entry_log(i, i).log_magnitude - lk).exp();
            c.diag(&format!("diag_{i}_over_k"), v);
            c.le(&format!("diag_{i}_relative_error"), rel(v, expected[i]), 0.05);
        }
        c.diag("off_diag_over_k", g.entry_log(0, 1).scale_log(-lk).to_f64());
        Ok(())
    }
}

impl Criterion for WigIdentity {
    fn id(&self) -> u32 {
        7
    }
    fn title(&self) -> &'static str {
        "G_F = Σ G_W Σᵀ by quadrature"
    }
    fn budget_secs(&self) -> f64 {
        30.0
    }
    fn evaluate(&self, c: &mut CheckSet<'_>) -> Result<()> {
        let spec = c.options().quadrature;
        for sigma in [0.05, 0.2, 1.0] {
            let m2 = two_component(ComponentFamily::Gaussian, sigma, &[0.4, 0.6])?;
            c.le(&format!("n2_sigma_{sigma}"), wig_relation_check(&m2, &spec)?, 1e-6);
            let m3 = three_component(sigma)?;
            c.le(&format!("n3_sigma_{sigma}"), wig_relation_check(&m3, &spec)?, 1e-6);
        }
        Ok(())
    }
}

impl Criterion for ExtendedMetricBlocks {
    fn id(&self) -> u32 {
        8
    }
    fn title(&self) -> &'static str {
        "extended metric blocks at σ = 0.02"
    }
    fn budget_secs(&self) -> f64 {
        60.0
    }
    fn evaluate(&self, c: &mut CheckSet<'_>) -> Result<()> {
        let m = three_component(0.02)?;
        let e = extended_numeric(&m, &c.options().quadrature)?;
        let p = m.weights();
        let mm = DMatrix::from_fn(3, 3, |i, j| if i == j { p[i] } else { 0.0 });
        c.le("mu_mu_minus_diag_p", (&e.mu_mu - mm).abs().max(), 1e-3);
        let mut band: f64 = 0.0;
        let mut off: f64 = 0.0;
        for i in 0..2 {
            for j in 0..3 {
                let v = e.theta_mu[(i, j)];
                if j == i || j == i + 1 {
                    band = band.max(rel(v, 0.5));
                } else {
                    off = off.max(v.abs());
                }
            }
        }
        c.le("theta_mu_band_relative", band, 1e-2);
        c.le("theta_mu_off_band", off, 1e-2 * 0.5);
        let r = e.rescaled();
        let cross = r.view((0, 2), (2, 3)).abs().max();
        c.le("rescaled_cross_block", cross, 1e-12);
        c.diag("log_k", e.k.log_magnitude);
        Ok(())
    }
}

impl Criterion for PerturbationLemma {
    fn id(&self) -> u32 {
        9
    }
    fn title(&self) -> &'static str {
        "perturbation integral D(t)·4t³/(1+1/k2²) approaches g2(1)"
    }
    fn budget_secs(&self) -> f64 {
        10.0
    }
    fn evaluate(&self, c: &mut CheckSet<'_>) -> Result<()> {
        let spec = c.options().quadrature;
        let target = g2_integral(1.0, &spec)?;
        let d20 = rel(perturbation_ratio(1.0, 1.0, 20.0, &spec)?, target);
        let d40 = rel(perturbation_ratio(1.0, 1.0, 40.0, &spec)?, target);
        c.le("deviation_t20", d20, 0.06);
        c.le("deviation_t40", d40, 0.03);
        let ratio = d20 / d40;
        c.diag("deviation_ratio", ratio);
        c.le("deviation_ratio_distance_from_2", (ratio - 2.0).abs(), 0.5);
        Ok(())
    }
}

impl Criterion for FlowConservation {
    fn id(&self) -> u32 {
        10
    }
    fn title(&self) -> &'static str {
        "mass conservation of all energy flows and entropy equilibrium"
    }
    fn budget_secs(&self) -> f64 {
        30.0
    }
    fn evaluate(&self, c: &mut CheckSet<'_>) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(c.options().seed);
        let steps = 10_000.0;
        let mut worst_drift: f64 = 0.0;
        let mut worst_uniform: f64 = 0.0;
        for n in [2usize, 3, 5, 10] {
            let raw: Vec<f64> = (0..n).map(|_| 1.0 + rng.random::<f64>()).collect();
            let p0 = SimplexPoint::from_unnormalized(&raw)?;
            let nodes: Vec<f64> = (0..n).map(|_| 0.05 * rng.random::<f64>()).collect();
            let mut w = DMatrix::<f64>::identity(n, n);
            for i in 0..n {
                for j in 0..i {
                    let e = 0.1 * (rng.random::<f64>() - 0.5);
                    w[(i, j)] = e;
                    w[(j, i)] = e;
                }
            }
            let runs = [
                (EnergyFunctional::entropy(), 0.05),
                (EnergyFunctional::potential(nodes)?, 1e-3),
                (EnergyFunctional::interaction(w)?, 0.01),
            ];
            for (e, dt) in runs {
                let spec = IntegratorSpec::new(Method::ForwardEuler, dt);
                let traj = integrate_flow(&e, &p0, &spec, steps * dt)?;
                let m0: f64 = p0.as_slice().iter().sum();
                let drift = traj
                    .iter()
                    .map(|s| (s.p.as_slice().iter().sum::<f64>() - m0).abs())
                    .fold(0.0, f64::max);
                worst_drift = worst_drift.max(drift);
                if e.kind() == "internal" {
                    let dev = traj
                        .last()
                        .expect("trajectory is non-empty")
                        .p
                        .as_slice()
                        .iter()
                        .map(|v| (v - 1.0 / n as f64).abs())
                        .fold(0.0, f64::max);
                    c.diag(&format!("entropy_uniform_deviation_n{n}"), dev);
                    worst_uniform = worst_uniform.max(dev);
                }
            }
        }
        c.le("max_mass_drift", worst_drift, 1e-12);
        c.le("entropy_distance_to_uniform", worst_uniform, 1e-6);
        Ok(())
    }
}

/// Least-squares slope of log err against log h.
fn log_log_slope(h: &[f64], err: &[f64]) -> f64 {
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

/// Max deviation of heat1d_rhs/Δx from ρ″ for ρ = 2 + cos(2πx/10) on
/// [−5, 5).
pub(crate) fn heat1d_consistency_error(dx: f64) -> Result<f64> {
    let g = Grid1D::with_spacing(-5.0, 5.0, dx)?;
    let k = 2.0 * PI / 10.0;
    let f = Field::from_density_1d(&g, |x| 2.0 + (k * x).cos())?;
    let r = heat1d_rhs(&f, &g)?;
    Ok((0..g.n)
        .map(|i| (r[i] / g.dx() + k * k * (k * g.x(i)).cos()).abs())
        .fold(0.0, f64::max))
}

fn scheme_vs_reference(c: &mut CheckSet<'_>, op: &dyn HeatOperator, f0: &Field) -> Result<f64> {
    let spec = IntegratorSpec::new(Method::ForwardEuler, 1e-3);
    let traj = run_scheme(op, f0, &spec, 1000, DEFAULT_STRIDE)?;
    let reference = reference_trajectory(op, f0, 1e-3, &traj.times)?;
    let report = error_report(&traj, &reference)?;
    let drift = traj
        .fields
        .iter()
        .map(|f| (f.mass() - f0.mass()).abs())
        .fold(0.0, f64::max);
    c.diag("final_time", *traj.times.last().expect("non-empty"));
    c.le("mass_drift", drift, 1e-12);
    Ok(report.worst_relative())
}

impl Criterion for Heat1DExperiment {
    fn id(&self) -> u32 {
        11
    }
    fn title(&self) -> &'static str {
        "1D parametric heat scheme against Crank–Nicolson, and its consistency order"
    }
    fn budget_secs(&self) -> f64 {
        60.0
    }
    fn evaluate(&self, c: &mut CheckSet<'_>) -> Result<()> {
        let g = Grid1D::with_spacing(-5.0, 5.0, 0.1)?;
        let f0 = Field::from_density_1d(&g, gaussian_density_1d)?;
        let dev = scheme_vs_reference(c, &Heat1D(g), &f0)?;
        c.le("max_deviation_over_peak", dev, 5e-3);
        let h = [0.2, 0.1, 0.05, 0.025];
        let err = h.iter().map(|&dx| heat1d_consistency_error(dx)).collect::<Result<Vec<_>>>()?;
        let slope = log_log_slope(&h, &err);
        c.diag("consistency_slope", slope);
        c.le("consistency_order_distance_from_2", (slope - 2.0).abs(), 0.2);
        Ok(())
    }
}

impl Criterion for Heat2DExperiment {
    fn id(&self) -> u32 {
        12
    }
    fn title(&self) -> &'static str {
        "2D parametric heat scheme against split Crank–Nicolson, and separability"
    }
    fn budget_secs(&self) -> f64 {
        300.0
    }
    fn evaluate(&self, c: &mut CheckSet<'_>) -> Result<()> {
        let g = Grid2D::new(Grid1D::with_spacing(-5.0, 5.0, 0.1)?, Grid1D::with_spacing(-5.0, 5.0, 0.1)?)?;
        let f0 = Field::from_density_2d(&g, gaussian_density_2d)?;
        let dev = scheme_vs_reference(c, &Heat2D(g), &f0)?;
        c.le("max_deviation_over_peak", dev, 5e-3);
        let full = heat2d_rhs(&f0, &g)?;
        let a = heat2d_columnwise(&f0, &g)?;
        let b = heat2d_rowwise(&f0, &g)?;
        let scale = full.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let gap = (0..full.len()).map(|i| (full[i] - (a[i] + b[i])).abs()).fold(0.0, f64::max);
        c.le("separability_relative", gap / scale, 1e-14);
        Ok(())
    }
}

impl Criterion for ExtendedTransport {
    fn id(&self) -> u32 {
        13
    }
    fn title(&self) -> &'static str {
        "extended flow of V = sin x: first two means merge"
    }
    fn budget_secs(&self) -> f64 {
        30.0
    }
    fn evaluate(&self, c: &mut CheckSet<'_>) -> Result<()> {
        let e = EnergyFunctional::smooth_potential(potential_registry().get("sin")?);
        let s0 = ExtendedFlowState::transport_example();
        let spec = IntegratorSpec::new(Method::ForwardEuler, 0.01);
        let traj = integrate_extended_flow(&s0, &e, &spec, 50.0)?;
        let last = traj.states.last().expect("non-empty");
        let merged_first_two = traj.merges.len() == 1 && traj.merges[0].index == 0;
        c.holds("first_two_means_merge_only", merged_first_two);
        if let Some(m) = traj.merges.first() {
            c.diag("merge_time", m.t);
        }
        let targets = [-PI / 2.0, 1.5 * PI];
        let dist = if last.mu.len() == 2 {
            last.mu.iter().zip(targets).map(|(m, t)| (m - t).abs()).fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        c.le("surviving_locations", dist, 1e-2);
        Ok(())
    }
}
