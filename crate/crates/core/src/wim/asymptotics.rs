//! Asymptotic integrals and matching points behind the scaling limits.
//!
//! g(k) = ∫₀^∞ dy/(1 + y^a) and g₂(k) = ∫₀^∞ log²v/(1 + v^a) dv with
//! a = (k+1)/k are evaluated by quadrature after the substitution
//! y = e^u, with both tails summed as convergent exponential series.

use crate::error::{Error, Result};
use crate::mixtures::ComponentFamily;
use crate::quadrature::{integrate, integrate_log_scaled, QuadratureSpec};
use crate::special::{logaddexp, HALF_LN_2PI};

// Truncation of the u-line: e^{−TAIL} is the ratio of successive tail terms.
const TAIL: f64 = 30.0;

fn exponent(k: f64) -> Result<f64> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidArgument(format!("k must be positive, got {k}")));
    }
    Ok((k + 1.0) / k)
}

/// Σ (−1)ⁿ term(n), stopping once terms drop below 1e−18 of the first.
fn alternating<F: Fn(usize) -> f64>(term: F) -> f64 {
    let mut s = 0.0;
    let first = term(0).abs();
    for n in 0..200 {
        let t = term(n);
        s += if n % 2 == 0 { t } else { -t };
        if t.abs() <= 1e-18 * first {
            break;
        }
    }
    s
}

/// ∫ e^{u}/(1 + e^{au}) du over ℝ, i.e. g(k).
pub fn g_integral(k: f64, spec: &QuadratureSpec) -> Result<f64> {
    let a = exponent(k)?;
    let (lo, hi) = (-TAIL, TAIL / a);
    let core = integrate(|u| (u - logaddexp(0.0, a * u)).exp(), lo, hi, spec, &[0.0])?;
    // ∫_hi^∞ e^{u}Σ(−1)ⁿe^{−a(n+1)u} and ∫_{−∞}^{lo} e^{u}Σ(−1)ⁿe^{anu}
    let right = alternating(|n| {
        let c = a * (n + 1) as f64 - 1.0;
        (-c * hi).exp() / c
    });
    let left = alternating(|n| {
        let c = 1.0 + a * n as f64;
        (c * lo).exp() / c
    });
    Ok(core + right + left)
}

/// ∫ u² e^{u}/(1 + e^{au}) du over ℝ, i.e. g₂(k).
pub fn g2_integral(k: f64, spec: &QuadratureSpec) -> Result<f64> {
    let a = exponent(k)?;
    let (lo, hi) = (-TAIL - 10.0, (TAIL + 10.0) / a);
    let core = integrate(
        |u| u * u * (u - logaddexp(0.0, a * u)).exp(),
        lo,
        hi,
        spec,
        &[0.0],
    )?;
    // ∫_U^∞ u²e^{−cu} = e^{−cU}(U²/c + 2U/c² + 2/c³)
    let right = alternating(|n| {
        let c = a * (n + 1) as f64 - 1.0;
        (-c * hi).exp() * (hi * hi / c + 2.0 * hi / (c * c) + 2.0 / (c * c * c))
    });
    // ∫_{−∞}^L u²e^{cu} = e^{cL}(L²/c − 2L/c² + 2/c³)
    let left = alternating(|n| {
        let c = 1.0 + a * n as f64;
        (c * lo).exp() * (lo * lo / c - 2.0 * lo / (c * c) + 2.0 / (c * c * c))
    });
    Ok(core + right + left)
}

/// dg/dk at k = 1 by a Richardson-extrapolated central difference.
pub fn g_prime_at_1(spec: &QuadratureSpec) -> Result<f64> {
    g_prime_with_step(1e-5, spec)
}

/// The same difference quotient with an explicit step h.
pub fn g_prime_with_step(h: f64, spec: &QuadratureSpec) -> Result<f64> {
    // the difference quotient amplifies quadrature noise by 1/h
    let tight = spec.with_rel_tol(spec.rel_tol.min(1e-13));
    let central = |h: f64| -> Result<f64> {
        Ok((g_integral(1.0 + h, &tight)? - g_integral(1.0 - h, &tight)?) / (2.0 * h))
    };
    let (d1, d2) = (central(h)?, central(0.5 * h)?);
    Ok((4.0 * d2 - d1) / 3.0)
}

/// Matching point l ∈ (0, d): pᵢρ(l; σ) = pᵢ₊₁ρ(d − l; kσ).
///
/// Gaussian components are solved by safeguarded Newton iteration on the
/// exact condition; Laplace components have the closed form
/// l = d/(k+1) + (kσ/(k+1))·log(k pᵢ/pᵢ₊₁). Roots outside (0.05d, 0.95d)
/// are reported as [`Error::DegenerateMatching`].
pub fn matching_point(
    family: ComponentFamily,
    p_i: f64,
    p_next: f64,
    k: f64,
    sigma: f64,
    d: f64,
) -> Result<f64> {
    if !(p_i > 0.0 && p_next > 0.0 && k > 0.0 && sigma > 0.0 && d > 0.0) {
        return Err(Error::InvalidArgument(
            "matching point needs positive weights, k, σ and d".into(),
        ));
    }
    let l = match family {
        ComponentFamily::Laplace => {
            d / (k + 1.0) + k * sigma / (k + 1.0) * (k * p_i / p_next).ln()
        }
        ComponentFamily::Gaussian => gaussian_match(p_i, p_next, k, sigma, d)?,
    };
    if !(l > 0.05 * d && l < 0.95 * d) {
        return Err(Error::DegenerateMatching { l, d });
    }
    Ok(l)
}

fn gaussian_match(p_i: f64, p_next: f64, k: f64, sigma: f64, d: f64) -> Result<f64> {
    let s2 = sigma * sigma;
    let k2 = k * k;
    let c = (p_i / p_next).ln() + k.ln();
    // h(l) = log of the density ratio; strictly decreasing on [0, d]
    let h = |l: f64| c - l * l / (2.0 * s2) + (d - l) * (d - l) / (2.0 * k2 * s2);
    let dh = |l: f64| -l / s2 - (d - l) / (k2 * s2);
    let (mut lo, mut hi) = (0.0, d);
    if h(lo) <= 0.0 {
        return Err(Error::DegenerateMatching { l: 0.0, d });
    }
    if h(hi) >= 0.0 {
        return Err(Error::DegenerateMatching { l: d, d });
    }
    let mut l = d / (k + 1.0);
    for _ in 0..200 {
        let v = h(l);
        if v == 0.0 {
            break;
        }
        if v > 0.0 {
            lo = l;
        } else {
            hi = l;
        }
        let newton = l - v / dh(l);
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let moved = (next - l).abs();
        l = next;
        if moved <= 1e-16 * d || hi - lo <= 1e-15 * d {
            break;
        }
    }
    Ok(l)
}

/// Small-σ expansion l ≈ d/(k+1) + (kσ²/d)·log(k pᵢ/pᵢ₊₁), a cross-check
/// for the root finder.
pub fn matching_point_expansion(p_i: f64, p_next: f64, k: f64, sigma: f64, d: f64) -> f64 {
    d / (k + 1.0) + k * sigma * sigma / d * (k * p_i / p_next).ln()
}

/// ∫₀^d dx/(pᵢρ(x; σ) + pᵢ₊₁ρ(d − x; kσ)) divided by its Laplace-method
/// denominator: (√(2π)σ³/(pᵢl))e^{(l/σ)²/2} for Gaussians and
/// (2σ²/pᵢ)e^{l/σ} for Laplace components. Tends to g(k) as σ → 0.
pub fn delta2_asymptotic_ratio(
    family: ComponentFamily,
    p_i: f64,
    p_next: f64,
    k: f64,
    sigma: f64,
    d: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let l = matching_point(family, p_i, p_next, k, sigma, d)?;
    let kernel = family.kernel();
    let (lp_i, lp_n) = (p_i.ln(), p_next.ln());
    let (ls, lks) = (sigma.ln(), (k * sigma).ln());
    let log_int = integrate_log_scaled(
        |x| {
            let a = lp_i + kernel.log_pdf_std(x / sigma) - ls;
            let b = lp_n + kernel.log_pdf_std((d - x) / (k * sigma)) - lks;
            -logaddexp(a, b)
        },
        0.0,
        d,
        spec,
        &[l, 0.5 * d],
    )?;
    let log_den = match family {
        ComponentFamily::Gaussian => {
            HALF_LN_2PI + 3.0 * sigma.ln() - lp_i - l.ln() + 0.5 * (l / sigma).powi(2)
        }
        ComponentFamily::Laplace => std::f64::consts::LN_2 + 2.0 * sigma.ln() - lp_i + l / sigma,
    };
    Ok((log_int.log_magnitude - log_den).exp())
}

/// D(t) = ∫ du/(e^{−u²/2−tu} + e^{tu/k₁−(u/k₂)²/2}) − ∫ du/(e^{−ut} + e^{tu/k₁}).
///
/// The first integrand blows up for u → −∞, so both integrals run over the
/// window [−t, k₂²t/k₁] spanned by the maxima of its two exponents. The
/// difference is formed pointwise through expm1 of the exponent gap.
pub fn perturbation_lemma_check(k1: f64, k2: f64, t: f64, spec: &QuadratureSpec) -> Result<f64> {
    if t < 5.0 {
        return Err(Error::InvalidArgument(format!("perturbation check needs t ≥ 5, got {t}")));
    }
    if !(k1 > 0.0 && k2 > 0.0) {
        return Err(Error::InvalidArgument("k₁ and k₂ must be positive".into()));
    }
    let (lo, hi) = (-t, k2 * k2 * t / k1);
    integrate(
        |u| {
            let a = logaddexp(-0.5 * u * u - t * u, t * u / k1 - 0.5 * (u / k2).powi(2));
            let b = logaddexp(-u * t, t * u / k1);
            // factor out the smaller exponent so the product never meets inf·0
            if a < b {
                -(-a).exp() * (a - b).exp_m1()
            } else {
                (-b).exp() * (b - a).exp_m1()
            }
        },
        lo,
        hi,
        spec,
        &[0.0],
    )
}

/// D(t)·4t³/(1 + 1/k₂²), which tends to g₂(k₁).
pub fn perturbation_ratio(k1: f64, k2: f64, t: f64, spec: &QuadratureSpec) -> Result<f64> {
    Ok(perturbation_lemma_check(k1, k2, t, spec)? * 4.0 * t.powi(3) / (1.0 + 1.0 / (k2 * k2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::g_closed_form;
    use std::f64::consts::PI;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    /// g₂ oracle: π³/a³ · csc(πs)(csc²(πs) + cot²(πs)) at s = 1/a.
    fn g2_closed(k: f64) -> f64 {
        let a = (k + 1.0) / k;
        let x = PI / a;
        let (csc, cot) = (1.0 / x.sin(), x.cos() / x.sin());
        PI.powi(3) / a.powi(3) * csc * (csc * csc + cot * cot)
    }

    #[test]
    fn g_matches_closed_form() {
        for k in [0.5, 1.0, 2.0, 3.0, 10.0] {
            let g = g_integral(k, &spec()).unwrap();
            assert!((g - g_closed_form(k)).abs() < 1e-10, "k={k}: {g}");
        }
        assert!((g_integral(1.0, &spec()).unwrap() - PI / 2.0).abs() < 1e-10);
        assert!((g_integral(3.0, &spec()).unwrap() - 3.332_162_203_618_774).abs() < 1e-9);
    }

    #[test]
    fn g_tends_to_one_for_small_k() {
        let g = g_integral(1e-3, &spec()).unwrap();
        assert!((g - 1.0).abs() < 2e-3, "{g}");
        assert!(g > 1.0);
    }

    #[test]
    fn g2_values() {
        let g = g2_integral(1.0, &spec()).unwrap();
        assert!((g - PI.powi(3) / 8.0).abs() < 1e-8);
        for k in [0.5, 2.0, 3.0] {
            assert!((g2_integral(k, &spec()).unwrap() / g2_closed(k) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn g2_reflection_oracle() {
        // v → 1/v folds (1, ∞) onto (0, 1): ∫₀¹ log²w·(1 + w^{a−2})/(1 + w^a) dw
        for k in [1.0, 0.5] {
            let a = (k + 1.0) / k;
            let direct = integrate(
                |w: f64| {
                    let l = w.ln();
                    l * l * (1.0 + w.powf(a - 2.0)) / (1.0 + w.powf(a))
                },
                0.0,
                1.0,
                &spec(),
                &[1e-12, 1e-8, 1e-4],
            )
            .unwrap();
            let g2 = g2_integral(k, &spec()).unwrap();
            assert!((direct - g2).abs() < 1e-9, "k={k}: {direct} vs {g2}");
        }
    }

    #[test]
    fn g2_self_consistent_across_tolerances() {
        let a = g2_integral(3.0, &spec()).unwrap();
        let b = g2_integral(3.0, &spec().with_rel_tol(1e-13)).unwrap();
        assert!((a - b).abs() < 1e-9 * a);
    }

    #[test]
    fn g_prime_is_quarter_pi() {
        let v = g_prime_at_1(&spec()).unwrap();
        assert!((v - PI / 4.0).abs() < 1e-7, "{v}");
        let coarse = g_prime_with_step(1e-4, &spec()).unwrap();
        assert!((coarse - v).abs() < 1e-8);
        assert!(g_integral(1.001, &spec()).unwrap() > g_integral(0.999, &spec()).unwrap());
    }

    #[test]
    fn matching_point_examples() {
        let l = matching_point(ComponentFamily::Gaussian, 0.4, 0.4, 1.0, 0.1, 2.0).unwrap();
        assert!((l - 1.0).abs() < 1e-14);
        let l = matching_point(ComponentFamily::Laplace, 0.7, 0.3, 1.0, 0.1, 1.0).unwrap();
        assert!((l - (0.5 + 0.05 * (7.0f64 / 3.0).ln())).abs() < 1e-15);
        assert!((l - 0.54236).abs() < 1e-5);
        let l = matching_point(ComponentFamily::Gaussian, 0.7, 0.3, 1.0, 0.05, 1.0).unwrap();
        let e = matching_point_expansion(0.7, 0.3, 1.0, 0.05, 1.0);
        assert!((e - (0.5 + 0.0025 * (7.0f64 / 3.0).ln())).abs() < 1e-15);
        assert!((l - e).abs() < 1e-4);
    }

    #[test]
    fn matching_point_solves_condition_unequal_scales() {
        let (pi, pn, k, s, d) = (0.3, 0.6, 3.0, 0.08, 2.0);
        let l = matching_point(ComponentFamily::Gaussian, pi, pn, k, s, d).unwrap();
        let lhs = pi * (-0.5 * (l / s).powi(2)).exp() / s;
        let rhs = pn * (-0.5 * ((d - l) / (k * s)).powi(2)).exp() / (k * s);
        assert!((lhs / rhs - 1.0).abs() < 1e-10);
    }

    #[test]
    fn degenerate_matching() {
        let r = matching_point(ComponentFamily::Gaussian, 0.999, 0.001, 1.0, 0.4, 1.0);
        assert!(matches!(r, Err(Error::DegenerateMatching { .. })));
        let r = matching_point(ComponentFamily::Laplace, 0.999, 0.001, 1.0, 0.2, 1.0);
        assert!(matches!(r, Err(Error::DegenerateMatching { .. })));
    }

    #[test]
    fn delta2_gaussian_converges_to_g1() {
        let s = spec();
        let r05 = delta2_asymptotic_ratio(ComponentFamily::Gaussian, 0.5, 0.5, 1.0, 0.05, 1.0, &s).unwrap();
        let r03 = delta2_asymptotic_ratio(ComponentFamily::Gaussian, 0.5, 0.5, 1.0, 0.03, 1.0, &s).unwrap();
        assert!((r05 / (PI / 2.0) - 1.0).abs() < 0.02, "{r05}");
        assert!((r03 / (PI / 2.0) - 1.0).abs() < 0.01, "{r03}");
        assert!((r03 - PI / 2.0).abs() < (r05 - PI / 2.0).abs());
    }

    #[test]
    fn delta2_laplace_and_k3() {
        let s = spec();
        let r = delta2_asymptotic_ratio(ComponentFamily::Laplace, 0.5, 0.5, 1.0, 0.02, 1.0, &s).unwrap();
        assert!((r / (PI / 2.0) - 1.0).abs() < 0.01, "{r}");
        let g3 = g_closed_form(3.0);
        let errs: Vec<f64> = [0.06, 0.04, 0.02]
            .iter()
            .map(|&sig| {
                let r = delta2_asymptotic_ratio(ComponentFamily::Gaussian, 0.5, 0.5, 3.0, sig, 1.0, &s).unwrap();
                (r / g3 - 1.0).abs()
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
        assert!(errs[2] < 0.02, "{errs:?}");
    }

    #[test]
    fn perturbation_lemma_levels() {
        let s = spec();
        let target = PI.powi(3) / 8.0;
        let r20 = perturbation_ratio(1.0, 1.0, 20.0, &s).unwrap();
        let r40 = perturbation_ratio(1.0, 1.0, 40.0, &s).unwrap();
        assert!((r20 / target - 1.0).abs() < 0.06);
        assert!((r40 / target - 1.0).abs() < 0.03);
        assert!(perturbation_lemma_check(1.0, 1.0, 4.0, &s).is_err());
    }
}
