//! Log-domain special functions shared by the density kernels and the
//! quadrature-based metrics.

use std::f64::consts::{LN_2, PI, SQRT_2};

/// ½·ln(2π)
pub const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// ln(e^a + e^b) without overflow.
pub fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + (-(a - b).abs()).exp().ln_1p()
}

/// ln Σ e^{xᵢ} with max shift. Empty input gives −∞.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m.is_infinite() {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// ln(1 − e^{−δ}) for δ ≥ 0, accurate at both ends.
pub fn log1mexp(delta: f64) -> f64 {
    if delta <= 0.0 {
        f64::NEG_INFINITY
    } else if delta < LN_2 {
        (-(-delta).exp_m1()).ln()
    } else {
        (-(-delta).exp()).ln_1p()
    }
}

/// Signed difference e^a − e^b returned as (sign, ln|·|).
pub fn log_diff_exp(a: f64, b: f64) -> (i8, f64) {
    if a == b {
        return (0, f64::NEG_INFINITY);
    }
    if a > b {
        (1, a + log1mexp(a - b))
    } else {
        (-1, b + log1mexp(b - a))
    }
}

/// ln Φ(z) for the standard normal CDF.
///
/// Uses `erfc` where it is representable and the asymptotic Mills-ratio
/// series further out in the left tail.
pub fn log_norm_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z > 0.0 {
        (-0.5 * libm::erfc(z / SQRT_2)).ln_1p()
    } else if z >= -20.0 {
        (0.5 * libm::erfc(-z / SQRT_2)).ln()
    } else if z == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        // Φ(z) = φ(z)/|z| · Σ (−1)ⁿ (2n−1)!! / z²ⁿ
        let z2 = z * z;
        let mut term = 1.0;
        let mut sum = 1.0;
        for n in 1..30 {
            term *= -((2 * n - 1) as f64) / z2;
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        -0.5 * z2 - (-z).ln() - HALF_LN_2PI + sum.ln()
    }
}

/// ln(1 − Φ(z)).
pub fn log_norm_sf(z: f64) -> f64 {
    log_norm_cdf(-z)
}

/// ln φ(z) for the standard normal density.
pub fn log_norm_pdf(z: f64) -> f64 {
    -0.5 * z * z - HALF_LN_2PI
}

/// ln of the standard Laplace CDF, F(z) = ½e^{z} for z < 0.
pub fn log_laplace_cdf(z: f64) -> f64 {
    if z < 0.0 {
        -LN_2 + z
    } else {
        (-0.5 * (-z).exp()).ln_1p()
    }
}

/// ln of the standard Laplace survival function.
pub fn log_laplace_sf(z: f64) -> f64 {
    log_laplace_cdf(-z)
}

/// Closed form of ∫₀^∞ dy/(1+y^a) = π/(a·sin(π/a)), a > 1.
///
/// Only used as an oracle and for cross-checks; the library computes the
/// integral by quadrature.
pub fn g_closed_form(k: f64) -> f64 {
    let a = (k + 1.0) / k;
    PI / (a * (PI / a).sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_cdf_matches_erfc_in_overlap() {
        // for z > 0 the direct form loses digits, so only the left half is compared
        for &z in &[-19.0, -10.0, -3.0, -0.5, 0.0] {
            let direct = (0.5 * libm::erfc(-z / SQRT_2)).ln();
            let got = log_norm_cdf(z);
            assert!((got - direct).abs() <= 1e-13 * direct.abs().max(1e-300), "z={z}");
        }
    }

    #[test]
    fn norm_cdf_series_is_continuous_at_switch() {
        let below = log_norm_cdf(-20.0 - 1e-9);
        let above = log_norm_cdf(-20.0 + 1e-9);
        let slope = 20.0; // d/dz ln Φ ≈ −z far in the left tail
        assert!((above - below - slope * 2e-9).abs() < 1e-9);
        // deep tail stays finite where Φ itself underflows
        let deep = log_norm_cdf(-60.0);
        assert!(deep.is_finite() && deep < -1700.0);
    }

    #[test]
    fn norm_sf_upper_tail_is_accurate() {
        // ln(1−Φ(10)) = ln(7.619853024160527e-24)
        let expected = 7.619_853_024_160_527e-24_f64.ln();
        assert!((log_norm_sf(10.0) - expected).abs() < 1e-12);
    }

    #[test]
    fn laplace_cdf_values() {
        assert!((log_laplace_cdf(0.0).exp() - 0.5).abs() < 1e-16);
        assert!((log_laplace_cdf(LN_2).exp() - 0.75).abs() < 1e-15);
        assert!((log_laplace_cdf(-3.0) - (-LN_2 - 3.0)).abs() < 1e-15);
    }

    #[test]
    fn log_diff_exp_signs() {
        let (s, l) = log_diff_exp(0.0, -1.0);
        assert_eq!(s, 1);
        assert!((l.exp() - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        let (s, _) = log_diff_exp(-1.0, 0.0);
        assert_eq!(s, -1);
        assert_eq!(log_diff_exp(2.0, 2.0).0, 0);
    }

    #[test]
    fn logsumexp_handles_huge_and_empty() {
        assert!((logsumexp(&[1000.0, 1000.0]) - (1000.0 + LN_2)).abs() < 1e-12);
        assert_eq!(logsumexp(&[]), f64::NEG_INFINITY);
        assert!((logaddexp(-800.0, -800.0) - (-800.0 + LN_2)).abs() < 1e-12);
    }

    #[test]
    fn g_closed_form_known_values() {
        assert!((g_closed_form(1.0) - PI / 2.0).abs() < 1e-15);
        assert!((g_closed_form(3.0) - 3.0 * PI / (2.0 * SQRT_2)).abs() < 1e-14);
    }
}
