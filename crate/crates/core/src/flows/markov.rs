//! The entropy flow read as a Markov jump process on the nodes.

use nalgebra::DMatrix;

use crate::mixtures::SimplexPoint;

/// Tridiagonal matrix M with zero diagonal such that M·p equals the
/// entropy flow velocity: M_{i,i+1} = √(pᵢ/pᵢ₊₁)log(pᵢ₊₁/pᵢ) and
/// M_{i,i−1} = −√(pᵢ/pᵢ₋₁)log(pᵢ/pᵢ₋₁).
pub fn markov_kernel_form(p: &SimplexPoint) -> DMatrix<f64> {
    let p = p.as_slice();
    let n = p.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        if i + 1 < n {
            m[(i, i + 1)] = (p[i] / p[i + 1]).sqrt() * (p[i + 1] / p[i]).ln();
        }
        if i > 0 {
            m[(i, i - 1)] = -(p[i] / p[i - 1]).sqrt() * (p[i] / p[i - 1]).ln();
        }
    }
    m
}

/// Log-ratio coordinates a = log(p₁/p₂), b = log(p₂/p₃) of a three-node
/// state.
pub fn log_ratios(p: &SimplexPoint) -> Option<(f64, f64)> {
    match p.as_slice() {
        [p1, p2, p3] => Some(((p1 / p2).ln(), (p2 / p3).ln())),
        _ => None,
    }
}

/// The three-node entropy flow in log-ratio coordinates:
/// ȧ = −a(e^{a/2} + e^{−a/2}) + b·e^{−b/2},
/// ḃ = −b(e^{b/2} + e^{−b/2}) + a·e^{a/2}.
pub fn log_ratio_rhs(a: f64, b: f64) -> (f64, f64) {
    let da = -a * ((0.5 * a).exp() + (-0.5 * a).exp()) + b * (-0.5 * b).exp();
    let db = -b * ((0.5 * b).exp() + (-0.5 * b).exp()) + a * (0.5 * a).exp();
    (da, db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::simplex::entropy_flow_rhs;
    use nalgebra::DVector;
    use proptest::prelude::*;

    #[test]
    fn uniform_is_zero_kernel() {
        let m = markov_kernel_form(&SimplexPoint::uniform(3).unwrap());
        assert!(m.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn kernel_reproduces_entropy_flow() {
        let p = SimplexPoint::new(vec![0.2, 0.5, 0.3]).unwrap();
        let m = markov_kernel_form(&p);
        assert_eq!(m[(0, 1)], (0.2f64 / 0.5).sqrt() * (0.5f64 / 0.2).ln());
        assert!(m.diagonal().iter().all(|v| *v == 0.0));
        assert_eq!(m[(0, 2)], 0.0);
        let mp = &m * DVector::from_column_slice(p.as_slice());
        for (x, y) in mp.iter().zip(entropy_flow_rhs(&p)) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn equilibrium_of_log_ratio_system() {
        assert_eq!(log_ratio_rhs(0.0, 0.0), (0.0, 0.0));
    }

    proptest! {
        // chain rule through a = log p₁ − log p₂, b = log p₂ − log p₃
        #[test]
        fn log_ratio_system_matches_kernel(v in prop::collection::vec(0.02f64..1.0, 3)) {
            let p = SimplexPoint::from_unnormalized(&v).unwrap();
            let (a, b) = log_ratios(&p).unwrap();
            let q = p.as_slice();
            let r = entropy_flow_rhs(&p);
            let da = r[0] / q[0] - r[1] / q[1];
            let db = r[1] / q[1] - r[2] / q[2];
            let (ea, eb) = log_ratio_rhs(a, b);
            prop_assert!((da - ea).abs() < 1e-12 * (1.0 + ea.abs()));
            prop_assert!((db - eb).abs() < 1e-12 * (1.0 + eb.abs()));
        }
    }
}
