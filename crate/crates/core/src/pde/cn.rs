//! Crank–Nicolson reference solvers for ∂ₜρ = Δρ on periodic grids.

use super::grid::{Field, Grid1D, Grid2D};
use crate::error::{Error, Result};

/// Constant-coefficient cyclic tridiagonal system with diagonal `b` and
/// both off-diagonals (including the corners) equal to `a`, solved by the
/// Thomas algorithm plus a Sherman–Morrison correction.
#[derive(Debug, Clone)]
pub struct CyclicTridiagonal {
    n: usize,
    a: f64,
    b: f64,
    // forward-elimination coefficients of the modified system
    cp: Vec<f64>,
    denom: Vec<f64>,
    gamma: f64,
    z: Vec<f64>,
    vz_factor: f64,
}

impl CyclicTridiagonal {
    pub fn new(n: usize, a: f64, b: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!("cyclic system needs n ≥ 3, got {n}")));
        }
        if !(b.abs() > 2.0 * a.abs()) {
            return Err(Error::InvalidArgument("cyclic system is not diagonally dominant".into()));
        }
        let gamma = -b;
        let mut diag = vec![b; n];
        diag[0] = b - gamma;
        diag[n - 1] = b - a * a / gamma;
        let mut cp = vec![0.0; n];
        let mut denom = vec![0.0; n];
        denom[0] = diag[0];
        cp[0] = a / denom[0];
        for i in 1..n {
            denom[i] = diag[i] - a * cp[i - 1];
            cp[i] = a / denom[i];
        }
        let mut s = CyclicTridiagonal {
            n,
            a,
            b,
            cp,
            denom,
            gamma,
            z: Vec::new(),
            vz_factor: 0.0,
        };
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = a;
        let z = s.thomas(&u);
        s.vz_factor = 1.0 + z[0] + a * z[n - 1] / gamma;
        s.z = z;
        Ok(s)
    }

    fn thomas(&self, r: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        y[0] = r[0] / self.denom[0];
        for i in 1..n {
            y[i] = (r[i] - self.a * y[i - 1]) / self.denom[i];
        }
        for i in (0..n - 1).rev() {
            y[i] -= self.cp[i] * y[i + 1];
        }
        y
    }

    pub fn solve(&self, r: &[f64]) -> Vec<f64> {
        let n = self.n;
        let y = self.thomas(r);
        let f = (y[0] + self.a * y[n - 1] / self.gamma) / self.vz_factor;
        (0..n).map(|i| y[i] - f * self.z[i]).collect()
    }

    /// The matrix applied to `x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| self.b * x[i] + self.a * (x[(i + n - 1) % n] + x[(i + 1) % n]))
            .collect()
    }
}

/// One CN step along a single periodic line: (I − rL/2)uⁿ⁺¹ = (I + rL/2)uⁿ
/// with L the periodic [1, −2, 1] stencil and r = Δt/Δx².
struct LineStep {
    implicit: CyclicTridiagonal,
    r: f64,
}

impl LineStep {
    fn new(n: usize, r: f64) -> Result<Self> {
        Ok(LineStep {
            implicit: CyclicTridiagonal::new(n, -0.5 * r, 1.0 + r)?,
            r,
        })
    }

    fn step(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let h = 0.5 * self.r;
        let rhs: Vec<f64> = (0..n)
            .map(|i| u[i] + h * (u[(i + n - 1) % n] - 2.0 * u[i] + u[(i + 1) % n]))
            .collect();
        self.implicit.solve(&rhs)
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("Δt must be positive, got {dt}")));
    }
    Ok(())
}

/// Crank–Nicolson for ∂ₜρ = ∂ₓₓρ, `steps` steps of size `dt`.
pub fn crank_nicolson_1d(field0: &Field, grid: &Grid1D, dt: f64, steps: usize) -> Result<Field> {
    check_dt(dt)?;
    if !field0.is_1d() || field0.shape().0 != grid.n {
        return Err(Error::ShapeMismatch("field does not live on this 1D grid".into()));
    }
    let line = LineStep::new(grid.n, dt / (grid.dx() * grid.dx()))?;
    let mut u = field0.values().to_vec();
    for _ in 0..steps {
        u = line.step(&u);
    }
    Ok(field0.with_values(u))
}

/// Dimension-split Crank–Nicolson: a full CN step along the first axis,
/// then along the second. The two periodic axis operators commute, so the
/// split adds no error beyond the CN factorization, which is second order.
pub fn crank_nicolson_2d(field0: &Field, grid: &Grid2D, dt: f64, steps: usize) -> Result<Field> {
    check_dt(dt)?;
    let (nx, ny) = field0.shape();
    if nx != grid.x.n || ny != grid.y.n {
        return Err(Error::ShapeMismatch("field does not live on this 2D grid".into()));
    }
    let along_x = LineStep::new(nx, dt / (grid.x.dx() * grid.x.dx()))?;
    let along_y = LineStep::new(ny, dt / (grid.y.dx() * grid.y.dx()))?;
    let mut u = field0.values().to_vec();
    let mut col = vec![0.0; nx];
    for _ in 0..steps {
        for j in 0..ny {
            for i in 0..nx {
                col[i] = u[i * ny + j];
            }
            let c = along_x.step(&col);
            for i in 0..nx {
                u[i * ny + j] = c[i];
            }
        }
        for i in 0..nx {
            let r = along_y.step(&u[i * ny..(i + 1) * ny]);
            u[i * ny..(i + 1) * ny].copy_from_slice(&r);
        }
    }
    Ok(field0.with_values(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_is_invariant() {
        let g = Grid1D::new(0.0, 1.0, 20).unwrap();
        let f = Field::new_1d(vec![0.05; 20]).unwrap();
        let out = crank_nicolson_1d(&f, &g, 0.01, 50).unwrap();
        for v in out.values() {
            assert!((v - 0.05).abs() < 1e-16);
        }
        let g2 = Grid2D::square(0.0, 1.0, 8).unwrap();
        let f2 = Field::new(8, 8, vec![0.2; 64]).unwrap();
        let out2 = crank_nicolson_2d(&f2, &g2, 0.01, 10).unwrap();
        assert!(out2.values().iter().all(|v| (v - 0.2).abs() < 1e-15));
    }

    #[test]
    fn fourier_mode_decay() {
        // 1 + 0.5cos(2πkx/L) decays as e^{−(2πk/L)²t}
        let l = 10.0;
        let kk = 2.0 * PI / l;
        let t = 1.0;
        let err = |n: usize, dt: f64| {
            let g = Grid1D::new(-5.0, 5.0, n).unwrap();
            let f = Field::from_density_1d(&g, |x| 1.0 + 0.5 * (kk * x).cos()).unwrap();
            let out = crank_nicolson_1d(&f, &g, dt, (t / dt).round() as usize).unwrap();
            let decay = (-kk * kk * t).exp();
            (0..n)
                .map(|i| (out.values()[i] / g.dx() - 1.0 - 0.5 * decay * (kk * g.x(i)).cos()).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(50, 0.02), err(100, 0.01));
        assert!(e1 < 1e-3);
        let rate = (e1 / e2).log2();
        assert!((rate - 2.0).abs() < 0.2, "{rate}");
    }

    #[test]
    fn product_mode_decay_2d() {
        let kk = 2.0 * PI / 10.0;
        let g = Grid2D::square(-5.0, 5.0, 64).unwrap();
        let f = Field::from_density_2d(&g, |x, y| (1.0 + 0.5 * (kk * x).cos()) * (1.0 + 0.5 * (kk * y).cos())).unwrap();
        let out = crank_nicolson_2d(&f, &g, 0.01, 100).unwrap();
        let d = (-kk * kk).exp();
        let a = g.cell_area();
        let mut err: f64 = 0.0;
        for i in 0..64 {
            for j in 0..64 {
                let (x, y) = (g.x.x(i), g.y.x(j));
                let exact = (1.0 + 0.5 * d * (kk * x).cos()) * (1.0 + 0.5 * d * (kk * y).cos());
                err = err.max((out.get(i, j) / a - exact).abs());
            }
        }
        assert!(err < 2e-3, "{err}");
        assert!((out.mass() - f.mass()).abs() < 1e-12 * f.mass());
    }

    proptest! {
        #[test]
        fn cyclic_solve_inverts_apply(
            n in 3usize..40,
            r in 0.01f64..50.0,
            xs in prop::collection::vec(-1.0f64..1.0, 40),
        ) {
            let m = CyclicTridiagonal::new(n, -0.5 * r, 1.0 + r).unwrap();
            let x = &xs[..n];
            let back = m.solve(&m.apply(x));
            for (a, b) in back.iter().zip(x) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn cn_conserves_mass(v in prop::collection::vec(0.1f64..2.0, 8..60)) {
            let n = v.len();
            let g = Grid1D::new(0.0, 1.0, n).unwrap();
            let f = Field::new_1d(v).unwrap();
            let out = crank_nicolson_1d(&f, &g, 1e-3, 200).unwrap();
            prop_assert!((out.mass() - f.mass()).abs() < 1e-12 * f.mass());
        }
    }
}
