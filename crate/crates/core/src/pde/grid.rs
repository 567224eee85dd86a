//! Periodic grids and cell-mass fields.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic grid on [x_min, x_max) with `n` cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        let g = Grid1D { x_min, x_max, n };
        g.validate()?;
        Ok(g)
    }

    /// Grid on [x_min, x_max) with spacing closest to `dx`.
    pub fn with_spacing(x_min: f64, x_max: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0) {
            return Err(Error::InvalidArgument(format!("Δx must be positive, got {dx}")));
        }
        Self::new(x_min, x_max, ((x_max - x_min) / dx).round() as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min.is_finite() && self.x_max.is_finite() && self.x_max > self.x_min) {
            return Err(Error::InvalidArgument(format!(
                "grid interval [{}, {}) is empty",
                self.x_min, self.x_max
            )));
        }
        if self.n < 4 {
            return Err(Error::InvalidArgument(format!("a periodic grid needs n ≥ 4, got {}", self.n)));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n as f64
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }
}

/// Tensor product of two periodic grids; the first axis indexes rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid2D {
    pub x: Grid1D,
    pub y: Grid1D,
}

impl Grid2D {
    pub fn new(x: Grid1D, y: Grid1D) -> Result<Self> {
        x.validate()?;
        y.validate()?;
        Ok(Grid2D { x, y })
    }

    pub fn square(min: f64, max: f64, n: usize) -> Result<Self> {
        let g = Grid1D::new(min, max, n)?;
        Ok(Grid2D { x: g, y: g })
    }

    pub fn cell_area(&self) -> f64 {
        self.x.dx() * self.y.dx()
    }
}

/// Positive cell masses on a 1D (`ny = 1`) or 2D grid, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    nx: usize,
    ny: usize,
    values: Vec<f64>,
    mass: f64,
}

impl Field {
    pub fn new(nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        if nx * ny != values.len() || nx == 0 || ny == 0 {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {nx}x{ny} field",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidField(format!("cell {i} holds {}", values[i])));
        }
        let mass = values.iter().sum();
        Ok(Field { nx, ny, values, mass })
    }

    pub fn new_1d(values: Vec<f64>) -> Result<Self> {
        Self::new(values.len(), 1, values)
    }

    /// pᵢ = ρ(xᵢ)Δx.
    pub fn from_density_1d(grid: &Grid1D, rho: impl Fn(f64) -> f64) -> Result<Self> {
        let dx = grid.dx();
        Self::new_1d(grid.nodes().into_iter().map(|x| rho(x) * dx).collect())
    }

    /// p_{ij} = ρ(xᵢ, yⱼ)ΔxΔy.
    pub fn from_density_2d(grid: &Grid2D, rho: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let a = grid.cell_area();
        let mut v = Vec::with_capacity(grid.x.n * grid.y.n);
        for i in 0..grid.x.n {
            for j in 0..grid.y.n {
                v.push(rho(grid.x.x(i), grid.y.x(j)) * a);
            }
        }
        Self::new(grid.x.n, grid.y.n, v)
    }

    /// Field with the given values but without the positivity check; used
    /// for right-hand sides and differences.
    pub(crate) fn raw(nx: usize, ny: usize, values: Vec<f64>) -> Self {
        let mass = values.iter().sum();
        Field { nx, ny, values, mass }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn is_1d(&self) -> bool {
        self.ny == 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ny + j]
    }

    /// Mass recorded at construction.
    pub fn initial_mass(&self) -> f64 {
        self.mass
    }

    /// Current total mass.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn transposed(&self) -> Field {
        let mut v = Vec::with_capacity(self.values.len());
        for j in 0..self.ny {
            for i in 0..self.nx {
                v.push(self.get(i, j));
            }
        }
        Field {
            nx: self.ny,
            ny: self.nx,
            values: v,
            mass: self.mass,
        }
    }

    /// Values divided by the cell size, i.e. back to a density.
    pub fn densities(&self, cell: f64) -> Vec<f64> {
        self.values.iter().map(|v| v / cell).collect()
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> Field {
        Field {
            nx: self.nx,
            ny: self.ny,
            values,
            mass: self.mass,
        }
    }

    /// `x,value` rows for a 1D field on `grid`.
    pub fn to_csv_1d(&self, grid: &Grid1D) -> Result<String> {
        if !self.is_1d() || self.nx != grid.n {
            return Err(Error::ShapeMismatch("field does not live on this 1D grid".into()));
        }
        let mut s = String::from("x,value\n");
        for (i, v) in self.values.iter().enumerate() {
            s.push_str(&format!("{:e},{:e}\n", grid.x(i), v));
        }
        Ok(s)
    }

    /// Row-major matrix preceded by a `# nx,ny,x_min,x_max,y_min,y_max`
    /// metadata line.
    pub fn to_csv_2d(&self, grid: &Grid2D) -> Result<String> {
        if self.nx != grid.x.n || self.ny != grid.y.n {
            return Err(Error::ShapeMismatch("field does not live on this 2D grid".into()));
        }
        let mut s = format!(
            "# nx={},ny={},x_min={:e},x_max={:e},y_min={:e},y_max={:e}\n",
            grid.x.n, grid.y.n, grid.x.x_min, grid.x.x_max, grid.y.x_min, grid.y.x_max
        );
        for i in 0..self.nx {
            let row: Vec<String> = (0..self.ny).map(|j| format!("{:e}", self.get(i, j))).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spacing() {
        let g = Grid1D::with_spacing(-5.0, 5.0, 0.1).unwrap();
        assert_eq!(g.n, 100);
        assert!((g.dx() - 0.1).abs() < 1e-15);
        assert_eq!(g.x(0), -5.0);
        assert!(Grid1D::new(0.0, 1.0, 3).is_err());
        assert!(Grid1D::new(1.0, 1.0, 8).is_err());
    }

    #[test]
    fn field_validation_and_mass() {
        assert!(matches!(Field::new_1d(vec![1.0, 0.0, 1.0, 1.0]), Err(Error::InvalidField(_))));
        assert!(matches!(Field::new(2, 3, vec![1.0; 5]), Err(Error::ShapeMismatch(_))));
        let g = Grid1D::new(0.0, 1.0, 10).unwrap();
        let f = Field::from_density_1d(&g, |_| 1.0).unwrap();
        assert!((f.initial_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn transpose_round_trip() {
        let f = Field::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let t = f.transposed();
        assert_eq!(t.shape(), (3, 2));
        assert_eq!(t.get(2, 1), 6.0);
        assert_eq!(t.get(0, 1), 4.0);
        assert_eq!(t.transposed(), f);
    }

    #[test]
    fn csv_layouts() {
        let g = Grid1D::new(0.0, 4.0, 4).unwrap();
        let f = Field::new_1d(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let s = f.to_csv_1d(&g).unwrap();
        assert_eq!(s.lines().count(), 5);
        assert_eq!(s.lines().nth(2).unwrap(), "1e0,2e0");
        let g2 = Grid2D::square(0.0, 1.0, 4).unwrap();
        let f2 = Field::from_density_2d(&g2, |x, y| 1.0 + x + y).unwrap();
        let s2 = f2.to_csv_2d(&g2).unwrap();
        assert!(s2.starts_with("# nx=4,ny=4"));
        assert_eq!(s2.lines().count(), 5);
    }
}
