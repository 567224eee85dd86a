//! The log-weighted heat operators.

use super::grid::{Field, Grid1D, Grid2D};
use crate::error::{Error, Result};

/// Periodic ring operator without the 1/Δx² factor:
/// ṗᵢ = −(√(pᵢ₋₁pᵢ)log(pᵢ/pᵢ₋₁) − √(pᵢ₊₁pᵢ)log(pᵢ₊₁/pᵢ)).
///
/// Written as the difference of edge fluxes, so Σṗ telescopes to zero
/// around the ring. Any n ≥ 2 is accepted; for n = 2 both neighbours of a
/// node are the same node.
pub fn periodic_log_flux(p: &[f64]) -> Result<Vec<f64>> {
    let n = p.len();
    if n < 2 {
        return Err(Error::InvalidField(format!("a ring needs at least two cells, got {n}")));
    }
    if let Some(i) = p.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidField(format!("cell {i} holds {}", p[i])));
    }
    // flux[i] crosses the edge between cells i and i+1
    let flux: Vec<f64> = (0..n)
        .map(|i| {
            let (a, b) = (p[i], p[(i + 1) % n]);
            (a * b).sqrt() * (b / a).ln()
        })
        .collect();
    Ok((0..n).map(|i| flux[i] - flux[(i + n - 1) % n]).collect())
}

/// One-dimensional parametric heat right-hand side, scaled by 1/Δx².
pub fn heat1d_rhs(field: &Field, grid: &Grid1D) -> Result<Vec<f64>> {
    if !field.is_1d() || field.shape().0 != grid.n {
        return Err(Error::ShapeMismatch(format!(
            "field of shape {:?} on a grid of {} cells",
            field.shape(),
            grid.n
        )));
    }
    let s = 1.0 / (grid.dx() * grid.dx());
    Ok(periodic_log_flux(field.values())?.into_iter().map(|v| v * s).collect())
}

fn check_2d(field: &Field, grid: &Grid2D) -> Result<(usize, usize)> {
    let (nx, ny) = field.shape();
    if nx != grid.x.n || ny != grid.y.n {
        return Err(Error::ShapeMismatch(format!(
            "field of shape {:?} on a {}x{} grid",
            field.shape(),
            grid.x.n,
            grid.y.n
        )));
    }
    Ok((nx, ny))
}

/// The 1D operator applied along the second index (within each row).
pub fn heat2d_rowwise(field: &Field, grid: &Grid2D) -> Result<Vec<f64>> {
    let (nx, ny) = check_2d(field, grid)?;
    let s = 1.0 / (grid.y.dx() * grid.y.dx());
    let mut out = vec![0.0; nx * ny];
    for i in 0..nx {
        let r = periodic_log_flux(&field.values()[i * ny..(i + 1) * ny])?;
        for j in 0..ny {
            out[i * ny + j] = r[j] * s;
        }
    }
    Ok(out)
}

/// The 1D operator applied along the first index (within each column).
pub fn heat2d_columnwise(field: &Field, grid: &Grid2D) -> Result<Vec<f64>> {
    let (nx, ny) = check_2d(field, grid)?;
    let s = 1.0 / (grid.x.dx() * grid.x.dx());
    let mut out = vec![0.0; nx * ny];
    let mut col = vec![0.0; nx];
    for j in 0..ny {
        for i in 0..nx {
            col[i] = field.get(i, j);
        }
        let r = periodic_log_flux(&col)?;
        for i in 0..nx {
            out[i * ny + j] = r[i] * s;
        }
    }
    Ok(out)
}

/// Two-dimensional parametric heat right-hand side: the sum of the
/// operator along both axes.
pub fn heat2d_rhs(field: &Field, grid: &Grid2D) -> Result<Vec<f64>> {
    let a = heat2d_columnwise(field, grid)?;
    let b = heat2d_rowwise(field, grid)?;
    Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect())
}
