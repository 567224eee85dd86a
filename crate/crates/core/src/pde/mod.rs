//! Parametric heat schemes on periodic grids.
//!
//! The entropy flow on a chain of narrow components, with the means taken
//! as grid nodes, is a finite-volume scheme for ∂ₜρ = Δρ: cell masses
//! pᵢ = ρ(xᵢ)Δx evolve by log-weighted fluxes √(pᵢpᵢ₊₁)log(pᵢ₊₁/pᵢ)/Δx².
//! [`cn`] supplies Crank–Nicolson references for the same problem.

pub mod cn;
pub mod grid;
pub mod ops;
pub mod scheme;

pub use cn::{crank_nicolson_1d, crank_nicolson_2d, CyclicTridiagonal};
pub use grid::{Field, Grid1D, Grid2D};
pub use ops::{heat1d_rhs, heat2d_columnwise, heat2d_rhs, heat2d_rowwise, periodic_log_flux};
pub use scheme::{
    error_report, gaussian_density_1d, gaussian_density_2d, reference_trajectory, run_scheme, ErrorReport,
    ErrorRow, Heat1D, Heat2D, HeatOperator, Trajectory, DEFAULT_STRIDE,
};
