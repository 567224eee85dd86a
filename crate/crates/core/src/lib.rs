//! Scaling Wasserstein and Fisher geometry of one-dimensional mixture
//! models.
//!
//! * [`mixtures`]: simplex/θ coordinates, component kernels, mixture
//!   densities evaluated in the log domain.
//! * [`quadrature`]: adaptive Gauss–Kronrod engine with log-scaled output.
//! * [`wim`]: Fisher and Wasserstein information matrices by quadrature,
//!   their closed-form scaling limits and the asymptotic integrals behind
//!   them.
//! * [`flows`]: gradient flows on the simplex and on the extended
//!   (weights + means) model.
//! * [`pde`]: the log-weighted heat schemes in 1D/2D and Crank–Nicolson
//!   references.
//! * [`verify`]: the acceptance criteria as a runnable registry.

pub mod error;
pub mod flows;
pub mod mixtures;
pub mod pde;
pub mod quadrature;
pub mod registry;
pub mod special;
pub mod verify;
pub mod wim;

pub use error::{Error, Result};
pub use mixtures::{ComponentFamily, MixtureModel, SimplexPoint, ThetaCoords};
pub use quadrature::{LogScaledValue, QuadratureSpec};
