//! Gradient flows under the scaling Wasserstein geometry.
//!
//! [`simplex`] integrates ṗ = −G⁻¹∇F on the probability simplex for the
//! energies in [`energy`]; [`extended`] lets the component means move as
//! well. Mass is never renormalized: the right-hand sides are discrete
//! divergences of gap fluxes, so Σṗ vanishes by telescoping, and steps that
//! would leave the interior are retried at half size.

pub mod energy;
pub mod extended;
pub mod markov;
pub mod simplex;
pub mod stepper;

pub use energy::{
    internal_registry, potential_registry, EnergyFunctional, InternalDensity, SmoothPotential,
};
pub use extended::{
    extended_flow_rhs, integrate_extended_flow, ExtendedFlowState, ExtendedTrajectory, MergeEvent,
};
pub use markov::{log_ratio_rhs, log_ratios, markov_kernel_form};
pub use simplex::{
    entropy_flow_rhs, flow_rhs, flow_rhs_raw, integrate_flow, integrate_flow_scaled, theta_gradient,
    FlowState,
};
pub use stepper::{advance, stepper_registry, IntegratorSpec, Method, Stepper};
