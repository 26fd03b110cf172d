//! BGK steady states of the one-dimensional Vlasov-Poisson system, their action-angle
//! charts and period function, spectral tools for the linearized operator, linearized
//! dynamics and the scaling maps to the unit torus.

pub mod action_angle;
pub mod cli;
pub mod equilibria;
pub mod error;
pub mod linearized_dynamics;
pub mod ode;
pub mod period_asymptotics;
pub mod quad;
pub mod roots;
pub mod scaling;
pub mod spectral_analysis;

pub use error::{Error, Result};
