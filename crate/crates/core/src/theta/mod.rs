//! Riemann theta functions with rational characteristics, their
//! directional derivatives and the basis attached to a polarization.

mod basis;
mod characteristic;
mod series;
pub(crate) mod tail;

pub use basis::{level_basis, fourier_coefficient, theta_recursion_oracle, ThetaBasis};
pub use characteristic::Characteristic;
pub use series::{theta, theta_dderiv, theta_with_radius, truncation_radius, ThetaValue, CHUNK_SIZE};
pub(crate) use series::tree_sum;
