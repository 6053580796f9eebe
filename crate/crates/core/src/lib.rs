//! Traveling fronts of the delayed monostable reaction-diffusion equation
//!
//! ```text
//! u_t = u_xx - u + g(u(t - h, x))
//! ```
//!
//! The crate computes characteristic roots at both equilibria, the speed
//! curves that organize the `(h, c)` plane, explicit fronts of the
//! piecewise-linear birth law, the fundamental solutions of the linearized
//! operator at the positive state, and direct Crank-Nicolson simulations.

pub mod characteristic;
pub mod error;
pub mod greens;
pub mod params;
pub mod pde_sim;
pub mod output;
mod solve;
pub mod speed_curves;
pub mod tolerances;
pub mod toy_front;

pub use error::{Error, Result};
pub use params::ModelParams;
