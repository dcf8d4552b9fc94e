//! Simulation and verification tools for stochastic differential systems
//! with infinite, exponentially fading memory.
//!
//! The state of such a system is a *segment*: the whole past of a path,
//! measured in the weighted sup-norm `‖ξ‖_r = sup_{θ≤0} e^{rθ}|ξ(θ)|`.
//! Everything here is built on that state space:
//!
//! * [`segment`] stores finite-window segments with an analytic tail and
//!   maintains running norms and fading-memory integrals in O(1) per step.
//! * [`models`] describes drift, diffusion and neutral coefficients as small
//!   expression trees with computable Lipschitz constants.
//! * [`solver`] advances paths with Euler–Maruyama on grid-frozen segments.
//! * [`coupling`] runs the pull-to-the-diagonal coupling with its Girsanov
//!   density.
//! * [`estimators`] turns batches of paths into reports with standard errors.
//! * [`cli`] wires everything to JSON experiment configs.

// `!(x > 0.0)` is how NaN gets rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod coupling;
pub mod error;
pub mod estimators;
pub mod models;
pub mod rng;
pub mod segment;
pub mod solver;

pub use error::{Result, SfdeError};
