//! Special functions, adaptive quadrature, root finding and a bounded
//! derivative-free minimizer. Everything here is a pure function.

mod optimize;
mod quad;
mod roots;
mod special;

pub use optimize::{minimize, minimize_multistart, Minimum, OptimizerSpec};
pub use quad::{integrate, integrate_many, integrate_with, Integral, PowerTail, QuadratureSpec};
pub use roots::{bisect_predicate, find_root};
pub use special::{beta_fn, gamma_fn, ln_gamma};
