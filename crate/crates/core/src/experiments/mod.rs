//! Runnable checks of the asymptotic, variational and ODE statements.

mod alpha0;
mod calculus;
mod eigen;
mod sweep;

pub use alpha0::{
    constant_bound, curvature_bound, estimate_alpha0, s0_gap, s_alpha_curve, Alpha0Options, Alpha0Report, AlphaPoint, FieldParams, S0Gap,
    TrialFamily,
};
pub use calculus::{calculus_lemma_check, calculus_lemma_random, CalculusReport};
pub use eigen::{eigen_residuals, EigenResiduals};
pub use sweep::{appendix_sweep, curvature_intercept, curvature_slope, geometric_grid, write_sweep_csv, SweepResult};
