//! Ball quadrature, the pointwise-bound harness and counterexample sweeps.

mod counterexample;
mod fit;
mod pointwise;
mod quadrature;
mod sweep;

pub use counterexample::{
    counterexample_field, counterexample_profile, counterexample_rhs, relative_error, sample_on_gauge_sphere,
    verify_pucci_annihilation, AnnihilationReport, CounterexampleConfig, GlueMode, Regime, ANNIHILATION_FD_TOL,
    AXIS_EXCLUSION, SPLICE_EXCLUSION,
};
pub use fit::{fit_line, LineFit, MIN_FIT_POINTS};
pub use pointwise::{
    pointwise_bound_check, pointwise_catalog, reference_ellipticity, tight_case, PointwiseCase, PointwiseReport,
    Precondition, PreconditionFailure, Range, POINTWISE_TOL,
};
pub use quadrature::{
    ball_integral, ball_volume, box_integral, lq_norm, lq_norm_power, Estimate, QuadratureMethod, QuadratureSpec,
    MAX_REJECTION,
};
pub use sweep::{
    sweep_scaling, FitSummary, SweepReport, SweepRow, AGREEMENT_SIGMAS, BOUNDED_RATIO, LOG_SLOPE_TOL,
    MIN_R_SQUARED, SLOPE_TOL,
};
