//! Numerical machinery: adaptive quadrature on finite and semi-infinite
//! intervals (real and complex integrands), an oscillatory integrator for
//! Gil-Pelaez inversion, and scalar/grid maximizers.

mod gil_pelaez;
mod optimize;
mod quadrature;

pub use gil_pelaez::{
    gil_pelaez_integral, half_period_panels, GilPelaezOutcome, TAIL_NORM_TARGET, T_MAX_CEILING,
};
pub use optimize::{
    golden_section_max, grid_refine_max, GridAxis, GridMax, OptimizerSpec, ScalarMax,
};
pub use quadrature::{
    integrate, integrate_seeded, integrate_semi_infinite, IntegrandValue, PanelMesh, QuadOutcome,
    QuadratureSpec,
};
