//! Hypergeometric series, period integrals of quadratic singularities and
//! numerical tests of candidate Gauss-Manin operators.

mod check;
mod operator;
mod period;
mod series;

pub use check::{
    checks_to_csv, random_hypergeometric_cases, run_checks, Assertion, CheckOptions, CheckRow,
    CHECK_HEADER, X_POWER_POINTS,
};
pub use operator::{
    annihilator_residual, DifferentialOperator, GMSystemDescriptor, RationalFn, UniformGrid,
};
pub use period::{
    eta_scaling, period_on_grid, quadratic_period, sphere_mean, EtaRow, EtaScaling, PeriodEstimate,
};
pub use series::{
    ball_volume, closed_form_u, gamma_half, gauss_ode_residual, hyp2f1, hyp2f1_with_derivatives,
    pochhammer, sphere_area, x_power_corrected_residual, x_power_period, x_power_printed_residual,
    HypergeometricParams,
};
