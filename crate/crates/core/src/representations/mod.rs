//! Integral representations of Gaussian functionals and of local time.

pub mod clark;
pub mod condition;
pub mod duality;
pub mod lt_clark;
pub mod min_norm;

pub use clark::{clark_integrand_1d, gaussian_expectation, verify_clark_1d, ResidualReport};
pub use condition::{condition20_check, ConditionReport, ConditionRoute};
pub use duality::{
    duality_battery, integrator_lt_duality, min_norm_lt_duality, standard_test_directions, DualityBattery,
    DualityReport, MinimalityComparison, Representation,
};
pub use lt_clark::{wiener_lt_clark_residual, wiener_lt_drift, wiener_lt_drift_check, DriftCheck};
pub use min_norm::{min_norm_coefficient, min_norm_coefficient_ou, min_norm_integrand_1d, min_norm_via_ou};
