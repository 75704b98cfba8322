//! Special functions, closed-form kernels and quadrature.

pub mod functions;
pub mod heat;
pub mod quadrature;
pub mod special;

pub use functions::{FnFunction, RealFunction, TestFunction};
pub use heat::{delta_numeric, heat_semigroup_dx, HeatDerivativeRule};
pub use quadrature::{integrate, LegendreRule, NormalExpectationRule, QuadratureScheme, QuadratureSpec};
pub use special::{
    clark_kernel_wiener, delta_closed, gaussian_density, hermite, hermite_table, normal_cdf, normal_sf,
    HERMITE_MAX_ORDER,
};
