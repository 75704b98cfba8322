//! Discretized operators on `L²([0, 1])` and the integrators they generate.

pub mod bounds;
pub mod grid;
pub mod integrator;
pub mod io;

pub use bounds::{integrator_ratio, op_norm_estimate, schur_bound};
pub use grid::{Grid, StepFunction};
pub use integrator::{
    make_bridge_op, make_fbm_op, make_identity_op, make_projection_op, make_scaled_identity_op, IntegratorOperator,
    OperatorMatrix,
};
pub use io::{read_operator, write_operator};
