//! Noise sampling, path construction and the Monte Carlo driver.

pub mod mc;
pub mod noise;
pub mod parallel;
pub mod path;

pub use mc::{map_paths, mc_run, McEstimate};
pub use noise::{noise_stream, pairing, sample_white_noise, stochastic_exponential, WhiteNoiseSample};
pub use parallel::{map_indexed, map_indexed_sequential};
#[cfg(feature = "parallel")]
pub use parallel::map_indexed_parallel;
pub use path::{build_path, dump_path, ito_integral, Integrator, PathSample};
