//! Marked Hawkes processes near criticality and their diffusion limits.
//!
//! The crate covers the full chain from a point-process model to its
//! scaling limit:
//!
//! - [`kernels`]: mark laws, kernel shapes, model descriptions and the
//!   mean children matrix;
//! - [`volterra`]: resolvent equations on grids;
//! - [`hawkes`]: exact simulation by thinning, intensities and compensators;
//! - [`shotnoise`]: shot-noise functionals of event logs;
//! - [`cbi`]: the limiting branching diffusion, its Riccati system and
//!   moment equations;
//! - [`cmj`]: age-dependent (Crump–Mode–Jagers) branching populations;
//! - [`harness`]: model sequences, Monte Carlo ensembles and comparison
//!   statistics.
//!
//! The resolvent solvers are generic over [`num_traits::Float`]; the
//! aliases below fix the scalar type used everywhere else.

mod accum;
pub mod cbi;
pub mod cmj;
pub mod error;
pub mod harness;
pub mod hawkes;
pub mod kernels;
pub mod shotnoise;
pub mod volterra;

pub use error::{Error, Result};

/// Scalar type of the simulators and statistics.
pub type Real = f64;

/// Resolvent grid in the crate's working precision.
pub type ResolventGrid = volterra::ResolventGrid<Real>;

/// Single-precision resolvent grid, for quick parameter scans.
pub type ResolventGridF32 = volterra::ResolventGrid<f32>;
