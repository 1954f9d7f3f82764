//! Nonlinear modes, stability and dynamics of a PT-symmetric coupler whose
//! arms are birefringent waveguides (a four-field "quadrimer").

pub mod cli;
pub mod continuation;
pub mod dynamics;
pub mod eigen;
pub mod error;
pub mod exact;
pub mod figures;
pub mod ghost;
pub mod io;
pub mod model;
pub mod newton;
pub mod perturbation;
pub mod serde_util;
pub mod spectrum;
pub mod stability;

pub use error::{Error, Result};
pub use model::{CouplerParams, Family, FieldState, Sign, StationaryMode};
