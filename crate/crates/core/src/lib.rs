//! Simulation of a two-level atom coupled to a single cavity mode through
//! f-deformed ladder operators, with nonclassicality witnesses of the
//! reduced field state.

pub mod deform;
pub mod dynamics;
pub mod error;
pub mod format;
pub mod moments;
pub mod oracle;
pub mod phasespace;
pub mod special;
pub mod sweep;

pub use deform::{Deformation, ModelParams, Polynomial};
pub use dynamics::{evolve, evolve_with, FieldState, Truncation};
pub use error::{Error, Result};
