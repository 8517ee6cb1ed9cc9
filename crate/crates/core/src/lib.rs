//! Spectral and scattering computations for semi-infinite square-lattice
//! quantum-graph tubes.

pub mod bands;
#[cfg(feature = "cli")]
pub mod cli;
pub mod dispersion;
pub mod edge_ode;
pub mod error;
pub mod halftube;
pub mod io;
pub mod lattice;
pub mod linalg;
pub mod oracle;
pub mod propagator;
pub mod svg;

pub use error::{Error, Result};
