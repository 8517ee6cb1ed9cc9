//! Semi-infinite tube: boundary system, scattering and bound states.
//!
//! The half-tube keeps columns `0, 1, 2, …` of the tube. Its boundary
//! vertices `v_n` carry Robin conditions and may be joined to a finite
//! auxiliary graph. Any solution is a combination of the `βδ` rightward
//! (outgoing) and `βδ` leftward (incoming) modes, so the vertex conditions
//! at the boundary become a linear system `F` in the mode coefficients and
//! the aux vertex values.

mod bound;
mod config;
mod system;

pub use bound::{
    bound_sigma, bound_state_scan, bound_system, candidate_at, design_robin, excluded_points,
    verify_bound_state, BoundStateCandidate, Design, DesignCase, ScanReport, Verification,
    DETECTION_TOL, EXCLUSION_RADIUS, VERIFY_COLUMNS,
};
pub use config::{AuxEdge, AuxGraph, ConfigFile, EdgeTarget, HalfTubeConfig, Robin};
pub use system::{
    assemble_f, conservation_defect, scattering_matrix, Channel, Channels, EdgeData, Field,
    HalfTubeSystem, Scattering, ScatteringResult,
};
