//! Brute-force finite-element check of half-tube spectra.
//!
//! Every edge of the first `M` columns is cut into `N` intervals with
//! piecewise-linear elements and lumped masses, which yields a symmetric
//! three-point stencil along edges and Kirchhoff/Robin sums at vertices.
//! Eigenvalues near a target come from shift-invert Lanczos, with the edge
//! chains eliminated onto the vertices.

mod eigs;
mod model;

use serde::{Deserialize, Serialize};

pub use eigs::{
    decay_fit, eigenpairs_near, eigs_near, Eigenpair, DECAY_FLOOR, MAX_KRYLOV, RITZ_TOL,
};
pub use model::{DiscretizedModel, FarEnd, VertexLabel, MAX_UNKNOWNS, MAX_VERTICES};

use crate::error::Result;
use crate::halftube::HalfTubeConfig;

/// Default eigenvalue tolerance for matching a designed state.
pub const MATCH_TOL: f64 = 1e-2;

/// Outcome of searching a discretized model for a state at `target`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleReport {
    pub target: f64,
    pub columns: usize,
    pub points_per_edge: usize,
    pub nearest: Vec<f64>,
    pub decay_ratios: Vec<f64>,
    /// Index into `nearest` of the best match, if any passes.
    pub matched: Option<usize>,
    pub tolerance: f64,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.matched.is_some()
    }
}

/// Looks for an eigenvalue within `tol` of `target`. With `expected_decay`,
/// the match is the eigenvector whose column-norm decay is closest to it,
/// which separates an embedded state from nearby band eigenvalues.
pub fn verify_at(
    config: &HalfTubeConfig,
    target: f64,
    columns: usize,
    points: usize,
    count: usize,
    expected_decay: Option<f64>,
    tol: f64,
) -> Result<OracleReport> {
    let model = DiscretizedModel::build(config, columns, points, FarEnd::Dirichlet)?;
    let pairs = eigenpairs_near(&model, target, count)?;
    let nearest: Vec<f64> = pairs.iter().map(|p| p.value).collect();
    let decay_ratios: Vec<f64> = pairs.iter().map(|p| decay_fit(&model, &p.vector)).collect();
    let within = |i: &usize| (nearest[*i] - target).abs() <= tol;
    let matched = match expected_decay {
        Some(r) => (0..nearest.len())
            .filter(within)
            .filter(|&i| (decay_ratios[i] - r).abs() <= 0.05 * r.max(0.1))
            .min_by(|&i, &j| {
                (decay_ratios[i] - r)
                    .abs()
                    .total_cmp(&(decay_ratios[j] - r).abs())
            }),
        None => (0..nearest.len()).find(within),
    };
    Ok(OracleReport {
        target,
        columns,
        points_per_edge: points,
        nearest,
        decay_ratios,
        matched,
        tolerance: tol,
    })
}
