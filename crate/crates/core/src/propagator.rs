//! Transfer operator on pairs of adjacent columns and the flux form.
//!
//! A state is the vector of vertex values on two adjacent columns, ordered
//! as column `m` rings `0..βδ` followed by column `m + 1` rings `0..βδ`.
//! `P` advances `(u_m, u_{m+1})` to `(u_{m+1}, u_{m+2})` by solving the
//! vertex relation `Σ_w u(w) = 4c(λ) u(v)` centred on column `m + 1`.

use num_complex::Complex64;

use crate::edge_ode::TransferConstants;
use crate::error::{Error, Result};
use crate::lattice::TubeParams;
use crate::linalg::{self, c, CMatrix, CVector};

/// Relative threshold for counting eigenvalues of `J` as nonzero.
pub const SIGNATURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct PropagatorBundle {
    pub lambda: f64,
    pub p: CMatrix,
    pub p_inv: CMatrix,
    pub j: CMatrix,
    pub signature: (usize, usize),
}

/// Flux matrix: `[a, b] = a† J b` summed over the edges leaving column 0.
pub fn flux_matrix(params: &TubeParams, constants: &TransferConstants) -> CMatrix {
    let rings = params.rings();
    let index = |v: crate::lattice::VertexId| v.column as usize * rings + v.ring;
    let weight = (c(0.0, 2.0) * constants.s).inv();
    let mut j = CMatrix::zeros(2 * rings, 2 * rings);
    for e in params.crossing_edges() {
        let (i0, i1) = (index(e.from), index(e.to));
        j[(i0, i1)] += weight;
        j[(i1, i0)] -= weight;
    }
    j
}

pub fn build_propagator(
    lambda: f64,
    params: &TubeParams,
    constants: &TransferConstants,
) -> Result<PropagatorBundle> {
    if constants.is_dirichlet() {
        return Err(Error::DirichletSpectrum {
            lambda,
            edge: "the tube edges".into(),
        });
    }
    let rings = params.rings();
    let four_c = 4.0 * constants.c;
    let mut stencil = CMatrix::zeros(rings, rings);
    let mut known = CMatrix::zeros(rings, 2 * rings);
    for n in 0..rings {
        let centre = crate::lattice::VertexId { column: 1, ring: n };
        known[(n, rings + n)] += four_c;
        for w in params.neighbors(centre).all() {
            match w.column {
                0 | 1 => known[(n, w.column as usize * rings + w.ring)] -= 1.0,
                2 => stencil[(n, w.ring)] += 1.0,
                other => {
                    return Err(Error::Internal(format!(
                        "neighbour of column 1 in column {other}"
                    )))
                }
            }
        }
    }
    let lu = stencil.lu();
    let next = lu
        .solve(&known)
        .ok_or(Error::DegenerateStencil { lambda })?;

    let n2 = 2 * rings;
    let mut p = CMatrix::zeros(n2, n2);
    for i in 0..rings {
        p[(i, rings + i)] = c(1.0, 0.0);
    }
    p.view_mut((rings, 0), (rings, n2)).copy_from(&next);
    let p_inv = p
        .clone()
        .try_inverse()
        .ok_or(Error::DegenerateStencil { lambda })?;
    let j = flux_matrix(params, constants);
    let signature = linalg::signature(&j, SIGNATURE_TOL);
    Ok(PropagatorBundle {
        lambda,
        p,
        p_inv,
        j,
        signature,
    })
}

/// `P^steps state`; negative `steps` apply `P⁻¹`.
pub fn propagate(state: &CVector, steps: i64, bundle: &PropagatorBundle) -> CVector {
    let m = if steps >= 0 { &bundle.p } else { &bundle.p_inv };
    let mut out = state.clone();
    for _ in 0..steps.unsigned_abs() {
        out = m * out;
    }
    out
}

/// `a† J b`.
pub fn flux(a: &CVector, b: &CVector, bundle: &PropagatorBundle) -> Complex64 {
    a.dotc(&(&bundle.j * b))
}

impl PropagatorBundle {
    /// `max |P† J P - J|`.
    pub fn unitarity_residual(&self) -> f64 {
        linalg::max_abs(&(self.p.adjoint() * &self.j * &self.p - &self.j))
    }

    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        linalg::eigenvalues(&self.p)
    }
}
