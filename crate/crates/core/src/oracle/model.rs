use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::edge_ode::EdgePotential;
use crate::error::{Error, Result};
use crate::halftube::{EdgeTarget, HalfTubeConfig};
use crate::lattice::VertexId;

/// Largest number of unknowns a model may have.
pub const MAX_UNKNOWNS: usize = 2_000_000;
/// Largest number of vertex unknowns (they form a dense Schur complement).
pub const MAX_VERTICES: usize = 4_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FarEnd {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VertexLabel {
    Tube(VertexId),
    Aux(usize),
}

/// Interior points of one edge, a chain coupled to its end vertices by `-1/h`.
#[derive(Debug, Clone)]
pub(crate) struct Chain {
    pub ends: [Option<usize>; 2],
    pub h: f64,
    /// Index of the first interior unknown.
    pub offset: usize,
    /// Index into the model's distinct chain stiffness diagonals.
    pub kind: usize,
}

/// Lumped-mass piecewise-linear discretization of a truncated half-tube.
///
/// Unknowns are the retained vertex values followed by the interior points
/// of every edge. The generalized problem `K u = λ M u` has diagonal `M`,
/// and [`DiscretizedModel::entries`] exposes the symmetric matrix
/// `M^{-1/2} K M^{-1/2}`.
#[derive(Debug, Clone)]
pub struct DiscretizedModel {
    pub columns: usize,
    pub points_per_edge: usize,
    pub far_end: FarEnd,
    pub labels: Vec<VertexLabel>,
    pub(crate) vertex_diag: Vec<f64>,
    pub(crate) vertex_mass: Vec<f64>,
    pub(crate) chains: Vec<Chain>,
    /// Stiffness diagonal (including potential) of each chain kind.
    pub(crate) kinds: Vec<Vec<f64>>,
    pub(crate) size: usize,
}

struct Builder {
    n: usize,
    vertex_diag: Vec<f64>,
    vertex_mass: Vec<f64>,
    chains: Vec<Chain>,
    kinds: Vec<Vec<f64>>,
    kind_keys: Vec<(EdgePotential, u64)>,
    pending: usize,
}

impl Builder {
    fn kind(&mut self, potential: &EdgePotential, length: f64) -> usize {
        let key = (potential.clone(), length.to_bits());
        if let Some(i) = self.kind_keys.iter().position(|k| *k == key) {
            return i;
        }
        let h = length / self.n as f64;
        let diag = (1..self.n)
            .map(|i| 2.0 / h + potential.value_at(i as f64 * h, length) * h)
            .collect();
        self.kinds.push(diag);
        self.kind_keys.push(key);
        self.kinds.len() - 1
    }

    fn edge(&mut self, a: Option<usize>, b: Option<usize>, potential: &EdgePotential, length: f64) {
        let h = length / self.n as f64;
        let kind = self.kind(potential, length);
        for (end, x) in [(a, 0.0), (b, length)] {
            if let Some(v) = end {
                self.vertex_diag[v] += 1.0 / h + potential.value_at(x, length) * h / 2.0;
                self.vertex_mass[v] += h / 2.0;
            }
        }
        self.chains.push(Chain {
            ends: [a, b],
            h,
            offset: self.pending,
            kind,
        });
        self.pending += self.n - 1;
    }
}

impl DiscretizedModel {
    /// Truncates the half-tube after `columns` columns and discretizes every
    /// edge with `points_per_edge` intervals.
    pub fn build(
        config: &HalfTubeConfig,
        columns: usize,
        points_per_edge: usize,
        far_end: FarEnd,
    ) -> Result<Self> {
        config.validate()?;
        if columns < 10 || points_per_edge < 8 {
            return Err(Error::Parameters(format!(
                "need columns >= 10 and points >= 8, got {columns} and {points_per_edge}"
            )));
        }
        let params = &config.params;
        let rings = params.rings();
        let gamma = config.aux_count();
        let tube_vertices = (columns + 1) * rings;
        let edge_count = 2 * columns * rings + rings + config.aux.edges.len();
        let unknowns = tube_vertices + gamma + edge_count * (points_per_edge - 1);
        if tube_vertices + gamma > MAX_VERTICES || unknowns > MAX_UNKNOWNS {
            return Err(Error::Size(format!(
                "{unknowns} unknowns with {} vertices exceed the limits ({MAX_UNKNOWNS}, {MAX_VERTICES})",
                tube_vertices + gamma
            )));
        }

        // Retained vertices and their indices.
        let mut labels = Vec::new();
        let mut index = std::collections::HashMap::new();
        for m in 0..=columns {
            for n in 0..rings {
                let dirichlet = (m == 0 && config.boundary_robin[n].b == 0.0)
                    || (m == columns && far_end == FarEnd::Dirichlet);
                if !dirichlet {
                    let id = VertexId {
                        column: m as i64,
                        ring: n,
                    };
                    index.insert(VertexLabel::Tube(id), labels.len());
                    labels.push(VertexLabel::Tube(id));
                }
            }
        }
        for (i, r) in config.aux.vertices.iter().enumerate() {
            if r.b != 0.0 {
                index.insert(VertexLabel::Aux(i), labels.len());
                labels.push(VertexLabel::Aux(i));
            }
        }
        let nv = labels.len();
        let mut b = Builder {
            n: points_per_edge,
            vertex_diag: vec![0.0; nv],
            vertex_mass: vec![0.0; nv],
            chains: Vec::new(),
            kinds: Vec::new(),
            kind_keys: Vec::new(),
            pending: 0,
        };

        let tube_slot = |v: VertexId| index.get(&VertexLabel::Tube(v)).copied();
        for m in 0..=columns as i64 {
            for n in 0..rings {
                let v = VertexId { column: m, ring: n };
                let (x, y) = params.raw(v);
                for w in [params.canonicalize(x + 1, y), params.canonicalize(x, y + 1)] {
                    if w.column >= 0 && w.column <= columns as i64 {
                        b.edge(tube_slot(v), tube_slot(w), &config.potential, 1.0);
                    }
                }
            }
        }
        for e in &config.aux.edges {
            let from = index.get(&VertexLabel::Aux(e.from)).copied();
            let to = match e.to {
                EdgeTarget::Aux(w) => index.get(&VertexLabel::Aux(w)).copied(),
                EdgeTarget::Ring(n) => tube_slot(VertexId { column: 0, ring: n }),
            };
            b.edge(from, to, &e.potential, e.length);
        }
        // Robin terms.
        for (slot, label) in labels.iter().enumerate() {
            let robin = match label {
                VertexLabel::Tube(v) if v.column == 0 => Some(config.boundary_robin[v.ring]),
                VertexLabel::Aux(i) => Some(config.aux.vertices[*i]),
                _ => None,
            };
            if let Some(r) = robin {
                b.vertex_diag[slot] -= r.a / r.b;
            }
        }
        let size = nv + b.pending;
        let mut chains = b.chains;
        for c in chains.iter_mut() {
            c.offset += nv;
        }
        Ok(DiscretizedModel {
            columns,
            points_per_edge,
            far_end,
            labels,
            vertex_diag: b.vertex_diag,
            vertex_mass: b.vertex_mass,
            chains,
            kinds: b.kinds,
            size,
        })
    }

    /// One edge with both ends clamped.
    pub fn single_edge(potential: &EdgePotential, length: f64, points: usize) -> Result<Self> {
        if points < 2 || !(length > 0.0) {
            return Err(Error::Parameters(format!(
                "bad single-edge model ({length}, {points})"
            )));
        }
        let mut b = Builder {
            n: points,
            vertex_diag: Vec::new(),
            vertex_mass: Vec::new(),
            chains: Vec::new(),
            kinds: Vec::new(),
            kind_keys: Vec::new(),
            pending: 0,
        };
        b.edge(None, None, potential, length);
        Ok(DiscretizedModel {
            columns: 0,
            points_per_edge: points,
            far_end: FarEnd::Dirichlet,
            labels: Vec::new(),
            vertex_diag: Vec::new(),
            vertex_mass: Vec::new(),
            chains: b.chains,
            kinds: b.kinds,
            size: b.pending,
        })
    }

    pub fn dimension(&self) -> usize {
        self.size
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.chains.len()
    }

    /// Lumped mass of every unknown.
    pub fn mass(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.size);
        for (i, &v) in self.vertex_mass.iter().enumerate() {
            m[i] = v;
        }
        for c in &self.chains {
            for k in 0..self.points_per_edge - 1 {
                m[c.offset + k] = c.h;
            }
        }
        m
    }

    /// Nonzero entries `(row, col, value)` of `M^{-1/2} K M^{-1/2}`.
    pub fn entries(&self) -> Vec<(usize, usize, f64)> {
        let mass = self.mass();
        let scale = |i: usize, j: usize, v: f64| v / (mass[i] * mass[j]).sqrt();
        let mut out = Vec::new();
        for (i, &d) in self.vertex_diag.iter().enumerate() {
            out.push((i, i, scale(i, i, d)));
        }
        let inner = self.points_per_edge - 1;
        for c in &self.chains {
            let diag = &self.kinds[c.kind];
            let off = -1.0 / c.h;
            for k in 0..inner {
                let i = c.offset + k;
                out.push((i, i, scale(i, i, diag[k])));
                if k + 1 < inner {
                    out.push((i, i + 1, scale(i, i + 1, off)));
                    out.push((i + 1, i, scale(i + 1, i, off)));
                }
            }
            for (end, k) in [(c.ends[0], 0), (c.ends[1], inner - 1)] {
                if let Some(v) = end {
                    let i = c.offset + k;
                    out.push((v, i, scale(v, i, off)));
                    out.push((i, v, scale(i, v, off)));
                }
            }
        }
        out
    }

    /// Dense copy of the symmetric operator, for small models and tests.
    pub fn dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.size, self.size);
        for (i, j, v) in self.entries() {
            a[(i, j)] += v;
        }
        a
    }

    /// Euclidean norms of the tube-vertex values per column of a vector
    /// given in the symmetric (mass-scaled) coordinates.
    pub fn column_norms(&self, vector: &DVector<f64>) -> Vec<f64> {
        let mass = self.mass();
        let mut norms = vec![0.0; self.columns + 1];
        for (slot, label) in self.labels.iter().enumerate() {
            if let VertexLabel::Tube(v) = label {
                let u = vector[slot] / mass[slot].sqrt();
                norms[v.column as usize] += u * u;
            }
        }
        norms.iter().map(|s| s.sqrt()).collect()
    }
}
