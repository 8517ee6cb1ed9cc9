use serde::{Deserialize, Serialize};

use crate::edge_ode::EdgePotential;
use crate::error::{Error, Result};
use crate::lattice::{make_params, TubeParams};

/// Robin condition `a f(v) + b Σ f'(v) = 0`, derivatives pointing out of `v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Robin {
    pub a: f64,
    pub b: f64,
}

impl Robin {
    pub const NEUMANN: Robin = Robin { a: 0.0, b: 1.0 };

    pub fn norm(&self) -> f64 {
        self.a.hypot(self.b)
    }
}

/// Far end of an auxiliary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeTarget {
    Aux(usize),
    Ring(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxEdge {
    pub from: usize,
    pub to: EdgeTarget,
    pub length: f64,
    #[serde(default)]
    pub potential: EdgePotential,
}

/// Finite graph glued to the boundary vertices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AuxGraph {
    #[serde(default)]
    pub vertices: Vec<Robin>,
    #[serde(default)]
    pub edges: Vec<AuxEdge>,
}

impl AuxGraph {
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty() && self.edges.is_empty()
    }
}

/// A half-tube: boundary Robin data, tube edge potential and auxiliary graph.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfTubeConfig {
    pub params: TubeParams,
    pub potential: EdgePotential,
    pub boundary_robin: Vec<Robin>,
    pub aux: AuxGraph,
}

/// JSON layout of [`HalfTubeConfig`]. Unknown top-level fields are ignored so
/// that annotated configs can be fed back in.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigFile {
    pub alpha: i64,
    pub beta: i64,
    pub delta: i64,
    #[serde(default)]
    pub potential: EdgePotential,
    pub boundary_robin: Vec<Robin>,
    #[serde(default, skip_serializing_if = "AuxGraph::is_empty")]
    pub aux: AuxGraph,
}

impl HalfTubeConfig {
    pub fn new(
        params: TubeParams,
        potential: EdgePotential,
        boundary_robin: Vec<Robin>,
        aux: AuxGraph,
    ) -> Result<Self> {
        let config = HalfTubeConfig {
            params,
            potential,
            boundary_robin,
            aux,
        };
        config.validate()?;
        Ok(config)
    }

    /// Neumann boundary, no auxiliary graph.
    pub fn neumann(params: TubeParams, potential: EdgePotential) -> Self {
        let rings = params.rings();
        HalfTubeConfig {
            params,
            potential,
            boundary_robin: vec![Robin::NEUMANN; rings],
            aux: AuxGraph::default(),
        }
    }

    pub fn aux_count(&self) -> usize {
        self.aux.vertices.len()
    }

    pub fn validate(&self) -> Result<()> {
        let rings = self.params.rings();
        if self.boundary_robin.len() != rings {
            return Err(Error::Config(format!(
                "boundary_robin has {} entries, expected {rings}",
                self.boundary_robin.len()
            )));
        }
        let check = |r: &Robin, what: String| {
            if !(r.a.is_finite() && r.b.is_finite()) || (r.a == 0.0 && r.b == 0.0) {
                Err(Error::Config(format!(
                    "{what}: Robin pair ({}, {}) is not admissible",
                    r.a, r.b
                )))
            } else {
                Ok(())
            }
        };
        for (n, r) in self.boundary_robin.iter().enumerate() {
            check(r, format!("boundary ring {n}"))?;
        }
        for (i, r) in self.aux.vertices.iter().enumerate() {
            check(r, format!("aux vertex {i}"))?;
        }
        let gamma = self.aux_count();
        for (k, e) in self.aux.edges.iter().enumerate() {
            if e.from >= gamma {
                return Err(Error::Config(format!(
                    "aux edge {k} starts at missing vertex {}",
                    e.from
                )));
            }
            match e.to {
                EdgeTarget::Aux(w) if w >= gamma => {
                    return Err(Error::Config(format!(
                        "aux edge {k} ends at missing vertex {w}"
                    )))
                }
                EdgeTarget::Ring(n) if n >= rings => {
                    return Err(Error::Config(format!(
                        "aux edge {k} targets missing ring {n}"
                    )))
                }
                _ => {}
            }
            if !(e.length.is_finite() && e.length > 0.0) {
                return Err(Error::Config(format!(
                    "aux edge {k} has length {}",
                    e.length
                )));
            }
        }
        Ok(())
    }

    pub fn from_file(file: ConfigFile) -> Result<Self> {
        let params = make_params(file.alpha, file.beta, file.delta)?;
        HalfTubeConfig::new(params, file.potential, file.boundary_robin, file.aux)
    }

    pub fn to_file(&self) -> ConfigFile {
        ConfigFile {
            alpha: self.params.alpha,
            beta: self.params.beta,
            delta: self.params.delta,
            potential: self.potential.clone(),
            boundary_robin: self.boundary_robin.clone(),
            aux: self.aux.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ConfigFile = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("malformed config JSON: {e}")))?;
        HalfTubeConfig::from_file(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("config serializes")
    }
}
