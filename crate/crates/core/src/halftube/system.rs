use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::{EdgeTarget, HalfTubeConfig};
use crate::dispersion::{cross_flux, mode_set, FloquetMode, ModeClass, ModeSet};
use crate::edge_ode::{transfer_constants, TransferConstants};
use crate::error::{Error, Result};
use crate::lattice::VertexId;
use crate::linalg::{self, c, CMatrix, CVector};

/// Relative distance below which a mode counts as the partner of another.
const PARTNER_TOL: f64 = 1e-6;
/// `σ_min / σ_max` of the equilibrated restricted matrix below which the
/// scattering problem is treated as singular.
const SINGULAR_RCOND: f64 = 1e-13;

/// One scaled mode used as a basis function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub mode: FloquetMode,
    pub kappa: Complex64,
}

impl Channel {
    pub fn value(&self, config: &HalfTubeConfig, v: VertexId) -> Complex64 {
        let (x, y) = config.params.raw(v);
        self.kappa * self.mode.value_at(&config.params, x, y)
    }

    pub fn propagating(&self) -> bool {
        self.mode.class.is_propagating()
    }
}

/// Incoming (leftward) channels and their outgoing partners, index-aligned.
///
/// Propagating channels carry unit flux; each evanescent pair satisfies
/// `[outgoing, incoming] = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channels {
    pub incoming: Vec<Channel>,
    pub outgoing: Vec<Channel>,
}

impl Channels {
    pub fn len(&self) -> usize {
        self.incoming.len()
    }

    pub fn is_empty(&self) -> bool {
        self.incoming.is_empty()
    }

    pub fn propagating(&self) -> Vec<bool> {
        self.incoming.iter().map(Channel::propagating).collect()
    }

    pub fn build(
        modes: &ModeSet,
        params: &crate::lattice::TubeParams,
        tube: &TransferConstants,
    ) -> Result<Self> {
        if modes.band_edge {
            return Err(Error::BandEdge {
                lambda: modes.lambda,
            });
        }
        let mut left: Vec<FloquetMode> = modes.leftward().copied().collect();
        left.sort_by(|p, q| {
            p.ell
                .cmp(&q.ell)
                .then(p.z1.arg().total_cmp(&q.z1.arg()))
                .then(p.z1.norm().total_cmp(&q.z1.norm()))
        });
        let right: Vec<FloquetMode> = modes.rightward().copied().collect();
        let mut used = vec![false; right.len()];
        let mut incoming = Vec::with_capacity(left.len());
        let mut outgoing = Vec::with_capacity(left.len());
        for m in left {
            let (t1, t2) = if m.class == ModeClass::LeftProp {
                (m.z1.conj(), m.z2.conj())
            } else {
                (m.z1.conj().inv(), m.z2.conj().inv())
            };
            let want = if m.class == ModeClass::LeftProp {
                ModeClass::RightProp
            } else {
                ModeClass::RightEvan
            };
            let dist = |r: &FloquetMode| {
                (r.z1 - t1).norm() / t1.norm().max(1.0) + (r.z2 - t2).norm() / t2.norm().max(1.0)
            };
            let best = (0..right.len())
                .filter(|&i| !used[i] && right[i].class == want)
                .min_by(|&i, &j| dist(&right[i]).total_cmp(&dist(&right[j])))
                .ok_or_else(|| {
                    Error::Classification(format!("no partner for mode z1 = {}", m.z1))
                })?;
            if dist(&right[best]) > PARTNER_TOL {
                return Err(Error::Classification(format!(
                    "partner of z1 = {} is {} away",
                    m.z1,
                    dist(&right[best])
                )));
            }
            used[best] = true;
            let r = right[best];
            if want == ModeClass::RightProp {
                incoming.push(Channel {
                    mode: m,
                    kappa: c(m.self_flux.abs().sqrt().recip(), 0.0),
                });
                outgoing.push(Channel {
                    mode: r,
                    kappa: c(r.self_flux.abs().sqrt().recip(), 0.0),
                });
            } else {
                let f = cross_flux(&r, &m, params, tube);
                if f.norm() == 0.0 || !f.norm().is_finite() {
                    return Err(Error::Classification(format!(
                        "evanescent pair at z1 = {} has zero flux",
                        m.z1
                    )));
                }
                let root = f.norm().sqrt();
                outgoing.push(Channel {
                    mode: r,
                    kappa: c(root.recip(), 0.0),
                });
                incoming.push(Channel {
                    mode: m,
                    kappa: c(root, 0.0) / f,
                });
            }
        }
        Ok(Channels { incoming, outgoing })
    }
}

/// Transfer constants of every edge that enters the boundary system.
#[derive(Debug, Clone)]
pub struct EdgeData {
    pub tube: TransferConstants,
    pub aux: Vec<TransferConstants>,
}

impl EdgeData {
    pub fn new(lambda: f64, config: &HalfTubeConfig) -> Result<Self> {
        let tube = transfer_constants(lambda, &config.potential, 1.0)?;
        if tube.is_dirichlet() {
            return Err(Error::DirichletSpectrum {
                lambda,
                edge: "the tube edges".into(),
            });
        }
        let aux = config
            .aux
            .edges
            .iter()
            .enumerate()
            .map(|(k, e)| {
                let t = transfer_constants(lambda, &e.potential, e.length)?;
                if t.is_dirichlet() {
                    return Err(Error::DirichletSpectrum {
                        lambda,
                        edge: format!("aux edge {k}"),
                    });
                }
                Ok(t)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EdgeData { tube, aux })
    }
}

/// The boundary system at one energy.
#[derive(Debug, Clone)]
pub struct HalfTubeSystem {
    pub lambda: f64,
    pub edges: EdgeData,
    pub modes: ModeSet,
    pub channels: Channels,
    /// Columns: aux values, outgoing channels, incoming channels.
    pub f: CMatrix,
}

impl HalfTubeSystem {
    pub fn new(lambda: f64, config: &HalfTubeConfig) -> Result<Self> {
        config.validate()?;
        let edges = EdgeData::new(lambda, config)?;
        let modes = mode_set(lambda, &config.params, &edges.tube)?;
        let channels = Channels::build(&modes, &config.params, &edges.tube)?;
        let f = assemble(config, &edges, &channels);
        Ok(HalfTubeSystem {
            lambda,
            edges,
            modes,
            channels,
            f,
        })
    }

    pub fn gamma(&self) -> usize {
        self.f.nrows() - self.channels.len()
    }

    /// Columns for the aux values and outgoing coefficients.
    pub fn restricted(&self) -> CMatrix {
        let keep = self.gamma() + self.channels.len();
        self.f.columns(0, keep).into_owned()
    }

    /// Scales for the restricted columns. Channel columns use the size of
    /// the mode near the boundary rather than the column entries, which may
    /// be pure rounding noise when a mode satisfies the conditions alone.
    pub fn column_scales(&self, config: &HalfTubeConfig) -> Vec<f64> {
        let gamma = self.gamma();
        let restricted = self.restricted();
        let mut scales = column_scales(&restricted.columns(0, gamma).into_owned());
        let params = &config.params;
        for ch in &self.channels.outgoing {
            let mut size: f64 = 0.0;
            for n in 0..params.rings() {
                let v = VertexId { column: 0, ring: n };
                size = size.max(ch.value(config, v).norm());
                for w in params.neighbors(v).all() {
                    if w.column >= 0 {
                        size = size.max(ch.value(config, w).norm());
                    }
                }
            }
            scales.push(if size > 0.0 { size.recip() } else { 1.0 });
        }
        scales
    }

    pub fn incoming_block(&self) -> CMatrix {
        let start = self.gamma() + self.channels.len();
        self.f.columns(start, self.channels.len()).into_owned()
    }
}

/// Boundary matrix `F` for the given modes.
pub fn assemble_f(lambda: f64, config: &HalfTubeConfig, modes: &ModeSet) -> Result<CMatrix> {
    config.validate()?;
    let edges = EdgeData::new(lambda, config)?;
    let channels = Channels::build(modes, &config.params, &edges.tube)?;
    Ok(assemble(config, &edges, &channels))
}

fn assemble(config: &HalfTubeConfig, edges: &EdgeData, channels: &Channels) -> CMatrix {
    let params = &config.params;
    let rings = params.rings();
    let gamma = config.aux_count();
    let nc = channels.len();
    let basis: Vec<&Channel> = channels
        .outgoing
        .iter()
        .chain(channels.incoming.iter())
        .collect();
    let mut f = CMatrix::zeros(gamma + rings, gamma + 2 * nc);
    let tube = &edges.tube;

    // Boundary vertex rows.
    for n in 0..rings {
        let row = gamma + n;
        let robin = config.boundary_robin[n];
        let v = VertexId { column: 0, ring: n };
        let inside: Vec<VertexId> = params
            .neighbors(v)
            .all()
            .into_iter()
            .filter(|w| w.column >= 0)
            .collect();
        for (j, ch) in basis.iter().enumerate() {
            let uv = ch.value(config, v);
            let mut deriv = c(0.0, 0.0);
            for &w in &inside {
                deriv += (ch.value(config, w) - uv * tube.c) / tube.s;
            }
            f[(row, gamma + j)] += uv * robin.a + deriv * robin.b;
        }
    }
    // Auxiliary edges.
    for (k, e) in config.aux.edges.iter().enumerate() {
        let t = &edges.aux[k];
        let (cc, ss) = (t.c, t.s);
        match e.to {
            EdgeTarget::Aux(w) => {
                let (ra, rb) = (config.aux.vertices[e.from], config.aux.vertices[w]);
                f[(e.from, w)] += c(ra.b / ss, 0.0);
                f[(e.from, e.from)] -= c(ra.b * cc / ss, 0.0);
                f[(w, e.from)] += c(rb.b / ss, 0.0);
                f[(w, w)] -= c(rb.b * cc / ss, 0.0);
            }
            EdgeTarget::Ring(n) => {
                let ra = config.aux.vertices[e.from];
                let rn = config.boundary_robin[n];
                let v = VertexId { column: 0, ring: n };
                f[(e.from, e.from)] -= c(ra.b * cc / ss, 0.0);
                f[(gamma + n, e.from)] += c(rn.b / ss, 0.0);
                for (j, ch) in basis.iter().enumerate() {
                    let uv = ch.value(config, v);
                    f[(e.from, gamma + j)] += uv * (ra.b / ss);
                    f[(gamma + n, gamma + j)] -= uv * (rn.b * cc / ss);
                }
            }
        }
    }
    for (i, r) in config.aux.vertices.iter().enumerate() {
        f[(i, i)] += c(r.a, 0.0);
    }
    f
}

/// Outcome of a scattering solve.
#[derive(Debug, Clone)]
pub enum Scattering {
    Solved(ScatteringResult),
    /// The restricted system is singular: a bound state sits at this energy.
    BoundState {
        lambda: f64,
        rcond: f64,
    },
}

#[derive(Debug, Clone)]
pub struct ScatteringResult {
    pub lambda: f64,
    /// Column `j`: outgoing coefficients for unit incoming coefficient `j`.
    pub s: CMatrix,
    /// Column `j`: aux vertex values for unit incoming coefficient `j`.
    pub aux_values: CMatrix,
    pub channels: Channels,
    /// Largest conservation-law defect over unit propagating excitations.
    pub flux_residual: f64,
    /// `max |S_pp† S_pp - I|` over the propagating block.
    pub unitarity_residual: f64,
}

impl ScatteringResult {
    pub fn propagating_block(&self) -> CMatrix {
        let idx: Vec<usize> = self
            .channels
            .propagating()
            .iter()
            .enumerate()
            .filter(|p| *p.1)
            .map(|p| p.0)
            .collect();
        CMatrix::from_fn(idx.len(), idx.len(), |i, j| self.s[(idx[i], idx[j])])
    }
}

/// Conservation-law value `Σ_prop (|c+|² - |c-|²) + 2 Σ_evan Re(c̄+ c-)`.
pub fn conservation_defect(channels: &Channels, out: &CVector, inc: &CVector) -> f64 {
    channels
        .propagating()
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            if p {
                out[i].norm_sqr() - inc[i].norm_sqr()
            } else {
                2.0 * (out[i].conj() * inc[i]).re
            }
        })
        .sum()
}

/// Column scaling that makes every column of `m` have unit max-modulus.
pub(crate) fn column_scales(m: &CMatrix) -> Vec<f64> {
    m.column_iter()
        .map(|col| {
            let s = col.iter().fold(0.0f64, |a, z| a.max(z.norm()));
            if s > 0.0 {
                s.recip()
            } else {
                1.0
            }
        })
        .collect()
}

pub fn scattering_matrix(lambda: f64, config: &HalfTubeConfig) -> Result<Scattering> {
    let sys = HalfTubeSystem::new(lambda, config)?;
    let gamma = sys.gamma();
    let nc = sys.channels.len();
    let restricted = sys.restricted();
    let scales = sys.column_scales(config);
    let mut scaled = restricted.clone();
    for (j, s) in scales.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*s);
    }
    let sv = scaled.clone().singular_values();
    let smax = sv.iter().fold(0.0f64, |a, &v| a.max(v));
    let smin = sv.iter().fold(f64::INFINITY, |a, &v| a.min(v));
    let rcond = if smax > 0.0 { smin / smax } else { 0.0 };
    if rcond < SINGULAR_RCOND {
        return Ok(Scattering::BoundState { lambda, rcond });
    }
    let rhs = -sys.incoming_block();
    let mut sol = scaled
        .lu()
        .solve(&rhs)
        .ok_or(Error::Internal("LU solve failed".into()))?;
    for (i, s) in scales.iter().enumerate() {
        sol.row_mut(i).scale_mut(*s);
    }
    let aux_values = sol.rows(0, gamma).into_owned();
    let s = sol.rows(gamma, nc).into_owned();

    let propagating = sys.channels.propagating();
    let mut flux_residual: f64 = 0.0;
    for j in (0..nc).filter(|&j| propagating[j]) {
        let mut inc = CVector::zeros(nc);
        inc[j] = c(1.0, 0.0);
        let out = s.column(j).into_owned();
        flux_residual = flux_residual.max(conservation_defect(&sys.channels, &out, &inc).abs());
    }
    let mut result = ScatteringResult {
        lambda,
        s,
        aux_values,
        channels: sys.channels,
        flux_residual,
        unitarity_residual: 0.0,
    };
    let block = result.propagating_block();
    let gram = block.adjoint() * &block - CMatrix::identity(block.nrows(), block.ncols());
    result.unitarity_residual = linalg::max_abs(&gram);
    Ok(Scattering::Solved(result))
}

/// Vertex values of the field `Σ_j x_j (outgoing channel j)` plus aux values.
#[derive(Debug, Clone)]
pub struct Field<'a> {
    pub config: &'a HalfTubeConfig,
    pub outgoing: &'a [Channel],
    pub aux: Vec<Complex64>,
    pub coefficients: Vec<Complex64>,
}

impl Field<'_> {
    pub fn value(&self, v: VertexId) -> Complex64 {
        self.outgoing
            .iter()
            .zip(&self.coefficients)
            .map(|(ch, x)| *x * ch.value(self.config, v))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edge_ode::EdgePotential;
    use crate::halftube::config::{AuxEdge, AuxGraph, Robin};
    use crate::lattice::make_params;

    fn pi5_lambda() -> f64 {
        ((-1.0 + (2.0 * std::f64::consts::PI / 5.0).cos()) / 2.0f64)
            .acos()
            .powi(2)
    }

    #[test]
    fn neumann_shape_and_delta_one_reduction() {
        let p = make_params(2, 5, 1).unwrap();
        let cfg = HalfTubeConfig::neumann(p.clone(), EdgePotential::Zero);
        let lambda = 2.3;
        let sys = HalfTubeSystem::new(lambda, &cfg).unwrap();
        assert_eq!(sys.f.shape(), (5, 10));
        // Row n against the closed form in z for a Robin condition (a, b).
        let robin: Vec<Robin> = (0..5)
            .map(|n| Robin {
                a: 0.3 * n as f64 - 0.5,
                b: 1.0 + 0.1 * n as f64,
            })
            .collect();
        let cfg = HalfTubeConfig::new(
            p.clone(),
            EdgePotential::Zero,
            robin.clone(),
            AuxGraph::default(),
        )
        .unwrap();
        let sys = HalfTubeSystem::new(lambda, &cfg).unwrap();
        let (k, cs) = (lambda.sqrt(), lambda.sqrt().cos());
        let basis: Vec<&Channel> = sys
            .channels
            .outgoing
            .iter()
            .chain(&sys.channels.incoming)
            .collect();
        for n in 0..5 {
            let chi = p.boundary_flags[n] as f64;
            for (j, ch) in basis.iter().enumerate() {
                let z = ch.mode.z;
                let zr = z.powi(p.exponents[n] as i32);
                let expected = ch.kappa
                    * (zr * robin[n].a
                        + zr * (robin[n].b * k / k.sin())
                            * (z.powi(5) + z.powi(2) - 2.0 * cs + (z.powi(-2) - cs) * chi));
                let got = sys.f[(n, j)];
                assert!(
                    (got - expected).norm() < 1e-10 * expected.norm().max(1.0),
                    "{got} {expected}"
                );
            }
        }
    }

    #[test]
    fn scattering_conserves_flux() {
        let p = make_params(2, 5, 1).unwrap();
        let cfg = HalfTubeConfig::neumann(p, EdgePotential::Zero);
        let Scattering::Solved(r) = scattering_matrix(pi5_lambda() + 1e-3, &cfg).unwrap() else {
            panic!("unexpected bound state");
        };
        assert!(r.flux_residual <= 1e-9, "{}", r.flux_residual);
        assert!(r.unitarity_residual <= 1e-8);
        assert!(r.propagating_block().nrows() >= 1);
        assert_eq!(r.s.nrows(), 5);
    }

    #[test]
    fn conservation_holds_for_every_excitation_with_aux() {
        let p = make_params(3, 5, 2).unwrap();
        let robin = (0..10)
            .map(|n| Robin {
                a: (n as f64 * 0.7).sin(),
                b: 1.0,
            })
            .collect();
        let aux = AuxGraph {
            vertices: vec![Robin { a: 0.2, b: 1.0 }, Robin::NEUMANN],
            edges: vec![
                AuxEdge {
                    from: 0,
                    to: EdgeTarget::Ring(3),
                    length: 0.8,
                    potential: EdgePotential::Zero,
                },
                AuxEdge {
                    from: 0,
                    to: EdgeTarget::Aux(1),
                    length: 1.3,
                    potential: EdgePotential::Zero,
                },
                AuxEdge {
                    from: 1,
                    to: EdgeTarget::Ring(7),
                    length: 0.6,
                    potential: EdgePotential::Zero,
                },
            ],
        };
        let cfg = HalfTubeConfig::new(p, EdgePotential::Zero, robin, aux).unwrap();
        for &lambda in &[1.7, 5.5, 14.0] {
            let Scattering::Solved(r) = scattering_matrix(lambda, &cfg).unwrap() else {
                panic!()
            };
            assert!(r.flux_residual <= 1e-9, "{lambda}: {}", r.flux_residual);
            assert!(r.unitarity_residual <= 1e-8);
        }
    }

    #[test]
    fn aux_dirichlet_edge_is_named() {
        let p = make_params(1, 2, 1).unwrap();
        let aux = AuxGraph {
            vertices: vec![Robin::NEUMANN],
            edges: vec![AuxEdge {
                from: 0,
                to: EdgeTarget::Ring(0),
                length: 0.7,
                potential: EdgePotential::Zero,
            }],
        };
        let cfg =
            HalfTubeConfig::new(p, EdgePotential::Zero, vec![Robin::NEUMANN; 2], aux).unwrap();
        let lambda = (std::f64::consts::PI / 0.7).powi(2);
        match HalfTubeSystem::new(lambda, &cfg) {
            Err(Error::DirichletSpectrum { edge, .. }) => assert_eq!(edge, "aux edge 0"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn band_edge_is_rejected() {
        let p = make_params(2, 5, 1).unwrap();
        let cfg = HalfTubeConfig::neumann(p, EdgePotential::Zero);
        assert!(matches!(
            HalfTubeSystem::new(0.0, &cfg),
            Err(Error::BandEdge { .. })
        ));
    }
}
