use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::{AuxGraph, EdgeTarget, HalfTubeConfig, Robin};
use super::system::{Channel, EdgeData, Field, HalfTubeSystem};
use crate::bands::{in_spectrum, spectrum_bands};
use crate::dispersion::{sector_eta, FloquetMode};
use crate::edge_ode::{dirichlet_spectrum_on, transfer_constants, EdgePotential};
use crate::error::{Error, Result};
use crate::lattice::{TubeParams, VertexId};
use crate::linalg::{self, c, CMatrix};

/// Smallest singular value below which a scan minimum counts as a bound state.
pub const DETECTION_TOL: f64 = 1e-6;
/// Scan points this close to a band edge or Dirichlet point are skipped.
pub const EXCLUSION_RADIUS: f64 = 1e-6;
/// Columns reconstructed by [`verify_bound_state`].
pub const VERIFY_COLUMNS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundStateCandidate {
    pub lambda: f64,
    pub smallest_singular_value: f64,
    /// Aux vertex values.
    pub aux_values: Vec<Complex64>,
    /// Coefficients of the outgoing channels.
    pub coefficients: Vec<Complex64>,
    pub embedded: bool,
    /// Largest modulus among propagating outgoing coefficients.
    pub propagating_amplitude: f64,
    pub residual: f64,
    pub decay_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub candidates: Vec<BoundStateCandidate>,
    /// Grid points dropped for lying near a band edge or Dirichlet point.
    pub skipped: Vec<f64>,
}

/// The bound-state system: `F` without incoming columns, plus one row per
/// propagating outgoing channel forcing its coefficient to zero.
pub fn bound_system(sys: &HalfTubeSystem) -> CMatrix {
    let restricted = sys.restricted();
    let gamma = sys.gamma();
    let prop: Vec<usize> = sys
        .channels
        .propagating()
        .iter()
        .enumerate()
        .filter(|p| *p.1)
        .map(|p| p.0)
        .collect();
    let (rows, cols) = restricted.shape();
    let mut m = CMatrix::zeros(rows + prop.len(), cols);
    m.view_mut((0, 0), (rows, cols)).copy_from(&restricted);
    for (k, &j) in prop.iter().enumerate() {
        m[(rows + k, gamma + j)] = c(1.0, 0.0);
    }
    m
}

/// Smallest singular value of the equilibrated bound-state system and the
/// matching null vector in unscaled unknowns.
pub fn bound_sigma(sys: &HalfTubeSystem, config: &HalfTubeConfig) -> Result<(f64, Vec<Complex64>)> {
    let mut m = bound_system(sys);
    let scales = sys.column_scales(config);
    for (j, s) in scales.iter().enumerate() {
        m.column_mut(j).scale_mut(*s);
    }
    for mut row in m.row_iter_mut() {
        let n = row.norm();
        if n > 0.0 {
            row.scale_mut(n.recip());
        }
    }
    let (sigma, v) = linalg::smallest_singular(&m)?;
    let mut x: Vec<Complex64> = v.iter().zip(&scales).map(|(z, s)| z * *s).collect();
    let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        // Fix the phase on the largest entry for reproducible output.
        let big = x
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or(c(1.0, 0.0));
        let phase = big.conj() / big.norm();
        for z in x.iter_mut() {
            *z *= phase / norm;
        }
    }
    Ok((sigma, x))
}

fn sigma_at(lambda: f64, config: &HalfTubeConfig) -> f64 {
    HalfTubeSystem::new(lambda, config)
        .and_then(|s| bound_sigma(&s, config))
        .map(|r| r.0)
        .unwrap_or(f64::INFINITY)
}

/// Energies to keep away from: band edges of the tube and Dirichlet points
/// of every edge, inside `window`.
pub fn excluded_points(window: (f64, f64), config: &HalfTubeConfig) -> Result<Vec<f64>> {
    let mut pts = Vec::new();
    for b in spectrum_bands(window, &config.params, &config.potential)? {
        pts.push(b.lambda_lo);
        pts.push(b.lambda_hi);
    }
    pts.extend(dirichlet_spectrum_on(&config.potential, 1.0, window)?);
    for e in &config.aux.edges {
        pts.extend(dirichlet_spectrum_on(&e.potential, e.length, window)?);
    }
    pts.retain(|&l| l > window.0 && l < window.1);
    pts.sort_by(f64::total_cmp);
    Ok(pts)
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if b - a <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0) {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn par_map<T: Send, R: Send>(items: Vec<T>, f: impl Fn(T) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().map(f).collect()
    }
}

/// Scans `window` on `grid` points for rank drops of the bound-state system.
pub fn bound_state_scan(
    window: (f64, f64),
    config: &HalfTubeConfig,
    grid: usize,
) -> Result<ScanReport> {
    config.validate()?;
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite()) || hi <= lo || grid < 3 {
        return Err(Error::Parameters(format!(
            "bad scan window ({lo}, {hi}) or grid {grid}"
        )));
    }
    let excluded = excluded_points(window, config)?;
    let near = |l: f64| excluded.iter().any(|&e| (l - e).abs() < EXCLUSION_RADIUS);
    let points: Vec<f64> = (0..grid)
        .map(|i| lo + (hi - lo) * i as f64 / (grid - 1) as f64)
        .collect();
    let skipped: Vec<f64> = points.iter().copied().filter(|&l| near(l)).collect();
    let sigmas = par_map(points.clone(), |l| {
        if near(l) {
            f64::INFINITY
        } else {
            sigma_at(l, config)
        }
    });

    let mut found: Vec<f64> = Vec::new();
    for i in 0..grid {
        let s = sigmas[i];
        if !s.is_finite() {
            continue;
        }
        let left = if i > 0 { sigmas[i - 1] } else { f64::INFINITY };
        let right = if i + 1 < grid {
            sigmas[i + 1]
        } else {
            f64::INFINITY
        };
        if s <= left && s < right {
            let a = points[i.saturating_sub(1)];
            let b = points[(i + 1).min(grid - 1)];
            let (l, v) = golden_min(
                |l| {
                    if near(l) {
                        f64::INFINITY
                    } else {
                        sigma_at(l, config)
                    }
                },
                a,
                b,
            );
            let (l, v) = if v <= s { (l, v) } else { (points[i], s) };
            if v < DETECTION_TOL
                && !found
                    .iter()
                    .any(|&f| (f - l).abs() < 1e-9 * l.abs().max(1.0))
            {
                found.push(l);
            }
        }
    }
    let candidates = found
        .into_iter()
        .map(|l| candidate_at(l, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanReport {
        candidates,
        skipped,
    })
}

/// Builds the candidate at `lambda` from the null vector of the bound-state system.
pub fn candidate_at(lambda: f64, config: &HalfTubeConfig) -> Result<BoundStateCandidate> {
    let sys = HalfTubeSystem::new(lambda, config)?;
    let (sigma, x) = bound_sigma(&sys, config)?;
    let gamma = sys.gamma();
    let mut cand = BoundStateCandidate {
        lambda,
        smallest_singular_value: sigma,
        aux_values: x[..gamma].to_vec(),
        coefficients: x[gamma..].to_vec(),
        embedded: in_spectrum(lambda, &config.params, &config.potential)?.0,
        propagating_amplitude: 0.0,
        residual: 0.0,
        decay_ratio: 0.0,
    };
    cand.propagating_amplitude = sys
        .channels
        .propagating()
        .iter()
        .zip(&cand.coefficients)
        .filter(|p| *p.0)
        .fold(0.0, |a, p| a.max(p.1.norm()));
    let check = verify_bound_state(&cand, config)?;
    cand.residual = check.residual;
    cand.decay_ratio = check.decay_ratio;
    Ok(cand)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    /// Largest vertex-condition violation relative to the largest vertex value.
    pub residual: f64,
    /// `(|u(column 20)| / |u(column 0)|)^(1/20)`.
    pub decay_ratio: f64,
}

/// Rebuilds the field of `candidate` on columns `0..=20` and the aux graph
/// and checks every vertex condition directly from the lattice.
pub fn verify_bound_state(
    candidate: &BoundStateCandidate,
    config: &HalfTubeConfig,
) -> Result<Verification> {
    let sys = HalfTubeSystem::new(candidate.lambda, config)?;
    if candidate.coefficients.len() != sys.channels.len()
        || candidate.aux_values.len() != config.aux_count()
    {
        return Err(Error::Parameters(
            "candidate does not match the configuration".into(),
        ));
    }
    let field = Field {
        config,
        outgoing: &sys.channels.outgoing,
        aux: candidate.aux_values.clone(),
        coefficients: candidate.coefficients.clone(),
    };
    Ok(check_field(&field, &sys.edges))
}

fn check_field(field: &Field, edges: &EdgeData) -> Verification {
    let config = field.config;
    let params = &config.params;
    let rings = params.rings();
    let cols = VERIFY_COLUMNS as i64;
    let tube = &edges.tube;
    let value = |v: VertexId| field.value(v);
    let deriv = |t: &crate::edge_ode::TransferConstants, u0: Complex64, u1: Complex64| {
        t.endpoint_derivatives(u0, u1).0
    };

    let mut scale: f64 = field.aux.iter().fold(0.0, |a, z| a.max(z.norm()));
    for m in 0..=cols + 1 {
        for n in 0..rings {
            scale = scale.max(value(VertexId { column: m, ring: n }).norm());
        }
    }
    let col_norm = |m: i64| {
        (0..rings)
            .map(|n| value(VertexId { column: m, ring: n }).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    let (first, last) = (col_norm(0), col_norm(cols));
    let decay_ratio = if first > 0.0 {
        (last / first).powf(1.0 / cols as f64)
    } else {
        0.0
    };
    if scale == 0.0 {
        return Verification {
            residual: 0.0,
            decay_ratio,
        };
    }

    let mut worst: f64 = 0.0;
    // Boundary sums collect attachment-edge derivatives as well.
    let mut boundary: Vec<Complex64> = vec![c(0.0, 0.0); rings];
    let mut aux_sum: Vec<Complex64> = vec![c(0.0, 0.0); config.aux_count()];
    for (k, e) in config.aux.edges.iter().enumerate() {
        let t = &edges.aux[k];
        let u0 = field.aux[e.from];
        let u1 = match e.to {
            EdgeTarget::Aux(w) => field.aux[w],
            EdgeTarget::Ring(n) => value(VertexId { column: 0, ring: n }),
        };
        let (d0, d1) = t.endpoint_derivatives(u0, u1);
        aux_sum[e.from] += d0;
        match e.to {
            EdgeTarget::Aux(w) => aux_sum[w] += d1,
            EdgeTarget::Ring(n) => boundary[n] += d1,
        }
    }
    for (i, r) in config.aux.vertices.iter().enumerate() {
        let viol = (field.aux[i] * r.a + aux_sum[i] * r.b).norm() / r.norm();
        worst = worst.max(viol);
    }
    for m in 0..=cols {
        for n in 0..rings {
            let v = VertexId { column: m, ring: n };
            let uv = value(v);
            let mut sum = if m == 0 { boundary[n] } else { c(0.0, 0.0) };
            let (x, y) = params.raw(v);
            for (dx, dy) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                let w = params.canonicalize(x + dx, y + dy);
                if w.column >= 0 {
                    sum += deriv(tube, uv, value(w));
                }
            }
            let viol = if m == 0 {
                let r: Robin = config.boundary_robin[n];
                (uv * r.a + sum * r.b).norm() / r.norm()
            } else {
                sum.norm()
            };
            worst = worst.max(viol);
        }
    }
    Verification {
        residual: worst / scale,
        decay_ratio,
    }
}

/// Hypothesis sets under which a single decaying mode can be matched by
/// Robin conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignCase {
    A,
    B,
    C,
    D,
}

impl std::str::FromStr for DesignCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(DesignCase::A),
            "b" => Ok(DesignCase::B),
            "c" => Ok(DesignCase::C),
            "d" => Ok(DesignCase::D),
            other => Err(Error::Parameters(format!("unknown design case '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub case: DesignCase,
    pub lambda: f64,
    pub config: HalfTubeConfig,
    /// The chosen root and every real root found in the search interval.
    pub z: f64,
    pub roots: Vec<f64>,
    pub z1: f64,
    pub z2: f64,
}

fn f_real(z: f64, params: &TubeParams) -> f64 {
    let (a, b) = (params.alpha as i32, params.beta as i32);
    z.powi(b) + z.powi(-b) + z.powi(a) + z.powi(-a)
}

fn real_roots(interval: (f64, f64), target: f64, params: &TubeParams) -> Vec<f64> {
    const STEPS: usize = 20_000;
    let g = |z: f64| f_real(z, params) - target;
    let (lo, hi) = interval;
    let width = hi - lo;
    let pts: Vec<f64> = (1..STEPS)
        .map(|i| lo + width * i as f64 / STEPS as f64)
        .collect();
    let mut roots = Vec::new();
    for w in pts.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        let (mut ga, gb) = (g(a), g(b));
        if ga == 0.0 {
            roots.push(a);
            continue;
        }
        if (ga < 0.0) == (gb < 0.0) || gb == 0.0 {
            continue;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            let gm = g(m);
            if (gm < 0.0) == (ga < 0.0) {
                a = m;
                ga = gm;
            } else {
                b = m;
            }
        }
        roots.push(0.5 * (a + b));
    }
    roots
}

/// Robin coefficients for which the single sector-0 mode with real `z`
/// solving `f(z) = 4c(λ)` is a bound state of the half-tube.
pub fn design_robin(
    case: DesignCase,
    lambda: f64,
    params: &TubeParams,
    potential: &EdgePotential,
) -> Result<Design> {
    use std::f64::consts::PI;
    if !potential.is_zero() {
        return Err(Error::Parameters(
            "design_robin needs the zero potential".into(),
        ));
    }
    if !lambda.is_finite() {
        return Err(Error::Parameters(format!("lambda = {lambda}")));
    }
    let beta_even = params.beta % 2 == 0;
    let root = lambda.max(0.0).sqrt();
    let phase = root.rem_euclid(2.0 * PI);
    let hypotheses = match case {
        DesignCase::A => lambda < 0.0,
        DesignCase::B => beta_even && lambda < 0.0,
        DesignCase::C => beta_even && lambda > 0.0 && (phase < PI / 2.0 || phase > 3.0 * PI / 2.0),
        DesignCase::D => !beta_even && lambda > 0.0 && phase > PI / 2.0 && phase < 3.0 * PI / 2.0,
    };
    if !hypotheses {
        return Err(Error::Parameters(format!(
            "lambda = {lambda} violates the hypotheses of case {case:?}"
        )));
    }
    if case == DesignCase::D && params.alpha % 2 != 0 {
        return Err(Error::Parameters(format!(
            "case D needs alpha even; with alpha = {} the map f has no value above -4 on (-1, 0)",
            params.alpha
        )));
    }
    let tube = transfer_constants(lambda, potential, 1.0)?;
    if tube.is_dirichlet() {
        return Err(Error::Parameters(format!(
            "lambda = {lambda} lies in the Dirichlet spectrum"
        )));
    }
    let ms = crate::dispersion::mode_set(lambda, params, &tube)?;
    if ms.band_edge {
        return Err(Error::Parameters(format!(
            "lambda = {lambda} is a band edge"
        )));
    }
    let interval = if case == DesignCase::A {
        (0.0, 1.0)
    } else {
        (-1.0, 0.0)
    };
    let roots = real_roots(interval, 4.0 * tube.c, params);
    let z = *roots
        .iter()
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
        .ok_or_else(|| {
            Error::Infeasible(format!(
                "no real root of f(z) = {} in {interval:?}",
                4.0 * tube.c
            ))
        })?;
    let z1 = z.powi(params.beta as i32);
    let z2 = z.powi(-(params.alpha as i32));
    let signs_ok = match case {
        DesignCase::A => z1 > 0.0 && z1 < 1.0 && z2 > 1.0,
        DesignCase::B | DesignCase::C => z1 > 0.0 && z1 < 1.0 && z2 < -1.0,
        DesignCase::D => z1 > -1.0 && z1 < 0.0 && z2 > 1.0,
    };
    if !signs_ok {
        return Err(Error::Internal(format!(
            "sign pattern of (z1, z2) = ({z1}, {z2}) for case {case:?}"
        )));
    }
    let (cc, s) = (tube.c, tube.s);
    let robin = params
        .boundary_flags
        .iter()
        .map(|&chi| Robin {
            a: -(z1 + z2.recip() - 2.0 * cc + (z2 - cc) * chi as f64) / s,
            b: 1.0,
        })
        .collect();
    let config = HalfTubeConfig::new(
        params.clone(),
        EdgePotential::Zero,
        robin,
        AuxGraph::default(),
    )?;
    Ok(Design {
        case,
        lambda,
        config,
        z,
        roots,
        z1,
        z2,
    })
}

impl Design {
    /// The designed state expressed as a candidate: unit coefficient on the
    /// outgoing channel of the designed mode.
    pub fn candidate(&self) -> Result<BoundStateCandidate> {
        let sys = HalfTubeSystem::new(self.lambda, &self.config)?;
        let target = Complex64::new(self.z1, 0.0);
        let idx = sys
            .channels
            .outgoing
            .iter()
            .position(|ch: &Channel| {
                ch.mode.ell == 0
                    && (ch.mode.z - Complex64::new(self.z, 0.0)).norm() < 1e-9
                    && (ch.mode.z1 - target).norm() < 1e-9
            })
            .ok_or_else(|| {
                Error::Internal("designed mode missing from the outgoing channels".into())
            })?;
        let mut coefficients = vec![c(0.0, 0.0); sys.channels.len()];
        coefficients[idx] = sys.channels.outgoing[idx].kappa.inv();
        let mut cand = BoundStateCandidate {
            lambda: self.lambda,
            smallest_singular_value: 0.0,
            aux_values: Vec::new(),
            coefficients,
            embedded: in_spectrum(self.lambda, &self.config.params, &self.config.potential)?.0,
            propagating_amplitude: 0.0,
            residual: 0.0,
            decay_ratio: 0.0,
        };
        let check = verify_bound_state(&cand, &self.config)?;
        cand.residual = check.residual;
        cand.decay_ratio = check.decay_ratio;
        Ok(cand)
    }

    /// The designed mode.
    pub fn mode(&self) -> FloquetMode {
        let z = Complex64::new(self.z, 0.0);
        FloquetMode {
            z,
            z1: Complex64::new(self.z1, 0.0),
            z2: Complex64::new(self.z2, 0.0),
            ell: 0,
            eta: sector_eta(0, &self.config.params),
            class: crate::dispersion::ModeClass::RightEvan,
            self_flux: 0.0,
            multiplicity: 1,
        }
    }
}
