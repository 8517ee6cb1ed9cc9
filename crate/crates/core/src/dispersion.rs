//! Complex dispersion relation of the tube and its Floquet modes.
//!
//! For a sector `ℓ ∈ [0, δ)` put `η = e^{-2πiℓ/(βδ)}`. Every solution
//! `(z1, z2)` of `z1 + 1/z1 + z2 + 1/z2 = 4c(λ)`, `z1^{αδ} z2^{βδ} = 1` is
//! `z1 = z^β`, `z2 = η⁻¹ z^{-α}` for exactly one sector and one root `z` of
//! the Laurent polynomial
//!
//! ```text
//! F(z) = z^β + z^{-β} + η z^α + η⁻¹ z^{-α} - 4c(λ).
//! ```
//!
//! Multiplying by `z^β` gives a degree-`2β` polynomial whose roots come from
//! a balanced companion matrix and are then polished by Newton's method on
//! `F` itself. Modes are normalised to `u(v_0) = 1`, so the value at the
//! lattice point `(x, y)` is `z1^x z2^y = η^{-y} z^{βx - αy}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::edge_ode::TransferConstants;
use crate::error::{Error, Result};
use crate::lattice::TubeParams;
use crate::linalg::{self, c, CMatrix, CVector};

/// `| |z1| - 1 |` at or below this counts as the unit circle.
pub const UNIT_TOL: f64 = 1e-8;
/// Roots closer than this (relative) with vanishing `F'` are merged.
pub const CLUSTER_TOL: f64 = 1e-6;
/// `|z F'(z)| / (2β)` below this on the unit circle flags a band edge.
pub const EDGE_DERIV_TOL: f64 = 1e-7;
/// Largest admissible imaginary part of a self-flux.
pub const FLUX_IMAG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeClass {
    RightProp,
    LeftProp,
    RightEvan,
    LeftEvan,
    BandEdge,
}

impl ModeClass {
    pub fn is_rightward(self) -> bool {
        matches!(self, ModeClass::RightProp | ModeClass::RightEvan)
    }

    pub fn is_leftward(self) -> bool {
        matches!(self, ModeClass::LeftProp | ModeClass::LeftEvan)
    }

    pub fn is_propagating(self) -> bool {
        matches!(self, ModeClass::RightProp | ModeClass::LeftProp)
    }

    pub fn label(self) -> &'static str {
        match self {
            ModeClass::RightProp => "right-propagating",
            ModeClass::LeftProp => "left-propagating",
            ModeClass::RightEvan => "right-evanescent",
            ModeClass::LeftEvan => "left-evanescent",
            ModeClass::BandEdge => "band-edge",
        }
    }
}

/// One Floquet mode of the tube at a fixed energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloquetMode {
    pub z: Complex64,
    pub z1: Complex64,
    pub z2: Complex64,
    pub ell: usize,
    pub eta: Complex64,
    pub class: ModeClass,
    /// `[u, u]` for the mode normalised to `u(v_0) = 1`; zero off the unit circle.
    pub self_flux: f64,
    pub multiplicity: usize,
}

impl FloquetMode {
    /// Value at lattice point `(x, y)` for the normalisation `u(v_0) = 1`.
    pub fn value_at(&self, params: &TubeParams, x: i64, y: i64) -> Complex64 {
        let e = params.beta * x - params.alpha * y;
        self.eta.powi(-(y as i32)) * self.z.powi(e as i32)
    }

    /// State vector `(column 0, column 1)` with `u(v_0) = 1`.
    pub fn state(&self, params: &TubeParams) -> CVector {
        let rings = params.rings();
        CVector::from_fn(2 * rings, |i, _| {
            let (col, ring) = (i / rings, i % rings);
            self.value_at(params, col as i64 + params.shifts[ring], ring as i64)
        })
    }

    pub fn on_unit_circle(&self) -> bool {
        (self.z1.norm() - 1.0).abs() <= UNIT_TOL
    }
}

/// All `2βδ` modes at one energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    pub lambda: f64,
    pub modes: Vec<FloquetMode>,
    /// Number of right-propagating modes.
    pub num_propagating_pairs: usize,
    pub band_edge: bool,
}

impl ModeSet {
    pub fn rightward(&self) -> impl Iterator<Item = &FloquetMode> {
        self.modes.iter().filter(|m| m.class.is_rightward())
    }

    pub fn leftward(&self) -> impl Iterator<Item = &FloquetMode> {
        self.modes.iter().filter(|m| m.class.is_leftward())
    }
}

/// `η = e^{-2πiℓ/(βδ)}`.
pub fn sector_eta(ell: usize, params: &TubeParams) -> Complex64 {
    Complex64::from_polar(1.0, -2.0 * PI * ell as f64 / params.rings() as f64)
}

/// `F(z)` including the `-4c` term.
pub fn laurent_value(z: Complex64, eta: Complex64, params: &TubeParams, four_c: f64) -> Complex64 {
    let (a, b) = (params.alpha as i32, params.beta as i32);
    z.powi(b) + z.powi(-b) + eta * z.powi(a) + z.powi(-a) / eta - four_c
}

/// `F'(z)`.
pub fn laurent_derivative(z: Complex64, eta: Complex64, params: &TubeParams) -> Complex64 {
    let (a, b) = (params.alpha as i32, params.beta as i32);
    let (af, bf) = (a as f64, b as f64);
    bf * (z.powi(b - 1) - z.powi(-b - 1)) + af * (eta * z.powi(a - 1) - z.powi(-a - 1) / eta)
}

fn check_not_dirichlet(constants: &TubeConstants) -> Result<()> {
    if constants.is_dirichlet() {
        return Err(Error::DirichletSpectrum {
            lambda: constants.lambda,
            edge: "the tube edges".into(),
        });
    }
    Ok(())
}

type TubeConstants = TransferConstants;

/// Roots of `F` for sector `ℓ`, with multiplicities summing to `2β`.
pub fn laurent_roots(
    lambda: f64,
    ell: usize,
    params: &TubeParams,
    constants: &TransferConstants,
) -> Result<Vec<(Complex64, usize)>> {
    let _ = lambda;
    check_not_dirichlet(constants)?;
    let (a, b) = (params.alpha as usize, params.beta as usize);
    let eta = sector_eta(ell, params);
    let four_c = 4.0 * constants.c;

    // Ascending coefficients of z^β F(z).
    let n = 2 * b;
    let mut coeff = vec![c(0.0, 0.0); n + 1];
    coeff[0] += 1.0;
    coeff[b - a] += eta.inv();
    coeff[b] -= four_c;
    coeff[b + a] += eta;
    coeff[n] += 1.0;
    let mut companion = CMatrix::zeros(n, n);
    for i in 1..n {
        companion[(i, i - 1)] = c(1.0, 0.0);
    }
    for i in 0..n {
        companion[(i, n - 1)] = -coeff[i];
    }
    let raw = linalg::eigenvalues(&companion)?;

    let polished: Vec<Complex64> = raw
        .into_iter()
        .map(|z| newton(z, eta, params, four_c))
        .collect();
    Ok(cluster(polished, eta, params))
}

fn newton(mut z: Complex64, eta: Complex64, params: &TubeParams, four_c: f64) -> Complex64 {
    let mut best = z;
    let mut best_res = laurent_value(z, eta, params, four_c).norm();
    for _ in 0..60 {
        let d = laurent_derivative(z, eta, params);
        if d.norm() == 0.0 {
            break;
        }
        let step = laurent_value(z, eta, params, four_c) / d;
        z -= step;
        let res = laurent_value(z, eta, params, four_c).norm();
        if res < best_res {
            best = z;
            best_res = res;
        }
        if step.norm() <= 1e-16 * z.norm() {
            break;
        }
    }
    best
}

fn cluster(roots: Vec<Complex64>, eta: Complex64, params: &TubeParams) -> Vec<(Complex64, usize)> {
    let scale = 2.0 * params.beta as f64;
    let mut used = vec![false; roots.len()];
    let mut out = Vec::new();
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut members = vec![roots[i]];
        let flat =
            |z: Complex64| (z * laurent_derivative(z, eta, params)).norm() / scale < CLUSTER_TOL;
        if flat(roots[i]) {
            for j in i + 1..roots.len() {
                let close = (roots[j] - roots[i]).norm() < CLUSTER_TOL * roots[i].norm().max(1.0);
                if !used[j] && close && flat(roots[j]) {
                    used[j] = true;
                    members.push(roots[j]);
                }
            }
        }
        let mean = members.iter().sum::<Complex64>() / members.len() as f64;
        out.push((mean, members.len()));
    }
    out
}

/// `(z1, z2) = (z^β, η⁻¹ z^{-α})`.
pub fn floquet_pair(z: Complex64, ell: usize, params: &TubeParams) -> (Complex64, Complex64) {
    let eta = sector_eta(ell, params);
    (
        z.powi(params.beta as i32),
        z.powi(-(params.alpha as i32)) / eta,
    )
}

/// `[u, u]` of a unit-circle mode normalised to `u(v_0) = 1`.
pub fn mode_self_flux(
    z: Complex64,
    lambda: f64,
    ell: usize,
    params: &TubeParams,
    constants: &TransferConstants,
) -> Result<f64> {
    let _ = lambda;
    check_not_dirichlet(constants)?;
    if (z.norm() - 1.0).abs() > UNIT_TOL {
        return Err(Error::Classification(format!(
            "self-flux needs |z| = 1, got |z| = {}",
            z.norm()
        )));
    }
    let (z1, z2) = floquet_pair(z, ell, params);
    let ad = (params.alpha * params.delta) as f64;
    let bd = (params.beta * params.delta) as f64;
    let flux = (ad * (z2.inv() - z2) + bd * (z1 - z1.inv())) / (c(0.0, 2.0) * constants.s);
    if flux.im.abs() > FLUX_IMAG_TOL * flux.re.abs().max(1.0) {
        return Err(Error::Classification(format!(
            "self-flux has imaginary part {:e}",
            flux.im
        )));
    }
    Ok(flux.re)
}

/// `[u_a, u_b]` for two modes at the same energy, both normalised to
/// `u(v_0) = 1`, summed over the edges leaving an L-shaped cycle through
/// `v_0`. Conjugate-linear in the first argument.
pub fn cross_flux(
    a: &FloquetMode,
    b: &FloquetMode,
    params: &TubeParams,
    constants: &TransferConstants,
) -> Complex64 {
    let (z1, z2) = (a.z1, a.z2);
    let (w1, w2) = (b.z1, b.z2);
    let horizontal = z1.conj() * w1;
    let vertical = (z2.conj() * w2).inv();
    let ad = (params.alpha * params.delta) as usize;
    let bd = (params.beta * params.delta) as usize;
    let geometric = |x: Complex64, count: usize| {
        let mut acc = c(0.0, 0.0);
        let mut p = c(1.0, 0.0);
        for _ in 0..count {
            p *= x;
            acc += p;
        }
        acc
    };
    let total = (w2.inv() - z2.conj().inv()) * geometric(horizontal, ad)
        + (w1 - z1.conj()) * geometric(vertical, bd);
    total / (c(0.0, 2.0) * constants.s)
}

/// Sum of the moduli of the terms in the closed form of [`cross_flux`],
/// which bounds its rounding error.
pub fn cross_flux_magnitude(
    a: &FloquetMode,
    b: &FloquetMode,
    params: &TubeParams,
    constants: &TransferConstants,
) -> f64 {
    let h = (a.z1.conj() * b.z1).norm();
    let v = (a.z2.conj() * b.z2).norm().recip();
    let sum = |x: f64, n: i64| (1..=n).map(|j| x.powi(j as i32)).sum::<f64>();
    let total = (b.z2.inv().norm() + a.z2.inv().norm()) * sum(h, params.alpha * params.delta)
        + (b.z1.norm() + a.z1.norm()) * sum(v, params.beta * params.delta);
    total / (2.0 * constants.s.abs())
}

/// Every Floquet mode at `λ`, classified.
pub fn mode_set(
    lambda: f64,
    params: &TubeParams,
    constants: &TransferConstants,
) -> Result<ModeSet> {
    check_not_dirichlet(constants)?;
    let mut modes = Vec::with_capacity(params.state_dim());
    let mut band_edge = false;
    for ell in 0..params.delta as usize {
        let eta = sector_eta(ell, params);
        let mut roots = laurent_roots(lambda, ell, params, constants)?;
        roots.sort_by(|p, q| {
            p.0.arg()
                .total_cmp(&q.0.arg())
                .then(p.0.norm().total_cmp(&q.0.norm()))
        });
        for (z, multiplicity) in roots {
            let (z1, z2) = floquet_pair(z, ell, params);
            let modulus = z1.norm();
            let flat = (z * laurent_derivative(z, eta, params)).norm() / (2.0 * params.beta as f64)
                < EDGE_DERIV_TOL;
            let (class, self_flux) = if modulus < 1.0 - UNIT_TOL {
                (ModeClass::RightEvan, 0.0)
            } else if modulus > 1.0 + UNIT_TOL {
                (ModeClass::LeftEvan, 0.0)
            } else if multiplicity > 1 || flat {
                band_edge = true;
                (ModeClass::BandEdge, 0.0)
            } else {
                let flux = mode_self_flux(z, lambda, ell, params, constants)?;
                if flux > 0.0 {
                    (ModeClass::RightProp, flux)
                } else {
                    (ModeClass::LeftProp, flux)
                }
            };
            let mode = FloquetMode {
                z,
                z1,
                z2,
                ell,
                eta,
                class,
                self_flux,
                multiplicity,
            };
            for _ in 0..multiplicity {
                modes.push(mode);
            }
        }
    }
    let right = modes.iter().filter(|m| m.class.is_rightward()).count();
    let left = modes.iter().filter(|m| m.class.is_leftward()).count();
    if !band_edge && (right != params.rings() || left != params.rings()) {
        return Err(Error::Classification(format!(
            "expected {} rightward and leftward modes at lambda = {lambda}, got {right} and {left}",
            params.rings()
        )));
    }
    let num_propagating_pairs = modes
        .iter()
        .filter(|m| m.class == ModeClass::RightProp)
        .count();
    Ok(ModeSet {
        lambda,
        modes,
        num_propagating_pairs,
        band_edge,
    })
}
