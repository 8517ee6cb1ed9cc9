//! Band spectrum of the full tube.
//!
//! On the unit torus the dispersion relation reads `g_ℓ(k) = 2c(λ)` with
//! `g_ℓ(k) = cos βk + cos(αk - 2πℓ/(βδ))`. Each monotonic segment of `g_ℓ`
//! over a period produces a sequence of bands, one per monotonic branch of
//! `2c(λ)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dispersion::{mode_set, ModeClass};
use crate::edge_ode::{transfer_constants, EdgePotential};
use crate::error::{Error, Result};
use crate::lattice::TubeParams;

/// Seeding resolution for critical points of `g_ℓ`.
pub const CRITICAL_GRID: usize = 4096;
/// Step in `sign(λ)√|λ|` when locating extrema of `c(λ)`.
const BRANCH_STEP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub k_lo: f64,
    /// May exceed `π` for the segment wrapping through `±π`.
    pub k_hi: f64,
    pub g_min: f64,
    pub g_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub ell: usize,
    pub segment_index: usize,
    pub k_lo: f64,
    pub k_hi: f64,
}

fn phase(ell: usize, params: &TubeParams) -> f64 {
    2.0 * PI * ell as f64 / params.rings() as f64
}

pub fn band_function(k: f64, ell: usize, params: &TubeParams) -> f64 {
    (params.beta as f64 * k).cos() + (params.alpha as f64 * k - phase(ell, params)).cos()
}

pub fn band_derivative(k: f64, ell: usize, params: &TubeParams) -> f64 {
    let (a, b) = (params.alpha as f64, params.beta as f64);
    -b * (b * k).sin() - a * (a * k - phase(ell, params)).sin()
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fa < 0.0) == (fm < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Critical points of `g_ℓ` on `(-π, π]`, ascending.
pub fn critical_points(ell: usize, params: &TubeParams) -> Vec<f64> {
    let d = |k: f64| band_derivative(k, ell, params);
    let step = 2.0 * PI / CRITICAL_GRID as f64;
    let scale = (params.alpha.pow(2) + params.beta.pow(2)) as f64;
    let zero = |v: f64| v.abs() <= 1e-13 * scale;
    let mut out = Vec::new();
    for i in 0..CRITICAL_GRID {
        let (k0, k1) = (-PI + i as f64 * step, -PI + (i + 1) as f64 * step);
        let (d0, d1) = (d(k0), d(k1));
        if zero(d0) {
            out.push(if i == 0 { PI } else { k0 });
        } else if !zero(d1) && (d0 < 0.0) != (d1 < 0.0) {
            out.push(bisect(d, k0, k1));
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Monotonic segments of `g_ℓ` over one period, the last wrapping around.
pub fn monotonic_segments(ell: usize, params: &TubeParams) -> Result<Vec<Segment>> {
    let crit = critical_points(ell, params);
    let expected = 2 * params.beta as usize;
    if crit.len() != expected {
        return Err(Error::Internal(format!(
            "sector {ell}: found {} critical points, expected {expected}",
            crit.len()
        )));
    }
    let g = |k: f64| band_function(k, ell, params);
    Ok((0..crit.len())
        .map(|i| {
            let k_lo = crit[i];
            let k_hi = if i + 1 < crit.len() {
                crit[i + 1]
            } else {
                crit[0] + 2.0 * PI
            };
            let (a, b) = (g(k_lo), g(k_hi));
            Segment {
                k_lo,
                k_hi,
                g_min: a.min(b),
                g_max: a.max(b),
            }
        })
        .collect())
}

/// A maximal interval of `λ` on which `2c(λ)` is monotonic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub value_lo: f64,
    pub value_hi: f64,
}

fn two_c(lambda: f64, potential: &EdgePotential) -> Result<f64> {
    Ok(2.0 * transfer_constants(lambda, potential, 1.0)?.c)
}

fn golden_extremum(
    f: &impl Fn(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    sign: f64,
) -> Result<f64> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (sign * f(x1)?, sign * f(x2)?);
    for _ in 0..200 {
        if b - a <= 1e-14 * a.abs().max(b.abs()).max(1.0) {
            break;
        }
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = sign * f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = sign * f(x2)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Monotonic branches of `2c(λ)` over `window`.
pub fn c_branches(window: (f64, f64), potential: &EdgePotential) -> Result<Vec<Branch>> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
        return Err(Error::Parameters(format!("bad lambda window ({lo}, {hi})")));
    }
    let f = |l: f64| two_c(l, potential);
    let to_mu = |l: f64| l.signum() * l.abs().sqrt();
    let from_mu = |m: f64| m.signum() * m * m;
    let (mu_lo, mu_hi) = (to_mu(lo), to_mu(hi));
    let count = ((mu_hi - mu_lo) / BRANCH_STEP).ceil().max(2.0) as usize;
    let grid: Vec<f64> = (0..=count)
        .map(|i| {
            if i == count {
                hi
            } else {
                from_mu(mu_lo + i as f64 * (mu_hi - mu_lo) / count as f64)
            }
        })
        .collect();
    let values = grid.iter().map(|&l| f(l)).collect::<Result<Vec<_>>>()?;
    let mut cuts = vec![lo];
    for i in 1..count {
        let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
        if (b > a && b >= c) || (b < a && b <= c) {
            let sign = if b > a { 1.0 } else { -1.0 };
            cuts.push(golden_extremum(&f, grid[i - 1], grid[i + 1], sign)?);
        }
    }
    cuts.push(hi);
    cuts.dedup();
    cuts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            Ok(Branch {
                lambda_lo: w[0],
                lambda_hi: w[1],
                value_lo: f(w[0])?,
                value_hi: f(w[1])?,
            })
        })
        .collect()
}

/// The `λ` in `branch` with `2c(λ) = level`, if any.
pub fn solve_on_branch(
    branch: &Branch,
    level: f64,
    potential: &EdgePotential,
) -> Result<Option<f64>> {
    let (a, b) = (branch.value_lo, branch.value_hi);
    if level < a.min(b) || level > a.max(b) {
        return Ok(None);
    }
    let f = |l: f64| two_c(l, potential).map(|v| v - level);
    let (mut x0, mut x1) = (branch.lambda_lo, branch.lambda_hi);
    let mut f0 = a - level;
    if f0 == 0.0 {
        return Ok(Some(x0));
    }
    for _ in 0..200 {
        let m = 0.5 * (x0 + x1);
        if m <= x0 || m >= x1 {
            break;
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(Some(m));
        }
        if (fm < 0.0) == (f0 < 0.0) {
            x0 = m;
            f0 = fm;
        } else {
            x1 = m;
        }
    }
    Ok(Some(0.5 * (x0 + x1)))
}

/// Bands inside `window`, one record per (sector, segment, branch).
pub fn spectrum_bands(
    window: (f64, f64),
    params: &TubeParams,
    potential: &EdgePotential,
) -> Result<Vec<Band>> {
    let branches = c_branches(window, potential)?;
    let mut bands = Vec::new();
    for ell in 0..params.delta as usize {
        for (segment_index, seg) in monotonic_segments(ell, params)?.iter().enumerate() {
            for br in &branches {
                let (vmin, vmax) = (br.value_lo.min(br.value_hi), br.value_lo.max(br.value_hi));
                if vmax < seg.g_min || vmin > seg.g_max {
                    continue;
                }
                // On a monotonic branch the preimage of [g_min, g_max] is an
                // interval bounded by level crossings or branch endpoints.
                let mut ends = Vec::with_capacity(4);
                for level in [seg.g_min, seg.g_max] {
                    ends.extend(solve_on_branch(br, level, potential)?);
                }
                for (l, v) in [(br.lambda_lo, br.value_lo), (br.lambda_hi, br.value_hi)] {
                    if v >= seg.g_min && v <= seg.g_max {
                        ends.push(l);
                    }
                }
                let lambda_lo = ends.iter().copied().fold(f64::INFINITY, f64::min);
                let lambda_hi = ends.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if lambda_hi > lambda_lo {
                    bands.push(Band {
                        lambda_lo,
                        lambda_hi,
                        ell,
                        segment_index,
                        k_lo: seg.k_lo,
                        k_hi: seg.k_hi,
                    });
                }
            }
        }
    }
    Ok(bands)
}

/// Whether `λ` lies in the continuous spectrum, and the number of
/// right-propagating modes there.
pub fn in_spectrum(
    lambda: f64,
    params: &TubeParams,
    potential: &EdgePotential,
) -> Result<(bool, usize)> {
    let tc = transfer_constants(lambda, potential, 1.0)?;
    let ms = mode_set(lambda, params, &tc)?;
    let right = ms
        .modes
        .iter()
        .filter(|m| m.class == ModeClass::RightProp)
        .count();
    let edge = ms.modes.iter().any(|m| m.class == ModeClass::BandEdge);
    Ok((right > 0 || edge, right))
}

/// One sample of `g_ℓ` and of the line it traces on the torus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionSample {
    pub ell: usize,
    pub k: f64,
    pub g: f64,
    pub k1: f64,
    pub k2: f64,
}

/// `g_ℓ(k)` and `(k1, k2) = (βk, -αk + 2πℓ/(βδ)) mod 2π` on `grid` points
/// of `[-π, π)` for every sector.
pub fn export_dispersion_data(grid: usize, params: &TubeParams) -> Vec<DispersionSample> {
    let tau = 2.0 * PI;
    let mut out = Vec::with_capacity(grid * params.delta as usize);
    for ell in 0..params.delta as usize {
        for i in 0..grid {
            let k = -PI + tau * i as f64 / grid as f64;
            out.push(DispersionSample {
                ell,
                k,
                g: band_function(k, ell, params),
                k1: (params.beta as f64 * k).rem_euclid(tau),
                k2: (-(params.alpha as f64) * k + phase(ell, params)).rem_euclid(tau),
            });
        }
    }
    out
}

/// A point `(k, λ)` on the band diagram: `2c(λ) = g_ℓ(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub ell: usize,
    pub branch: usize,
    pub k: f64,
    pub lambda: f64,
}

/// Curves `λ(k)` solving `2c(λ) = g_ℓ(k)` inside `window`, one per
/// (sector, branch of `2c`).
pub fn band_diagram(
    grid: usize,
    window: (f64, f64),
    params: &TubeParams,
    potential: &EdgePotential,
) -> Result<Vec<CurvePoint>> {
    let branches = c_branches(window, potential)?;
    let mut out = Vec::new();
    for ell in 0..params.delta as usize {
        for (bi, br) in branches.iter().enumerate() {
            for i in 0..=grid {
                let k = -PI + 2.0 * PI * i as f64 / grid as f64;
                if let Some(lambda) = solve_on_branch(br, band_function(k, ell, params), potential)?
                {
                    out.push(CurvePoint {
                        ell,
                        branch: bi,
                        k,
                        lambda,
                    });
                }
            }
        }
    }
    Ok(out)
}
