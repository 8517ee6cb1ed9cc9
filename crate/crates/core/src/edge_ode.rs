//! Single-edge Schrödinger problem `-u'' + q(x) u = λ u` on `[0, L]`.
//!
//! Every vertex computation on the tube reduces to the two fundamental
//! solutions of this ODE: `c(λ, x)` with `c(0) = 1, c'(0) = 0` and `s(λ, x)`
//! with `s(0) = 0, s'(0) = 1`. Only their values and slopes at the far
//! endpoint are needed downstream, which is what [`TransferConstants`]
//! carries. Potentials are required to be symmetric about the midpoint, so
//! the same pair serves both orientations of an edge.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for `|q(L - x) - q(x)|`.
pub const SYMMETRY_TOL: f64 = 1e-9;
/// Minimum number of samples for a sampled potential.
pub const MIN_SAMPLES: usize = 16;
/// Below this value of `|λ| L²` the zero-potential constants use Taylor series.
pub const SERIES_THRESHOLD: f64 = 1e-6;
/// Richardson error target for the RK4 integrator, relative to the solution scale.
pub const INTEGRATION_TOL: f64 = 1e-12;
/// `|s(λ, L)| · max(1, √|λ|)` below this puts `λ` in the edge Dirichlet spectrum.
pub const DIRICHLET_TOL: f64 = 1e-10;

const MAX_REFINEMENT: usize = 1 << 14;

/// Potential on an edge, either identically zero or sampled on a uniform grid
/// over `[0, L]` and interpolated piecewise-linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialSpec", into = "PotentialSpec")]
pub enum EdgePotential {
    Zero,
    Sampled { values: Vec<f64>, bound: f64 },
}

/// Wire format: `{"type":"zero"}` or `{"type":"samples","values":[...],"bound":C}`.
#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum PotentialSpec {
    Zero,
    Samples { values: Vec<f64>, bound: f64 },
}

impl TryFrom<PotentialSpec> for EdgePotential {
    type Error = Error;

    fn try_from(spec: PotentialSpec) -> Result<Self> {
        match spec {
            PotentialSpec::Zero => Ok(EdgePotential::Zero),
            PotentialSpec::Samples { values, bound } => EdgePotential::sampled(values, bound),
        }
    }
}

impl From<EdgePotential> for PotentialSpec {
    fn from(p: EdgePotential) -> Self {
        match p {
            EdgePotential::Zero => PotentialSpec::Zero,
            EdgePotential::Sampled { values, bound } => PotentialSpec::Samples { values, bound },
        }
    }
}

impl Default for EdgePotential {
    fn default() -> Self {
        EdgePotential::Zero
    }
}

impl EdgePotential {
    /// Builds a sampled potential, checking the sample count, the bound and
    /// the mirror symmetry `q(L - x) = q(x)`.
    pub fn sampled(values: Vec<f64>, bound: f64) -> Result<Self> {
        if values.len() < MIN_SAMPLES {
            return Err(Error::Potential(format!(
                "need at least {MIN_SAMPLES} samples, got {}",
                values.len()
            )));
        }
        if !(bound.is_finite() && bound > 0.0) {
            return Err(Error::Potential(format!(
                "bound must be positive, got {bound}"
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || v.abs() >= bound) {
            return Err(Error::Potential(format!(
                "sample {v} violates |q| < {bound}"
            )));
        }
        let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let n = values.len();
        for i in 0..n / 2 {
            let gap = (values[n - 1 - i] - values[i]).abs();
            if gap > SYMMETRY_TOL * scale {
                return Err(Error::Potential(format!(
                    "potential is not symmetric: q[{i}] and q[{}] differ by {gap:e}",
                    n - 1 - i
                )));
            }
        }
        Ok(EdgePotential::Sampled { values, bound })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, EdgePotential::Zero)
    }

    /// Value at `x ∈ [0, length]`.
    pub fn value_at(&self, x: f64, length: f64) -> f64 {
        match self {
            EdgePotential::Zero => 0.0,
            EdgePotential::Sampled { values, .. } => {
                let last = values.len() - 1;
                let pos = (x / length).clamp(0.0, 1.0) * last as f64;
                let i = (pos.floor() as usize).min(last - 1);
                let t = pos - i as f64;
                values[i] * (1.0 - t) + values[i + 1] * t
            }
        }
    }
}

/// Endpoint data of the fundamental solutions on one edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferConstants {
    pub lambda: f64,
    pub length: f64,
    /// `c(λ, L)`
    pub c: f64,
    /// `s(λ, L)`
    pub s: f64,
    /// `c'(λ, L)`
    pub dc: f64,
    /// `s'(λ, L)`
    pub ds: f64,
}

impl TransferConstants {
    /// Whether `λ` sits (numerically) in the Dirichlet spectrum of the edge.
    pub fn is_dirichlet(&self) -> bool {
        self.s.abs() * self.lambda.abs().sqrt().max(1.0) < DIRICHLET_TOL
    }

    /// `c s' - c' s`, identically one for exact solutions.
    pub fn wronskian(&self) -> f64 {
        self.c * self.ds - self.dc * self.s
    }

    /// Derivatives directed into the edge at both endpoints of the solution
    /// with endpoint values `u0` (at `x = 0`) and `u1` (at `x = L`).
    pub fn endpoint_derivatives(&self, u0: Complex64, u1: Complex64) -> (Complex64, Complex64) {
        let d0 = (u1 - u0 * self.c) / self.s;
        let slope_at_end = u0 * self.dc + d0 * self.ds;
        (d0, -slope_at_end)
    }
}

/// Computes `c(λ, L)`, `s(λ, L)` and their slopes for one edge.
pub fn transfer_constants(
    lambda: f64,
    potential: &EdgePotential,
    length: f64,
) -> Result<TransferConstants> {
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::Potential(format!(
            "edge length must be positive, got {length}"
        )));
    }
    if !lambda.is_finite() {
        return Err(Error::Parameters(format!(
            "lambda must be finite, got {lambda}"
        )));
    }
    let [c, dc, s, ds] = match potential {
        EdgePotential::Zero => free_solutions(lambda, length),
        EdgePotential::Sampled { values, .. } => {
            integrate_adaptive(lambda, potential, length, values.len() - 1)?
        }
    };
    Ok(TransferConstants {
        lambda,
        length,
        c,
        s,
        dc,
        ds,
    })
}

/// `[c, c', s, s']` at `x` for the zero potential.
fn free_solutions(lambda: f64, x: f64) -> [f64; 4] {
    let t = lambda * x * x;
    if t.abs() < SERIES_THRESHOLD {
        let c = 1.0 - t / 2.0 + t * t / 24.0 - t * t * t / 720.0;
        let s = x * (1.0 - t / 6.0 + t * t / 120.0 - t * t * t / 5040.0);
        return [c, -lambda * s, s, c];
    }
    let mu = lambda.abs().sqrt();
    if lambda > 0.0 {
        let (sn, cs) = (mu * x).sin_cos();
        [cs, -mu * sn, sn / mu, cs]
    } else {
        let (sh, ch) = ((mu * x).sinh(), (mu * x).cosh());
        [ch, mu * sh, sh / mu, ch]
    }
}

/// Classical RK4 for both fundamental solutions, `substeps` steps per sample
/// interval so that the piecewise-linear potential is smooth inside a step.
fn integrate_fixed(
    lambda: f64,
    potential: &EdgePotential,
    length: f64,
    intervals: usize,
    substeps: usize,
) -> [f64; 4] {
    let steps = intervals * substeps;
    let h = length / steps as f64;
    let rhs = |x: f64, y: &[f64; 4]| {
        let w = potential.value_at(x, length) - lambda;
        [y[1], w * y[0], y[3], w * y[2]]
    };
    let mut y = [1.0, 0.0, 0.0, 1.0];
    for k in 0..steps {
        let x = k as f64 * h;
        let k1 = rhs(x, &y);
        let y2 = std::array::from_fn(|i| y[i] + 0.5 * h * k1[i]);
        let k2 = rhs(x + 0.5 * h, &y2);
        let y3 = std::array::from_fn(|i| y[i] + 0.5 * h * k2[i]);
        let k3 = rhs(x + 0.5 * h, &y3);
        let y4 = std::array::from_fn(|i| y[i] + h * k3[i]);
        let k4 = rhs(x + h, &y4);
        for i in 0..4 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

fn integrate_adaptive(
    lambda: f64,
    potential: &EdgePotential,
    length: f64,
    intervals: usize,
) -> Result<[f64; 4]> {
    // Start with roughly 256 steps per unit of oscillation phase.
    let phase = lambda.abs().sqrt() * length;
    let mut substeps = ((32.0 * phase.max(1.0)) as usize / intervals).max(2);
    let mut coarse = integrate_fixed(lambda, potential, length, intervals, substeps);
    let mut estimate = f64::INFINITY;
    while substeps <= MAX_REFINEMENT {
        let fine = integrate_fixed(lambda, potential, length, intervals, 2 * substeps);
        let scale = fine.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        estimate = (0..4)
            .map(|i| (fine[i] - coarse[i]).abs())
            .fold(0.0, f64::max)
            / 15.0;
        if estimate <= INTEGRATION_TOL * scale {
            return Ok(std::array::from_fn(|i| {
                fine[i] + (fine[i] - coarse[i]) / 15.0
            }));
        }
        coarse = fine;
        substeps *= 2;
    }
    Err(Error::Accuracy {
        estimate,
        tolerance: INTEGRATION_TOL,
    })
}

/// Dirichlet eigenvalues of a unit-length edge inside `window`.
pub fn dirichlet_spectrum(potential: &EdgePotential, window: (f64, f64)) -> Result<Vec<f64>> {
    dirichlet_spectrum_on(potential, 1.0, window)
}

/// Dirichlet eigenvalues of an edge of the given length inside `window`,
/// sorted ascending and polished by bisection.
pub fn dirichlet_spectrum_on(
    potential: &EdgePotential,
    length: f64,
    window: (f64, f64),
) -> Result<Vec<f64>> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
        return Err(Error::Parameters(format!("bad lambda window ({lo}, {hi})")));
    }
    // Scan uniformly in the signed square root so that the spacing adapts to
    // the growing oscillation of s(λ, L).
    let to_mu = |l: f64| l.signum() * l.abs().sqrt();
    let from_mu = |m: f64| m.signum() * m * m;
    let (mu_lo, mu_hi) = (to_mu(lo), to_mu(hi));
    let step = 0.01 / length;
    let count = ((mu_hi - mu_lo) / step).ceil().max(1.0) as usize;
    let s_of = |l: f64| transfer_constants(l, potential, length).map(|t| t.s);

    let mut roots = Vec::new();
    let mut prev_l = lo;
    let mut prev_s = s_of(lo)?;
    for i in 1..=count {
        let l = if i == count {
            hi
        } else {
            from_mu(mu_lo + i as f64 * step)
        };
        let cur = s_of(l)?;
        if cur == 0.0 && l < hi {
            roots.push(l);
        } else if prev_s * cur < 0.0 {
            roots.push(bisect(&s_of, prev_l, l, prev_s)?);
        }
        prev_l = l;
        prev_s = cur;
    }
    roots.retain(|&r| r > lo && r < hi);
    Ok(roots)
}

fn bisect(f: &impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, mut fa: f64) -> Result<f64> {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if b - a <= 1e-12 * m.abs().max(1.0) * 1e-3 || m == a || m == b {
            break;
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    Ok(0.5 * (a + b))
}

/// Samples on a unit-length edge of the solution with endpoint values `u0`, `u1`.
pub fn reconstruct_edge(
    u0: Complex64,
    u1: Complex64,
    lambda: f64,
    potential: &EdgePotential,
    grid: usize,
) -> Result<Vec<Complex64>> {
    reconstruct_edge_on(u0, u1, lambda, potential, 1.0, grid)
}

/// Samples at `x_i = i L / grid`, `i = 0..=grid`, of the unique edge
/// solution with the given endpoint values.
pub fn reconstruct_edge_on(
    u0: Complex64,
    u1: Complex64,
    lambda: f64,
    potential: &EdgePotential,
    length: f64,
    grid: usize,
) -> Result<Vec<Complex64>> {
    if grid == 0 {
        return Err(Error::Parameters(
            "reconstruction grid must be positive".into(),
        ));
    }
    let tc = transfer_constants(lambda, potential, length)?;
    if tc.is_dirichlet() {
        return Err(Error::DirichletSpectrum {
            lambda,
            edge: "reconstructed edge".into(),
        });
    }
    let slope = (u1 - u0 * tc.c) / tc.s;
    let profile = fundamental_profile(lambda, potential, length, grid);
    let mut out: Vec<Complex64> = profile.iter().map(|&(c, s)| u0 * c + slope * s).collect();
    // Pin the endpoints to the data exactly.
    out[0] = u0;
    out[grid] = u1;
    Ok(out)
}

/// `(c(λ, x_i), s(λ, x_i))` on a uniform grid of `grid` intervals.
fn fundamental_profile(
    lambda: f64,
    potential: &EdgePotential,
    length: f64,
    grid: usize,
) -> Vec<(f64, f64)> {
    let dx = length / grid as f64;
    match potential {
        EdgePotential::Zero => (0..=grid)
            .map(|i| {
                let [c, _, s, _] = free_solutions(lambda, i as f64 * dx);
                (c, s)
            })
            .collect(),
        EdgePotential::Sampled { values, .. } => {
            let substeps = (64 * values.len() / grid).max(64);
            let h = dx / substeps as f64;
            let rhs = |x: f64, y: &[f64; 4]| {
                let w = potential.value_at(x, length) - lambda;
                [y[1], w * y[0], y[3], w * y[2]]
            };
            let mut y = [1.0, 0.0, 0.0, 1.0];
            let mut out = vec![(1.0, 0.0)];
            for i in 0..grid {
                for k in 0..substeps {
                    let x = i as f64 * dx + k as f64 * h;
                    let k1 = rhs(x, &y);
                    let y2 = std::array::from_fn(|j| y[j] + 0.5 * h * k1[j]);
                    let k2 = rhs(x + 0.5 * h, &y2);
                    let y3 = std::array::from_fn(|j| y[j] + 0.5 * h * k2[j]);
                    let k3 = rhs(x + 0.5 * h, &y3);
                    let y4 = std::array::from_fn(|j| y[j] + h * k3[j]);
                    let k4 = rhs(x + h, &y4);
                    for j in 0..4 {
                        y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
                    }
                }
                out.push((y[0], y[2]));
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn bump() -> EdgePotential {
        // q(x) = 3 sin(πx)^2 - 1, symmetric about 1/2.
        let n = 65;
        let values = (0..n)
            .map(|i| {
                let x = i as f64 / (n - 1) as f64;
                3.0 * (PI * x).sin().powi(2) - 1.0
            })
            .collect();
        EdgePotential::sampled(values, 5.0).unwrap()
    }

    #[test]
    fn zero_potential_closed_forms() {
        let t = transfer_constants(0.0, &EdgePotential::Zero, 1.0).unwrap();
        assert_eq!((t.c, t.s), (1.0, 1.0));

        let t = transfer_constants(PI * PI / 4.0, &EdgePotential::Zero, 1.0).unwrap();
        assert!(t.c.abs() < 1e-15);
        assert!((t.s - 2.0 / PI).abs() < 1e-15);

        let t = transfer_constants(-1.0, &EdgePotential::Zero, 1.0).unwrap();
        assert!((t.c - 1.0f64.cosh()).abs() < 1e-15);
        assert!((t.s - 1.0f64.sinh()).abs() < 1e-15);
        assert!((t.c - 1.5430806).abs() < 1e-7 && (t.s - 1.1752012).abs() < 1e-7);
    }

    #[test]
    fn series_branch_is_continuous() {
        for &l in &[1e-7, -1e-7, 5e-7, -9.9e-7, 1.01e-6, -1.01e-6] {
            let t = transfer_constants(l, &EdgePotential::Zero, 1.0).unwrap();
            let mu = (l as f64).abs().sqrt();
            let (c, s) = if l > 0.0 {
                (mu.cos(), mu.sin() / mu)
            } else {
                (mu.cosh(), mu.sinh() / mu)
            };
            assert!((t.c - c).abs() < 1e-15, "{l}");
            assert!((t.s - s).abs() < 1e-14, "{l}");
        }
    }

    #[test]
    fn closed_forms_agree_over_range() {
        let mut l = -50.0;
        while l <= 200.0 {
            let t = transfer_constants(l, &EdgePotential::Zero, 1.0).unwrap();
            let mu = (l as f64).abs().sqrt();
            let (c, s) = if l > 1e-6 {
                (mu.cos(), mu.sin() / mu)
            } else if l < -1e-6 {
                (mu.cosh(), mu.sinh() / mu)
            } else {
                (1.0, 1.0)
            };
            assert!((t.c - c).abs() <= 1e-12 * c.abs().max(1.0));
            assert!((t.s - s).abs() <= 1e-12 * s.abs().max(1.0));
            assert!((t.wronskian() - 1.0).abs() < 1e-12 * t.c.abs().max(1.0).powi(2));
            l += 0.37;
        }
    }

    /// Plain fixed-step RK4 with many steps, written independently.
    fn reference(lambda: f64, q: &EdgePotential, steps: usize) -> (f64, f64, f64, f64) {
        let h = 1.0 / steps as f64;
        let f = |x: f64, u: f64| (q.value_at(x, 1.0) - lambda) * u;
        let run = |mut u: f64, mut v: f64| {
            for k in 0..steps {
                let x = k as f64 * h;
                let (a1, b1) = (v, f(x, u));
                let (a2, b2) = (v + 0.5 * h * b1, f(x + 0.5 * h, u + 0.5 * h * a1));
                let (a3, b3) = (v + 0.5 * h * b2, f(x + 0.5 * h, u + 0.5 * h * a2));
                let (a4, b4) = (v + h * b3, f(x + h, u + h * a3));
                u += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
                v += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
            }
            (u, v)
        };
        let (c, dc) = run(1.0, 0.0);
        let (s, ds) = run(0.0, 1.0);
        (c, dc, s, ds)
    }

    #[test]
    fn sampled_potential_matches_fine_reference() {
        let q = bump();
        let t = transfer_constants(2.0, &q, 1.0).unwrap();
        // 64 intervals, 400 substeps each: aligned with the interpolation nodes.
        let (c, dc, s, ds) = reference(2.0, &q, 64 * 400);
        assert!((t.c - c).abs() < 1e-10, "{} vs {c}", t.c);
        assert!((t.s - s).abs() < 1e-10);
        assert!((t.dc - dc).abs() < 1e-10);
        assert!((t.ds - ds).abs() < 1e-10);
    }

    #[test]
    fn sampled_wronskian() {
        let q = bump();
        for &l in &[-20.0, -1.0, 0.0, 3.0, 17.5, 60.0, 150.0] {
            let t = transfer_constants(l, &q, 1.0).unwrap();
            assert!(
                (t.wronskian() - 1.0).abs() < 1e-9,
                "λ={l}: {}",
                t.wronskian()
            );
        }
    }

    #[test]
    fn constant_sampled_potential_is_a_shift() {
        let q = EdgePotential::sampled(vec![2.5; 16], 3.0).unwrap();
        let a = transfer_constants(7.0, &q, 1.0).unwrap();
        let b = transfer_constants(4.5, &EdgePotential::Zero, 1.0).unwrap();
        assert!((a.c - b.c).abs() < 1e-11 && (a.s - b.s).abs() < 1e-11);
    }

    #[test]
    fn rejects_bad_potentials() {
        let mut v = vec![0.0; 20];
        v[2] = 0.1;
        assert!(matches!(
            EdgePotential::sampled(v, 1.0),
            Err(Error::Potential(_))
        ));
        assert!(EdgePotential::sampled(vec![0.0; 8], 1.0).is_err());
        assert!(EdgePotential::sampled(vec![2.0; 16], 1.0).is_err());
        assert!(EdgePotential::sampled(vec![0.0; 16], -1.0).is_err());
    }

    #[test]
    fn potential_json_round_trip() {
        let z: EdgePotential = serde_json::from_str(r#"{"type":"zero"}"#).unwrap();
        assert_eq!(z, EdgePotential::Zero);
        let s: EdgePotential = serde_json::from_str(
            r#"{"type":"samples","values":[1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1],"bound":2}"#,
        )
        .unwrap();
        assert!(matches!(s, EdgePotential::Sampled { .. }));
        let back = serde_json::to_string(&s).unwrap();
        assert!(back.contains(r#""type":"samples""#));
        let bad = serde_json::from_str::<EdgePotential>(
            r#"{"type":"samples","values":[0,1,0,0,0,0,0,0,0,0,0,0,0,0,0,0],"bound":2}"#,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn free_dirichlet_spectrum() {
        let d = dirichlet_spectrum(&EdgePotential::Zero, (0.0, 100.0)).unwrap();
        let expect = [PI * PI, 4.0 * PI * PI, 9.0 * PI * PI];
        assert_eq!(d.len(), 3);
        for (a, b) in d.iter().zip(expect) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            let t = transfer_constants(*a, &EdgePotential::Zero, 1.0).unwrap();
            assert!(t.s.abs() <= 1e-10);
        }
        assert!((d[0] - 9.8696044).abs() < 1e-7);
        assert!((d[2] - 88.8264396).abs() < 1e-7);
        assert!(dirichlet_spectrum(&EdgePotential::Zero, (-10.0, 0.0))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn sampled_dirichlet_spectrum_matches_finite_differences() {
        let q = bump();
        let d = dirichlet_spectrum(&q, (-5.0, 100.0)).unwrap();
        for &l in &d {
            assert!(transfer_constants(l, &q, 1.0).unwrap().s.abs() <= 1e-10);
        }
        // Oracle: second-order finite differences on n interior points,
        // Richardson-combined from two resolutions.
        let fd = |n: usize| {
            let h = 1.0 / (n + 1) as f64;
            let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                m[(i, i)] = 2.0 / (h * h) + q.value_at((i + 1) as f64 * h, 1.0);
                if i + 1 < n {
                    m[(i, i + 1)] = -1.0 / (h * h);
                    m[(i + 1, i)] = -1.0 / (h * h);
                }
            }
            let mut ev: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            ev
        };
        let (a, b) = (fd(255), fd(511));
        assert_eq!(d.len(), 3);
        for (k, &l) in d.iter().enumerate() {
            let coarse_err = (a[k] - l).abs();
            let fine_err = (b[k] - l).abs();
            assert!(fine_err < 2e-3 * l.abs().max(1.0), "{l} vs {}", b[k]);
            // O(h²): halving h cuts the error about fourfold.
            let ratio = coarse_err / fine_err;
            assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn reconstruct_edge_profiles() {
        let one = Complex64::new(1.0, 0.0);
        let flat = reconstruct_edge(one, one, 0.0, &EdgePotential::Zero, 10).unwrap();
        assert!(flat.iter().all(|u| (u - one).norm() < 1e-15));

        let zero = Complex64::new(0.0, 0.0);
        let none = reconstruct_edge(zero, zero, 3.0, &EdgePotential::Zero, 7).unwrap();
        assert!(none.iter().all(|u| u.norm() == 0.0));

        assert!(matches!(
            reconstruct_edge(one, one, PI * PI, &EdgePotential::Zero, 4),
            Err(Error::DirichletSpectrum { .. })
        ));
    }

    #[test]
    fn reconstructed_slope_matches_transfer_formula() {
        let lambda = 5.3;
        let z = Complex64::from_polar(1.0, 0.7);
        let n = 4000;
        let one = Complex64::new(1.0, 0.0);
        for q in [EdgePotential::Zero, bump()] {
            let u = reconstruct_edge(one, z, lambda, &q, n).unwrap();
            let h = 1.0 / n as f64;
            // Second-order one-sided difference at x = 0.
            let fd = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
            let t = transfer_constants(lambda, &q, 1.0).unwrap();
            let (d0, d1) = t.endpoint_derivatives(one, z);
            assert!((fd - (z - t.c) / t.s).norm() < 1e-5);
            assert!((fd - d0).norm() < 1e-5);
            // Far end, derivative pointing back into the edge.
            let fd1 = (-3.0 * u[n] + 4.0 * u[n - 1] - u[n - 2]) / (2.0 * h);
            assert!((fd1 - d1).norm() < 1e-5);
            // Symmetric potential: same formula with the roles swapped.
            assert!((d1 - (one - z * t.c) / t.s).norm() < 1e-9);
        }
    }
}
