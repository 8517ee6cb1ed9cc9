use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::DiscretizedModel;
use crate::error::{Error, Result};

/// Ritz residual, relative to the Ritz value, that counts as converged.
pub const RITZ_TOL: f64 = 1e-10;
/// Largest Krylov dimension tried before giving up.
pub const MAX_KRYLOV: usize = 600;
const SEED: u64 = 0x5eed;

/// `(K - σM)⁻¹` applied by eliminating each edge chain onto the vertices.
struct ShiftInvert<'a> {
    model: &'a DiscretizedModel,
    mass_sqrt: DVector<f64>,
    chain_lu: Vec<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    schur: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl<'a> ShiftInvert<'a> {
    fn new(model: &'a DiscretizedModel, sigma: f64) -> Result<Self> {
        let inner = model.points_per_edge - 1;
        let chain_lu = model
            .kinds
            .iter()
            .enumerate()
            .map(|(kind, diag)| {
                let h = model
                    .chains
                    .iter()
                    .find(|c| c.kind == kind)
                    .map(|c| c.h)
                    .unwrap_or(1.0);
                let t = DMatrix::from_fn(inner, inner, |i, j| {
                    if i == j {
                        diag[i] - sigma * h
                    } else if i.abs_diff(j) == 1 {
                        -1.0 / h
                    } else {
                        0.0
                    }
                });
                t.lu()
            })
            .collect::<Vec<_>>();
        let nv = model.vertex_count();
        let schur = if nv > 0 {
            let mut s = DMatrix::from_fn(nv, nv, |i, j| {
                if i == j {
                    model.vertex_diag[i] - sigma * model.vertex_mass[i]
                } else {
                    0.0
                }
            });
            // Corner entries of each chain inverse.
            let corners: Vec<[f64; 3]> = chain_lu
                .iter()
                .map(|lu| {
                    let mut e0 = DVector::zeros(inner);
                    e0[0] = 1.0;
                    let mut e1 = DVector::zeros(inner);
                    e1[inner - 1] = 1.0;
                    let y0 = lu
                        .solve(&e0)
                        .unwrap_or_else(|| DVector::from_element(inner, f64::NAN));
                    let y1 = lu
                        .solve(&e1)
                        .unwrap_or_else(|| DVector::from_element(inner, f64::NAN));
                    [y0[0], y0[inner - 1], y1[inner - 1]]
                })
                .collect();
            for c in &model.chains {
                let [first, cross, last] = corners[c.kind];
                let w = 1.0 / (c.h * c.h);
                if let Some(a) = c.ends[0] {
                    s[(a, a)] -= w * first;
                }
                if let Some(b) = c.ends[1] {
                    s[(b, b)] -= w * last;
                }
                if let (Some(a), Some(b)) = (c.ends[0], c.ends[1]) {
                    s[(a, b)] -= w * cross;
                    s[(b, a)] -= w * cross;
                }
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::Convergence(format!(
                    "shift {sigma} hits a chain eigenvalue"
                )));
            }
            Some(s.lu())
        } else {
            None
        };
        let mass_sqrt = model.mass().map(f64::sqrt);
        Ok(ShiftInvert {
            model,
            mass_sqrt,
            chain_lu,
            schur,
        })
    }

    fn solve_kernel(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        let model = self.model;
        let inner = model.points_per_edge - 1;
        let nv = model.vertex_count();
        let fail = || Error::Convergence("singular shifted system".into());
        let mut partial: Vec<DVector<f64>> = Vec::with_capacity(model.chains.len());
        let mut reduced = rhs.rows(0, nv).into_owned();
        for c in &model.chains {
            let y = self.chain_lu[c.kind]
                .solve(&rhs.rows(c.offset, inner).into_owned())
                .ok_or_else(fail)?;
            let off = -1.0 / c.h;
            if let Some(a) = c.ends[0] {
                reduced[a] -= off * y[0];
            }
            if let Some(b) = c.ends[1] {
                reduced[b] -= off * y[inner - 1];
            }
            partial.push(y);
        }
        let xv = match &self.schur {
            Some(lu) => lu.solve(&reduced).ok_or_else(fail)?,
            None => DVector::zeros(0),
        };
        let mut out = DVector::zeros(model.dimension());
        out.rows_mut(0, nv).copy_from(&xv);
        for (c, y) in model.chains.iter().zip(partial) {
            let off = -1.0 / c.h;
            let mut coupling = DVector::zeros(inner);
            if let Some(a) = c.ends[0] {
                coupling[0] += off * xv[a];
            }
            if let Some(b) = c.ends[1] {
                coupling[inner - 1] += off * xv[b];
            }
            let corr = self.chain_lu[c.kind].solve(&coupling).ok_or_else(fail)?;
            out.rows_mut(c.offset, inner).copy_from(&(y - corr));
        }
        Ok(out)
    }

    /// `M^{1/2} (K - σM)⁻¹ M^{1/2} x`, symmetric.
    fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let y = self.solve_kernel(&x.component_mul(&self.mass_sqrt))?;
        Ok(y.component_mul(&self.mass_sqrt))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenpair {
    pub value: f64,
    /// Unit eigenvector of `M^{-1/2} K M^{-1/2}`.
    pub vector: Vec<f64>,
}

/// The `count` eigenpairs nearest `target`, ascending by distance.
pub fn eigenpairs_near(
    model: &DiscretizedModel,
    target: f64,
    count: usize,
) -> Result<Vec<Eigenpair>> {
    let n = model.dimension();
    if count == 0 || n == 0 {
        return Ok(Vec::new());
    }
    let count = count.min(n);
    let op = ShiftInvert::new(model, target)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let start = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));

    let mut dim = (3 * count).max(40).min(n);
    loop {
        match lanczos(&op, &start, dim, count)? {
            Some(pairs) => {
                return Ok(pairs
                    .into_iter()
                    .map(|(theta, v)| Eigenpair {
                        value: target + 1.0 / theta,
                        vector: v.iter().copied().collect(),
                    })
                    .collect())
            }
            None if dim < n.min(MAX_KRYLOV) => dim = (2 * dim).min(n).min(MAX_KRYLOV),
            None => {
                return Err(Error::Convergence(format!(
                "{count} eigenvalues near {target} did not converge with a Krylov space of {dim}"
            )))
            }
        }
    }
}

/// Eigenvalues nearest `target`.
pub fn eigs_near(model: &DiscretizedModel, target: f64, count: usize) -> Result<Vec<f64>> {
    Ok(eigenpairs_near(model, target, count)?
        .into_iter()
        .map(|p| p.value)
        .collect())
}

type RitzPairs = Vec<(f64, DVector<f64>)>;

fn lanczos(
    op: &ShiftInvert,
    start: &DVector<f64>,
    dim: usize,
    count: usize,
) -> Result<Option<RitzPairs>> {
    let n = start.len();
    let mut q: Vec<DVector<f64>> = Vec::with_capacity(dim);
    let mut alpha = Vec::with_capacity(dim);
    let mut beta: Vec<f64> = Vec::with_capacity(dim);
    q.push(start / start.norm());
    let mut last_beta = 0.0;
    for k in 0..dim {
        let mut w = op.apply(&q[k])?;
        let a = q[k].dot(&w);
        alpha.push(a);
        w -= &q[k] * a;
        if k > 0 {
            w -= &q[k - 1] * beta[k - 1];
        }
        for _ in 0..2 {
            for v in &q {
                let p = v.dot(&w);
                w -= v * p;
            }
        }
        let b = w.norm();
        last_beta = b;
        let scale = alpha.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
        if b <= 1e-13 * scale || k + 1 == dim || k + 1 == n {
            break;
        }
        beta.push(b);
        q.push(w / b);
    }
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i.abs_diff(j) == 1 {
            beta[i.min(j)]
        } else {
            0.0
        }
    });
    let eig = t.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .abs()
            .total_cmp(&eig.eigenvalues[i].abs())
    });
    let wanted = count.min(m);
    let mut out = Vec::with_capacity(wanted);
    for &i in order.iter().take(wanted) {
        let theta = eig.eigenvalues[i];
        let s = eig.eigenvectors.column(i);
        let residual = (last_beta * s[m - 1]).abs();
        let exhausted = m == n;
        if !exhausted && residual > RITZ_TOL * theta.abs() {
            return Ok(None);
        }
        let mut v = DVector::zeros(n);
        for (k, qk) in q.iter().enumerate().take(m) {
            v += qk * s[k];
        }
        let norm = v.norm();
        out.push((theta, v / norm));
    }
    Ok(Some(out))
}

/// Relative norm below which columns no longer enter the decay fit.
pub const DECAY_FLOOR: f64 = 1e-3;

/// Geometric decay rate of the column norms of an eigenvector, fitted by
/// least squares on `log` norms. The fit starts at column 1 and runs until
/// the norm falls below `DECAY_FLOOR` of its starting value or half the
/// tube is covered, keeping at least three columns.
pub fn decay_fit(model: &DiscretizedModel, vector: &[f64]) -> f64 {
    let norms = model.column_norms(&DVector::from_column_slice(vector));
    if norms.len() < 4 || norms[1] <= 0.0 {
        return 0.0;
    }
    let stop = (model.columns / 2).max(3);
    let mut pts = Vec::new();
    for (m, &v) in norms.iter().enumerate().take(stop + 1).skip(1) {
        if pts.len() >= 3 && v < DECAY_FLOOR * norms[1] {
            break;
        }
        if v <= 0.0 {
            break;
        }
        pts.push((m as f64, v.ln()));
    }
    if pts.len() < 2 {
        return 0.0;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxy / sxx).exp()
}
