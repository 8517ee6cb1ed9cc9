//! Dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Parlett–Reinsch diagonal balancing; returns the balanced matrix.
pub fn balance(mut m: CMatrix) -> CMatrix {
    let n = m.nrows();
    let radix = 2.0f64;
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut col = 0.0;
            let mut row = 0.0;
            for j in 0..n {
                if j != i {
                    col += m[(j, i)].l1_norm();
                    row += m[(i, j)].l1_norm();
                }
            }
            if col == 0.0 || row == 0.0 {
                continue;
            }
            let total = col + row;
            let mut f = 1.0;
            let mut g = row / radix;
            while col < g {
                f *= radix;
                col *= radix * radix;
            }
            g = row * radix;
            while col > g {
                f /= radix;
                col /= radix * radix;
            }
            if (col + row) / f < 0.95 * total {
                converged = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
    }
    m
}

/// Eigenvalues of a general complex matrix (balanced Schur form).
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    let balanced = balance(m.clone());
    let schur = nalgebra::Schur::try_new(balanced, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Convergence("complex Schur iteration".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = m
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Number of positive and negative eigenvalues of a Hermitian matrix,
/// ignoring those below `tol` relative to the spectral radius.
pub fn signature(m: &CMatrix, tol: f64) -> (usize, usize) {
    let ev = hermitian_eigenvalues(m);
    let scale = ev.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let plus = ev.iter().filter(|&&v| v > tol * scale).count();
    let minus = ev.iter().filter(|&&v| v < -tol * scale).count();
    (plus, minus)
}

/// Smallest singular value and a matching right singular vector.
pub fn smallest_singular(m: &CMatrix) -> Result<(f64, CVector)> {
    // Wide matrices are padded with zero rows so the thin SVD keeps a full V.
    let padded = if m.ncols() > m.nrows() {
        let mut p = CMatrix::zeros(m.ncols(), m.ncols());
        p.view_mut((0, 0), m.shape()).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = nalgebra::SVD::try_new(padded, false, true, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Convergence("singular value decomposition".into()))?;
    let v_t = svd.v_t.as_ref().expect("requested V^H");
    let (idx, sigma) = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::Internal("empty matrix".into()))?;
    // Rows of V^H are conjugated right singular vectors.
    let v = v_t.row(idx).transpose().map(|z| z.conj());
    Ok((sigma, v))
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    m.clone()
        .singular_values()
        .iter()
        .fold(0.0, |a: f64, &v| a.max(v))
}

/// Minimum-cost perfect matching between two equal-size point sets in the
/// complex plane (Hungarian algorithm). Returns `assignment[i] = j` and the
/// largest matched distance.
pub fn optimal_matching(a: &[Complex64], b: &[Complex64]) -> (Vec<usize>, f64) {
    let n = a.len();
    assert_eq!(n, b.len(), "matching needs equal-size sets");
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    let cost = |i: usize, j: usize| (a[i] - b[j]).norm();
    // 1-based potentials formulation.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    let worst = (0..n).map(|i| cost(i, assignment[i])).fold(0.0, f64::max);
    (assignment, worst)
}

/// Largest entrywise modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}
