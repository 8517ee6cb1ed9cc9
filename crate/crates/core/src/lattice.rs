//! Geometry of the tube `Z² / <(αδ, βδ)>`.
//!
//! Lattice points are `(x, y)` with `x` horizontal and `y` vertical. The
//! horizontal shift `h` sends `(x, y)` to `(x + 1, y)` and the vertical shift
//! `v` sends it to `(x, y + 1)`. Each orbit is labelled by a ring
//! `n = y mod βδ` and a column `x - s(y)`, where `s(y) = ⌈α y / β⌉` marks the
//! first lattice point on or right of the line through `(0, 0)` and
//! `(αδ, βδ)`. Column 0 is the fundamental domain of `h`; its vertices are
//! `v_n = (s(n), n)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Validated tube parameters and the derived fundamental-domain tables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TubeParams {
    pub alpha: i64,
    pub beta: i64,
    pub delta: i64,
    /// `s(n)` for `n = 0..βδ`.
    pub shifts: Vec<i64>,
    /// `r(n) = s(n) β - n α`.
    pub exponents: Vec<i64>,
    /// `χ_n = 1` when the boundary vertex `v_n` keeps its upward edge in the half-tube.
    pub boundary_flags: Vec<u8>,
}

/// Canonical label of a tube vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexId {
    pub column: i64,
    pub ring: usize,
}

/// The four lattice neighbours `h⁻¹v, hv, v⁻¹v, vv`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighbors {
    pub left: VertexId,
    pub right: VertexId,
    pub down: VertexId,
    pub up: VertexId,
}

impl Neighbors {
    pub fn all(&self) -> [VertexId; 4] {
        [self.left, self.right, self.down, self.up]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Horizontal,
    Vertical,
}

/// A directed edge crossing the loop between columns 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossingEdge {
    pub from: VertexId,
    pub to: VertexId,
    pub orientation: Orientation,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn ceil_div(a: i64, b: i64) -> i64 {
    -((-a).div_euclid(b))
}

/// Validates `(α, β, δ)` and fills in `s(n)`, `r(n)` and `χ_n`.
pub fn make_params(alpha: i64, beta: i64, delta: i64) -> Result<TubeParams> {
    if alpha <= 0 || delta <= 0 {
        return Err(Error::Parameters(format!(
            "need alpha > 0 and delta >= 1, got alpha = {alpha}, delta = {delta}"
        )));
    }
    if alpha >= beta {
        return Err(Error::Parameters(format!(
            "need alpha < beta, got {alpha} >= {beta}"
        )));
    }
    if gcd(alpha, beta) != 1 {
        return Err(Error::Parameters(format!("gcd({alpha}, {beta}) != 1")));
    }
    let rings = (beta * delta) as usize;
    if rings > 4096 {
        return Err(Error::Parameters(format!(
            "beta * delta = {rings} is too large"
        )));
    }
    let shift = |n: i64| ceil_div(alpha * n, beta);
    let shifts: Vec<i64> = (0..rings as i64).map(shift).collect();
    let exponents = (0..rings as i64)
        .map(|n| shift(n) * beta - n * alpha)
        .collect();
    let boundary_flags = (0..rings as i64)
        .map(|n| u8::from(shift(n + 1) == shift(n)))
        .collect();
    Ok(TubeParams {
        alpha,
        beta,
        delta,
        shifts,
        exponents,
        boundary_flags,
    })
}

impl TubeParams {
    /// Number of rings, `βδ`.
    pub fn rings(&self) -> usize {
        self.shifts.len()
    }

    /// State dimension `2βδ`.
    pub fn state_dim(&self) -> usize {
        2 * self.rings()
    }

    /// `s(y) = ⌈α y / β⌉` for any integer `y`; satisfies `s(y + βδ) = s(y) + αδ`.
    pub fn shift(&self, y: i64) -> i64 {
        ceil_div(self.alpha * y, self.beta)
    }

    /// Canonical label of the lattice point `(x, y)`.
    pub fn canonicalize(&self, x: i64, y: i64) -> VertexId {
        VertexId {
            column: x - self.shift(y),
            ring: y.rem_euclid(self.rings() as i64) as usize,
        }
    }

    /// A lattice representative `(x, y)` with `0 <= y < βδ`.
    pub fn raw(&self, v: VertexId) -> (i64, i64) {
        (v.column + self.shifts[v.ring], v.ring as i64)
    }

    /// The representative reduced modulo `(αδ, βδ)` alone, as a pair of
    /// coordinates with `0 <= y < βδ` obtained without the column shift.
    pub fn reduce(&self, x: i64, y: i64) -> (i64, i64) {
        let period = self.rings() as i64;
        let wraps = y.div_euclid(period);
        (x - wraps * self.alpha * self.delta, y - wraps * period)
    }

    pub fn neighbors(&self, v: VertexId) -> Neighbors {
        let (x, y) = self.raw(v);
        Neighbors {
            left: self.canonicalize(x - 1, y),
            right: self.canonicalize(x + 1, y),
            down: self.canonicalize(x, y - 1),
            up: self.canonicalize(x, y + 1),
        }
    }

    /// Edges crossing from column 0 into column 1, directed rightward
    /// (horizontal) or downward (vertical).
    pub fn crossing_edges(&self) -> Vec<CrossingEdge> {
        let mut edges: Vec<CrossingEdge> = (0..self.rings())
            .map(|n| {
                let from = VertexId { column: 0, ring: n };
                CrossingEdge {
                    from,
                    to: self.neighbors(from).right,
                    orientation: Orientation::Horizontal,
                }
            })
            .collect();
        for n in 0..self.rings() {
            let below = VertexId { column: 1, ring: n };
            let upper = self.neighbors(below).up;
            if upper.column == 0 {
                edges.push(CrossingEdge {
                    from: upper,
                    to: below,
                    orientation: Orientation::Vertical,
                });
            }
        }
        edges
    }

    /// Number of edges at the boundary vertex `v_n` that stay inside the half-tube.
    pub fn boundary_degree(&self, ring: usize) -> usize {
        let v = VertexId { column: 0, ring };
        self.neighbors(v)
            .all()
            .iter()
            .filter(|w| w.column >= 0)
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force oracle: the first lattice point at or right of the line
    /// `x = α y / β` on each row, and whether its upper neighbour is still
    /// at or right of the line.
    fn enumerate(alpha: i64, beta: i64, delta: i64) -> (Vec<i64>, Vec<u8>) {
        let mut s = Vec::new();
        let mut chi = Vec::new();
        for n in 0..beta * delta {
            let x = (-10..10 * beta).find(|&x| x * beta >= alpha * n).unwrap();
            s.push(x);
            chi.push(u8::from(x * beta >= alpha * (n + 1)));
        }
        (s, chi)
    }

    #[test]
    fn tables_match_enumeration() {
        let p = make_params(2, 5, 1).unwrap();
        assert_eq!(p.shifts, vec![0, 1, 1, 2, 2]);
        assert_eq!(p.exponents, vec![0, 3, 1, 4, 2]);
        assert_eq!(p.boundary_flags, vec![0, 1, 0, 1, 1]);

        let p = make_params(1, 2, 1).unwrap();
        assert_eq!(
            (p.shifts, p.exponents, p.boundary_flags),
            (vec![0, 1], vec![0, 1], vec![0, 1])
        );

        for beta in 2..=7 {
            for alpha in 1..beta {
                for delta in 1..=3 {
                    let Ok(p) = make_params(alpha, beta, delta) else {
                        continue;
                    };
                    let (s, chi) = enumerate(alpha, beta, delta);
                    assert_eq!(p.shifts, s);
                    assert_eq!(p.boundary_flags, chi);
                    let flagged: i64 = p.boundary_flags.iter().map(|&c| c as i64).sum();
                    assert_eq!(flagged, (beta - alpha) * delta);
                    for (n, &r) in p.exponents.iter().enumerate() {
                        assert_eq!(r, p.shifts[n] * beta - n as i64 * alpha);
                        assert!((0..beta).contains(&r));
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(make_params(2, 4, 1), Err(Error::Parameters(_))));
        assert!(make_params(5, 2, 1).is_err());
        assert!(make_params(0, 3, 1).is_err());
        assert!(make_params(2, 5, 0).is_err());
        assert!(make_params(-1, 3, 1).is_err());
    }

    #[test]
    fn canonical_labels() {
        let p = make_params(2, 5, 1).unwrap();
        let v = p.canonicalize(3, 7);
        assert_eq!(p.raw(v), (1, 2));
        assert_eq!(p.reduce(3, 7), (1, 2));
        let v = p.canonicalize(0, -1);
        assert_eq!(p.raw(v), (2, 4));
        assert_eq!(v, VertexId { column: 0, ring: 4 });
        assert_eq!(p.canonicalize(0, 0), VertexId { column: 0, ring: 0 });
        // Both reductions agree for all small points.
        for x in -12..12 {
            for y in -12..12 {
                let v = p.canonicalize(x, y);
                assert_eq!(p.raw(v), p.reduce(x, y));
            }
        }
    }

    #[test]
    fn neighbor_examples() {
        let p = make_params(2, 5, 1).unwrap();
        let v0 = VertexId { column: 0, ring: 0 };
        assert_eq!(p.neighbors(v0).down, VertexId { column: 0, ring: 4 });
        let v4 = VertexId { column: 0, ring: 4 };
        assert_eq!(p.neighbors(v4).up, VertexId { column: 0, ring: 0 });
        for ring in 0..5 {
            let v = VertexId { column: 3, ring };
            let nb = p.neighbors(v);
            assert_eq!(nb.left, VertexId { column: 2, ring });
            assert_eq!(nb.right, VertexId { column: 4, ring });
        }
    }

    #[test]
    fn column_zero_neighbor_pattern() {
        for (a, b, d) in [(2, 5, 1), (3, 5, 2), (1, 2, 3), (4, 7, 1)] {
            let p = make_params(a, b, d).unwrap();
            for n in 0..p.rings() {
                let nb = p.neighbors(VertexId { column: 0, ring: n });
                let step = p.shift(n as i64 + 1) - p.shift(n as i64);
                assert_eq!(nb.up.column, -step);
                assert!((0..=1).contains(&nb.down.column));
                assert_eq!(p.boundary_degree(n), 2 + p.boundary_flags[n] as usize);
            }
        }
    }

    #[test]
    fn group_relations_hold_exhaustively() {
        for beta in 2..=7 {
            for alpha in 1..beta {
                for delta in 1..=2 {
                    let Ok(p) = make_params(alpha, beta, delta) else {
                        continue;
                    };
                    let h = |v: VertexId| p.neighbors(v).right;
                    let vv = |v: VertexId| p.neighbors(v).up;
                    for column in -3..3 {
                        for ring in 0..p.rings() {
                            let v = VertexId { column, ring };
                            assert_eq!(h(vv(v)), vv(h(v)));
                            let mut w = v;
                            for _ in 0..alpha * delta {
                                w = h(w);
                            }
                            for _ in 0..beta * delta {
                                w = vv(w);
                            }
                            assert_eq!(w, v);
                            let nb = p.neighbors(v);
                            assert_eq!(p.neighbors(nb.left).right, v);
                            assert_eq!(p.neighbors(nb.down).up, v);
                        }
                    }
                    let col0 = (0..p.rings()).map(|n| p.raw(VertexId { column: 0, ring: n }));
                    assert_eq!(col0.count(), p.rings());
                }
            }
        }
    }

    #[test]
    fn crossing_edge_counts() {
        let p = make_params(2, 5, 1).unwrap();
        let e = p.crossing_edges();
        assert_eq!(e.len(), 7);
        let vertical = e
            .iter()
            .filter(|e| e.orientation == Orientation::Vertical)
            .count();
        assert_eq!(vertical, 2);
        let flagged: usize = p.boundary_flags.iter().map(|&c| c as usize).sum();
        assert_eq!(vertical, p.rings() - flagged);
        assert_eq!(make_params(1, 2, 1).unwrap().crossing_edges().len(), 3);
        let p = make_params(3, 5, 2).unwrap();
        assert_eq!(p.crossing_edges().len(), 16);
        for e in p.crossing_edges() {
            assert_eq!((e.from.column, e.to.column), (0, 1));
        }
    }
}
