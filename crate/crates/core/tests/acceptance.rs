//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qgtube::bands::{
    band_diagram, band_function, in_spectrum, monotonic_segments, spectrum_bands, Band,
};
use qgtube::dispersion::{floquet_pair, laurent_derivative, laurent_roots, mode_set, sector_eta};
use qgtube::edge_ode::{transfer_constants, EdgePotential};
use qgtube::halftube::{
    design_robin, excluded_points, scattering_matrix, verify_bound_state, AuxEdge, AuxGraph,
    DesignCase, EdgeTarget, HalfTubeConfig, Robin, Scattering,
};
use qgtube::lattice::{make_params, TubeParams};
use qgtube::linalg::{optimal_matching, CVector};
use qgtube::oracle::{eigs_near, verify_at, DiscretizedModel, FarEnd};
use qgtube::propagator::{build_propagator, flux, propagate};

const EIG_MATCH_TOL: f64 = 1e-8;
const EXCLUSION: f64 = 1e-4;
const FLUX_TOL: f64 = 1e-9;
const SECTOR_TOL: f64 = 1e-9;
const BAND_AGREEMENT: usize = 499;
const BAND_POINTS: usize = 500;
const CURVE_TOL: f64 = 1e-9;
const DESIGN_RESIDUAL: f64 = 1e-10;
const DECAY_TOL: f64 = 1e-8;
const ORACLE_TOL: f64 = 1e-2;
const ORDER_RANGE: (f64, f64) = (3.5, 4.5);
const SCATTER_FLUX_TOL: f64 = 1e-9;
const SCATTER_UNITARY_TOL: f64 = 1e-8;
const SIMPLE_CIRCLE_GAP: f64 = 1e-6;
const SIMPLE_DERIV_MIN: f64 = 1e-8;

const GEOMETRIES: [(i64, i64, i64); 2] = [(2, 5, 1), (3, 5, 2)];
const WINDOW: (f64, f64) = (-5.0, 40.0);

struct Outcome {
    pass: bool,
    detail: String,
}

fn params(g: (i64, i64, i64)) -> TubeParams {
    make_params(g.0, g.1, g.2).unwrap()
}

fn dirichlet_points(window: (f64, f64)) -> Vec<f64> {
    (1..)
        .map(|k| (k as f64 * PI).powi(2))
        .take_while(|&l| l <= window.1 + 1.0)
        .collect()
}

fn band_edges(p: &TubeParams, window: (f64, f64)) -> Vec<f64> {
    spectrum_bands(window, p, &EdgePotential::Zero)
        .unwrap()
        .iter()
        .flat_map(|b| [b.lambda_lo, b.lambda_hi])
        .collect()
}

/// Random energies in `WINDOW` away from the Dirichlet spectrum and band edges.
fn sample_energies(p: &TubeParams, count: usize, seed: u64) -> Vec<f64> {
    let mut avoid = band_edges(p, WINDOW);
    avoid.extend(dirichlet_points(WINDOW));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let l = rng.gen_range(WINDOW.0..WINDOW.1);
        if avoid.iter().all(|&e| (l - e).abs() > EXCLUSION) {
            out.push(l);
        }
    }
    out
}

fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (gi, &g) in GEOMETRIES.iter().enumerate() {
        let p = params(g);
        for l in sample_energies(&p, 100, 11 + gi as u64) {
            let tc = transfer_constants(l, &EdgePotential::Zero, 1.0).unwrap();
            let bundle = build_propagator(l, &p, &tc).unwrap();
            let ev = bundle.eigenvalues().unwrap();
            let z1: Vec<Complex64> = mode_set(l, &p, &tc)
                .unwrap()
                .modes
                .iter()
                .map(|m| m.z1)
                .collect();
            worst = worst.max(optimal_matching(&ev, &z1).1);
            count += 1;
        }
    }
    Outcome {
        pass: worst <= EIG_MATCH_TOL,
        detail: format!(
            "{count} energies, worst matched distance {worst:.2e} (tol {EIG_MATCH_TOL:e})"
        ),
    }
}

fn criterion_2() -> Outcome {
    let mut sig_ok = true;
    let mut unitarity: f64 = 0.0;
    let mut invariance: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for (gi, &g) in GEOMETRIES.iter().enumerate() {
        let p = params(g);
        let rings = p.rings();
        for l in sample_energies(&p, 20, 31 + gi as u64) {
            let tc = transfer_constants(l, &EdgePotential::Zero, 1.0).unwrap();
            let bundle = build_propagator(l, &p, &tc).unwrap();
            sig_ok &= bundle.signature == (rings, rings);
            unitarity = unitarity.max(bundle.unitarity_residual());
            for _ in 0..100 {
                let mut draw = || {
                    let v = CVector::from_fn(2 * rings, |_, _| {
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                    });
                    let n = v.norm();
                    v / Complex64::new(n, 0.0)
                };
                let (a, b) = (draw(), draw());
                let before = flux(&a, &b, &bundle);
                let after = flux(
                    &propagate(&a, 1, &bundle),
                    &propagate(&b, 1, &bundle),
                    &bundle,
                );
                invariance = invariance.max((after - before).norm());
            }
        }
    }
    Outcome {
        pass: sig_ok && unitarity <= FLUX_TOL && invariance <= FLUX_TOL,
        detail: format!(
            "signature (βδ, βδ): {sig_ok}; max|P†JP - J| {unitarity:.2e}; flux drift on unit states {invariance:.2e} (tol {FLUX_TOL:e})"
        ),
    }
}

/// Largest distance from each pair in `a` to a distinct pair in `b`.
fn pair_set_distance(a: &[(Complex64, Complex64)], b: &[(Complex64, Complex64)]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let best = b
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, y)| (i, (x.0 - y.0).norm().max((x.1 - y.1).norm())))
            .min_by(|p, q| p.1.total_cmp(&q.1));
        match best {
            Some((i, d)) => {
                used[i] = true;
                worst = worst.max(d);
            }
            None => return f64::INFINITY,
        }
    }
    worst
}

fn sector_pairs(l: f64, ell: usize, p: &TubeParams) -> Vec<(Complex64, Complex64)> {
    let tc = transfer_constants(l, &EdgePotential::Zero, 1.0).unwrap();
    laurent_roots(l, ell, p, &tc)
        .unwrap()
        .into_iter()
        .flat_map(|(z, m)| std::iter::repeat(floquet_pair(z, ell, p)).take(m))
        .collect()
}

fn criterion_3() -> Outcome {
    let mut counts_ok = true;
    let mut symmetry: f64 = 0.0;
    let mut separation = f64::INFINITY;
    for (gi, &g) in GEOMETRIES.iter().enumerate() {
        let p = params(g);
        let d = p.delta as usize;
        let total: usize = (0..d)
            .map(|ell| {
                let n = monotonic_segments(ell, &p).unwrap().len();
                counts_ok &= n == 2 * p.beta as usize;
                n
            })
            .sum();
        counts_ok &= total == 2 * p.rings();
        for l in sample_energies(&p, 20, 41 + gi as u64) {
            let sectors: Vec<_> = (0..d).map(|ell| sector_pairs(l, ell, &p)).collect();
            for ell in 0..d {
                let conj: Vec<_> = sectors[ell]
                    .iter()
                    .map(|&(a, b)| (a.conj(), b.conj()))
                    .collect();
                symmetry = symmetry.max(pair_set_distance(&conj, &sectors[(d - ell) % d]));
                for other in ell + 1..d {
                    for x in &sectors[ell] {
                        for y in &sectors[other] {
                            separation = separation.min((x.0 - y.0).norm().max((x.1 - y.1).norm()));
                        }
                    }
                }
            }
            let inv: Vec<_> = sectors[0]
                .iter()
                .map(|&(a, b)| (a.inv(), b.inv()))
                .collect();
            let conj: Vec<_> = sectors[0]
                .iter()
                .map(|&(a, b)| (a.conj(), b.conj()))
                .collect();
            symmetry = symmetry.max(pair_set_distance(&inv, &conj));
        }
    }
    Outcome {
        pass: counts_ok && symmetry <= SECTOR_TOL && separation > SECTOR_TOL,
        detail: format!(
            "segment counts 2β per sector, 2βδ total: {counts_ok}; symmetry defect {symmetry:.2e}; min cross-sector distance {separation:.2e} (tol {SECTOR_TOL:e})"
        ),
    }
}

fn in_bands(l: f64, bands: &[Band]) -> bool {
    bands.iter().any(|b| b.lambda_lo <= l && l <= b.lambda_hi)
}

fn criterion_4() -> Outcome {
    let mut agree_all = true;
    let mut summary = Vec::new();
    let mut curves_ok = true;
    for &g in &GEOMETRIES {
        let p = params(g);
        let window = (0.1, 40.0);
        let bands = spectrum_bands(window, &p, &EdgePotential::Zero).unwrap();
        let edges: Vec<f64> = bands
            .iter()
            .flat_map(|b| [b.lambda_lo, b.lambda_hi])
            .collect();
        let mut agree = 0;
        let mut stray = 0;
        for i in 0..BAND_POINTS {
            let l = window.0 + (window.1 - window.0) * i as f64 / (BAND_POINTS - 1) as f64;
            let a = in_spectrum(l, &p, &EdgePotential::Zero).unwrap().0;
            if a == in_bands(l, &bands) {
                agree += 1;
            } else if edges.iter().all(|&e| (e - l).abs() > EXCLUSION) {
                stray += 1;
            }
        }
        agree_all &= agree >= BAND_AGREEMENT && stray == 0;
        summary.push(format!("{g:?}: {agree}/{BAND_POINTS}"));

        // Curve data for the band diagram of this panel.
        let curves = band_diagram(400, (0.0, 40.0), &p, &EdgePotential::Zero).unwrap();
        let panel = spectrum_bands((0.0, 40.0), &p, &EdgePotential::Zero).unwrap();
        let mut families = std::collections::BTreeSet::new();
        for c in &curves {
            families.insert(c.ell);
            let lhs = 2.0 * c.lambda.max(0.0).sqrt().cos();
            curves_ok &= (lhs - band_function(c.k, c.ell, &p)).abs() <= CURVE_TOL;
            curves_ok &= in_bands(c.lambda, &panel) || c.lambda <= 1e-12;
        }
        curves_ok &= families.len() == p.delta as usize;
    }
    Outcome {
        pass: agree_all && curves_ok,
        detail: format!(
            "agreement {} (need {BAND_AGREEMENT}); band-diagram curves on both panels: {curves_ok}",
            summary.join(", ")
        ),
    }
}

fn bisection_root(p: &TubeParams, target: f64, interval: (f64, f64)) -> f64 {
    let f = |z: f64| {
        let (a, b) = (p.alpha as i32, p.beta as i32);
        z.powi(b) + z.powi(-b) + z.powi(a) + z.powi(-a) - target
    };
    let (mut lo, mut hi) = interval;
    let flo = f(lo);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if (f(m) > 0.0) == (flo > 0.0) {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

fn criterion_5() -> Outcome {
    let cases = [
        (DesignCase::A, (2, 5, 1), -1.0, false),
        (DesignCase::B, (1, 2, 1), -1.0, false),
        (DesignCase::C, (1, 2, 1), 1.0, true),
        (DesignCase::D, (2, 5, 1), 4.84, true),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (case, g, l, embedded) in cases {
        let p = params(g);
        let d = design_robin(case, l, &p, &EdgePotential::Zero).unwrap();
        let cand = d.candidate().unwrap();
        let check = verify_bound_state(&cand, &d.config).unwrap();
        let decay_err = (check.decay_ratio - d.z1.abs()).abs();
        let oracle = verify_at(&d.config, l, 40, 40, 8, Some(d.z1.abs()), ORACLE_TOL).unwrap();
        let fd_err = oracle.matched.map(|i| (oracle.nearest[i] - l).abs());
        let this = check.residual <= DESIGN_RESIDUAL
            && decay_err <= DECAY_TOL
            && cand.embedded == embedded
            && fd_err.is_some();
        ok &= this;
        notes.push(format!(
            "{case:?}: res {:.1e}, FD {}",
            check.residual,
            fd_err.map_or("none".into(), |e| format!("{e:.1e}"))
        ));
    }
    // Case (a) against an independent bisection root.
    let p = params((2, 5, 1));
    let z = bisection_root(&p, 4.0 * 1.0f64.cosh(), (0.5, 0.999));
    let d = design_robin(DesignCase::A, -1.0, &p, &EdgePotential::Zero).unwrap();
    ok &= (d.z - z).abs() <= 1e-12 && (z - 0.773).abs() < 1e-3;

    let errs: Vec<f64> = [10, 20, 40]
        .iter()
        .map(|&n| {
            let m = DiscretizedModel::build(&d.config, 40, n, FarEnd::Dirichlet).unwrap();
            (eigs_near(&m, -1.0, 1).unwrap()[0] + 1.0).abs()
        })
        .collect();
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    ok &= ratios
        .iter()
        .all(|r| (ORDER_RANGE.0..=ORDER_RANGE.1).contains(r));
    Outcome {
        pass: ok,
        detail: format!(
            "{}; z* {z:.6}; FD order ratios {:?}",
            notes.join("; "),
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>()
        ),
    }
}

fn aux_config() -> HalfTubeConfig {
    let p = params((3, 5, 2));
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
    HalfTubeConfig::new(p, EdgePotential::Zero, robin, aux).unwrap()
}

fn in_band_energies(config: &HalfTubeConfig, count: usize, seed: u64) -> Vec<f64> {
    let mut avoid = excluded_points(WINDOW, config).unwrap();
    avoid.extend(band_edges(&config.params, WINDOW));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let l = rng.gen_range(0.1..WINDOW.1);
        if avoid.iter().all(|&e| (l - e).abs() > 1e-3)
            && in_spectrum(l, &config.params, &config.potential).unwrap().1 > 0
        {
            out.push(l);
        }
    }
    out
}

fn criterion_6() -> Outcome {
    let configs = [
        HalfTubeConfig::neumann(params((2, 5, 1)), EdgePotential::Zero),
        aux_config(),
    ];
    let mut flux_worst: f64 = 0.0;
    let mut unitary_worst: f64 = 0.0;
    let mut solved = 0;
    let mut bound = 0;
    for (i, cfg) in configs.iter().enumerate() {
        for l in in_band_energies(cfg, 10, 61 + i as u64) {
            match scattering_matrix(l, cfg).unwrap() {
                Scattering::Solved(r) => {
                    flux_worst = flux_worst.max(r.flux_residual);
                    unitary_worst = unitary_worst.max(r.unitarity_residual);
                    solved += 1;
                }
                Scattering::BoundState { .. } => bound += 1,
            }
        }
    }
    Outcome {
        pass: solved == 20 && flux_worst <= SCATTER_FLUX_TOL && unitary_worst <= SCATTER_UNITARY_TOL,
        detail: format!(
            "{solved} solved ({bound} singular); flux residual {flux_worst:.2e} (tol {SCATTER_FLUX_TOL:e}); |S†S - I| {unitary_worst:.2e} (tol {SCATTER_UNITARY_TOL:e})"
        ),
    }
}

fn criterion_7() -> Outcome {
    let mut smallest = f64::INFINITY;
    let mut roots = 0;
    for (gi, &g) in GEOMETRIES.iter().chain(&[(1, 2, 1), (1, 3, 3)]).enumerate() {
        let p = params(g);
        for l in sample_energies(&p, 100, 71 + gi as u64) {
            let tc = transfer_constants(l, &EdgePotential::Zero, 1.0).unwrap();
            for ell in 0..p.delta as usize {
                let eta = sector_eta(ell, &p);
                for (z, _) in laurent_roots(l, ell, &p, &tc).unwrap() {
                    if (z.norm() - 1.0).abs() > SIMPLE_CIRCLE_GAP {
                        smallest = smallest.min(laurent_derivative(z, eta, &p).norm());
                        roots += 1;
                    }
                }
            }
        }
    }
    Outcome {
        pass: smallest > SIMPLE_DERIV_MIN,
        detail: format!(
            "{roots} off-circle roots, min |F'(z)| {smallest:.3e} (need > {SIMPLE_DERIV_MIN:e})"
        ),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 7] = [
        (
            "1 propagator-dispersion equivalence",
            criterion_1,
            Duration::from_secs(10),
        ),
        ("2 flux form", criterion_2, Duration::MAX),
        ("3 sector structure", criterion_3, Duration::MAX),
        (
            "4 band/mode consistency",
            criterion_4,
            Duration::from_secs(30),
        ),
        ("5 bound states", criterion_5, Duration::from_secs(60)),
        ("6 scattering conservation", criterion_6, Duration::MAX),
        ("7 off-circle simplicity", criterion_7, Duration::MAX),
    ];
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = out.pass && in_time;
        if !pass {
            failed += 1;
        }
        let limit = if budget == Duration::MAX {
            String::new()
        } else {
            format!(" / {}s", budget.as_secs())
        };
        println!(
            "{} [{name}] {} ({:.2}s{limit})",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} of 7 criteria passed", 7 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
