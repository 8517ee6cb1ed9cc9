//! Command-line front end.
//!
//! Every subcommand echoes its resolved inputs into the output. Exit codes:
//! 0 on success, 1 for invalid input, 2 when a numerical check fails.

use std::io::Read;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::bands::{band_diagram, spectrum_bands};
use crate::dispersion::mode_set;
use crate::edge_ode::{dirichlet_spectrum_on, transfer_constants, EdgePotential};
use crate::error::{Error, Result};
use crate::halftube::{
    bound_state_scan, design_robin, scattering_matrix, DesignCase, HalfTubeConfig, Scattering,
};
use crate::io;
use crate::lattice::{make_params, TubeParams};
use crate::linalg::{self, CVector};
use crate::oracle;
use crate::propagator::{build_propagator, flux, propagate};

#[derive(Debug, Parser)]
#[command(
    name = "qgtube",
    version,
    about = "Quantum-graph tube spectra and scattering"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Half-tube config JSON ("-" reads stdin).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override the command's pass/fail tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Worker threads for energy grids.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// SVG plot output, where supported.
    #[arg(long, global = true)]
    pub svg: Option<PathBuf>,
    #[arg(long, global = true)]
    pub alpha: Option<i64>,
    #[arg(long, global = true)]
    pub beta: Option<i64>,
    #[arg(long, global = true)]
    pub delta: Option<i64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectral bands in a window, as CSV.
    Bands {
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
        window: (f64, f64),
        /// k samples per curve for the SVG.
        #[arg(long, default_value_t = 600)]
        grid: usize,
    },
    /// Floquet modes at one energy, as JSON.
    Modes {
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
    },
    /// Propagator eigenvalues against the dispersion relation, plus flux checks.
    PropagatorCheck {
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long, default_value_t = 100)]
        states: usize,
    },
    /// Scattering matrix of the configured half-tube.
    Scatter {
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
    },
    /// Bound-state scan of the configured half-tube.
    Bound {
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
        window: (f64, f64),
        #[arg(long, default_value_t = 201)]
        grid: usize,
    },
    /// Robin data that make a designed mode a bound state; prints a config.
    DesignRobin {
        #[arg(long)]
        case: DesignCase,
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
    },
    /// Finite-element check for an eigenvalue near lambda.
    OracleVerify {
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long, default_value_t = 40)]
        columns: usize,
        #[arg(long, default_value_t = 40)]
        points: usize,
        #[arg(long, default_value_t = 8)]
        count: usize,
        /// Expected column decay ratio of the eigenvector.
        #[arg(long)]
        decay: Option<f64>,
    },
    /// Dirichlet eigenvalues of an edge.
    Dirichlet {
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
        window: (f64, f64),
        #[arg(long, default_value_t = 1.0)]
        length: f64,
    },
}

fn parse_window(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected a,b")?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(format!("empty window {lo},{hi}"));
    }
    Ok((lo, hi))
}

/// Parses `argv` (including the program name), runs and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            let line = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("{line}");
            return 1;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

fn read_config(path: &Path) -> Result<HalfTubeConfig> {
    let text = if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Error::Config(format!("cannot read stdin: {e}")))?;
        s
    } else {
        std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?
    };
    HalfTubeConfig::from_json(&text)
}

impl Global {
    /// Geometry and potential from `--config`, overridden by explicit flags.
    fn tube(&self) -> Result<(TubeParams, EdgePotential)> {
        let from_config = self.config.as_deref().map(read_config).transpose()?;
        let (a, b, d, pot) = match &from_config {
            Some(c) => (
                c.params.alpha,
                c.params.beta,
                c.params.delta,
                c.potential.clone(),
            ),
            None => (0, 0, 0, EdgePotential::Zero),
        };
        let pick = |flag: Option<i64>, base: i64, name: &str| match (flag, from_config.is_some()) {
            (Some(v), _) => Ok(v),
            (None, true) => Ok(base),
            (None, false) => Err(Error::Config(format!("--{name} or --config is required"))),
        };
        let params = make_params(
            pick(self.alpha, a, "alpha")?,
            pick(self.beta, b, "beta")?,
            pick(self.delta, d, "delta")?,
        )?;
        Ok((params, pot))
    }

    /// The half-tube config; stdin when `--config` is absent.
    fn half_tube(&self) -> Result<HalfTubeConfig> {
        let path = self.config.clone().unwrap_or_else(|| PathBuf::from("-"));
        read_config(&path)
    }

    fn emit(&self, text: &str) -> Result<()> {
        io::emit(self.out.as_deref(), text)
    }
}

fn params_echo(params: &TubeParams, potential: &EdgePotential) -> Value {
    json!({
        "alpha": params.alpha,
        "beta": params.beta,
        "delta": params.delta,
        "potential": potential,
    })
}

fn check(name: &str, value: f64, tol: f64) -> Result<()> {
    if value <= tol {
        Ok(())
    } else {
        Err(Error::Tolerance(format!(
            "{name} = {value:e} exceeds {tol:e}"
        )))
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    if let Some(n) = g.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        #[cfg(feature = "parallel")]
        {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
    match &cli.command {
        Command::Bands { window, grid } => bands(g, *window, *grid),
        Command::Modes { lambda } => modes(g, *lambda),
        Command::PropagatorCheck { lambda, states } => propagator_check(g, *lambda, *states),
        Command::Scatter { lambda } => scatter(g, *lambda),
        Command::Bound { window, grid } => bound(g, *window, *grid),
        Command::DesignRobin { case, lambda } => design(g, *case, *lambda),
        Command::OracleVerify {
            lambda,
            columns,
            points,
            count,
            decay,
        } => oracle_verify(g, *lambda, *columns, *points, *count, *decay),
        Command::Dirichlet { window, length } => dirichlet(g, *window, *length),
    }
}

fn bands(g: &Global, window: (f64, f64), grid: usize) -> Result<()> {
    let (params, pot) = g.tube()?;
    let bands = spectrum_bands(window, &params, &pot)?;
    let mut echo = params_echo(&params, &pot);
    echo["command"] = json!("bands");
    echo["window"] = json!([window.0, window.1]);
    let mut text = io::csv_header(&echo);
    text.push_str("ell,segment,k_lo,k_hi,lambda_lo,lambda_hi\n");
    for b in &bands {
        text.push_str(&io::csv_row(&[
            b.ell.to_string(),
            b.segment_index.to_string(),
            io::fmt_f64(b.k_lo),
            io::fmt_f64(b.k_hi),
            io::fmt_f64(b.lambda_lo),
            io::fmt_f64(b.lambda_hi),
        ]));
    }
    g.emit(&text)?;
    if let Some(path) = &g.svg {
        let curves = band_diagram(grid, window, &params, &pot)?;
        io::emit(
            Some(path),
            &crate::svg::band_diagram_svg(&curves, &bands, window),
        )?;
    }
    Ok(())
}

fn modes(g: &Global, lambda: f64) -> Result<()> {
    let (params, pot) = g.tube()?;
    let tc = transfer_constants(lambda, &pot, 1.0)?;
    let ms = mode_set(lambda, &params, &tc)?;
    let list: Vec<Value> = ms
        .modes
        .iter()
        .map(|m| {
            json!({
                "ell": m.ell,
                "z": io::complex(m.z),
                "z1": io::complex(m.z1),
                "z2": io::complex(m.z2),
                "class": m.class.label(),
                "self_flux": m.self_flux,
            })
        })
        .collect();
    let out = json!({
        "input": params_echo(&params, &pot),
        "lambda": lambda,
        "num_propagating_pairs": ms.num_propagating_pairs,
        "band_edge": ms.band_edge,
        "modes": list,
    });
    g.emit(&io::pretty(&out))
}

fn propagator_check(g: &Global, lambda: f64, states: usize) -> Result<()> {
    let (params, pot) = g.tube()?;
    let tol = g.tol.unwrap_or(1e-8);
    let tc = transfer_constants(lambda, &pot, 1.0)?;
    let bundle = build_propagator(lambda, &params, &tc)?;
    let ev = bundle.eigenvalues()?;
    let ms = mode_set(lambda, &params, &tc)?;
    let z1: Vec<_> = ms.modes.iter().map(|m| m.z1).collect();
    let (perm, worst) = linalg::optimal_matching(&ev, &z1);
    let table: Vec<Value> = ev
        .iter()
        .zip(&perm)
        .map(|(&e, &k)| {
            json!({
                "eigenvalue": io::complex(e),
                "z1": io::complex(z1[k]),
                "ell": ms.modes[k].ell,
                "class": ms.modes[k].class.label(),
                "distance": (e - z1[k]).norm(),
            })
        })
        .collect();
    let n = bundle.p.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut invariance: f64 = 0.0;
    for _ in 0..states {
        let mut draw = || {
            CVector::from_fn(n, |_, _| {
                linalg::c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            })
        };
        let (a, b) = (draw(), draw());
        let before = flux(&a, &b, &bundle);
        let after = flux(
            &propagate(&a, 1, &bundle),
            &propagate(&b, 1, &bundle),
            &bundle,
        );
        invariance = invariance.max((after - before).norm() / before.norm().max(1.0));
    }
    let unitarity = bundle.unitarity_residual();
    let out = json!({
        "input": params_echo(&params, &pot),
        "lambda": lambda,
        "table": table,
        "match_error": worst,
        "unitarity_residual": unitarity,
        "flux_invariance": invariance,
        "signature": [bundle.signature.0, bundle.signature.1],
        "tolerance": tol,
    });
    g.emit(&io::pretty(&out))?;
    let rings = params.rings();
    if bundle.signature != (rings, rings) {
        return Err(Error::Tolerance(format!(
            "signature {:?}, expected ({rings}, {rings})",
            bundle.signature
        )));
    }
    check("match error", worst, tol)?;
    check("unitarity residual", unitarity, tol)?;
    check("flux invariance", invariance, tol)
}

fn scatter(g: &Global, lambda: f64) -> Result<()> {
    let config = g.half_tube()?;
    let tol = g.tol.unwrap_or(1e-9);
    let echo = serde_json::to_value(config.to_file()).expect("config");
    match scattering_matrix(lambda, &config)? {
        Scattering::BoundState { lambda, rcond } => {
            let out = json!({
                "input": echo,
                "lambda": lambda,
                "bound_state": true,
                "rcond": rcond,
            });
            g.emit(&io::pretty(&out))
        }
        Scattering::Solved(r) => {
            let channels: Vec<Value> = r
                .channels
                .outgoing
                .iter()
                .zip(&r.channels.incoming)
                .map(|(o, i)| {
                    json!({
                        "ell": o.mode.ell,
                        "outgoing_z1": io::complex(o.mode.z1),
                        "incoming_z1": io::complex(i.mode.z1),
                        "propagating": o.propagating(),
                        "outgoing_kappa": io::complex(o.kappa),
                        "incoming_kappa": io::complex(i.kappa),
                    })
                })
                .collect();
            let out = json!({
                "input": echo,
                "lambda": lambda,
                "bound_state": false,
                "channels": channels,
                "s": io::matrix(&r.s),
                "s_propagating": io::matrix(&r.propagating_block()),
                "aux_values": io::matrix(&r.aux_values),
                "flux_residual": r.flux_residual,
                "unitarity_residual": r.unitarity_residual,
                "tolerance": tol,
            });
            g.emit(&io::pretty(&out))?;
            check("flux residual", r.flux_residual, tol)?;
            check("unitarity residual", r.unitarity_residual, tol.max(1e-8))
        }
    }
}

fn bound(g: &Global, window: (f64, f64), grid: usize) -> Result<()> {
    let config = g.half_tube()?;
    let tol = g.tol.unwrap_or(1e-9);
    let report = bound_state_scan(window, &config, grid)?;
    let out = json!({
        "input": serde_json::to_value(config.to_file()).expect("config"),
        "window": [window.0, window.1],
        "grid": grid,
        "candidates": report.candidates,
        "skipped": report.skipped,
        "tolerance": tol,
    });
    g.emit(&io::pretty(&out))?;
    for c in &report.candidates {
        check(&format!("residual at {}", c.lambda), c.residual, tol)?;
    }
    Ok(())
}

fn design(g: &Global, case: DesignCase, lambda: f64) -> Result<()> {
    let (params, pot) = g.tube()?;
    let d = design_robin(case, lambda, &params, &pot)?;
    let cand = d.candidate()?;
    let mut out = serde_json::to_value(d.config.to_file()).expect("config");
    out["design"] = json!({
        "case": case,
        "lambda": lambda,
        "z": d.z,
        "roots": d.roots,
        "z1": d.z1,
        "z2": d.z2,
        "embedded": cand.embedded,
        "residual": cand.residual,
        "decay_ratio": cand.decay_ratio,
    });
    g.emit(&io::pretty(&out))?;
    check("design residual", cand.residual, g.tol.unwrap_or(1e-10))
}

fn oracle_verify(
    g: &Global,
    lambda: f64,
    columns: usize,
    points: usize,
    count: usize,
    decay: Option<f64>,
) -> Result<()> {
    let config = g.half_tube()?;
    let tol = g.tol.unwrap_or(oracle::MATCH_TOL);
    let report = oracle::verify_at(&config, lambda, columns, points, count, decay, tol)?;
    let out = json!({
        "input": serde_json::to_value(config.to_file()).expect("config"),
        "expected_decay": decay,
        "report": report,
        "pass": report.passed(),
    });
    g.emit(&io::pretty(&out))?;
    if report.passed() {
        Ok(())
    } else {
        Err(Error::Tolerance(format!(
            "no eigenvalue within {tol} of {lambda} with the expected decay"
        )))
    }
}

fn dirichlet(g: &Global, window: (f64, f64), length: f64) -> Result<()> {
    let pot = match &g.config {
        Some(p) => read_config(p)?.potential,
        None => EdgePotential::Zero,
    };
    let values = dirichlet_spectrum_on(&pot, length, window)?;
    let out = json!({
        "potential": pot,
        "length": length,
        "window": [window.0, window.1],
        "eigenvalues": values,
    });
    g.emit(&io::pretty(&out))
}
