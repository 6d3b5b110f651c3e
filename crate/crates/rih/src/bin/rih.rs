//! Command-line front end: validation, perturbation, stationary solving,
//! diagnostics, and CSV export. Thin wrappers over the library; every
//! command is deterministic given its flags.
//!
//! Exit codes: 0 success, 1 domain failure, 2 parse or I/O failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use rih::boxes::perturb_cantor;
use rih::error::Error;
use rih::exact::rat_from_f64;
use rih::io::{
    export_cdf_csv, export_orbit_csv, load_bundle, load_system, save_cantor_bundle,
    save_minimal_bundle, Bundle,
};
use rih::markov::{
    cover_mass, stationary_solve_with, tail_certificate, Lattice, SolveOptions,
};
use rih::minimal::{density_diagnostic, perturb_minimal};
use rih::system::{system_distance, RandomSystem};

#[derive(Parser)]
#[command(name = "rih", about = "random interval homeomorphism systems", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PerturbMode {
    Cantor,
    Minimal,
}

#[derive(Clone, Copy, ValueEnum)]
enum DiagnoseMode {
    Singular,
    Support,
}

#[derive(Subcommand)]
enum Command {
    /// Check the five membership conditions and report the exponents.
    Validate {
        path: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Produce a nearby system with singular or fully supported stationary
    /// measure; writes a bundle directory.
    Perturb {
        path: PathBuf,
        #[arg(long, value_enum)]
        mode: PerturbMode,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve for the stationary CDF envelope and export it as CSV.
    Stationary {
        path: PathBuf,
        #[arg(long, default_value_t = 5e-3)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Support diagnostics: cover mass on the invariant Cantor set, or
    /// per-cell mass over a window plus the orbit-density search.
    Diagnose {
        path: PathBuf,
        #[arg(long, value_enum)]
        mode: DiagnoseMode,
        #[arg(long, default_value_t = 5e-3)]
        tol: f64,
        #[arg(long, default_value_t = 6)]
        depth: u32,
        #[arg(long, default_value_t = 5.0)]
        window: f64,
        #[arg(long, default_value_t = 40)]
        cells: usize,
        #[arg(long, default_value_t = 100_000)]
        horizon: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Distances between two systems.
    Distance { a: PathBuf, b: PathBuf },
    /// Seeded orbit sample as CSV.
    Orbit {
        path: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 1_000)]
        burn_in: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Loads either a bare system file or a bundle directory.
fn load_any(path: &Path) -> rih::Result<(RandomSystem, Option<Bundle>)> {
    if path.is_dir() {
        let bundle = load_bundle(path)?;
        let sys = match &bundle {
            Bundle::Cantor(b) => b.system.clone(),
            Bundle::Minimal(b) => b.system.clone(),
        };
        Ok((sys, Some(bundle)))
    } else {
        let (sys, _) = load_system(path)?;
        Ok((sys, None))
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> rih::Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> rih::Result<bool> {
    match cli.command {
        Command::Validate { path, json } => {
            let (sys, _) = load_any(&path)?;
            let report = sys.validate();
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                let line = |name: &str, c: &rih::system::Condition| {
                    println!("{name}: {} ({})", if c.pass { "pass" } else { "FAIL" }, c.detail);
                };
                line("(i)   homeomorphisms", &report.homeomorphisms);
                line("(ii)  below diagonal", &report.below);
                line("(iii) above diagonal", &report.above);
                line("(iv)  probability", &report.probability);
                line("(v)   lyapunov", &report.lyapunov);
                let (d00, d01) = sys.f0.endpoint_derivatives();
                let (d10, d11) = sys.f1.endpoint_derivatives();
                println!("endpoint derivatives: f0 ({d00:.6}, {d01:.6}), f1 ({d10:.6}, {d11:.6})");
                println!(
                    "lyapunov exponents: {:.6} at -inf, {:.6} at +inf",
                    report.lyap.lambda_minus, report.lyap.lambda_plus
                );
            }
            Ok(report.is_valid())
        }
        Command::Perturb { path, mode, eps, out } => {
            if eps <= 0.0 {
                return Err(Error::Domain("--eps must be positive".into()));
            }
            let (sys, _) = load_any(&path)?;
            match mode {
                PerturbMode::Cantor => {
                    let bundle = perturb_cantor(&sys, eps)?;
                    save_cantor_bundle(&out, &bundle)?;
                    println!(
                        "cantor bundle written to {}: levels 2^{}, grid 2^{}, boxes {}+{}, certified d_m {:.6} < {:.6}",
                        out.display(),
                        bundle.params.level_bits,
                        bundle.params.grid_bits,
                        bundle.below.boxes.len(),
                        bundle.above.boxes.len(),
                        bundle.certified_dm,
                        bundle.effective_eps,
                    );
                }
                PerturbMode::Minimal => {
                    let bundle = perturb_minimal(&sys, eps)?;
                    save_minimal_bundle(&out, &bundle)?;
                    println!(
                        "minimal bundle written to {}: eta0 = {}, eta1 = {}, certified d_m {:.6} < {:.6}",
                        out.display(),
                        bundle.eta0,
                        bundle.eta1,
                        bundle.certified_dm,
                        bundle.effective_eps,
                    );
                }
            }
            Ok(true)
        }
        Command::Stationary { path, tol, out } => {
            let (sys, bundle) = load_any(&path)?;
            let lattice = match &bundle {
                Some(Bundle::Cantor(b)) => Some(Lattice::for_grid(&b.grid, 8)),
                _ => None,
            };
            let env = stationary_solve_with(
                &sys,
                &SolveOptions { tol, lattice, ..Default::default() },
            )?;
            let mut buf = Vec::new();
            export_cdf_csv(&env, &mut buf)?;
            emit(&out, &String::from_utf8_lossy(&buf))?;
            eprintln!(
                "envelope: gap {:.6}, tau {:.2e}, iterations {}, converged {}",
                env.gap, env.tau, env.iterations, env.converged
            );
            Ok(env.converged)
        }
        Command::Diagnose { path, mode, tol, depth, window, cells, horizon, out } => {
            let (sys, bundle) = load_any(&path)?;
            match mode {
                DiagnoseMode::Singular => {
                    let b = match bundle {
                        Some(Bundle::Cantor(b)) => b,
                        _ => {
                            return Err(Error::Domain(
                                "singular diagnostics need a cantor bundle directory".into(),
                            ))
                        }
                    };
                    let lattice = Lattice::for_grid(&b.grid, depth.max(6) + 2);
                    let env = stationary_solve_with(
                        &sys,
                        &SolveOptions { tol, lattice: Some(lattice), ..Default::default() },
                    )?;
                    let report = cover_mass(&env, &b.grid, depth);
                    let text = serde_json::to_string_pretty(&report)?;
                    emit(&out, &text)?;
                    if out.is_some() {
                        println!(
                            "cover mass >= {:.4} on {:.4} of the window (depth {})",
                            report.mass_lower_bound, report.cover_fraction_f64, depth
                        );
                    }
                    Ok(env.converged && report.mass_lower_bound > 0.0)
                }
                DiagnoseMode::Support => {
                    let env = stationary_solve_with(
                        &sys,
                        &SolveOptions { tol, ..Default::default() },
                    )?;
                    let masses =
                        rih::markov::support_grid_mass(&env, -window, window, cells);
                    let all_positive = masses.iter().all(|c| c.lower_bound > 0.0);
                    let density = match &bundle {
                        Some(Bundle::Minimal(b)) => {
                            let x0 = rat_from_f64(b.barrier.floor() - 1.0);
                            Some(density_diagnostic(b, &x0, window, cells, horizon)?)
                        }
                        _ => None,
                    };
                    let text = serde_json::to_string_pretty(&serde_json::json!({
                        "cells": masses,
                        "all_cells_positive": all_positive,
                        "density": density,
                    }))?;
                    emit(&out, &text)?;
                    let density_ok = density.as_ref().map(|d| d.all_visited).unwrap_or(true);
                    Ok(all_positive && density_ok)
                }
            }
        }
        Command::Distance { a, b } => {
            let (sa, _) = load_any(&a)?;
            let (sb, _) = load_any(&b)?;
            let d = system_distance(&sa, &sb);
            println!("d_m = {:.9}", d.d_m);
            println!("d_0 = {:.9} (sampled, bounded by 3 d_m)", d.d_0);
            Ok(true)
        }
        Command::Orbit { path, seed, samples, burn_in, out } => {
            let (sys, _) = load_any(&path)?;
            let report = sys.validate();
            if !report.is_valid() {
                return Err(Error::InvalidSystem(report.first_failure().unwrap_or_default()));
            }
            // fail early if the certificate is degenerate
            let _ = tail_certificate(&sys)?;
            let mut buf = Vec::new();
            export_orbit_csv(&sys, samples, burn_in, seed, &mut buf)?;
            emit(&out, &String::from_utf8_lossy(&buf))?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) | Error::Parse(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
