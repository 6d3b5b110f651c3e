//! File formats: system definition files, perturbation bundles, and CSV
//! export of solver output.
//!
//! Systems are JSON with f64 breakpoints (round-trip exact through the
//! shortest-representation printer) and exact rationals as num/den strings.
//! A perturbation bundle is a directory holding the perturbed system, the
//! descriptor of its invariant structure, and a machine-readable report.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::boxes::{BoxChain, CantorBundle, ConstructionParams};
use crate::cantor::{GridCantorSet, PlanSnapshot, TransportPlan};
use crate::conjugacy::{line_to_unit, transport_map, UnitPiecewiseLinear};
use crate::error::{Error, Result};
use crate::exact::ExactOffset;
use crate::map::{MonotoneMap, Part};
use crate::markov::CdfEnvelope;
use crate::minimal::MinimalBundle;
use crate::system::RandomSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coordinates {
    Real,
    Unit,
}

/// One map: breakpoints (tails implied by the first and last), plus any
/// transport segments as replayable snapshots.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapSpec {
    #[serde(default)]
    pub breakpoints: Vec<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transports: Vec<PlanSnapshot>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemFile {
    pub coordinates: Coordinates,
    pub p: f64,
    pub f0: MapSpec,
    pub f1: MapSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}

/// Snapshot depth recorded for transport segments; the matching is
/// deterministic, so this is a verification aid, not information.
const SNAPSHOT_ROUNDS: u32 = 3;

pub fn map_to_spec(map: &MonotoneMap) -> Result<MapSpec> {
    if map.is_composition() {
        return Err(Error::InvalidMap(
            "lazy compositions are not serializable; flatten or rebuild first".into(),
        ));
    }
    if let Some(bps) = map.breakpoints() {
        return Ok(MapSpec { breakpoints: bps, transports: Vec::new() });
    }
    let mut breakpoints = Vec::new();
    let mut transports = Vec::new();
    let parts = map.parts();
    for (i, part) in parts.iter().enumerate() {
        match part {
            Part::Affine { x0, y0, .. } => {
                breakpoints.push((*x0, *y0));
                if i + 1 == parts.len() {
                    breakpoints.push((part.x1(), part.y1()));
                }
            }
            Part::Transport { plan, .. } => {
                transports.push(plan.snapshot(SNAPSHOT_ROUNDS));
                if i + 1 == parts.len() {
                    // nothing: hull carries the endpoint
                }
            }
        }
    }
    Ok(MapSpec { breakpoints, transports })
}

pub fn map_from_spec(spec: &MapSpec) -> Result<MonotoneMap> {
    if spec.transports.is_empty() {
        return MonotoneMap::from_breakpoints(&spec.breakpoints);
    }
    let mut parts: Vec<Part> = Vec::new();
    for snap in &spec.transports {
        let plan = Arc::new(TransportPlan::from_snapshot(snap)?);
        let (a0, a1) = plan.source().hull();
        let (b0, b1) = plan.target().hull();
        parts.push(Part::Transport {
            x0: crate::exact::rat_to_f64(&a0),
            x1: crate::exact::rat_to_f64(&a1),
            y0: crate::exact::rat_to_f64(&b0),
            y1: crate::exact::rat_to_f64(&b1),
            plan,
        });
    }
    // affine chain segments between consecutive breakpoints, skipping spans
    // covered by transports
    let spans: Vec<(f64, f64)> = parts.iter().map(|p| (p.x0(), p.x1())).collect();
    for w in spec.breakpoints.windows(2) {
        let covered = spans.iter().any(|s| s.0 <= w[0].0 && w[1].0 <= s.1);
        if !covered {
            parts.push(Part::Affine { x0: w[0].0, y0: w[0].1, x1: w[1].0, y1: w[1].1 });
        }
    }
    parts.sort_by(|a, b| a.x0().partial_cmp(&b.x0()).unwrap());
    MonotoneMap::from_parts(parts)
}

pub fn system_to_file(sys: &RandomSystem, provenance: Option<serde_json::Value>) -> Result<SystemFile> {
    Ok(SystemFile {
        coordinates: Coordinates::Real,
        p: sys.p,
        f0: map_to_spec(&sys.f0)?,
        f1: map_to_spec(&sys.f1)?,
        provenance,
    })
}

/// Loads a system without validating; callers report on validity.
pub fn system_from_file(file: &SystemFile) -> Result<RandomSystem> {
    let (f0, f1) = match file.coordinates {
        Coordinates::Real => (map_from_spec(&file.f0)?, map_from_spec(&file.f1)?),
        Coordinates::Unit => {
            if !(file.f0.transports.is_empty() && file.f1.transports.is_empty()) {
                return Err(Error::Parse(
                    "unit-coordinate files carry breakpoints only".into(),
                ));
            }
            let u0 = UnitPiecewiseLinear::new(file.f0.breakpoints.clone())?;
            let u1 = UnitPiecewiseLinear::new(file.f1.breakpoints.clone())?;
            (transport_map(&u0)?, transport_map(&u1)?)
        }
    };
    Ok(RandomSystem::new_unchecked(f0, f1, file.p))
}

pub fn save_system(path: &Path, sys: &RandomSystem, provenance: Option<serde_json::Value>) -> Result<()> {
    let file = system_to_file(sys, provenance)?;
    fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

pub fn load_system(path: &Path) -> Result<(RandomSystem, SystemFile)> {
    let text = fs::read_to_string(path)?;
    let file: SystemFile = serde_json::from_str(&text)?;
    let sys = system_from_file(&file)?;
    Ok((sys, file))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Descriptor {
    Cantor {
        grid: GridCantorSet,
        params: ConstructionParams,
        below: BoxChain,
        above: BoxChain,
    },
    Minimal {
        eta0: ExactOffset,
        eta1: ExactOffset,
        radius: f64,
        barrier: f64,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub requested_eps: f64,
    pub effective_eps: f64,
    pub certified_dm: f64,
    pub closeness_ok: bool,
    pub validity: crate::system::ValidityReport,
}

/// A loaded perturbation bundle of either kind.
#[derive(Debug)]
pub enum Bundle {
    Cantor(CantorBundle),
    Minimal(MinimalBundle),
}

fn write_bundle(
    dir: &Path,
    sys: &RandomSystem,
    provenance: serde_json::Value,
    descriptor: &Descriptor,
    report: &PerturbationReport,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    save_system(&dir.join("system.json"), sys, Some(provenance))?;
    fs::write(dir.join("descriptor.json"), serde_json::to_string_pretty(descriptor)?)?;
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)?)?;
    Ok(())
}

pub fn save_cantor_bundle(dir: &Path, bundle: &CantorBundle) -> Result<()> {
    let descriptor = Descriptor::Cantor {
        grid: bundle.grid.clone(),
        params: bundle.params.clone(),
        below: bundle.below.clone(),
        above: bundle.above.clone(),
    };
    let report = PerturbationReport {
        requested_eps: bundle.requested_eps,
        effective_eps: bundle.effective_eps,
        certified_dm: bundle.certified_dm,
        closeness_ok: bundle.certified_dm < bundle.effective_eps,
        validity: bundle.system.validate(),
    };
    let provenance = serde_json::json!({
        "perturbation": "cantor",
        "level_bits": bundle.params.level_bits,
        "grid_bits": bundle.params.grid_bits,
    });
    write_bundle(dir, &bundle.system, provenance, &descriptor, &report)
}

pub fn save_minimal_bundle(dir: &Path, bundle: &MinimalBundle) -> Result<()> {
    let descriptor = Descriptor::Minimal {
        eta0: bundle.eta0.clone(),
        eta1: bundle.eta1.clone(),
        radius: bundle.radius,
        barrier: bundle.barrier,
    };
    let report = PerturbationReport {
        requested_eps: bundle.requested_eps,
        effective_eps: bundle.effective_eps,
        certified_dm: bundle.certified_dm,
        closeness_ok: bundle.certified_dm < bundle.effective_eps,
        validity: bundle.system.validate(),
    };
    let provenance = serde_json::json!({ "perturbation": "minimal" });
    write_bundle(dir, &bundle.system, provenance, &descriptor, &report)
}

pub fn load_bundle(dir: &Path) -> Result<Bundle> {
    let (system, _) = load_system(&dir.join("system.json"))?;
    let descriptor: Descriptor =
        serde_json::from_str(&fs::read_to_string(dir.join("descriptor.json"))?)?;
    let report: PerturbationReport =
        serde_json::from_str(&fs::read_to_string(dir.join("report.json"))?)?;
    match descriptor {
        Descriptor::Cantor { grid, params, below, above } => Ok(Bundle::Cantor(CantorBundle {
            system,
            grid,
            below,
            above,
            params,
            certified_dm: report.certified_dm,
            requested_eps: report.requested_eps,
            effective_eps: report.effective_eps,
        })),
        Descriptor::Minimal { eta0, eta1, radius, barrier } => {
            Ok(Bundle::Minimal(MinimalBundle {
                system,
                eta0,
                eta1,
                radius,
                barrier,
                effective_eps: report.effective_eps,
                requested_eps: report.requested_eps,
                certified_dm: report.certified_dm,
            }))
        }
    }
}

/// CDF export: certificate header lines, then one row per jump point with
/// both coordinates and both envelope staircases. Stable column order.
pub fn export_cdf_csv<W: Write>(env: &CdfEnvelope, out: &mut W) -> Result<()> {
    writeln!(
        out,
        "# tail_certificate m={} alpha={} x0={} ball_radius={}",
        env.cert.m, env.cert.alpha, env.cert.x0, env.cert.ball_radius
    )?;
    writeln!(
        out,
        "# window lo={} hi={} tau={} tol={} converged={} iterations={} lattice=\"{}\"",
        env.window.0, env.window.1, env.tau, env.tol, env.converged, env.iterations, env.lattice
    )?;
    writeln!(out, "x_real,x_unit,cdf_lower,cdf_upper")?;
    let lower = env.lower();
    let upper = env.upper();
    let mut xs: Vec<f64> =
        lower.jump_points().iter().chain(upper.jump_points()).copied().collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    for x in xs {
        writeln!(
            out,
            "{},{},{},{}",
            x,
            line_to_unit(x).value(),
            lower.value(x),
            upper.value(x)
        )?;
    }
    Ok(())
}

/// Orbit export: the seeded chain itself, one row per step after burn-in.
pub fn export_orbit_csv<W: Write>(
    sys: &RandomSystem,
    samples: usize,
    burn_in: usize,
    seed: u64,
    out: &mut W,
) -> Result<()> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    writeln!(out, "step,branch,x_real,x_unit")?;
    let mut x = 0.0f64;
    for step in 0..burn_in + samples {
        let low = rng.gen::<f64>() < sys.p;
        let map = if low { &sys.f0 } else { &sys.f1 };
        x = map.eval(x, 1e-9)?;
        if step >= burn_in {
            writeln!(
                out,
                "{},{},{},{}",
                step - burn_in,
                if low { 0 } else { 1 },
                x,
                line_to_unit(x).value()
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxes::perturb_cantor;
    use crate::minimal::perturb_minimal;
    use crate::system::symmetric_drift_system;

    #[test]
    fn real_system_round_trip() {
        let sys = symmetric_drift_system();
        let file = system_to_file(&sys, None).unwrap();
        let json = serde_json::to_string(&file).unwrap();
        let parsed: SystemFile = serde_json::from_str(&json).unwrap();
        let back = system_from_file(&parsed).unwrap();
        assert_eq!(sys.f0.breakpoints(), back.f0.breakpoints());
        assert_eq!(sys.f1.breakpoints(), back.f1.breakpoints());
        assert_eq!(sys.p, back.p);
    }

    #[test]
    fn unit_system_loads_through_the_conjugacy() {
        // endpoint slope products 0.8 * 4/3 and 1.2 * 6/7 both exceed one
        let file = SystemFile {
            coordinates: Coordinates::Unit,
            p: 0.5,
            f0: MapSpec { breakpoints: vec![(0.5, 0.4)], transports: vec![] },
            f1: MapSpec { breakpoints: vec![(0.3, 0.4)], transports: vec![] },
            provenance: None,
        };
        let sys = system_from_file(&file).unwrap();
        let r = sys.validate();
        assert!(r.is_valid(), "{:?}", r.first_failure());
        assert!((sys.f0.left_offset() - 0.8f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn cantor_bundle_round_trip() {
        let sys = symmetric_drift_system();
        let bundle = perturb_cantor(&sys, 0.3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_cantor_bundle(dir.path(), &bundle).unwrap();
        let loaded = load_bundle(dir.path()).unwrap();
        match loaded {
            Bundle::Cantor(b) => {
                assert_eq!(b.params, bundle.params);
                assert_eq!(b.below, bundle.below);
                assert_eq!(b.grid, bundle.grid);
                assert_eq!(b.certified_dm, bundle.certified_dm);
                // maps agree pointwise after the round trip
                for i in 0..50 {
                    let x = -3.0 + 6.0 * i as f64 / 49.0;
                    let a = bundle.system.f0.eval(x, 1e-8).unwrap();
                    let c = b.system.f0.eval(x, 1e-8).unwrap();
                    assert!((a - c).abs() < 2e-8, "{a} vs {c}");
                }
            }
            _ => panic!("wrong bundle kind"),
        }
    }

    #[test]
    fn minimal_bundle_round_trip() {
        let sys = symmetric_drift_system();
        let bundle = perturb_minimal(&sys, 0.2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_minimal_bundle(dir.path(), &bundle).unwrap();
        match load_bundle(dir.path()).unwrap() {
            Bundle::Minimal(b) => {
                assert_eq!(b.eta0, bundle.eta0);
                assert_eq!(b.eta1, bundle.eta1);
                assert_eq!(b.barrier, bundle.barrier);
                assert_eq!(
                    b.system.f0.breakpoints().unwrap(),
                    bundle.system.f0.breakpoints().unwrap()
                );
            }
            _ => panic!("wrong bundle kind"),
        }
    }

    #[test]
    fn orbit_export_is_byte_stable() {
        let sys = symmetric_drift_system();
        let mut a = Vec::new();
        let mut b = Vec::new();
        export_orbit_csv(&sys, 200, 10, 99, &mut a).unwrap();
        export_orbit_csv(&sys, 200, 10, 99, &mut b).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with(b"step,branch,x_real,x_unit\n"));
    }

    #[test]
    fn cdf_export_has_header_and_columns() {
        let sys = symmetric_drift_system();
        let env = crate::markov::stationary_solve(&sys, 0.05).unwrap();
        let mut buf = Vec::new();
        export_cdf_csv(&env, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# tail_certificate"));
        assert!(text.contains("x_real,x_unit,cdf_lower,cdf_upper"));
        let data_lines = text.lines().filter(|l| !l.starts_with('#')).count();
        assert!(data_lines > 10);
    }
}
