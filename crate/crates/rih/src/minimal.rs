//! The translation-tail perturbation: replace both left tails by exact
//! translations with irrational ratio and positive average drift. The
//! resulting system is minimal on the line, so its stationary measure has
//! full support; the density diagnostic below searches words witnessing
//! that at desk scale.
//!
//! Offsets live in Q(sqrt 2): one pure rational, one with a nonzero sqrt-2
//! coefficient, so irrationality of the ratio is checked, not assumed.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{rat_from_f64, rat_from_f64_decimal, rat_int, ExactOffset, Rat};
use crate::map::MonotoneMap;
use crate::system::{system_distance, RandomSystem};

/// A minimal-perturbed system with the exact offset pair and the geometry
/// of the splice.
#[derive(Clone, Debug)]
pub struct MinimalBundle {
    pub system: RandomSystem,
    pub eta0: ExactOffset,
    pub eta1: ExactOffset,
    /// The original maps are kept unchanged on [-radius, infinity).
    pub radius: f64,
    pub effective_eps: f64,
    pub requested_eps: f64,
    /// Left of this point both maps are exact translations.
    pub barrier: f64,
    pub certified_dm: f64,
}

/// Picks offsets in the windows just below the left tail limits, with
/// positive average drift and exactly irrational ratio. Deterministic:
/// the rational offset sits at the midpoint of its window, the sqrt-2
/// coefficient is the coarsest decimal that fits.
pub fn choose_offsets(sys: &RandomSystem, eps: f64) -> Result<(ExactOffset, ExactOffset, f64)> {
    let report = sys.validate();
    if !report.is_valid() {
        return Err(Error::InvalidSystem(report.first_failure().unwrap_or_default()));
    }
    let l0 = sys.f0.left_offset();
    let l1 = sys.f1.left_offset();
    if l1 <= 0.0 {
        return Err(Error::InvalidSystem(
            "the above-diagonal map needs a positive left tail".into(),
        ));
    }
    // the windows must stay below the tail limits, so the budget cannot
    // exceed the positive one
    let eps_eff = eps.min(0.99 * l1);
    let eps_rat = rat_from_f64_decimal(eps_eff);
    let quarter = &eps_rat / rat_int(4);
    let eta0 = ExactOffset::from_rational(rat_from_f64(l0) - &quarter);

    let w_lo = rat_from_f64(l1) - &eps_rat / rat_int(2);
    let w_hi = rat_from_f64(l1);
    let mid = l1 - eps_eff / 4.0;
    let p = rat_from_f64(sys.p);
    let one_minus_p = rat_int(1) - &p;
    for denom in [100i64, 1_000, 10_000, 100_000, 1_000_000] {
        let guess = (mid / std::f64::consts::SQRT_2 * denom as f64).floor() as i64;
        for k in [guess, guess + 1, guess - 1] {
            if k == 0 {
                continue;
            }
            let cand = ExactOffset::new(Rat::zero(), Rat::new(k.into(), denom.into()));
            let inside = cand.cmp_rat(&w_lo) == std::cmp::Ordering::Greater
                && cand.cmp_rat(&w_hi) == std::cmp::Ordering::Less;
            if !inside {
                continue;
            }
            let drift = eta0.mul_rat(&p).add(&cand.mul_rat(&one_minus_p));
            if drift.sign() == std::cmp::Ordering::Greater {
                return Ok((eta0, cand, eps_eff));
            }
        }
    }
    Err(Error::Construction(
        "no offset with positive drift fits the windows; budget too large".into(),
    ))
}

/// Splices translation tails onto a system: each map becomes translation by
/// its offset left of `-radius - eps`, stays itself right of `-radius`, and
/// is affine in between. Verifies closeness and validity, growing the
/// radius on failure.
pub fn perturb_minimal(sys: &RandomSystem, eps: f64) -> Result<MinimalBundle> {
    if eps <= 0.0 {
        return Err(Error::Domain("perturbation budget must be positive".into()));
    }
    let (eta0, eta1, eps_eff) = choose_offsets(sys, eps)?;
    let support = |m: &MonotoneMap| m.compact_support().map(|s| -s.0).unwrap_or(0.0);
    let base = support(&sys.f0).max(support(&sys.f1)).max(0.0).ceil() + 1.0;
    let mut last_err: Option<Error> = None;
    for attempt in 0..8u32 {
        let radius = base + attempt as f64;
        match splice(sys, radius, eps_eff, &eta0, &eta1) {
            Ok(mut bundle) => {
                bundle.requested_eps = eps;
                return Ok(bundle);
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(Error::Construction(format!(
        "splicing failed after 8 radius increases; last error: {}",
        last_err.map(|e| e.to_string()).unwrap_or_default()
    )))
}

/// Same splice with caller-supplied offsets; used for control experiments
/// such as rational-ratio offset pairs.
pub fn perturb_minimal_with_offsets(
    sys: &RandomSystem,
    eps: f64,
    eta0: ExactOffset,
    eta1: ExactOffset,
) -> Result<MinimalBundle> {
    let support = |m: &MonotoneMap| m.compact_support().map(|s| -s.0).unwrap_or(0.0);
    let base = support(&sys.f0).max(support(&sys.f1)).max(0.0).ceil() + 1.0;
    splice(sys, base, eps, &eta0, &eta1)
}

fn splice(
    sys: &RandomSystem,
    radius: f64,
    eps_eff: f64,
    eta0: &ExactOffset,
    eta1: &ExactOffset,
) -> Result<MinimalBundle> {
    let barrier = -radius - eps_eff;
    let rebuild = |f: &MonotoneMap, eta: &ExactOffset| -> Result<MonotoneMap> {
        let mut pts = vec![(barrier, barrier + eta.to_f64())];
        pts.push((-radius, f.eval(-radius, 1e-12)?));
        if let Some(bps) = f.breakpoints() {
            for (x, y) in bps {
                if x > -radius {
                    pts.push((x, y));
                }
            }
        } else {
            return Err(Error::InvalidMap(
                "minimal splice needs affine-segmented maps".into(),
            ));
        }
        MonotoneMap::from_breakpoints(&pts)
    };
    let g0 = rebuild(&sys.f0, eta0)?;
    let g1 = rebuild(&sys.f1, eta1)?;
    let d0 = sys.f0.sup_distance(&g0);
    let d1 = sys.f1.sup_distance(&g1);
    let certified_dm = d0.max(d1);
    if certified_dm >= eps_eff {
        return Err(Error::Construction(format!(
            "splice distance {certified_dm:.6} not below the budget {eps_eff:.6}"
        )));
    }
    let system = RandomSystem::new(g0, g1, sys.p)?;
    let check = system_distance(sys, &system);
    debug_assert!(check.d_m <= certified_dm + 1e-9);
    Ok(MinimalBundle {
        system,
        eta0: eta0.clone(),
        eta1: eta1.clone(),
        radius,
        effective_eps: eps_eff,
        requested_eps: eps_eff,
        barrier,
        certified_dm,
    })
}

/// A word witnessing a visit: `descents` applications of the below map and
/// `lifts` of the above map inside the translation regime, then `climbs`
/// more applications of the above map to reach the cell.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WordSpec {
    pub descents: u64,
    pub lifts: u64,
    pub climbs: u64,
}

impl WordSpec {
    pub fn len(&self) -> u64 {
        self.descents + self.lifts + self.climbs
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellVisit {
    pub lo: f64,
    pub hi: f64,
    pub word: Option<WordSpec>,
    /// f64 landing point of the simulated word, when found.
    pub landed: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityReport {
    pub cells: Vec<CellVisit>,
    pub visited: usize,
    pub all_visited: bool,
    /// Budget ran out with unvisited cells; evidence is inconclusive, not a
    /// disproof.
    pub inconclusive: bool,
    pub steps_used: u64,
}

/// Greedy word search: for every cell of the grid on [-k, k], find a lattice
/// point x0 + s*eta0 + t*eta1 (exact arithmetic) inside a preimage of the
/// cell under the above map, then climb. Orbit positions in the translation
/// regime are exact elements of Q(sqrt 2).
pub fn density_diagnostic(
    bundle: &MinimalBundle,
    x0: &Rat,
    k: f64,
    n_cells: usize,
    horizon: u64,
) -> Result<DensityReport> {
    if n_cells == 0 || k <= 0.0 || horizon == 0 {
        return Err(Error::Domain("window, cells, and horizon must be positive".into()));
    }
    let barrier = rat_from_f64(bundle.barrier);
    if x0 >= &barrier {
        return Err(Error::Domain(format!(
            "start point must lie left of the translation barrier {}",
            bundle.barrier
        )));
    }
    let start = ExactOffset::from_rational(x0.clone());
    let eta0 = &bundle.eta0;
    let eta1 = &bundle.eta1;
    let neg_eta0 = eta0.neg();
    if neg_eta0.sign() != std::cmp::Ordering::Greater || eta1.sign() != std::cmp::Ordering::Greater
    {
        return Err(Error::InvalidSystem("offsets must straddle zero".into()));
    }
    if !eta0.sqrt2_coeff.is_zero() {
        return Err(Error::Domain(
            "the diagnostic needs the below offset to be rational".into(),
        ));
    }

    // For a rational offset pair the reachable set in the translation
    // regime lies on the lattice x0 + gcd(|eta0|, eta1) * Z; windows that
    // dodge that lattice are skipped without searching.
    let lattice_gap: Option<Rat> = if eta1.sqrt2_coeff.is_zero() {
        let a = neg_eta0.rational.clone();
        let b = eta1.rational.clone();
        let q = num_integer::lcm(a.denom().clone(), b.denom().clone());
        let na = (a.numer() * &q / a.denom()).abs();
        let nb = (b.numer() * &q / b.denom()).abs();
        Some(Rat::new(num_integer::gcd(na, nb), q))
    } else {
        None
    };

    let g1 = &bundle.system.f1;
    let width = 2.0 * k / n_cells as f64;
    let mut cells = Vec::with_capacity(n_cells);
    let mut steps_used: u64 = 0;
    let mut probes: u64 = horizon;
    let max_climbs = 200u64;

    for i in 0..n_cells {
        let lo = -k + width * i as f64;
        let hi = lo + width;
        let mut found: Option<(WordSpec, f64)> = None;

        'climb: for climbs in 0..=max_climbs {
            if probes == 0 {
                break;
            }
            // pull the cell back through the above map `climbs` times
            let mut v_lo = lo;
            let mut v_hi = hi;
            for _ in 0..climbs {
                v_lo = g1.invert(v_lo, 1e-11)?;
                v_hi = g1.invert(v_hi, 1e-11)?;
            }
            let margin = 1e-7 * (1.0 + v_lo.abs().max(v_hi.abs()));
            let v_lo = v_lo + margin;
            let v_hi = v_hi - margin;
            if !(v_lo < v_hi) || v_hi >= bundle.barrier - margin {
                continue;
            }
            let tgt_lo = rat_from_f64(v_lo);
            let tgt_hi = rat_from_f64(v_hi);

            if let Some(g) = &lattice_gap {
                // does the window contain a lattice point at all?
                let kk = ((&tgt_hi - x0) / g).floor();
                let hit = x0 + g * kk;
                if hit <= tgt_lo {
                    continue;
                }
            }

            // find (lifts, descents) with start + s*eta0 + t*eta1 in the
            // target window, smallest number of lifts first
            let t_cap = horizon.min(200_000);
            for t in 0..t_cap {
                if probes == 0 {
                    break 'climb;
                }
                probes -= 1;
                let base = start.add(&eta1.scale_int(t as i64));
                // admissible s range from the exact window bounds
                let upper = base.add_rat(&-tgt_lo.clone()).div_rat(&neg_eta0.rational);
                let lower = base.add_rat(&-tgt_hi.clone()).div_rat(&neg_eta0.rational);
                let s_max = upper.floor();
                let s_min = lower.floor() + 1;
                let s = s_min.max(0);
                if s > s_max {
                    continue;
                }
                let pos = base.add(&eta0.scale_int(s));
                let ok_lo = pos.cmp_rat(&tgt_lo) == std::cmp::Ordering::Greater;
                let ok_hi = pos.cmp_rat(&tgt_hi) == std::cmp::Ordering::Less;
                if !(ok_lo && ok_hi) {
                    continue;
                }
                let word = WordSpec { descents: s as u64, lifts: t, climbs };
                if steps_used + word.len() > horizon {
                    break 'climb;
                }
                steps_used += word.len();
                // confirm the climb numerically
                let mut x = pos.to_f64();
                for _ in 0..climbs {
                    x = g1.eval(x, 1e-11)?;
                }
                if x >= lo && x < hi {
                    found = Some((word, x));
                    break 'climb;
                }
                continue 'climb;
            }
        }

        cells.push(CellVisit {
            lo,
            hi,
            word: found.map(|f| f.0),
            landed: found.map(|f| f.1),
        });
    }

    let visited = cells.iter().filter(|c| c.word.is_some()).count();
    Ok(DensityReport {
        all_visited: visited == n_cells,
        inconclusive: visited < n_cells,
        visited,
        cells,
        steps_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use crate::system::symmetric_drift_system;
    use std::cmp::Ordering;

    #[test]
    fn offsets_match_reference_windows() {
        // left tails L0 = -3/8, L1 = 1/2, p = 1/2, eps = 0.1; right tails
        // chosen so the exponent at plus infinity stays positive
        let f0 = MonotoneMap::from_breakpoints(&[(0.0, -0.375), (1.0, -0.125)]).unwrap();
        let f1 = MonotoneMap::from_breakpoints(&[(-1.0, -0.5), (0.0, 0.5)]).unwrap();
        let sys = RandomSystem::new(f0, f1, 0.5).unwrap();
        let (eta0, eta1, eps_eff) = choose_offsets(&sys, 0.1).unwrap();
        assert_eq!(eps_eff, 0.1);
        assert_eq!(eta0.rational, rat(-2, 5));
        assert!(!eta0.is_irrational());
        assert!(eta1.is_irrational());
        assert_eq!(eta1.sqrt2_coeff, rat(33, 100));
        let v = eta1.to_f64();
        assert!(v > 0.45 && v < 0.5, "{v}");
        assert!(0.5 * eta0.to_f64() + 0.5 * v > 0.0);
    }

    #[test]
    fn oversized_budget_is_reduced() {
        let sys = symmetric_drift_system(); // L1 = 1.5
        let (_e0, _e1, eps_eff) = choose_offsets(&sys, 10.0).unwrap();
        assert!(eps_eff < 1.5);
    }

    #[test]
    fn splice_preserves_the_right_part_exactly() {
        let sys = symmetric_drift_system();
        let bundle = perturb_minimal(&sys, 0.1).unwrap();
        assert!(bundle.certified_dm < 0.1);
        assert!(bundle.system.validate().is_valid());
        for i in 0..50 {
            let x = -bundle.radius + i as f64 * 0.3;
            let a = sys.f0.eval(x, 1e-12).unwrap();
            let b = bundle.system.f0.eval(x, 1e-12).unwrap();
            assert_eq!(a, b, "maps differ right of the splice at {x}");
        }
        // translation regime left of the barrier
        let x = bundle.barrier - 2.0;
        let v = bundle.system.f0.eval(x, 1e-12).unwrap();
        assert!((v - (x + bundle.eta0.to_f64())).abs() < 1e-12);
    }

    #[test]
    fn connector_stays_monotone_and_below() {
        let sys = symmetric_drift_system();
        let bundle = perturb_minimal(&sys, 0.4).unwrap();
        let g0 = &bundle.system.f0;
        let mut prev = f64::NEG_INFINITY;
        for i in 0..200 {
            let x = bundle.barrier - 0.5 + i as f64 * 0.01;
            let v = g0.eval(x, 1e-12).unwrap();
            assert!(v > prev);
            assert!(v < x);
            prev = v;
        }
    }

    #[test]
    fn diagnostic_visits_every_cell() {
        let sys = symmetric_drift_system();
        let bundle = perturb_minimal(&sys, 0.1).unwrap();
        let x0 = rat_from_f64(bundle.barrier.floor() - 1.0);
        let report = density_diagnostic(&bundle, &x0, 3.0, 12, 100_000).unwrap();
        assert!(
            report.all_visited,
            "unvisited cells: {:?}",
            report
                .cells
                .iter()
                .filter(|c| c.word.is_none())
                .map(|c| c.lo)
                .collect::<Vec<_>>()
        );
        assert_eq!(bundle.eta0.sign(), Ordering::Less);
    }

    #[test]
    fn rational_ratio_control_misses_cells() {
        let sys = symmetric_drift_system();
        // eta1/eta0 = -3/2: the reachable set in the translation regime is
        // a discrete lattice of spacing 1/5
        let eta0 = ExactOffset::from_rational(rat(-2, 5));
        let eta1 = ExactOffset::from_rational(rat(3, 5));
        let bundle = perturb_minimal_with_offsets(&sys, 1.2, eta0, eta1).unwrap();
        let x0 = rat_from_f64(bundle.barrier.floor() - 1.0);
        let report = density_diagnostic(&bundle, &x0, 6.0, 240, 200_000).unwrap();
        assert!(report.inconclusive);
        assert!(report.visited < 240);
    }
}
