//! The linked-box perturbation: given a valid system and a closeness budget,
//! produce a nearby system whose stationary measure is carried by a grid
//! Cantor set.
//!
//! The map is threaded through a chain of axis-aligned boxes, one grid level
//! high each, following the graph right-to-left below the diagonal and
//! left-to-right above it. Inside each box the perturbed map is the
//! order-preserving transport between the Cantor blocks of the box's x- and
//! y-ranges; outside the chain it is a translation through the entry and
//! exit corners. All box coordinates are exact rationals on dyadic grids.

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::cantor::{GridCantorSet, TransportPlan};
use crate::error::{Error, Result};
use crate::exact::{rat_int, rat_pow2, rat_to_f64, serde_rat, Rat};
use crate::map::MonotoneMap;
use crate::system::RandomSystem;

/// Grid parameters: radius R (a power of two), level count 2^M on the
/// y-axis, grid count 2^M' on the x-axis, M' > M.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionParams {
    #[serde(with = "serde_rat")]
    pub radius: Rat,
    pub level_bits: u32,
    pub grid_bits: u32,
}

impl ConstructionParams {
    pub fn new(radius: Rat, level_bits: u32, grid_bits: u32) -> Result<Self> {
        if !radius.is_positive() {
            return Err(Error::Domain("radius must be positive".into()));
        }
        if grid_bits <= level_bits {
            return Err(Error::Domain("grid bits must exceed level bits".into()));
        }
        Ok(ConstructionParams { radius, level_bits, grid_bits })
    }

    /// Height of one level: 2R / 2^M.
    pub fn y_spacing(&self) -> Rat {
        rat_int(2) * &self.radius / rat_pow2(self.level_bits as i32)
    }

    /// Width of one grid cell: 2R / 2^M'.
    pub fn x_spacing(&self) -> Rat {
        rat_int(2) * &self.radius / rat_pow2(self.grid_bits as i32)
    }

    pub fn n_levels(&self) -> u64 {
        1u64 << self.level_bits
    }

    pub fn n_grid(&self) -> u64 {
        1u64 << self.grid_bits
    }

    pub fn y_level(&self, i: u64) -> Rat {
        -&self.radius + self.y_spacing() * rat_int(i as i64)
    }

    pub fn x_point(&self, j: u64) -> Rat {
        -&self.radius + self.x_spacing() * rat_int(j as i64)
    }

    /// The grid Cantor set the construction leaves invariant.
    pub fn grid(&self) -> GridCantorSet {
        GridCantorSet::new(self.x_spacing(), Rat::zero()).unwrap()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Below,
    Above,
}

/// One box of a chain: x-range times y-range, exact rationals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkedBox {
    #[serde(with = "serde_rat")]
    pub x_lo: Rat,
    #[serde(with = "serde_rat")]
    pub x_hi: Rat,
    #[serde(with = "serde_rat")]
    pub y_lo: Rat,
    #[serde(with = "serde_rat")]
    pub y_hi: Rat,
}

/// The ordered box list, in construction order (right-to-left for the
/// below-diagonal map, left-to-right for the above one), together with the
/// entry and exit corners of the whole chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxChain {
    pub side: Side,
    pub boxes: Vec<LinkedBox>,
    #[serde(with = "serde_rat")]
    pub entry_x: Rat,
    #[serde(with = "serde_rat")]
    pub entry_y: Rat,
    #[serde(with = "serde_rat")]
    pub exit_x: Rat,
    #[serde(with = "serde_rat")]
    pub exit_y: Rat,
}

/// Runs the box-threading loop exactly. The map is evaluated at dyadic grid
/// points in rational arithmetic; level and grid selections are decided
/// without rounding.
pub fn build_boxes(
    map: &MonotoneMap,
    params: &ConstructionParams,
    side: Side,
) -> Result<BoxChain> {
    let n_y = params.n_levels();
    let n_x = params.n_grid();
    let ysp = params.y_spacing();
    let r = params.radius.clone();
    let mut memo: HashMap<u64, Rat> = HashMap::new();
    let mut eval = |j: u64| -> Result<Rat> {
        if let Some(v) = memo.get(&j) {
            return Ok(v.clone());
        }
        let v = map.eval_exact(&params.x_point(j))?;
        memo.insert(j, v.clone());
        Ok(v)
    };

    match side {
        Side::Below => {
            let fy = eval(n_x)?;
            // highest level at or below F(R)
            let t = ((&fy + &r) / &ysp).floor().to_integer().to_i64().unwrap_or(-1);
            if t < 1 {
                return Err(Error::Construction(
                    "map leaves the grid square below the first level".into(),
                ));
            }
            let k = (t as u64).min(n_y - 1);
            let mut i = k;
            let mut r_idx = n_x;
            let mut boxes = Vec::with_capacity(k as usize);
            loop {
                let l_y = params.y_level(i - 1);
                // smallest j with F(x_j) >= l_y, searched below the current
                // right edge; F is increasing so the predicate is monotone
                let mut lo = 0u64;
                let mut hi = r_idx;
                while lo < hi {
                    let mid = (lo + hi) / 2;
                    if eval(mid)? >= l_y {
                        hi = mid;
                    } else {
                        lo = mid + 1;
                    }
                }
                let j = lo;
                if j == r_idx {
                    return Err(Error::Construction(format!(
                        "zero-width box at level {i}: grid too coarse for the map's modulus"
                    )));
                }
                if j == 0 && i > 1 {
                    return Err(Error::Construction(format!(
                        "chain pinned to the left edge {} levels early",
                        i - 1
                    )));
                }
                let bx = LinkedBox {
                    x_lo: params.x_point(j),
                    x_hi: params.x_point(r_idx),
                    y_lo: l_y.clone(),
                    y_hi: params.y_level(i),
                };
                if bx.y_hi >= bx.x_lo {
                    return Err(Error::Construction(format!(
                        "box at level {i} touches the diagonal"
                    )));
                }
                boxes.push(bx);
                if i == 1 {
                    return Ok(BoxChain {
                        side,
                        entry_x: params.x_point(j),
                        entry_y: params.y_level(0),
                        exit_x: params.x_point(n_x),
                        exit_y: params.y_level(k),
                        boxes,
                    });
                }
                i -= 1;
                r_idx = j;
            }
        }
        Side::Above => {
            let fy = eval(0)?;
            // lowest level at or above F(-R)
            let t = ((&fy + &r) / &ysp).ceil().to_integer().to_i64().unwrap_or(-1);
            if t < 0 || t as u64 > n_y - 1 {
                return Err(Error::Construction(
                    "map leaves the grid square above the last level".into(),
                ));
            }
            let first = t as u64;
            let mut i = first;
            let mut l_idx = 0u64;
            let mut boxes = Vec::new();
            loop {
                let r_y = params.y_level(i + 1);
                // largest j with F(x_j) <= r_y
                let mut lo = l_idx;
                let mut hi = n_x;
                while lo < hi {
                    let mid = (lo + hi).div_ceil(2);
                    if eval(mid)? <= r_y {
                        lo = mid;
                    } else {
                        hi = mid - 1;
                    }
                }
                let j = lo;
                if j == l_idx {
                    return Err(Error::Construction(format!(
                        "zero-width box at level {i}: grid too coarse for the map's modulus"
                    )));
                }
                if j == n_x && i + 1 < n_y {
                    return Err(Error::Construction(format!(
                        "chain pinned to the right edge {} levels early",
                        n_y - 1 - i
                    )));
                }
                let bx = LinkedBox {
                    x_lo: params.x_point(l_idx),
                    x_hi: params.x_point(j),
                    y_lo: params.y_level(i),
                    y_hi: r_y.clone(),
                };
                if bx.y_lo <= bx.x_hi {
                    return Err(Error::Construction(format!(
                        "box at level {i} touches the diagonal"
                    )));
                }
                boxes.push(bx);
                if i + 1 == n_y {
                    return Ok(BoxChain {
                        side,
                        entry_x: params.x_point(0),
                        entry_y: params.y_level(first),
                        exit_x: params.x_point(j),
                        exit_y: params.y_level(n_y),
                        boxes,
                    });
                }
                i += 1;
                l_idx = j;
            }
        }
    }
}

/// Chooses grid parameters for a system and budget. The budget is first
/// shrunk below half of both Lyapunov exponents so positivity survives the
/// perturbation; `extra_bits` tightens both grids for retries.
pub fn choose_params(
    sys: &RandomSystem,
    eps: f64,
    extra_bits: u32,
) -> Result<(ConstructionParams, f64)> {
    if eps <= 0.0 {
        return Err(Error::Domain("perturbation budget must be positive".into()));
    }
    let report = sys.validate();
    if !report.is_valid() {
        return Err(Error::InvalidSystem(report.first_failure().unwrap_or_default()));
    }
    let eps_eff = eps
        .min(report.lyap.lambda_minus / 2.0)
        .min(report.lyap.lambda_plus / 2.0);

    // Radius: a power of two beyond every breakpoint, large enough that the
    // graphs cross the square.
    let need = sys
        .f0
        .max_breakpoint_magnitude()
        .max(sys.f1.max_breakpoint_magnitude());
    let mut k: i32 = -1;
    let radius = loop {
        let r = 2f64.powi(k);
        let crosses = sys.f0.eval(r, 1e-9)? > -r && sys.f1.eval(-r, 1e-9)? < r;
        if r >= need && crosses {
            break rat_pow2(k);
        }
        k += 1;
        if k > 32 {
            return Err(Error::Construction("no workable radius below 2^32".into()));
        }
    };
    let r_f = rat_to_f64(&radius);

    // Level count: one level must fit under the budget, under the diagonal
    // gap, and under the room left at the exit corners.
    let gap = sys
        .f0
        .diagonal_gap_on(-r_f, r_f)
        .min(sys.f1.diagonal_gap_on(-r_f, r_f));
    let room = (sys.f0.eval(r_f, 1e-9)? + r_f).min(r_f - sys.f1.eval(-r_f, 1e-9)?);
    let limit = (eps_eff / 2.0).min(gap).min(room);
    if limit <= 0.0 {
        return Err(Error::Construction("no room between the graph and the diagonal".into()));
    }
    let mut level_bits = 1u32;
    while 2.0 * r_f / 2f64.powi(level_bits as i32) >= limit {
        level_bits += 1;
        if level_bits > 40 {
            return Err(Error::Construction("level grid beyond 2^40".into()));
        }
    }
    level_bits += extra_bits;

    // Grid count: cell width below the uniform-continuity width for one
    // level of oscillation.
    let ysp = 2.0 * r_f / 2f64.powi(level_bits as i32);
    let delta = sys
        .f0
        .uniform_continuity_delta(ysp * (1.0 - 1e-9))
        .min(sys.f1.uniform_continuity_delta(ysp * (1.0 - 1e-9)));
    let mut grid_bits = level_bits + 1;
    while 2.0 * r_f / 2f64.powi(grid_bits as i32) >= delta {
        grid_bits += 1;
        if grid_bits > 44 {
            return Err(Error::Construction("fine grid beyond 2^44".into()));
        }
    }
    grid_bits += extra_bits;

    Ok((ConstructionParams::new(radius, level_bits, grid_bits)?, eps_eff))
}

/// Everything the perturbation produced: the new system, the invariant grid
/// Cantor set, both box chains, and the certified closeness bound.
#[derive(Clone, Debug)]
pub struct CantorBundle {
    pub system: RandomSystem,
    pub grid: GridCantorSet,
    pub below: BoxChain,
    pub above: BoxChain,
    pub params: ConstructionParams,
    pub certified_dm: f64,
    pub requested_eps: f64,
    pub effective_eps: f64,
}

fn chain_to_map(chain: &BoxChain, params: &ConstructionParams) -> Result<MonotoneMap> {
    let w = params.x_spacing();
    let mut boxes: Vec<&LinkedBox> = chain.boxes.iter().collect();
    if chain.side == Side::Below {
        boxes.reverse();
    }
    let mut plans = Vec::with_capacity(boxes.len());
    for b in boxes {
        let cells_x = ((&b.x_hi - &b.x_lo) / &w).to_integer().to_u64().ok_or_else(|| {
            Error::Construction("box width is not a whole number of cells".into())
        })?;
        let cells_y = ((&b.y_hi - &b.y_lo) / &w)
            .to_integer()
            .to_u64()
            .ok_or_else(|| Error::Construction("box height is not a whole number of cells".into()))?;
        let src = crate::cantor::CantorBlock::new(b.x_lo.clone(), w.clone(), cells_x)?;
        let tgt = crate::cantor::CantorBlock::new(b.y_lo.clone(), w.clone(), cells_y)?;
        plans.push(Arc::new(TransportPlan::new(src, tgt)));
    }
    MonotoneMap::from_transport_chain(plans)
}

/// Certified sup-distance bound between the original map and the chain map,
/// from box-corner geometry plus exact tail comparison; no transport
/// refinement needed.
fn chain_distance_bound(f: &MonotoneMap, g: &MonotoneMap, chain: &BoxChain) -> Result<f64> {
    let mut worst = 0.0f64;
    for b in &chain.boxes {
        let xl = rat_to_f64(&b.x_lo);
        let xh = rat_to_f64(&b.x_hi);
        let fl = f.eval(xl, 1e-11)?;
        let fh = f.eval(xh, 1e-11)?;
        let bound = (rat_to_f64(&b.y_hi) - fl).max(fh - rat_to_f64(&b.y_lo)).max(0.0);
        worst = worst.max(bound + 1e-10);
    }
    // Tail regions: G is a pure translation there, F may still have
    // breakpoints; certified interval bound covers both.
    let entry = rat_to_f64(&chain.entry_x);
    let exit = rat_to_f64(&chain.exit_x);
    let lo_probe = f
        .compact_support()
        .map(|s| s.0)
        .unwrap_or(entry)
        .min(entry)
        - 1.0;
    let hi_probe = f
        .compact_support()
        .map(|s| s.1)
        .unwrap_or(exit)
        .max(exit)
        + 1.0;
    let (_, left) = f.sup_distance_on(g, lo_probe, entry, 1e-9);
    let (_, right) = f.sup_distance_on(g, exit, hi_probe, 1e-9);
    let tail = (f.left_offset() - g.left_offset())
        .abs()
        .max((f.right_offset() - g.right_offset()).abs());
    Ok(worst.max(left).max(right).max(tail))
}

/// The full perturbation with verification and a bounded retry policy:
/// every failure tightens both grids by one bit, up to eight times.
pub fn perturb_cantor(sys: &RandomSystem, eps: f64) -> Result<CantorBundle> {
    let mut last_err: Option<Error> = None;
    for attempt in 0..=8u32 {
        let (params, eps_eff) = choose_params(sys, eps, attempt)?;
        match try_perturb(sys, eps, eps_eff, &params) {
            Ok(bundle) => return Ok(bundle),
            Err(e) => last_err = Some(e),
        }
    }
    Err(Error::Construction(format!(
        "perturbation failed after 8 retries; last error: {}",
        last_err.map(|e| e.to_string()).unwrap_or_default()
    )))
}

fn try_perturb(
    sys: &RandomSystem,
    eps: f64,
    eps_eff: f64,
    params: &ConstructionParams,
) -> Result<CantorBundle> {
    let below = build_boxes(&sys.f0, params, Side::Below)?;
    let above = build_boxes(&sys.f1, params, Side::Above)?;
    let g0 = chain_to_map(&below, params)?;
    let g1 = chain_to_map(&above, params)?;
    let d0 = chain_distance_bound(&sys.f0, &g0, &below)?;
    let d1 = chain_distance_bound(&sys.f1, &g1, &above)?;
    let certified_dm = d0.max(d1);
    if certified_dm >= eps_eff {
        return Err(Error::Construction(format!(
            "certified closeness {certified_dm:.6} not below the budget {eps_eff:.6}"
        )));
    }
    let system = RandomSystem::new(g0, g1, sys.p)?;
    Ok(CantorBundle {
        system,
        grid: params.grid(),
        below,
        above,
        params: params.clone(),
        certified_dm,
        requested_eps: eps,
        effective_eps: eps_eff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use crate::system::symmetric_drift_system;

    fn translation_params() -> ConstructionParams {
        ConstructionParams::new(rat(1, 2), 3, 4).unwrap()
    }

    /// The hand-traced chain for F(x) = x - 3/8 with R = 1/2, M = 3, M' = 4.
    #[test]
    fn hand_traced_below_chain() {
        let f = MonotoneMap::translation(-0.375);
        let chain = build_boxes(&f, &translation_params(), Side::Below).unwrap();
        let expect = [
            ((3, 8), (1, 2), (0, 1), (1, 8)),
            ((1, 4), (3, 8), (-1, 8), (0, 1)),
            ((1, 8), (1, 4), (-1, 4), (-1, 8)),
            ((0, 1), (1, 8), (-3, 8), (-1, 4)),
            ((-1, 8), (0, 1), (-1, 2), (-3, 8)),
        ];
        assert_eq!(chain.boxes.len(), 5);
        for (b, e) in chain.boxes.iter().zip(expect.iter()) {
            assert_eq!(b.x_lo, rat(e.0 .0, e.0 .1));
            assert_eq!(b.x_hi, rat(e.1 .0, e.1 .1));
            assert_eq!(b.y_lo, rat(e.2 .0, e.2 .1));
            assert_eq!(b.y_hi, rat(e.3 .0, e.3 .1));
        }
        assert_eq!(chain.entry_x, rat(-1, 8));
        assert_eq!(chain.entry_y, rat(-1, 2));
        assert_eq!(chain.exit_x, rat(1, 2));
        assert_eq!(chain.exit_y, rat(1, 8));
    }

    #[test]
    fn mirrored_chain_for_opposite_translation() {
        // F1 = -F0(-x) for F0 = x - 3/8; the above chain is the reflection
        // of the below chain through the origin. Production orders align:
        // below runs right-to-left, above runs left-to-right.
        let f0 = MonotoneMap::translation(-0.375);
        let f1 = MonotoneMap::translation(0.375);
        let below = build_boxes(&f0, &translation_params(), Side::Below).unwrap();
        let above = build_boxes(&f1, &translation_params(), Side::Above).unwrap();
        assert_eq!(above.boxes.len(), below.boxes.len());
        for (a, b) in above.boxes.iter().zip(below.boxes.iter()) {
            assert_eq!(a.x_lo, -b.x_hi.clone());
            assert_eq!(a.x_hi, -b.x_lo.clone());
            assert_eq!(a.y_lo, -b.y_hi.clone());
            assert_eq!(a.y_hi, -b.y_lo.clone());
        }
    }

    #[test]
    fn box_heights_are_one_level() {
        let f = MonotoneMap::translation(-0.375);
        let params = translation_params();
        let chain = build_boxes(&f, &params, Side::Below).unwrap();
        for b in &chain.boxes {
            assert_eq!(&b.y_hi - &b.y_lo, params.y_spacing());
        }
    }

    #[test]
    fn chain_tail_offsets_reproduce_translations() {
        let f = MonotoneMap::translation(-0.375);
        let params = translation_params();
        let chain = build_boxes(&f, &params, Side::Below).unwrap();
        let g = chain_to_map(&chain, &params).unwrap();
        assert_eq!(g.left_offset(), -0.375);
        assert_eq!(g.right_offset(), -0.375);
    }

    #[test]
    fn params_satisfy_their_invariants() {
        let sys = symmetric_drift_system();
        let (params, eps_eff) = choose_params(&sys, 0.3, 0).unwrap();
        let ysp = rat_to_f64(&params.y_spacing());
        assert!(ysp < eps_eff / 2.0);
        let r = rat_to_f64(&params.radius);
        assert!(ysp < sys.f0.diagonal_gap_on(-r, r));
        assert!(ysp < sys.f0.eval(r, 1e-9).unwrap() + r);
        assert!(ysp < r - sys.f1.eval(-r, 1e-9).unwrap());
        assert!(params.grid_bits > params.level_bits);
    }

    #[test]
    fn perturbation_is_close_and_valid() {
        let sys = symmetric_drift_system();
        let bundle = perturb_cantor(&sys, 0.25).unwrap();
        assert!(bundle.certified_dm < 0.25);
        assert!(bundle.system.validate().is_valid());
        // pointwise distances never exceed the certified sup bound
        for i in 0..200 {
            let x = -4.0 + 8.0 * (i as f64) / 199.0;
            for (f, g) in [(&sys.f0, &bundle.system.f0), (&sys.f1, &bundle.system.f1)] {
                let d = (f.eval(x, 1e-9).unwrap() - g.eval(x, 1e-6).unwrap()).abs();
                assert!(d <= bundle.certified_dm + 1e-5, "at {x}: {d}");
            }
        }
    }

    #[test]
    fn grid_is_invariant_under_tails() {
        let sys = symmetric_drift_system();
        let bundle = perturb_cantor(&sys, 0.25).unwrap();
        // tail offsets are whole numbers of cells
        let w = bundle.grid.cell_width.clone();
        for m in [&bundle.system.f0, &bundle.system.f1] {
            for off in [m.left_offset(), m.right_offset()] {
                let q = crate::exact::rat_from_f64(off) / &w;
                assert!(q.is_integer(), "offset {off} is not a multiple of the cell width");
            }
        }
    }
}
