//! Increasing self-homeomorphisms of the real line with slope-1 translation
//! tails: evaluation, inversion, composition, and the supremum metric.
//!
//! A map is a contiguous chain of segments on a compact interval, each
//! either affine or a Cantor-set transport, extended by translations on
//! both sides. The tail offsets encode the endpoint derivatives of the
//! unit-interval original.

use std::sync::Arc;

use crate::cantor::{CantorBlock, TransportPlan, DEFAULT_ROUND_CAP};
use crate::error::{Error, Result};
use crate::exact::{rat_from_f64, rat_to_f64, Rat};

#[derive(Clone, Debug)]
pub enum Part {
    Affine { x0: f64, y0: f64, x1: f64, y1: f64 },
    Transport { x0: f64, y0: f64, x1: f64, y1: f64, plan: Arc<TransportPlan> },
}

impl Part {
    pub fn x0(&self) -> f64 {
        match self {
            Part::Affine { x0, .. } | Part::Transport { x0, .. } => *x0,
        }
    }
    pub fn x1(&self) -> f64 {
        match self {
            Part::Affine { x1, .. } | Part::Transport { x1, .. } => *x1,
        }
    }
    pub fn y0(&self) -> f64 {
        match self {
            Part::Affine { y0, .. } | Part::Transport { y0, .. } => *y0,
        }
    }
    pub fn y1(&self) -> f64 {
        match self {
            Part::Affine { y1, .. } | Part::Transport { y1, .. } => *y1,
        }
    }

    fn slope_bound(&self) -> f64 {
        (self.y1() - self.y0()) / (self.x1() - self.x0())
    }
}

#[derive(Clone, Debug)]
enum MapKind {
    Translation(f64),
    Piecewise(Vec<Part>),
    Composed { outer: Arc<MonotoneMap>, inner: Arc<MonotoneMap>, left: f64, right: f64 },
}

/// An increasing homeomorphism of the real line equal to `x + a` outside a
/// compact interval on each side.
#[derive(Clone, Debug)]
pub struct MonotoneMap {
    kind: MapKind,
}

fn f64_slack(x: f64, v: f64) -> f64 {
    8.0 * f64::EPSILON * (1.0 + x.abs() + v.abs())
}

impl MonotoneMap {
    pub fn identity() -> Self {
        MonotoneMap { kind: MapKind::Translation(0.0) }
    }

    pub fn translation(offset: f64) -> Self {
        MonotoneMap { kind: MapKind::Translation(offset) }
    }

    /// Piecewise-affine map through the given breakpoints, slope-1 tails
    /// through the first and last of them.
    pub fn from_breakpoints(points: &[(f64, f64)]) -> Result<Self> {
        for w in points.windows(2) {
            if !(w[0].0 < w[1].0 && w[0].1 < w[1].1) {
                return Err(Error::InvalidMap(format!(
                    "breakpoints must strictly increase: {:?} then {:?}",
                    w[0], w[1]
                )));
            }
        }
        if points.iter().any(|p| !(p.0.is_finite() && p.1.is_finite())) {
            return Err(Error::InvalidMap("non-finite breakpoint".into()));
        }
        match points.len() {
            0 => Ok(Self::identity()),
            1 => Ok(Self::translation(points[0].1 - points[0].0)),
            _ => {
                let parts = points
                    .windows(2)
                    .map(|w| Part::Affine { x0: w[0].0, y0: w[0].1, x1: w[1].0, y1: w[1].1 })
                    .collect();
                Self::from_parts(parts)
            }
        }
    }

    /// Builds a map from an explicit contiguous segment chain.
    pub fn from_parts(parts: Vec<Part>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidMap("empty segment chain".into()));
        }
        for p in &parts {
            if !(p.x0() < p.x1() && p.y0() < p.y1()) {
                return Err(Error::InvalidMap(format!(
                    "segment [{}, {}] -> [{}, {}] is not increasing",
                    p.x0(),
                    p.x1(),
                    p.y0(),
                    p.y1()
                )));
            }
        }
        for w in parts.windows(2) {
            if w[0].x1() != w[1].x0() || w[0].y1() != w[1].y0() {
                return Err(Error::InvalidMap(format!(
                    "segments not linked at x = {} (y {} vs {})",
                    w[0].x1(),
                    w[0].y1(),
                    w[1].y0()
                )));
            }
        }
        Ok(MonotoneMap { kind: MapKind::Piecewise(parts) })
    }

    /// Chains transport plans whose hulls tile an interval.
    pub fn from_transport_chain(plans: Vec<Arc<TransportPlan>>) -> Result<Self> {
        let parts = plans
            .into_iter()
            .map(|plan| {
                let (a0, a1) = plan.source().hull();
                let (b0, b1) = plan.target().hull();
                Part::Transport {
                    x0: rat_to_f64(&a0),
                    x1: rat_to_f64(&a1),
                    y0: rat_to_f64(&b0),
                    y1: rat_to_f64(&b1),
                    plan,
                }
            })
            .collect();
        Self::from_parts(parts)
    }

    pub fn parts(&self) -> &[Part] {
        match &self.kind {
            MapKind::Piecewise(parts) => parts,
            _ => &[],
        }
    }

    pub fn is_composition(&self) -> bool {
        matches!(self.kind, MapKind::Composed { .. })
    }

    /// Tail offset at minus infinity (equals log of the unit-interval
    /// derivative at 0).
    pub fn left_offset(&self) -> f64 {
        match &self.kind {
            MapKind::Translation(c) => *c,
            MapKind::Piecewise(parts) => parts[0].y0() - parts[0].x0(),
            MapKind::Composed { left, .. } => *left,
        }
    }

    /// Tail offset at plus infinity (equals minus the log of the derivative
    /// at 1).
    pub fn right_offset(&self) -> f64 {
        match &self.kind {
            MapKind::Translation(c) => *c,
            MapKind::Piecewise(parts) => {
                let p = parts.last().unwrap();
                p.y1() - p.x1()
            }
            MapKind::Composed { right, .. } => *right,
        }
    }

    /// (f'(0), f'(1)) of the unit-interval original.
    pub fn endpoint_derivatives(&self) -> (f64, f64) {
        (self.left_offset().exp(), (-self.right_offset()).exp())
    }

    /// The interval outside which the map is a pure translation.
    pub fn compact_support(&self) -> Option<(f64, f64)> {
        match &self.kind {
            MapKind::Translation(_) => None,
            MapKind::Piecewise(parts) => {
                Some((parts[0].x0(), parts.last().unwrap().x1()))
            }
            MapKind::Composed { outer, inner, .. } => {
                let a = inner.compact_support();
                let b = outer.compact_support().map(|(lo, hi)| {
                    (
                        inner.invert(lo, 1e-9).unwrap_or(lo - inner.left_offset()),
                        inner.invert(hi, 1e-9).unwrap_or(hi - inner.right_offset()),
                    )
                });
                match (a, b) {
                    (None, None) => None,
                    (Some(r), None) | (None, Some(r)) => Some(r),
                    (Some(a), Some(b)) => Some((a.0.min(b.0), a.1.max(b.1))),
                }
            }
        }
    }

    /// Breakpoint list when the map is purely affine-segmented.
    pub fn breakpoints(&self) -> Option<Vec<(f64, f64)>> {
        match &self.kind {
            MapKind::Translation(_) => Some(Vec::new()),
            MapKind::Piecewise(parts) => {
                let mut pts = Vec::with_capacity(parts.len() + 1);
                for p in parts {
                    match p {
                        Part::Affine { x0, y0, .. } => pts.push((*x0, *y0)),
                        Part::Transport { .. } => return None,
                    }
                }
                let last = parts.last().unwrap();
                pts.push((last.x1(), last.y1()));
                Some(pts)
            }
            MapKind::Composed { .. } => None,
        }
    }

    pub fn has_transport(&self) -> bool {
        match &self.kind {
            MapKind::Piecewise(parts) => {
                parts.iter().any(|p| matches!(p, Part::Transport { .. }))
            }
            MapKind::Composed { outer, inner, .. } => {
                outer.has_transport() || inner.has_transport()
            }
            MapKind::Translation(_) => false,
        }
    }

    fn find_part(parts: &[Part], x: f64) -> Option<usize> {
        if x < parts[0].x0() || x > parts.last().unwrap().x1() {
            return None;
        }
        let i = parts.partition_point(|p| p.x1() < x);
        Some(i.min(parts.len() - 1))
    }

    /// Evaluation with a certified absolute error bound at most `tol`
    /// whenever the refinement cap allows; the returned bound is honest
    /// either way.
    pub fn eval_with_error(&self, x: f64, tol: f64) -> Result<(f64, f64)> {
        if tol <= 0.0 {
            return Err(Error::Domain(format!("tolerance {tol} must be positive")));
        }
        if !x.is_finite() {
            return Err(Error::Domain(format!("cannot evaluate at {x}")));
        }
        Ok(self.eval_inner(x, tol))
    }

    fn eval_inner(&self, x: f64, tol: f64) -> (f64, f64) {
        match &self.kind {
            MapKind::Translation(c) => (x + c, f64_slack(x, x + c)),
            MapKind::Piecewise(parts) => match Self::find_part(parts, x) {
                None => {
                    let v = if x < parts[0].x0() {
                        x + self.left_offset()
                    } else {
                        x + self.right_offset()
                    };
                    (v, f64_slack(x, v))
                }
                Some(i) => match &parts[i] {
                    Part::Affine { x0, y0, x1, y1 } => {
                        let v = y0 + (x - x0) * (y1 - y0) / (x1 - x0);
                        let v = v.clamp(*y0, *y1);
                        (v, f64_slack(x, v))
                    }
                    Part::Transport { plan, .. } => {
                        plan.eval_with_error(x, tol, DEFAULT_ROUND_CAP)
                    }
                },
            },
            MapKind::Composed { outer, inner, .. } => {
                let mut inner_tol = tol / 4.0;
                for _ in 0..40 {
                    let (v, e) = inner.eval_inner(x, inner_tol);
                    let (lo, elo) = outer.eval_inner(v - e, tol / 4.0);
                    let (hi, ehi) = outer.eval_inner(v + e, tol / 4.0);
                    let mid = 0.5 * (lo + hi);
                    let err = 0.5 * (hi - lo) + elo + ehi;
                    if err <= tol || inner_tol < 1e-15 {
                        return (mid, err);
                    }
                    inner_tol /= 4.0;
                }
                let (v, e) = inner.eval_inner(x, tol / 4.0);
                let (w, ew) = outer.eval_inner(v, tol / 4.0);
                (w, ew + e.max(1.0))
            }
        }
    }

    /// Evaluation certified to `tol`; errors if the cap prevents it.
    pub fn eval(&self, x: f64, tol: f64) -> Result<f64> {
        let (v, e) = self.eval_with_error(x, tol)?;
        if e > tol {
            return Err(Error::Inexact(format!(
                "evaluation at {x} only certified to {e:.3e} > {tol:.3e}"
            )));
        }
        Ok(v)
    }

    /// Exact evaluation at a rational. Works on translations, affine
    /// segments, and transport segments queried at gap or hull endpoints.
    pub fn eval_exact(&self, x: &Rat) -> Result<Rat> {
        match &self.kind {
            MapKind::Translation(c) => Ok(x + rat_from_f64(*c)),
            MapKind::Composed { outer, inner, .. } => {
                let v = inner.eval_exact(x)?;
                outer.eval_exact(&v)
            }
            MapKind::Piecewise(parts) => {
                let xf = rat_to_f64(x);
                let idx = Self::find_part(parts, xf);
                // f64 routing is a guess; confirm with exact bounds and
                // shift by one part if the rounding sent us next door.
                let candidates: Vec<usize> = match idx {
                    None => vec![],
                    Some(i) => {
                        let mut c = vec![i];
                        if i > 0 {
                            c.push(i - 1);
                        }
                        if i + 1 < parts.len() {
                            c.push(i + 1);
                        }
                        c
                    }
                };
                for i in candidates {
                    let (lo, hi) = Self::part_exact_bounds(&parts[i]);
                    if x >= &lo && x <= &hi {
                        return Self::part_eval_exact(&parts[i], x, &lo, &hi);
                    }
                }
                let (first_lo, _) = Self::part_exact_bounds(&parts[0]);
                if x < &first_lo {
                    return Ok(x + rat_from_f64(self.left_offset()));
                }
                let (_, last_hi) = Self::part_exact_bounds(parts.last().unwrap());
                if x > &last_hi {
                    return Ok(x + rat_from_f64(self.right_offset()));
                }
                Err(Error::Inexact("rational point not routed to a segment".into()))
            }
        }
    }

    fn part_exact_bounds(part: &Part) -> (Rat, Rat) {
        match part {
            Part::Affine { x0, x1, .. } => (rat_from_f64(*x0), rat_from_f64(*x1)),
            Part::Transport { plan, .. } => plan.source().hull(),
        }
    }

    fn part_eval_exact(part: &Part, x: &Rat, lo: &Rat, hi: &Rat) -> Result<Rat> {
        match part {
            Part::Affine { y0, y1, .. } => {
                let (ry0, ry1) = (rat_from_f64(*y0), rat_from_f64(*y1));
                let t = (x - lo) / (hi - lo);
                Ok(&ry0 + (&ry1 - &ry0) * t)
            }
            Part::Transport { plan, .. } => plan.eval_exact(x, DEFAULT_ROUND_CAP),
        }
    }

    /// Inverse evaluation: the result satisfies |map(result) - y| <= tol.
    pub fn invert(&self, y: f64, tol: f64) -> Result<f64> {
        if tol <= 0.0 {
            return Err(Error::Domain(format!("tolerance {tol} must be positive")));
        }
        match &self.kind {
            MapKind::Translation(c) => Ok(y - c),
            MapKind::Piecewise(parts) => {
                let first = &parts[0];
                let last = parts.last().unwrap();
                if y < first.y0() {
                    return Ok(y - self.left_offset());
                }
                if y > last.y1() {
                    return Ok(y - self.right_offset());
                }
                let i = parts.partition_point(|p| p.y1() < y).min(parts.len() - 1);
                match &parts[i] {
                    Part::Affine { x0, y0, x1, y1 } => {
                        let x = x0 + (y - y0) * (x1 - x0) / (y1 - y0);
                        Ok(x.clamp(*x0, *x1))
                    }
                    Part::Transport { plan, .. } => {
                        Ok(plan.invert_with_error(y, tol, DEFAULT_ROUND_CAP).0)
                    }
                }
            }
            MapKind::Composed { outer, inner, .. } => {
                let mid = outer.invert(y, tol)?;
                inner.invert(mid, tol)
            }
        }
    }

    /// Exact inverse at a rational (same restrictions as `eval_exact`).
    pub fn invert_exact(&self, y: &Rat) -> Result<Rat> {
        match &self.kind {
            MapKind::Translation(c) => Ok(y - rat_from_f64(*c)),
            MapKind::Composed { outer, inner, .. } => {
                let v = outer.invert_exact(y)?;
                inner.invert_exact(&v)
            }
            MapKind::Piecewise(parts) => {
                for part in parts {
                    let (lo, hi) = match part {
                        Part::Affine { y0, y1, .. } => (rat_from_f64(*y0), rat_from_f64(*y1)),
                        Part::Transport { plan, .. } => plan.target().hull(),
                    };
                    if y >= &lo && y <= &hi {
                        return match part {
                            Part::Affine { x0, x1, .. } => {
                                let (rx0, rx1) = (rat_from_f64(*x0), rat_from_f64(*x1));
                                let t = (y - &lo) / (&hi - &lo);
                                Ok(&rx0 + (&rx1 - &rx0) * t)
                            }
                            Part::Transport { plan, .. } => {
                                plan.invert_exact(y, DEFAULT_ROUND_CAP)
                            }
                        };
                    }
                }
                let first = &parts[0];
                if y < &rat_from_f64(first.y0()) {
                    return Ok(y - rat_from_f64(self.left_offset()));
                }
                Ok(y - rat_from_f64(self.right_offset()))
            }
        }
    }

    /// Composition outer . inner. Purely affine operands merge exactly into
    /// a new breakpoint chain; anything else becomes a lazy node with
    /// certified evaluation. Tail offsets add in both cases.
    pub fn compose(outer: &MonotoneMap, inner: &MonotoneMap) -> MonotoneMap {
        if let (Some(obp), Some(ibp)) = (outer.breakpoints(), inner.breakpoints()) {
            let mut xs: Vec<f64> = ibp.iter().map(|p| p.0).collect();
            for p in &obp {
                // pull outer breakpoints back through the affine inner map
                if let Ok(x) = inner.invert(p.0, 1e-12) {
                    xs.push(x);
                }
            }
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            xs.dedup();
            let mut pts = Vec::with_capacity(xs.len());
            let mut prev: Option<(f64, f64)> = None;
            for x in xs {
                let v = outer.eval_inner(inner.eval_inner(x, 1e-12).0, 1e-12).0;
                if let Some(p) = prev {
                    if !(x > p.0 && v > p.1) {
                        continue;
                    }
                }
                pts.push((x, v));
                prev = Some((x, v));
            }
            if let Ok(m) = MonotoneMap::from_breakpoints(&pts) {
                return m;
            }
        }
        MonotoneMap {
            kind: MapKind::Composed {
                left: outer.left_offset() + inner.left_offset(),
                right: outer.right_offset() + inner.right_offset(),
                outer: Arc::new(outer.clone()),
                inner: Arc::new(inner.clone()),
            },
        }
    }

    /// Supremum distance certified to `tol`: returns (lower, upper) bounds.
    /// Exact (lower == upper) when both maps are affine-segmented.
    pub fn sup_distance_bounds(&self, other: &MonotoneMap, tol: f64) -> (f64, f64) {
        let tail = (self.left_offset() - other.left_offset())
            .abs()
            .max((self.right_offset() - other.right_offset()).abs());
        if let (Some(a), Some(b)) = (self.breakpoints(), other.breakpoints()) {
            // The difference is piecewise affine: extremal at a breakpoint
            // of either map or in the tails.
            let mut best = tail;
            for x in a.iter().chain(b.iter()).map(|p| p.0) {
                let d =
                    (self.eval_inner(x, 1e-12).0 - other.eval_inner(x, 1e-12).0).abs();
                best = best.max(d);
            }
            return (best, best);
        }
        let support = match (self.compact_support(), other.compact_support()) {
            (None, None) => return (tail, tail),
            (a, b) => {
                let lo = a.map(|r| r.0).into_iter().chain(b.map(|r| r.0)).fold(f64::INFINITY, f64::min);
                let hi = a.map(|r| r.1).into_iter().chain(b.map(|r| r.1)).fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
        };
        let (lower, upper) = self.sup_distance_on(other, support.0, support.1, tol);
        (lower.max(tail), upper.max(tail))
    }

    /// True when neither map has a transport segment or lazy composition
    /// overlapping the open interval (u, v); the difference of the two maps
    /// is then piecewise affine there.
    fn affine_between(&self, u: f64, v: f64) -> bool {
        match &self.kind {
            MapKind::Translation(_) => true,
            MapKind::Composed { .. } => false,
            MapKind::Piecewise(parts) => parts.iter().all(|p| match p {
                Part::Affine { .. } => true,
                Part::Transport { x0, x1, .. } => *x1 <= u || *x0 >= v,
            }),
        }
    }

    /// Certified bounds on sup |F - G| over [lo, hi]. The interval is cut
    /// at every segment boundary of both maps: pieces where both maps are
    /// affine contribute exact endpoint values (the difference is affine
    /// there); pieces crossed by transport segments are bisected with the
    /// variation bound sup |F-G| <= max(|d(u)|, |d(v)|) + min(varF, varG),
    /// under a node budget. The upper bound stays honest when the budget
    /// runs out, just looser.
    pub fn sup_distance_on(
        &self,
        other: &MonotoneMap,
        lo: f64,
        hi: f64,
        tol: f64,
    ) -> (f64, f64) {
        let etol = (tol / 8.0).max(1e-13);
        let point = |x: f64| -> f64 {
            (self.eval_inner(x, etol).0 - other.eval_inner(x, etol).0).abs()
        };
        if !(lo < hi) {
            let d = point(lo);
            return (d, d);
        }
        let mut cuts = vec![lo, hi];
        for m in [self, other] {
            for p in m.parts() {
                for x in [p.x0(), p.x1()] {
                    if x > lo && x < hi {
                        cuts.push(x);
                    }
                }
            }
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();

        let bound = |u: f64, v: f64| -> f64 {
            let (fu, efu) = self.eval_inner(u, etol);
            let (fv, efv) = self.eval_inner(v, etol);
            let (gu, egu) = other.eval_inner(u, etol);
            let (gv, egv) = other.eval_inner(v, etol);
            let ends = (fu - gu).abs().max((fv - gv).abs());
            let var = (fv - fu).min(gv - gu).max(0.0);
            ends + var + efu + efv + egu + egv
        };

        let mut lower = 0.0f64;
        let mut upper = 0.0f64;
        for x in &cuts {
            lower = lower.max(point(*x));
        }
        let mut budget = 100_000usize;
        for w in cuts.windows(2) {
            let (u, v) = (w[0], w[1]);
            if self.affine_between(u, v) && other.affine_between(u, v) {
                // affine difference: extremal at the compared endpoints
                upper = upper.max(point(u)).max(point(v));
                continue;
            }
            let mut stack = vec![(u, v, bound(u, v))];
            while let Some((u, v, bd)) = stack.pop() {
                if bd <= lower + tol || budget == 0 || v - u < 1e-13 {
                    upper = upper.max(bd);
                    continue;
                }
                budget -= 1;
                let m = 0.5 * (u + v);
                lower = lower.max(point(m));
                stack.push((u, m, bound(u, m)));
                stack.push((m, v, bound(m, v)));
            }
        }
        (lower, upper.max(lower))
    }

    /// Certified upper bound on the supremum distance (exact for affine
    /// pairs).
    pub fn sup_distance(&self, other: &MonotoneMap) -> f64 {
        self.sup_distance_bounds(other, 1e-9).1
    }

    /// True when the whole graph lies strictly below the diagonal; decided
    /// from breakpoints, tail offsets, and transport-box geometry, without
    /// sampling.
    pub fn strictly_below_diagonal(&self) -> bool {
        match &self.kind {
            MapKind::Translation(c) => *c < 0.0,
            MapKind::Piecewise(parts) => parts.iter().all(|p| match p {
                Part::Affine { x0, y0, x1, y1 } => y0 < x0 && y1 < x1,
                Part::Transport { x0, y1, .. } => y1 < x0,
            }),
            MapKind::Composed { outer, inner, .. } => {
                outer.strictly_below_diagonal() && inner.strictly_below_diagonal()
            }
        }
    }

    pub fn strictly_above_diagonal(&self) -> bool {
        match &self.kind {
            MapKind::Translation(c) => *c > 0.0,
            MapKind::Piecewise(parts) => parts.iter().all(|p| match p {
                Part::Affine { x0, y0, x1, y1 } => y0 > x0 && y1 > x1,
                Part::Transport { x1, y0, .. } => y0 > x1,
            }),
            MapKind::Composed { outer, inner, .. } => {
                outer.strictly_above_diagonal() && inner.strictly_above_diagonal()
            }
        }
    }

    /// Certified lower bound on min |F(x) - x| over [lo, hi].
    pub fn diagonal_gap_on(&self, lo: f64, hi: f64) -> f64 {
        match &self.kind {
            MapKind::Translation(c) => c.abs(),
            MapKind::Composed { .. } => {
                // conservative: sample-free bound not available; use tails
                self.left_offset().abs().min(self.right_offset().abs())
            }
            MapKind::Piecewise(parts) => {
                let mut gap = f64::INFINITY;
                let first = parts[0].x0();
                let last = parts.last().unwrap().x1();
                if lo < first {
                    gap = gap.min(self.left_offset().abs());
                }
                if hi > last {
                    gap = gap.min(self.right_offset().abs());
                }
                for p in parts {
                    if p.x1() < lo || p.x0() > hi {
                        continue;
                    }
                    match p {
                        Part::Affine { x0, y0, x1, y1 } => {
                            let slope = (y1 - y0) / (x1 - x0);
                            let at = |x: f64| y0 + (x - x0) * slope - x;
                            let u = x0.max(lo);
                            let v = x1.min(hi);
                            gap = gap.min(at(u).abs()).min(at(v).abs());
                        }
                        Part::Transport { x0, y0, x1, y1, .. } => {
                            // distance from the bounding box to the diagonal
                            let d = (x0 - y1).max(y0 - x1).max(0.0);
                            gap = gap.min(d);
                        }
                    }
                }
                gap
            }
        }
    }

    /// Certified uniform-continuity width: |x - y| below the result forces
    /// |F(x) - F(y)| below `osc`.
    pub fn uniform_continuity_delta(&self, osc: f64) -> f64 {
        assert!(osc > 0.0);
        match &self.kind {
            MapKind::Translation(_) => osc,
            MapKind::Composed { outer, inner, .. } => {
                let mid = outer.uniform_continuity_delta(osc);
                inner.uniform_continuity_delta(mid)
            }
            MapKind::Piecewise(parts) => {
                let mut delta: f64 = osc;
                for p in parts {
                    match p {
                        Part::Affine { .. } => {
                            delta = delta.min(osc / p.slope_bound());
                        }
                        Part::Transport { plan, .. } => {
                            delta = delta.min(plan.continuity_delta(osc));
                        }
                    }
                }
                delta
            }
        }
    }

    pub fn max_breakpoint_magnitude(&self) -> f64 {
        match self.compact_support() {
            None => 0.0,
            Some((lo, hi)) => lo.abs().max(hi.abs()),
        }
    }

    /// Transport segments with their spans, for serialization.
    pub fn transport_parts(&self) -> Vec<Arc<TransportPlan>> {
        match &self.kind {
            MapKind::Piecewise(parts) => parts
                .iter()
                .filter_map(|p| match p {
                    Part::Transport { plan, .. } => Some(plan.clone()),
                    _ => None,
                })
                .collect(),
            _ => Vec::new(),
        }
    }
}

/// The order-preserving homeomorphism carrying one Cantor block onto
/// another, extended by translations through the hull endpoints.
pub fn order_homeo(a: &CantorBlock, b: &CantorBlock) -> Result<MonotoneMap> {
    let plan = Arc::new(TransportPlan::new(a.clone(), b.clone()));
    MonotoneMap::from_transport_chain(vec![plan])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{rat, rat_int};
    use num_traits::Zero;

    #[test]
    fn eval_identity_and_translation() {
        let id = MonotoneMap::identity();
        assert_eq!(id.eval(3.7, 1e-9).unwrap(), 3.7);
        let t = MonotoneMap::translation(-0.5);
        assert_eq!(t.eval(2.0, 1e-9).unwrap(), 1.5);
        assert_eq!(t.invert(1.5, 1e-9).unwrap(), 2.0);
    }

    #[test]
    fn breakpoint_map_eval_and_tails() {
        // below-diagonal map: translation by -0.5 left of 0, slope 1/2 on
        // [0,2], translation by -1.5 right of 2
        let m = MonotoneMap::from_breakpoints(&[(0.0, -0.5), (2.0, 0.5)]).unwrap();
        assert_eq!(m.left_offset(), -0.5);
        assert_eq!(m.right_offset(), -1.5);
        assert_eq!(m.eval(-3.0, 1e-9).unwrap(), -3.5);
        assert_eq!(m.eval(1.0, 1e-9).unwrap(), 0.0);
        assert_eq!(m.eval(4.0, 1e-9).unwrap(), 2.5);
        assert_eq!(m.invert(0.0, 1e-9).unwrap(), 1.0);
        let (d0, d1) = m.endpoint_derivatives();
        assert!((d0 - (-0.5f64).exp()).abs() < 1e-15);
        assert!((d1 - (1.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn transport_segment_certified_eval() {
        // one cell [0,1] onto one cell [0,2]: the affine doubling map
        let a = CantorBlock::new(Rat::zero(), rat_int(1), 1).unwrap();
        let b = CantorBlock::new(Rat::zero(), rat_int(2), 1).unwrap();
        let m = order_homeo(&a, &b).unwrap();
        let v = m.eval(1.0 / 3.0, 1e-6).unwrap();
        assert!((v - 2.0 / 3.0).abs() <= 1e-6);
        // tails are translations through the hull corners
        assert_eq!(m.eval(-1.0, 1e-9).unwrap(), -1.0);
        assert_eq!(m.eval(2.0, 1e-9).unwrap(), 3.0);
        let x = m.invert(0.9, 1e-8).unwrap();
        assert!((m.eval(x, 1e-9).unwrap() - 0.9).abs() <= 1e-8);
    }

    #[test]
    fn composition_exact_merge_and_tails() {
        let up = MonotoneMap::translation(1.0);
        let down = MonotoneMap::translation(-1.0);
        let id = MonotoneMap::compose(&up, &down);
        assert_eq!(id.eval(0.3, 1e-9).unwrap(), 0.3);

        let a = MonotoneMap::from_breakpoints(&[(0.0, -1.5), (1.0, -1.0)]).unwrap();
        let b = MonotoneMap::from_breakpoints(&[(-1.0, -1.6), (0.5, -0.5)]).unwrap();
        let c = MonotoneMap::compose(&a, &b);
        assert!((c.left_offset() - (a.left_offset() + b.left_offset())).abs() < 1e-12);
        assert!((c.right_offset() - (a.right_offset() + b.right_offset())).abs() < 1e-12);
        for i in 0..100 {
            let x = -3.0 + 6.0 * (i as f64) / 99.0;
            let direct = a.eval(b.eval(x, 1e-12).unwrap(), 1e-12).unwrap();
            let merged = c.eval(x, 1e-12).unwrap();
            assert!((direct - merged).abs() < 1e-9, "x={x}: {direct} vs {merged}");
        }
    }

    #[test]
    fn composition_inverse_is_identity_at_breakpoints() {
        let m = MonotoneMap::from_breakpoints(&[(0.0, -0.5), (1.0, 0.2), (2.0, 0.9)]).unwrap();
        for &(x, y) in m.breakpoints().unwrap().iter() {
            let back = m.invert(y, 1e-12).unwrap();
            assert!((back - x).abs() < 1e-12);
        }
    }

    #[test]
    fn sup_distance_exact_for_affine() {
        let f = MonotoneMap::from_breakpoints(&[(0.0, -0.5), (2.0, 0.5)]).unwrap();
        assert_eq!(f.sup_distance(&f), 0.0);
        let (a, b) =
            (MonotoneMap::translation(-1.0), MonotoneMap::translation(-1.2));
        let d = a.sup_distance(&b);
        assert!((d - 0.2).abs() < 1e-15);
    }

    #[test]
    fn sup_distance_matches_dense_sampling() {
        let f =
            MonotoneMap::from_breakpoints(&[(-1.0, -2.0), (0.5, -0.7), (2.0, 1.0)]).unwrap();
        let g =
            MonotoneMap::from_breakpoints(&[(-1.2, -2.1), (0.0, -1.2), (1.8, 0.6)]).unwrap();
        let exact = f.sup_distance(&g);
        let mut sampled = (f.left_offset() - g.left_offset())
            .abs()
            .max((f.right_offset() - g.right_offset()).abs());
        for i in 0..=100_000 {
            let x = -5.0 + 10.0 * (i as f64) / 100_000.0;
            sampled = sampled
                .max((f.eval(x, 1e-12).unwrap() - g.eval(x, 1e-12).unwrap()).abs());
        }
        assert!((exact - sampled).abs() < 1e-9, "{exact} vs {sampled}");
    }

    #[test]
    fn diagonal_sides() {
        let below = MonotoneMap::from_breakpoints(&[(0.0, -0.5), (2.0, 0.5)]).unwrap();
        assert!(below.strictly_below_diagonal());
        assert!(!below.strictly_above_diagonal());
        assert!(below.diagonal_gap_on(-4.0, 4.0) >= 0.5 - 1e-12);
    }

    #[test]
    fn exact_eval_on_affine_rationals() {
        let m = MonotoneMap::from_breakpoints(&[(0.0, -0.375), (1.0, 0.625)]).unwrap();
        let v = m.eval_exact(&rat(1, 2)).unwrap();
        assert_eq!(v, rat(1, 8));
        let tail = m.eval_exact(&rat(-7, 2)).unwrap();
        assert_eq!(tail, rat(-31, 8));
    }
}
