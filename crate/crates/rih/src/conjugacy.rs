//! The log-odds style homeomorphism between (0,1) and the real line, the
//! unbounded metric it induces on the open interval, and transport of maps
//! and measures between the two coordinate systems.
//!
//! The key property of this particular homeomorphism is that the supremum
//! distance between transported maps equals the induced distance between the
//! originals, and translation tails on the line encode the endpoint
//! derivatives on the interval.

use crate::error::{Error, Result};
use crate::map::MonotoneMap;
use crate::measure::AtomicMeasure;

/// A point of the open unit interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitPoint(f64);

impl UnitPoint {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(UnitPoint(value))
        } else {
            Err(Error::Domain(format!("point {value} outside the open unit interval")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Maps (0,1) onto the real line: log(2x) on the lower half, -log(2(1-x)) on
/// the upper half. Strictly increasing with h(1/2) = 0.
pub fn unit_to_line(x: UnitPoint) -> f64 {
    let x = x.value();
    if x <= 0.5 {
        (2.0 * x).ln()
    } else {
        -(2.0 * (1.0 - x)).ln()
    }
}

/// Inverse of [`unit_to_line`]; total on finite reals.
pub fn line_to_unit(y: f64) -> UnitPoint {
    let x = if y <= 0.0 { 0.5 * y.exp() } else { 1.0 - 0.5 * (-y).exp() };
    // Clamp away from the endpoints: huge |y| underflows the exponential.
    let x = x.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
    UnitPoint(x)
}

/// The unbounded metric |h(x) - h(y)| on the open interval. Dominates the
/// Euclidean distance.
pub fn dh(x: UnitPoint, y: UnitPoint) -> f64 {
    (unit_to_line(x) - unit_to_line(y)).abs()
}

/// A piecewise-linear self-homeomorphism of [0,1] fixing both endpoints,
/// described by its interior breakpoints. Segments interpolate between
/// (0,0), the breakpoints, and (1,1); endpoint derivatives are the first and
/// last segment slopes.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitPiecewiseLinear {
    breakpoints: Vec<(f64, f64)>,
}

impl UnitPiecewiseLinear {
    /// `breakpoints` must be strictly increasing in both coordinates and lie
    /// in the open unit square.
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        let mut prev = (0.0, 0.0);
        for &(x, y) in &breakpoints {
            if !(x > prev.0 && y > prev.1) {
                return Err(Error::InvalidMap(format!(
                    "breakpoint ({x}, {y}) does not increase from ({}, {})",
                    prev.0, prev.1
                )));
            }
            if x >= 1.0 || y >= 1.0 {
                return Err(Error::InvalidMap(format!(
                    "breakpoint ({x}, {y}) outside the open unit square"
                )));
            }
            prev = (x, y);
        }
        Ok(UnitPiecewiseLinear { breakpoints })
    }

    pub fn identity() -> Self {
        UnitPiecewiseLinear { breakpoints: Vec::new() }
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    /// Derivative at 0: slope of the first segment.
    pub fn derivative_at_zero(&self) -> f64 {
        match self.breakpoints.first() {
            Some(&(x, y)) => y / x,
            None => 1.0,
        }
    }

    /// Derivative at 1: slope of the last segment.
    pub fn derivative_at_one(&self) -> f64 {
        match self.breakpoints.last() {
            Some(&(x, y)) => (1.0 - y) / (1.0 - x),
            None => 1.0,
        }
    }

    pub fn eval(&self, x: UnitPoint) -> UnitPoint {
        let x = x.value();
        let mut prev = (0.0, 0.0);
        for &(bx, by) in self.breakpoints.iter().chain(std::iter::once(&(1.0, 1.0))) {
            if x <= bx {
                let t = (x - prev.0) / (bx - prev.0);
                let y = prev.1 + t * (by - prev.1);
                return UnitPoint(y.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0));
            }
            prev = (bx, by);
        }
        UnitPoint(x)
    }

    /// Piecewise-linear inverse evaluation.
    pub fn eval_inverse(&self, y: f64) -> f64 {
        let mut prev = (0.0, 0.0);
        for &(bx, by) in self.breakpoints.iter().chain(std::iter::once(&(1.0, 1.0))) {
            if y <= by {
                let t = (y - prev.1) / (by - prev.1);
                return prev.0 + t * (bx - prev.0);
            }
            prev = (bx, by);
        }
        y
    }
}

/// Transports a unit-interval description to its real-line counterpart: the
/// map whose breakpoints are the images of the description's breakpoints,
/// with translation tails given by the logarithms of the endpoint slopes.
pub fn transport_map(f: &UnitPiecewiseLinear) -> Result<MonotoneMap> {
    let d0 = f.derivative_at_zero();
    let d1 = f.derivative_at_one();
    if !(d0.is_finite() && d0 > 0.0 && d1.is_finite() && d1 > 0.0) {
        return Err(Error::InvalidMap(format!(
            "endpoint derivatives ({d0}, {d1}) must be finite and positive"
        )));
    }
    if f.breakpoints().is_empty() {
        return Ok(MonotoneMap::identity());
    }
    // The conjugacy has two log branches that meet at the half point, so the
    // image of a linear segment changes slope where x or f(x) crosses 1/2.
    // Insert those seam points alongside the description's own breakpoints.
    let mut pts: Vec<(f64, f64)> = f.breakpoints().to_vec();
    pts.push((0.5, f.eval(UnitPoint::new(0.5)?).value()));
    pts.push((f.eval_inverse(0.5), 0.5));
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pts.dedup_by(|a, b| a.0 == b.0);
    let pts: Vec<(f64, f64)> = pts
        .iter()
        .map(|&(x, y)| {
            Ok((
                unit_to_line(UnitPoint::new(x)?),
                unit_to_line(UnitPoint::new(y)?),
            ))
        })
        .collect::<Result<_>>()?;
    MonotoneMap::from_breakpoints(&pts)
}

/// Inverse transport: recovers the unit-interval breakpoint description from
/// a purely piecewise-affine real-line map.
pub fn transport_map_back(map: &MonotoneMap) -> Result<UnitPiecewiseLinear> {
    let pts = map.breakpoints().ok_or_else(|| {
        Error::InvalidMap("only affine-segmented maps transport back to breakpoint form".into())
    })?;
    let unit: Vec<(f64, f64)> = pts
        .iter()
        .map(|&(x, y)| (line_to_unit(x).value(), line_to_unit(y).value()))
        .collect();
    UnitPiecewiseLinear::new(unit)
}

/// Evaluates a real-line map in unit coordinates: h^-1 . F . h.
pub fn eval_in_unit(map: &MonotoneMap, x: UnitPoint, tol: f64) -> Result<UnitPoint> {
    let y = map.eval(unit_to_line(x), tol)?;
    Ok(line_to_unit(y))
}

/// Pushes a measure on (0,1) forward to the line (atom by atom).
pub fn pushforward_measure(mu: &AtomicMeasure) -> Result<AtomicMeasure> {
    let atoms = mu
        .atoms()
        .iter()
        .map(|a| Ok((unit_to_line(UnitPoint::new(a.position)?), a.weight)))
        .collect::<Result<Vec<_>>>()?;
    Ok(AtomicMeasure::from_atoms(atoms))
}

/// Pulls a measure on the line back to (0,1).
pub fn pullback_measure(mu: &AtomicMeasure) -> AtomicMeasure {
    let atoms = mu
        .atoms()
        .iter()
        .map(|a| (line_to_unit(a.position).value(), a.weight))
        .collect::<Vec<_>>();
    AtomicMeasure::from_atoms(atoms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn up(x: f64) -> UnitPoint {
        UnitPoint::new(x).unwrap()
    }

    #[test]
    fn center_maps_to_zero() {
        assert_eq!(unit_to_line(up(0.5)), 0.0);
        assert!((unit_to_line(up(0.25)) + std::f64::consts::LN_2).abs() < 1e-15);
        assert!((unit_to_line(up(0.75)) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn inverse_hits_reference_points() {
        assert_eq!(line_to_unit(0.0).value(), 0.5);
        assert!((line_to_unit(-std::f64::consts::LN_2).value() - 0.25).abs() < 1e-15);
        assert!((line_to_unit(std::f64::consts::LN_2).value() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn endpoint_input_is_rejected() {
        assert!(UnitPoint::new(0.0).is_err());
        assert!(UnitPoint::new(1.0).is_err());
    }

    #[test]
    fn dh_reference_values() {
        assert_eq!(dh(up(0.3), up(0.3)), 0.0);
        let ln2 = std::f64::consts::LN_2;
        assert!((dh(up(0.125), up(0.25)) - ln2).abs() < 1e-15);
        assert!((dh(up(0.25), up(0.75)) - 2.0 * ln2).abs() < 1e-15);
    }

    #[test]
    fn dh_dominates_euclidean() {
        for i in 1..40 {
            for j in 1..40 {
                let (x, y) = (i as f64 / 40.0, j as f64 / 40.0);
                assert!((x - y).abs() <= dh(up(x), up(y)) + 1e-15);
            }
        }
    }

    #[test]
    fn transport_identity_and_tails() {
        let id = transport_map(&UnitPiecewiseLinear::identity()).unwrap();
        assert_eq!(id.left_offset(), 0.0);
        assert_eq!(id.right_offset(), 0.0);

        // f(x) = x/2 on [0,1/2], (3x-1)/2 on [1/2,1]: slopes 1/2 and 3/2.
        let f = UnitPiecewiseLinear::new(vec![(0.5, 0.25)]).unwrap();
        let m = transport_map(&f).unwrap();
        assert!((m.left_offset() - 0.5f64.ln()).abs() < 1e-15);
        assert!((m.right_offset() + 1.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn transport_round_trip() {
        let f = UnitPiecewiseLinear::new(vec![(0.25, 0.1), (0.6, 0.5)]).unwrap();
        let m = transport_map(&f).unwrap();
        let g = transport_map_back(&m).unwrap();
        // the back-transported description keeps the original breakpoints
        // (plus the two half-line seams)
        for a in f.breakpoints() {
            assert!(
                g.breakpoints()
                    .iter()
                    .any(|b| (a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12),
                "missing breakpoint {a:?}"
            );
        }
        // and a second transport is exactly stable
        let m2 = transport_map(&g).unwrap();
        assert_eq!(m.breakpoints().unwrap().len(), m2.breakpoints().unwrap().len());
        assert!(m.sup_distance(&m2) < 1e-12);
    }

    #[test]
    fn pushforward_diracs() {
        let mu = AtomicMeasure::from_atoms(vec![(0.25, 0.5), (0.75, 0.5)]);
        let nu = pushforward_measure(&mu).unwrap();
        let ln2 = std::f64::consts::LN_2;
        assert!((nu.atoms()[0].position + ln2).abs() < 1e-15);
        assert!((nu.atoms()[1].position - ln2).abs() < 1e-15);
        assert!((nu.total_mass() - 1.0).abs() < 1e-15);
    }
}
