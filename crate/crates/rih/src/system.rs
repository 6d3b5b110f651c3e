//! Random systems of two interval homeomorphisms in real-line coordinates:
//! validity conditions, Lyapunov exponents at the ends, and the system
//! metrics.

use serde::{Deserialize, Serialize};

use crate::conjugacy::{eval_in_unit, UnitPoint};
use crate::error::{Error, Result};
use crate::map::MonotoneMap;

/// A triple (F0, F1, p): F0 below the diagonal, F1 above, p the probability
/// of choosing F0.
#[derive(Clone, Debug)]
pub struct RandomSystem {
    pub f0: MonotoneMap,
    pub f1: MonotoneMap,
    pub p: f64,
}

impl RandomSystem {
    /// Builds and validates; fails with the first broken condition.
    pub fn new(f0: MonotoneMap, f1: MonotoneMap, p: f64) -> Result<Self> {
        let sys = RandomSystem { f0, f1, p };
        let report = sys.validate();
        if report.is_valid() {
            Ok(sys)
        } else {
            Err(Error::InvalidSystem(report.first_failure().unwrap_or_default()))
        }
    }

    /// Builds without checking; use for candidates that will be reported on.
    pub fn new_unchecked(f0: MonotoneMap, f1: MonotoneMap, p: f64) -> Self {
        RandomSystem { f0, f1, p }
    }

    pub fn lyapunov(&self) -> LyapunovReport {
        let (a0m, a0p) = (self.f0.left_offset(), self.f0.right_offset());
        let (a1m, a1p) = (self.f1.left_offset(), self.f1.right_offset());
        LyapunovReport {
            lambda_minus: self.p * a0m + (1.0 - self.p) * a1m,
            lambda_plus: -self.p * a0p - (1.0 - self.p) * a1p,
            f0_offsets: (a0m, a0p),
            f1_offsets: (a1m, a1p),
        }
    }

    /// Checks the five membership conditions; report-style, never fails.
    pub fn validate(&self) -> ValidityReport {
        let lyap = self.lyapunov();
        let homeomorphisms = Condition {
            pass: true,
            detail: "increasing segment chains with slope-1 tails by construction".into(),
        };
        let below = Condition {
            pass: self.f0.strictly_below_diagonal(),
            detail: format!(
                "F0 - id has tail offsets ({}, {})",
                self.f0.left_offset(),
                self.f0.right_offset()
            ),
        };
        let above = Condition {
            pass: self.f1.strictly_above_diagonal(),
            detail: format!(
                "F1 - id has tail offsets ({}, {})",
                self.f1.left_offset(),
                self.f1.right_offset()
            ),
        };
        let probability = Condition {
            pass: self.p > 0.0 && self.p < 1.0,
            detail: format!("p = {}", self.p),
        };
        let lyapunov = Condition {
            pass: lyap.lambda_minus > 0.0 && lyap.lambda_plus > 0.0,
            detail: format!(
                "lambda(-inf) = {:.6}, lambda(+inf) = {:.6}",
                lyap.lambda_minus, lyap.lambda_plus
            ),
        };
        ValidityReport { homeomorphisms, below, above, probability, lyapunov, lyap }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Condition {
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LyapunovReport {
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub f0_offsets: (f64, f64),
    pub f1_offsets: (f64, f64),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValidityReport {
    pub homeomorphisms: Condition,
    pub below: Condition,
    pub above: Condition,
    pub probability: Condition,
    pub lyapunov: Condition,
    pub lyap: LyapunovReport,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.homeomorphisms.pass
            && self.below.pass
            && self.above.pass
            && self.probability.pass
            && self.lyapunov.pass
    }

    pub fn first_failure(&self) -> Option<String> {
        let named = [
            ("(i) homeomorphisms", &self.homeomorphisms),
            ("(ii) below diagonal", &self.below),
            ("(iii) above diagonal", &self.above),
            ("(iv) probability in (0,1)", &self.probability),
            ("(v) positive Lyapunov exponents", &self.lyapunov),
        ];
        named
            .iter()
            .find(|(_, c)| !c.pass)
            .map(|(name, c)| format!("{name} fails: {}", c.detail))
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SystemDistance {
    /// Maximal metric: sup distances of the two map pairs and |p - p'|.
    pub d_m: f64,
    /// Auxiliary unit-coordinate metric |dp| + sum of Euclidean sups,
    /// estimated by sampling; bounded by 3 d_m.
    pub d_0: f64,
}

/// Both system metrics. d_m is certified (exact for affine pairs); d_0 is a
/// sampled utility value.
pub fn system_distance(a: &RandomSystem, b: &RandomSystem) -> SystemDistance {
    let d0m = a.f0.sup_distance(&b.f0);
    let d1m = a.f1.sup_distance(&b.f1);
    let dp = (a.p - b.p).abs();
    let d_m = d0m.max(d1m).max(dp);

    let sup_unit = |f: &MonotoneMap, g: &MonotoneMap| -> f64 {
        let mut best = 0.0f64;
        let window = 30.0f64;
        let n = 2000;
        for i in 0..=n {
            let t = -window + 2.0 * window * (i as f64) / (n as f64);
            let x = crate::conjugacy::line_to_unit(t);
            let fu = eval_in_unit(f, x, 1e-9).map(UnitPoint::value).unwrap_or(0.0);
            let gu = eval_in_unit(g, x, 1e-9).map(UnitPoint::value).unwrap_or(0.0);
            best = best.max((fu - gu).abs());
        }
        best
    };
    let d_0 = dp + sup_unit(&a.f0, &b.f0) + sup_unit(&a.f1, &b.f1);
    SystemDistance { d_m, d_0 }
}

/// The symmetric reference system: F0 is translation by -1/2 left of 0,
/// affine from (0,-1/2) to (2,1/2), translation by -3/2 right of 2; F1 is
/// its mirror under x -> -x; p = 1/2. Both Lyapunov exponents equal 1/2.
pub fn symmetric_drift_system() -> RandomSystem {
    let f0 = MonotoneMap::from_breakpoints(&[(0.0, -0.5), (2.0, 0.5)]).unwrap();
    let f1 = MonotoneMap::from_breakpoints(&[(-2.0, -0.5), (0.0, 0.5)]).unwrap();
    RandomSystem::new(f0, f1, 0.5).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_drift_translations_fail_lyapunov() {
        let sys = RandomSystem::new_unchecked(
            MonotoneMap::translation(-1.0),
            MonotoneMap::translation(1.0),
            0.5,
        );
        let report = sys.validate();
        assert!(!report.is_valid());
        assert_eq!(report.lyap.lambda_minus, 0.0);
        assert!(report.first_failure().unwrap().contains("Lyapunov"));
    }

    #[test]
    fn one_sided_drift_fails_at_plus_infinity() {
        // F0 tails (-log2, -log2), F1 tails (log4, log4), p = 1/2:
        // lambda(-inf) = 0.3466 > 0 but lambda(+inf) < 0.
        let f0 = MonotoneMap::translation(-(2.0f64.ln()));
        let f1 = MonotoneMap::translation(4.0f64.ln());
        let sys = RandomSystem::new_unchecked(f0, f1, 0.5);
        let r = sys.validate();
        assert!((r.lyap.lambda_minus - 0.34657).abs() < 1e-4);
        assert!(r.lyap.lambda_plus < 0.0);
        assert!(!r.is_valid());
    }

    #[test]
    fn symmetric_system_is_valid() {
        let sys = symmetric_drift_system();
        let r = sys.validate();
        assert!(r.is_valid(), "{:?}", r.first_failure());
        assert!((r.lyap.lambda_minus - 0.5).abs() < 1e-12);
        assert!((r.lyap.lambda_plus - 0.5).abs() < 1e-12);
    }

    #[test]
    fn distance_of_identical_systems_is_zero() {
        let a = symmetric_drift_system();
        let d = system_distance(&a, &a);
        assert_eq!(d.d_m, 0.0);
        assert!(d.d_0 < 1e-9);
    }

    #[test]
    fn probability_difference_dominates() {
        let a = symmetric_drift_system();
        let mut b = a.clone();
        b.p = 0.6;
        let d = system_distance(&a, &b);
        assert!((d.d_m - 0.1).abs() < 1e-12);
    }

    #[test]
    fn d0_bounded_by_three_dm() {
        let a = symmetric_drift_system();
        let f0 = MonotoneMap::from_breakpoints(&[(0.0, -0.55), (2.0, 0.45)]).unwrap();
        let b = RandomSystem::new(f0, a.f1.clone(), 0.5).unwrap();
        let d = system_distance(&a, &b);
        assert!(d.d_0 <= 3.0 * d.d_m + 1e-9, "d0={} dm={}", d.d_0, d.d_m);
    }
}
