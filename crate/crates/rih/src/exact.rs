//! Exact arithmetic carriers: big rationals and the quadratic field Q(sqrt 2).
//!
//! Construction-critical coordinates (grids, boxes, Cantor gaps) are big
//! rationals; analytic operations stay in f64. Offsets for the minimal
//! perturbation live in Q(sqrt 2) so that irrationality of a ratio is a
//! decidable property rather than a floating-point guess.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rat = BigRational;

/// Exact conversion of a finite f64 into a rational.
pub fn rat_from_f64(x: f64) -> Rat {
    Rat::from_float(x).expect("finite float required")
}

pub fn rat_to_f64(x: &Rat) -> f64 {
    x.to_f64().expect("rational out of f64 range")
}

/// Reads an f64 as the short decimal it prints as, when one exists within
/// a relative 1e-12; falls back to the exact binary value. Budgets typed as
/// `0.1` mean one tenth, not its binary rounding.
pub fn rat_from_f64_decimal(x: f64) -> Rat {
    let mut scale = 1i64;
    for _ in 0..=12 {
        let c = x * scale as f64;
        if c.abs() < 9e15 {
            let rounded = c.round();
            if (rounded / scale as f64 - x).abs() <= 1e-12 * x.abs().max(1.0) {
                return Rat::new(BigInt::from(rounded as i64), BigInt::from(scale));
            }
        }
        scale *= 10;
    }
    rat_from_f64(x)
}

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Power of two as a rational: 2^k for k possibly negative.
pub fn rat_pow2(k: i32) -> Rat {
    if k >= 0 {
        Rat::from_integer(BigInt::one() << k as usize)
    } else {
        Rat::new(BigInt::one(), BigInt::one() << (-k) as usize)
    }
}

/// 3^-k as a rational, k >= 0.
pub fn rat_pow3_neg(k: u32) -> Rat {
    let mut d = BigInt::one();
    for _ in 0..k {
        d *= 3;
    }
    Rat::new(BigInt::one(), d)
}

/// Renders a rational as `num/den` (or just `num` for integers).
pub fn rat_to_string(x: &Rat) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn rat_from_string(s: &str) -> Result<Rat> {
    let parse_int = |t: &str| -> Result<BigInt> {
        t.trim()
            .parse::<BigInt>()
            .map_err(|_| Error::Parse(format!("bad rational component {t:?}")))
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let den = parse_int(d)?;
            if den.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(Rat::new(parse_int(n)?, den))
        }
        None => Ok(Rat::from_integer(parse_int(s)?)),
    }
}

/// Serde adapter: rationals as `num/den` strings.
pub mod serde_rat {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Rat, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&rat_to_string(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Rat, D::Error> {
        let s = String::deserialize(de)?;
        rat_from_string(&s).map_err(serde::de::Error::custom)
    }
}

/// An element q + r*sqrt(2) of the field Q(sqrt 2).
///
/// The value is irrational exactly when `sqrt2_coeff` is nonzero, which makes
/// "the ratio of two offsets is irrational" a checkable condition.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ExactOffset {
    #[serde(with = "serde_rat")]
    pub rational: Rat,
    #[serde(with = "serde_rat")]
    pub sqrt2_coeff: Rat,
}

impl ExactOffset {
    pub fn new(rational: Rat, sqrt2_coeff: Rat) -> Self {
        ExactOffset { rational, sqrt2_coeff }
    }

    pub fn from_rational(q: Rat) -> Self {
        ExactOffset { rational: q, sqrt2_coeff: Rat::zero() }
    }

    pub fn zero() -> Self {
        Self::from_rational(Rat::zero())
    }

    pub fn is_irrational(&self) -> bool {
        !self.sqrt2_coeff.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        rat_to_f64(&self.rational) + rat_to_f64(&self.sqrt2_coeff) * std::f64::consts::SQRT_2
    }

    pub fn add(&self, other: &ExactOffset) -> ExactOffset {
        ExactOffset {
            rational: &self.rational + &other.rational,
            sqrt2_coeff: &self.sqrt2_coeff + &other.sqrt2_coeff,
        }
    }

    pub fn add_rat(&self, q: &Rat) -> ExactOffset {
        ExactOffset { rational: &self.rational + q, sqrt2_coeff: self.sqrt2_coeff.clone() }
    }

    pub fn scale_int(&self, k: i64) -> ExactOffset {
        let k = rat_int(k);
        ExactOffset { rational: &self.rational * &k, sqrt2_coeff: &self.sqrt2_coeff * &k }
    }

    pub fn sub(&self, other: &ExactOffset) -> ExactOffset {
        ExactOffset {
            rational: &self.rational - &other.rational,
            sqrt2_coeff: &self.sqrt2_coeff - &other.sqrt2_coeff,
        }
    }

    pub fn mul_rat(&self, q: &Rat) -> ExactOffset {
        ExactOffset { rational: &self.rational * q, sqrt2_coeff: &self.sqrt2_coeff * q }
    }

    pub fn div_rat(&self, q: &Rat) -> ExactOffset {
        ExactOffset { rational: &self.rational / q, sqrt2_coeff: &self.sqrt2_coeff / q }
    }

    pub fn neg(&self) -> ExactOffset {
        ExactOffset { rational: -self.rational.clone(), sqrt2_coeff: -self.sqrt2_coeff.clone() }
    }

    /// Exact sign of q + r*sqrt(2).
    pub fn sign(&self) -> Ordering {
        let (q, r) = (&self.rational, &self.sqrt2_coeff);
        if r.is_zero() {
            return q.cmp(&Rat::zero());
        }
        if q.is_zero() {
            return r.cmp(&Rat::zero());
        }
        match (q.is_positive(), r.is_positive()) {
            (true, true) => Ordering::Greater,
            (false, false) => Ordering::Less,
            // Opposite signs: the sign is decided by comparing q^2 with 2 r^2.
            (true, false) => {
                let q2 = q * q;
                let r2 = r * r * rat_int(2);
                q2.cmp(&r2)
            }
            (false, true) => {
                let q2 = q * q;
                let r2 = r * r * rat_int(2);
                r2.cmp(&q2)
            }
        }
    }

    pub fn cmp_rat(&self, bound: &Rat) -> Ordering {
        ExactOffset { rational: &self.rational - bound, sqrt2_coeff: self.sqrt2_coeff.clone() }
            .sign()
    }

    pub fn cmp(&self, other: &ExactOffset) -> Ordering {
        ExactOffset {
            rational: &self.rational - &other.rational,
            sqrt2_coeff: &self.sqrt2_coeff - &other.sqrt2_coeff,
        }
        .sign()
    }

    /// Largest integer not exceeding the value.
    pub fn floor(&self) -> i64 {
        let mut k = self.to_f64().floor() as i64;
        // f64 was only a guess; fix it up exactly.
        while self.cmp_rat(&rat_int(k)) == Ordering::Less {
            k -= 1;
        }
        while self.cmp_rat(&rat_int(k + 1)) != Ordering::Less {
            k += 1;
        }
        k
    }
}

impl fmt::Display for ExactOffset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sqrt2_coeff.is_zero() {
            write!(f, "{}", rat_to_string(&self.rational))
        } else if self.rational.is_zero() {
            write!(f, "({})*sqrt2", rat_to_string(&self.sqrt2_coeff))
        } else {
            write!(
                f,
                "{} + ({})*sqrt2",
                rat_to_string(&self.rational),
                rat_to_string(&self.sqrt2_coeff)
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_string_round_trip() {
        for s in ["3/8", "-5", "0", "-22/7"] {
            let r = rat_from_string(s).unwrap();
            assert_eq!(rat_to_string(&r), s);
        }
    }

    #[test]
    fn f64_conversion_is_exact_for_dyadics() {
        let r = rat_from_f64(-0.375);
        assert_eq!(r, rat(-3, 8));
        assert_eq!(rat_to_f64(&r), -0.375);
    }

    #[test]
    fn sqrt2_sign_is_exact() {
        // 7/5 < sqrt2 < 3/2, checked with coefficients of opposite sign.
        let below = ExactOffset::new(rat(-7, 5), rat_int(1));
        assert_eq!(below.sign(), Ordering::Greater);
        let above = ExactOffset::new(rat(-3, 2), rat_int(1));
        assert_eq!(above.sign(), Ordering::Less);
        assert!(ExactOffset::new(rat_int(0), rat_int(0)).sign() == Ordering::Equal);
    }

    #[test]
    fn floor_matches_value() {
        let x = ExactOffset::new(rat(-1, 2), rat(33, 100)); // -0.5 + 0.4667 ~ -0.033
        assert_eq!(x.floor(), -1);
        let y = ExactOffset::new(rat_int(2), rat_int(1)); // 3.414...
        assert_eq!(y.floor(), 3);
    }
}
