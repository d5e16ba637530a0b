use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A coefficient of a linear program.
///
/// Exact rationals are kept exact in both solve modes. Reals enter a
/// rational solve through their exact binary expansion.
#[derive(Clone, Debug, PartialEq)]
pub enum Coef {
    Rational(BigRational),
    Real(f64),
}

/// Largest denominator tried by [`Coef::snap`].
pub const SNAP_MAX_DENOMINATOR: i64 = 1024;
/// Absolute distance within which [`Coef::snap`] accepts a rational.
pub const SNAP_TOLERANCE: f64 = 1e-10;

impl Coef {
    pub fn int(v: i64) -> Self {
        Coef::Rational(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Coef::Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn real(v: f64) -> Self {
        Coef::Real(v)
    }

    pub fn zero() -> Self {
        Coef::int(0)
    }

    /// Replaces `v` by the nearest rational with a small denominator when
    /// one lies within [`SNAP_TOLERANCE`]; otherwise keeps it real.
    pub fn snap(v: f64) -> Self {
        match snap_rational(v) {
            Some(r) => Coef::Rational(r),
            None => Coef::Real(v),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Coef::Rational(r) => rational_to_f64(r),
            Coef::Real(v) => *v,
        }
    }

    /// Exact value; reals are expanded to their binary fraction.
    pub fn to_rational(&self) -> BigRational {
        match self {
            Coef::Rational(r) => r.clone(),
            Coef::Real(v) => BigRational::from_float(*v).unwrap_or_else(BigRational::zero),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Coef::Rational(r) => r.is_zero(),
            Coef::Real(v) => *v == 0.0,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Coef::Rational(_))
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Coef::Rational(_) => true,
            Coef::Real(v) => v.is_finite(),
        }
    }

    pub fn neg(&self) -> Coef {
        match self {
            Coef::Rational(r) => Coef::Rational(-r.clone()),
            Coef::Real(v) => Coef::Real(-v),
        }
    }

    pub fn add(&self, other: &Coef) -> Coef {
        match (self, other) {
            (Coef::Rational(a), Coef::Rational(b)) => Coef::Rational(a + b),
            _ => Coef::Real(self.to_f64() + other.to_f64()),
        }
    }

    pub fn mul(&self, other: &Coef) -> Coef {
        match (self, other) {
            (Coef::Rational(a), Coef::Rational(b)) => Coef::Rational(a * b),
            _ => Coef::Real(self.to_f64() * other.to_f64()),
        }
    }
}

impl From<i64> for Coef {
    fn from(v: i64) -> Self {
        Coef::int(v)
    }
}

impl From<f64> for Coef {
    fn from(v: f64) -> Self {
        Coef::Real(v)
    }
}

impl fmt::Display for Coef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coef::Rational(r) => write!(f, "{}", format_rational(r)),
            Coef::Real(v) => write!(f, "{v:?}"),
        }
    }
}

/// A solver output value, exact in rational mode.
#[derive(Clone, Debug, PartialEq)]
pub enum Number {
    Rational(BigRational),
    Float(f64),
}

impl Number {
    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Rational(r) => rational_to_f64(r),
            Number::Float(v) => *v,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Number::Rational(r) => Some(r),
            Number::Float(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Number::Rational(_))
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Rational(r) => write!(f, "{}", format_rational(r)),
            Number::Float(v) => write!(f, "{v}"),
        }
    }
}

/// `p/q` or `p` for integers.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `p`, `-p` or `p/q`.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(BigRational::new(n, d))
        }
        None => Some(BigRational::from_integer(s.parse().ok()?)),
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    // Huge numerator/denominator: scale down before dividing.
    let bits = r.numer().bits().max(r.denom().bits()) as i64 - 60;
    let shift = bits.max(0) as usize;
    let n = (r.numer() >> shift).to_f64().unwrap_or(0.0);
    let d = (r.denom() >> shift).to_f64().unwrap_or(1.0);
    if d == 0.0 {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    } else {
        n / d
    }
}

/// Best rational approximation with denominator at most
/// [`SNAP_MAX_DENOMINATOR`], accepted only within [`SNAP_TOLERANCE`].
pub fn snap_rational(v: f64) -> Option<BigRational> {
    if !v.is_finite() || v.abs() > 1e12 {
        return None;
    }
    // Continued-fraction convergents.
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut x = v;
    for _ in 0..40 {
        let a = x.floor();
        if a.abs() > 1e12 {
            break;
        }
        let a = a as i64;
        let h2 = a.checked_mul(h1).and_then(|t| t.checked_add(h0))?;
        let k2 = a.checked_mul(k1).and_then(|t| t.checked_add(k0))?;
        if k2 > SNAP_MAX_DENOMINATOR {
            break;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        if (v - h1 as f64 / k1 as f64).abs() <= SNAP_TOLERANCE {
            return Some(BigRational::new(BigInt::from(h1), BigInt::from(k1)));
        }
        let frac = x - a as f64;
        if frac.abs() < 1e-300 {
            break;
        }
        x = 1.0 / frac;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snap_recovers_small_rationals() {
        assert_eq!(snap_rational(2.5), Some(BigRational::new(5.into(), 2.into())));
        assert_eq!(snap_rational(1.0 / 3.0 + 1e-13), Some(BigRational::new(1.into(), 3.into())));
        assert_eq!(snap_rational(-7.0), Some(BigRational::from_integer((-7).into())));
        assert_eq!(snap_rational(0.0), Some(BigRational::zero()));
        assert!(snap_rational(std::f64::consts::PI).is_none());
        assert!(snap_rational(f64::NAN).is_none());
    }

    #[test]
    fn rational_text_round_trip() {
        let r = parse_rational("-15/6").unwrap();
        assert_eq!(format_rational(&r), "-5/2");
        assert_eq!(parse_rational("4").map(|r| format_rational(&r)), Some("4".into()));
        assert!(parse_rational("1/0").is_none());
    }

    #[test]
    fn real_coefficients_expand_exactly() {
        let c = Coef::real(0.75);
        assert_eq!(c.to_rational(), BigRational::new(3.into(), 4.into()));
        assert_eq!(Coef::ratio(1, 3).add(&Coef::ratio(1, 6)), Coef::ratio(1, 2));
    }
}
