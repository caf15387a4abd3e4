//! Exact exponent algebra on `[1, ∞]` with rational values and a symbolic `∞`.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

pub fn rat(n: i64, d: i64) -> Rational {
    Ratio::new(n, d)
}

pub fn zero() -> Rational {
    rat(0, 1)
}

pub fn one() -> Rational {
    rat(1, 1)
}

pub fn half() -> Rational {
    rat(1, 2)
}

/// Nearest rational with denominator at most `10^6`.
pub fn to_rational(x: f64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(Error::InvalidParameter(format!("expected a finite number, got {x}")));
    }
    Ratio::approximate_float(x).ok_or_else(|| Error::InvalidParameter(format!("cannot represent {x} as a ratio")))
}

pub fn to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let n: i64 = a.trim().parse().map_err(|_| Error::InvalidParameter(format!("bad fraction {s:?}")))?;
        let d: i64 = b.trim().parse().map_err(|_| Error::InvalidParameter(format!("bad fraction {s:?}")))?;
        if d == 0 {
            return Err(Error::InvalidParameter(format!("zero denominator in {s:?}")));
        }
        return Ok(rat(n, d));
    }
    let x: f64 = s.parse().map_err(|_| Error::InvalidParameter(format!("bad number {s:?}")))?;
    to_rational(x)
}

/// An exponent in `[1, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exponent {
    Finite(Rational),
    Infinite,
}

impl Exponent {
    pub fn new(r: Rational) -> Result<Self> {
        if r < one() {
            return Err(Error::InvalidParameter(format!("exponent must lie in [1, inf], got {r}")));
        }
        Ok(Exponent::Finite(r))
    }

    pub fn int(n: i64) -> Self {
        Exponent::new(rat(n, 1)).expect("integer exponent must be at least 1")
    }

    pub fn from_f64(x: f64) -> Result<Self> {
        if x == f64::INFINITY {
            Ok(Exponent::Infinite)
        } else {
            Exponent::new(to_rational(x)?)
        }
    }

    /// `1/p`, with `1/∞ = 0`.
    pub fn recip(&self) -> Rational {
        match self {
            Exponent::Finite(r) => r.recip(),
            Exponent::Infinite => zero(),
        }
    }

    /// The exponent with reciprocal `r ∈ [0, 1]`; `r = 0` gives `∞`.
    pub fn from_recip(r: Rational) -> Result<Self> {
        if r < zero() || r > one() {
            return Err(Error::InvalidParameter(format!("reciprocal exponent {r} outside [0, 1]")));
        }
        if r == zero() {
            Ok(Exponent::Infinite)
        } else {
            Ok(Exponent::Finite(r.recip()))
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Exponent::Finite(r) => to_f64(*r),
            Exponent::Infinite => f64::INFINITY,
        }
    }

    /// `p′` with `1/p + 1/p′ = 1`.
    pub fn conjugate(&self) -> Self {
        Exponent::from_recip(one() - self.recip()).expect("conjugate of a valid exponent")
    }
}

/// `target·(source/target)′`, where `r′ = ∞` for `r ≤ 1`. Its reciprocal is
/// `max(0, 1/target − 1/source)`.
pub fn mixed_conjugate(target: Exponent, source: Exponent) -> Exponent {
    let r = target.recip() - source.recip();
    Exponent::from_recip(if r > zero() { r } else { zero() }).expect("difference of reciprocals lies in [0, 1]")
}

/// `(t, t̃)` with `t = max(0, 1/q₂ − min(1/p₁, 1 − 1/p₁))` and
/// `t̃ = max(0, max(1/p₂, 1 − 1/p₂) − 1/q₁)`.
pub fn t_exponents(p1: Exponent, p2: Exponent, q1: Exponent, q2: Exponent) -> (Rational, Rational) {
    let a = p1.recip();
    let t = q2.recip() - a.min(one() - a);
    let b = p2.recip();
    let tt = b.max(one() - b) - q1.recip();
    (t.max(zero()), tt.max(zero()))
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(r) => write!(f, "{r}"),
            Exponent::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinite),
            other => Exponent::new(parse_rational(other)?),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Exponent::from_f64(x).map_err(serde::de::Error::custom),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}
