//! Exact rational arithmetic helpers and the `"num/den"` text format.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

/// Exact rational number, always kept in lowest terms with a positive denominator.
pub type Rational = BigRational;

/// `n / d` as a rational. Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// The integer `n` as a rational.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// The unsigned integer `n` as a rational.
pub fn uint(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `base^exp` for a non-negative exponent.
pub fn pow(base: &Rational, exp: u32) -> Rational {
    let mut acc = Rational::one();
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

/// Smallest integer `>= q`.
pub fn ceil_int(q: &Rational) -> BigInt {
    q.ceil().to_integer()
}

/// Largest integer `<= q`.
pub fn floor_int(q: &Rational) -> BigInt {
    q.floor().to_integer()
}

/// `q` as `u64` when it is a non-negative integer that fits.
pub fn to_u64_exact(q: &Rational) -> Option<u64> {
    if q.is_integer() && !q.is_negative() {
        q.to_integer().to_u64()
    } else {
        None
    }
}

/// `q / unit` as an exact `u64` count, if `q` is a non-negative integral multiple of `unit`.
pub fn multiple_of(q: &Rational, unit: &Rational) -> Option<u64> {
    to_u64_exact(&(q / unit))
}

/// Lossy conversion for reporting only.
pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Error produced when a rational literal cannot be parsed.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal {0:?}")]
pub struct ParseRationalError(pub String);

/// Parses `"num/den"`, `"n"` or a plain integer literal.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError(text.to_string());
    let t = text.trim();
    let (n, d) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| err())?;
    let d: BigInt = d.parse().map_err(|_| err())?;
    if d.is_zero() {
        return Err(err());
    }
    Ok(Rational::new(n, d))
}

/// Formats as `"num/den"` (the denominator is always written).
pub fn format_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Display wrapper that prints `n` for integers and `n/d` otherwise.
pub struct Short<'a>(pub &'a Rational);

impl fmt::Display for Short<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

/// `ceil(a / b)` for positive integers.
pub fn ceil_div_u64(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

/// Least common multiple of two positive integers.
pub fn lcm_u64(a: u64, b: u64) -> u64 {
    a.lcm(&b)
}

/// `1 / eps` when it is a positive integer.
pub fn inverse_integer(eps: &Rational) -> Option<u64> {
    if eps.is_zero() || eps.is_negative() {
        return None;
    }
    to_u64_exact(&eps.recip())
}

/// Serde adapter: rationals as `"num/den"` strings, accepting integers as shorthand.
pub mod serde_q {
    use super::*;
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        d.deserialize_any(QVisitor)
    }

    pub(crate) struct QVisitor;

    impl Visitor<'_> for QVisitor {
        type Value = Rational;

        fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("a rational as \"num/den\" or an integer")
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<Rational, E> {
            parse_rational(v).map_err(E::custom)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rational, E> {
            Ok(int(v))
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rational, E> {
            Ok(uint(v))
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<Rational, E> {
            Err(E::custom(format!(
                "floating point value {v} is not accepted; write it as \"num/den\""
            )))
        }
    }
}

/// Serde adapter for maps from job id to rational.
pub mod serde_q_map {
    use super::*;
    use serde::de::{MapAccess, Visitor};
    use serde::ser::SerializeMap;
    use serde::{Deserializer, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(m: &BTreeMap<u64, Rational>, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(m.len()))?;
        for (k, v) in m {
            map.serialize_entry(&k.to_string(), &format_rational(v))?;
        }
        map.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<u64, Rational>, D::Error> {
        struct MapVisitor;
        impl<'de> Visitor<'de> for MapVisitor {
            type Value = BTreeMap<u64, Rational>;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map from job id to rational start time")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut a: A) -> Result<Self::Value, A::Error> {
                let mut out = BTreeMap::new();
                while let Some(key) = a.next_key::<String>()? {
                    let id: u64 = key
                        .parse()
                        .map_err(|_| serde::de::Error::custom(format!("bad job id {key:?}")))?;
                    let v = a.next_value::<QValue>()?;
                    if out.insert(id, v.0).is_some() {
                        return Err(serde::de::Error::custom(format!("duplicate job id {id}")));
                    }
                }
                Ok(out)
            }
        }
        d.deserialize_map(MapVisitor)
    }

    struct QValue(Rational);

    impl<'de> serde::Deserialize<'de> for QValue {
        fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
            d.deserialize_any(super::serde_q::QVisitor).map(QValue)
        }
    }
}
