//! p-adic valuation and absolute value on exact rationals.
//!
//! Every quantity the rest of the crate compares is either a p-adic norm
//! (zero or an integral power of `p`) or a positive rational threshold, so
//! all comparisons reduce to integer cross-multiplication.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Mul;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, Zero};
use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// The prime `p` fixing which absolute value the rationals carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeContext {
    p: u64,
}

/// p-adic valuation; `Infinite` is the valuation of zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

/// An exact value of an ultrametric norm: `0` or `p^e`.
///
/// The derived ordering is the numeric one: `Zero` sorts below every power
/// and powers sort by exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PNormValue {
    Zero,
    Pow(i64),
}

/// A rational read as an element of `Q_p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PadicScalar {
    value: Rational,
    ctx: PrimeContext,
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl PrimeContext {
    pub fn new(p: u64) -> Result<Self> {
        if is_prime(p) {
            Ok(Self { p })
        } else {
            Err(Error::NotPrime(p))
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn ensure_same(&self, other: &PrimeContext) -> Result<()> {
        if self.p == other.p {
            Ok(())
        } else {
            Err(Error::ContextMismatch(self.p, other.p))
        }
    }

    fn big_p(&self) -> BigInt {
        BigInt::from(self.p)
    }

    fn int_valuation(&self, n: &BigInt) -> i64 {
        let p = self.big_p();
        let mut v = 0;
        let mut m = n.clone();
        loop {
            let (quot, rem) = m.div_rem(&p);
            if !rem.is_zero() {
                return v;
            }
            m = quot;
            v += 1;
        }
    }

    pub fn valuation(&self, q: &Rational) -> Valuation {
        if q.is_zero() {
            return Valuation::Infinite;
        }
        Valuation::Finite(self.int_valuation(q.numer()) - self.int_valuation(q.denom()))
    }

    /// `|q|_p`: `Zero` for `q = 0`, else `Pow(-v(q))`.
    pub fn pnorm(&self, q: &Rational) -> PNormValue {
        match self.valuation(q) {
            Valuation::Infinite => PNormValue::Zero,
            Valuation::Finite(v) => PNormValue::Pow(-v),
        }
    }

    /// `p^e` as an exact rational.
    pub fn power(&self, e: i64) -> Rational {
        let base = self.big_p();
        let mag: BigInt = Pow::pow(&base, e.unsigned_abs());
        if e >= 0 {
            Rational::from_integer(mag)
        } else {
            Rational::new(BigInt::one(), mag)
        }
    }

    /// The real number a norm value denotes, as an exact rational.
    pub fn norm_to_rational(&self, a: PNormValue) -> Rational {
        match a {
            PNormValue::Zero => Rational::zero(),
            PNormValue::Pow(e) => self.power(e),
        }
    }

    /// Exact comparison of the real number `a` against a positive rational.
    pub fn norm_compare(&self, a: PNormValue, t: &Rational) -> Ordering {
        debug_assert!(t.is_positive(), "threshold must be positive");
        let e = match a {
            PNormValue::Zero => return Ordering::Less,
            PNormValue::Pow(e) => e,
        };
        let scale: BigInt = Pow::pow(&self.big_p(), e.unsigned_abs());
        if e >= 0 {
            (scale * t.denom()).cmp(t.numer())
        } else {
            t.denom().cmp(&(scale * t.numer()))
        }
    }

    /// Smallest exponent `e` with `p^e > t` for positive `t`.
    pub fn least_power_above(&self, t: &Rational) -> i64 {
        let mut e = 0i64;
        while self.norm_compare(PNormValue::Pow(e), t) == Ordering::Greater {
            e -= 1;
        }
        while self.norm_compare(PNormValue::Pow(e), t) != Ordering::Greater {
            e += 1;
        }
        e
    }

    /// Largest exponent `k` with `p^k < t` for positive `t`.
    pub fn greatest_power_below(&self, t: &Rational) -> i64 {
        let e = self.least_power_above(t);
        if self.norm_compare(PNormValue::Pow(e - 1), t) == Ordering::Equal {
            e - 2
        } else {
            e - 1
        }
    }

    pub fn scalar(&self, value: Rational) -> PadicScalar {
        PadicScalar { value, ctx: *self }
    }
}

impl fmt::Display for PrimeContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q_{}", self.p)
    }
}

impl PNormValue {
    pub fn one() -> Self {
        PNormValue::Pow(0)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, PNormValue::Zero)
    }

    pub fn exponent(&self) -> Option<i64> {
        match self {
            PNormValue::Zero => None,
            PNormValue::Pow(e) => Some(*e),
        }
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn recip(&self) -> Option<PNormValue> {
        self.exponent().map(|e| PNormValue::Pow(-e))
    }

    /// Multiply by `p^k`.
    pub fn scale_pow(&self, k: i64) -> PNormValue {
        match self {
            PNormValue::Zero => PNormValue::Zero,
            PNormValue::Pow(e) => PNormValue::Pow(e + k),
        }
    }

    /// CSV/text rendering: `0` or `p^e`.
    pub fn render(&self, ctx: &PrimeContext) -> String {
        match self {
            PNormValue::Zero => "0".to_string(),
            PNormValue::Pow(e) => format!("{}^{}", ctx.p(), e),
        }
    }
}

impl Mul for PNormValue {
    type Output = PNormValue;

    fn mul(self, rhs: PNormValue) -> PNormValue {
        match (self, rhs) {
            (PNormValue::Pow(a), PNormValue::Pow(b)) => PNormValue::Pow(a + b),
            _ => PNormValue::Zero,
        }
    }
}

impl Serialize for PNormValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(1))?;
        match self {
            PNormValue::Zero => map.serialize_entry("zero", &true)?,
            PNormValue::Pow(e) => map.serialize_entry("pow", e)?,
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for PNormValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct NormVisitor;

        impl<'de> Visitor<'de> for NormVisitor {
            type Value = PNormValue;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str(r#"{"zero":true} or {"pow":<integer>}"#)
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<PNormValue, A::Error> {
                let key: String = map
                    .next_key()?
                    .ok_or_else(|| de::Error::custom("empty norm object"))?;
                let value = match key.as_str() {
                    "zero" => {
                        let flag: bool = map.next_value()?;
                        if !flag {
                            return Err(de::Error::custom("`zero` must be true"));
                        }
                        PNormValue::Zero
                    }
                    "pow" => PNormValue::Pow(map.next_value()?),
                    other => return Err(de::Error::unknown_field(other, &["zero", "pow"])),
                };
                if map.next_key::<String>()?.is_some() {
                    return Err(de::Error::custom("norm object must have exactly one key"));
                }
                Ok(value)
            }
        }

        deserializer.deserialize_map(NormVisitor)
    }
}

impl PadicScalar {
    pub fn new(value: Rational, ctx: PrimeContext) -> Self {
        Self { value, ctx }
    }

    pub fn value(&self) -> &Rational {
        &self.value
    }

    pub fn context(&self) -> PrimeContext {
        self.ctx
    }

    pub fn valuation(&self) -> Valuation {
        self.ctx.valuation(&self.value)
    }

    pub fn pnorm(&self) -> PNormValue {
        self.ctx.pnorm(&self.value)
    }
}

/// Parse `"a"` or `"a/b"` (base 10, optional leading minus).
pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::BadRational(s.to_string());
    let parse_int = |t: &str| -> Result<BigInt> {
        let digits = t.strip_prefix('-').unwrap_or(t);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        t.parse::<BigInt>().map_err(|_| bad())
    };
    let s_trim = s.trim();
    match s_trim.split_once('/') {
        None => Ok(Rational::from_integer(parse_int(s_trim)?)),
        Some((n, d)) => {
            let n = parse_int(n)?;
            let d = parse_int(d)?;
            if d.is_zero() || d.is_negative() {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
    }
}

/// Canonical string form: `"a"` for integers, `"a/b"` otherwise.
pub fn format_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}
