//! Finitely supported vectors in `c_0(Q_p)` and `Q_p^n`, coordinate
//! functionals, and vectors with an exactly summable geometric tail.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::padic::{PNormValue, PrimeContext, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ambient {
    C0,
    Kn(usize),
}

impl Ambient {
    pub fn ensure_same(&self, other: &Ambient) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::AmbientMismatch(self.to_string(), other.to_string()))
        }
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        match self {
            Ambient::Kn(dim) if index >= *dim => Err(Error::IndexOutOfRange { index, dim: *dim }),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Ambient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ambient::C0 => write!(f, "c0"),
            Ambient::Kn(n) => write!(f, "K^{n}"),
        }
    }
}

/// A vector with finitely many nonzero coordinates. Zero coordinates are
/// never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinSuppVector {
    entries: BTreeMap<usize, Rational>,
    ctx: PrimeContext,
    ambient: Ambient,
}

impl FinSuppVector {
    pub fn zero(ctx: PrimeContext, ambient: Ambient) -> Self {
        Self { entries: BTreeMap::new(), ctx, ambient }
    }

    pub fn from_entries<I>(ctx: PrimeContext, ambient: Ambient, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, Rational)>,
    {
        let mut v = Self::zero(ctx, ambient);
        for (i, q) in entries {
            ambient.check_index(i)?;
            v.add_at(i, &q);
        }
        Ok(v)
    }

    pub fn basis(ctx: PrimeContext, ambient: Ambient, index: usize) -> Result<Self> {
        Self::from_entries(ctx, ambient, [(index, Rational::one())])
    }

    pub fn context(&self) -> PrimeContext {
        self.ctx
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    pub fn entries(&self) -> &BTreeMap<usize, Rational> {
        &self.entries
    }

    pub fn get(&self, index: usize) -> Rational {
        self.entries.get(&index).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// One past the largest stored index (0 for the zero vector).
    pub fn support_end(&self) -> usize {
        self.entries.keys().next_back().map_or(0, |i| i + 1)
    }

    /// Adds `q` to coordinate `index`, dropping the entry if it cancels.
    pub(crate) fn add_at(&mut self, index: usize, q: &Rational) {
        if q.is_zero() {
            return;
        }
        let remove = match self.entries.get_mut(&index) {
            Some(cur) => {
                *cur += q;
                cur.is_zero()
            }
            None => {
                self.entries.insert(index, q.clone());
                false
            }
        };
        if remove {
            self.entries.remove(&index);
        }
    }

    fn ensure_compatible(&self, other: &Self) -> Result<()> {
        self.ctx.ensure_same(&other.ctx)?;
        self.ambient.ensure_same(&other.ambient)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.ensure_compatible(other)?;
        let mut out = self.clone();
        for (i, q) in &other.entries {
            out.add_at(*i, q);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.ctx, self.ambient);
        }
        Self {
            entries: self.entries.iter().map(|(i, q)| (*i, q * c)).collect(),
            ctx: self.ctx,
            ambient: self.ambient,
        }
    }

    /// `||x|| = max_i |x_i|_p`.
    pub fn sup_norm(&self) -> PNormValue {
        self.entries
            .values()
            .map(|q| self.ctx.pnorm(q))
            .max()
            .unwrap_or(PNormValue::Zero)
    }

    /// A functional `φ` with `φ(x) = 1` and `||φ|| = ||x||^{-1}`, supported on
    /// the smallest index where `x` attains its norm.
    pub fn unit_functional(&self) -> Result<Functional> {
        let norm = self.sup_norm();
        let (index, value) = self
            .entries
            .iter()
            .find(|(_, q)| self.ctx.pnorm(q) == norm)
            .ok_or(Error::ZeroVector)?;
        Functional::from_entries(self.ctx, [(*index, value.recip())])
    }

    /// Returns `(z, c)` with `x = c z`, `|c| = ||x||` and `||z|| = 1`.
    pub fn normalize(&self) -> Result<(FinSuppVector, Rational)> {
        let e = self.sup_norm().exponent().ok_or(Error::ZeroVector)?;
        let c = self.ctx.power(-e);
        Ok((self.scale(&c.recip()), c))
    }
}

/// A continuous linear functional with finitely many nonzero coordinates,
/// `φ(y) = Σ c_i y_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Functional {
    coefficients: BTreeMap<usize, Rational>,
    ctx: PrimeContext,
}

impl Functional {
    pub fn from_entries<I>(ctx: PrimeContext, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, Rational)>,
    {
        let mut coefficients = BTreeMap::new();
        for (i, q) in entries {
            if !q.is_zero() {
                coefficients.insert(i, q);
            }
        }
        Ok(Self { coefficients, ctx })
    }

    pub fn coordinate(ctx: PrimeContext, index: usize, coefficient: Rational) -> Self {
        let mut coefficients = BTreeMap::new();
        if !coefficient.is_zero() {
            coefficients.insert(index, coefficient);
        }
        Self { coefficients, ctx }
    }

    pub fn context(&self) -> PrimeContext {
        self.ctx
    }

    pub fn coefficients(&self) -> &BTreeMap<usize, Rational> {
        &self.coefficients
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn support_end(&self) -> usize {
        self.coefficients.keys().next_back().map_or(0, |i| i + 1)
    }

    pub fn norm(&self) -> PNormValue {
        self.coefficients
            .values()
            .map(|q| self.ctx.pnorm(q))
            .max()
            .unwrap_or(PNormValue::Zero)
    }

    pub fn apply(&self, y: &FinSuppVector) -> Result<Rational> {
        self.ctx.ensure_same(&y.ctx)?;
        let mut acc = Rational::zero();
        for (i, c) in &self.coefficients {
            if let Some(v) = y.entries.get(i) {
                acc += c * v;
            }
        }
        Ok(acc)
    }

    pub fn apply_tailed(&self, y: &TailedVector) -> Result<Rational> {
        self.ctx.ensure_same(&y.head.ctx)?;
        Ok(self
            .coefficients
            .iter()
            .map(|(i, c)| c * y.get(*i))
            .fold(Rational::zero(), |a, b| a + b))
    }
}

/// Coordinates `x_{start+k} = first * ratio^k` for all `k >= 0`, with
/// `0 < |ratio| < 1` so the sequence lies in `c_0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeometricTail {
    pub start: usize,
    pub first: Rational,
    pub ratio: Rational,
}

impl GeometricTail {
    pub fn entry(&self, index: usize) -> Rational {
        if index < self.start {
            return Rational::zero();
        }
        let k = (index - self.start) as i32;
        &self.first * num_traits::pow::Pow::pow(&self.ratio, k)
    }
}

/// A finitely supported head plus an optional geometric tail. This is the
/// exact form of every vector produced by the shift-family inverses and
/// kernels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TailedVector {
    head: FinSuppVector,
    tail: Option<GeometricTail>,
}

impl From<FinSuppVector> for TailedVector {
    fn from(head: FinSuppVector) -> Self {
        Self { head, tail: None }
    }
}

impl TailedVector {
    /// Builds `head + tail`; head entries at or beyond `start` are folded in
    /// by moving the tail start past them.
    pub fn with_tail(head: FinSuppVector, start: usize, first: Rational, ratio: Rational) -> Result<Self> {
        let ctx = head.ctx;
        if head.ambient != Ambient::C0 {
            return Err(Error::InfiniteSupport(format!("geometric tail in {}", head.ambient)));
        }
        if ratio.is_zero() || first.is_zero() {
            let mut head = head;
            head.add_at(start, &first);
            return Ok(Self { head, tail: None });
        }
        if ctx.pnorm(&ratio) >= PNormValue::one() {
            return Err(Error::InfiniteSupport(format!(
                "geometric ratio {ratio} does not decay p-adically"
            )));
        }
        let mut v = Self { head, tail: Some(GeometricTail { start, first, ratio }) };
        let end = v.head.support_end();
        if end > start {
            v.expand_to(end);
        }
        Ok(v)
    }

    pub fn head(&self) -> &FinSuppVector {
        &self.head
    }

    pub fn tail(&self) -> Option<&GeometricTail> {
        self.tail.as_ref()
    }

    pub fn context(&self) -> PrimeContext {
        self.head.ctx
    }

    pub fn ambient(&self) -> Ambient {
        self.head.ambient
    }

    pub fn is_finite(&self) -> bool {
        self.tail.is_none()
    }

    pub fn is_zero(&self) -> bool {
        self.tail.is_none() && self.head.is_zero()
    }

    pub fn get(&self, index: usize) -> Rational {
        match &self.tail {
            Some(t) if index >= t.start => t.entry(index) + self.head.get(index),
            _ => self.head.get(index),
        }
    }

    /// `max(||head||, |first|)`; the tail never exceeds its first term.
    pub fn sup_norm(&self) -> PNormValue {
        let tail = self
            .tail
            .as_ref()
            .map_or(PNormValue::Zero, |t| self.head.ctx.pnorm(&t.first));
        self.head.sup_norm().max(tail)
    }

    pub fn into_finite(self) -> Result<FinSuppVector> {
        match self.tail {
            None => Ok(self.head),
            Some(t) => Err(Error::InfiniteSupport(format!(
                "geometric tail from index {} with ratio {}",
                t.start, t.ratio
            ))),
        }
    }

    /// Moves tail terms below `new_start` into the head.
    pub fn expand_to(&mut self, new_start: usize) {
        if let Some(t) = &mut self.tail {
            while t.start < new_start {
                self.head.add_at(t.start, &t.first);
                t.first = &t.first * &t.ratio;
                t.start += 1;
            }
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return FinSuppVector::zero(self.head.ctx, self.head.ambient).into();
        }
        Self {
            head: self.head.scale(c),
            tail: self.tail.as_ref().map(|t| GeometricTail {
                start: t.start,
                first: &t.first * c,
                ratio: t.ratio.clone(),
            }),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.head.ensure_compatible(&other.head)?;
        let (mut a, mut b) = (self.clone(), other.clone());
        let tail = match (&a.tail, &b.tail) {
            (None, None) => None,
            (Some(_), None) | (None, Some(_)) => {
                let t = a.tail.take().or_else(|| b.tail.take()).expect("one tail");
                Some(t)
            }
            (Some(ta), Some(tb)) => {
                if ta.ratio != tb.ratio {
                    return Err(Error::RatioMismatch);
                }
                let s = ta.start.max(tb.start);
                a.expand_to(s);
                b.expand_to(s);
                let (ta, tb) = (a.tail.take().unwrap(), b.tail.take().unwrap());
                Some(GeometricTail { start: s, first: ta.first + tb.first, ratio: ta.ratio })
            }
        };
        let head = a.head.add(&b.head)?;
        match tail {
            Some(t) => Self::with_tail(head, t.start, t.first, t.ratio),
            None => Ok(head.into()),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-Rational::one()))
    }

    /// `(Sx)_0 = 0`, `(Sx)_{i+1} = x_i`.
    pub fn right_shift(&self) -> Self {
        let head = FinSuppVector {
            entries: self.head.entries.iter().map(|(i, q)| (i + 1, q.clone())).collect(),
            ctx: self.head.ctx,
            ambient: self.head.ambient,
        };
        Self {
            head,
            tail: self.tail.as_ref().map(|t| GeometricTail {
                start: t.start + 1,
                first: t.first.clone(),
                ratio: t.ratio.clone(),
            }),
        }
    }

    /// `(Tx)_i = x_{i+1}`.
    pub fn left_shift(&self) -> Self {
        let mut v = self.clone();
        v.expand_to(1);
        let head = FinSuppVector {
            entries: v
                .head
                .entries
                .iter()
                .filter(|(i, _)| **i > 0)
                .map(|(i, q)| (i - 1, q.clone()))
                .collect(),
            ctx: v.head.ctx,
            ambient: v.head.ambient,
        };
        Self {
            head,
            tail: v.tail.map(|t| GeometricTail { start: t.start - 1, first: t.first, ratio: t.ratio }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::{int, rat};

    fn c5() -> PrimeContext {
        PrimeContext::new(5).unwrap()
    }

    fn vec5(entries: &[(usize, Rational)]) -> FinSuppVector {
        FinSuppVector::from_entries(c5(), Ambient::C0, entries.iter().cloned()).unwrap()
    }

    #[test]
    fn sup_norm_examples() {
        assert_eq!(vec5(&[]).sup_norm(), PNormValue::Zero);
        assert_eq!(vec5(&[(0, int(1)), (3, rat(1, 5))]).sup_norm(), PNormValue::Pow(1));
        assert_eq!(vec5(&[(2, int(10))]).sup_norm(), PNormValue::Pow(-1));
    }

    #[test]
    fn zero_entries_are_not_stored() {
        let v = vec5(&[(0, int(0)), (1, int(2)), (1, int(-2))]);
        assert!(v.is_zero());
        assert!(FinSuppVector::from_entries(c5(), Ambient::Kn(2), [(2, int(1))]).is_err());
    }

    #[test]
    fn unit_functional_examples() {
        let phi = vec5(&[(0, int(1))]).unit_functional().unwrap();
        assert_eq!(phi.coefficients().get(&0), Some(&int(1)));

        let x = vec5(&[(0, int(5)), (1, int(1))]);
        let phi = x.unit_functional().unwrap();
        assert_eq!(phi.coefficients().len(), 1);
        assert_eq!(phi.coefficients().get(&1), Some(&int(1)));

        let x = vec5(&[(0, rat(1, 5)), (2, rat(1, 5))]);
        let phi = x.unit_functional().unwrap();
        assert_eq!(phi.coefficients().get(&0), Some(&int(5)));
        assert_eq!(phi.apply(&x).unwrap(), int(1));

        assert_eq!(vec5(&[]).unit_functional(), Err(Error::ZeroVector));
    }

    #[test]
    fn normalize_examples() {
        let (z, c) = vec5(&[(0, int(1))]).normalize().unwrap();
        assert_eq!((z, c), (vec5(&[(0, int(1))]), int(1)));

        let (z, c) = vec5(&[(1, rat(1, 5))]).normalize().unwrap();
        assert_eq!(c, rat(1, 5));
        assert_eq!(z, vec5(&[(1, int(1))]));

        let x = vec5(&[(0, int(2)), (1, int(50))]);
        let (z, c) = x.normalize().unwrap();
        assert_eq!(c, int(1));
        assert_eq!(z, x);
        assert_eq!(vec5(&[]).normalize(), Err(Error::ZeroVector));
    }

    #[test]
    fn apply_functional_examples() {
        let ctx = c5();
        let phi = Functional::coordinate(ctx, 0, int(1));
        assert_eq!(phi.apply(&vec5(&[(0, int(7))])).unwrap(), int(7));
        let phi = Functional::coordinate(ctx, 1, int(5));
        assert_eq!(phi.apply(&vec5(&[(1, rat(1, 5))])).unwrap(), int(1));
        let phi = Functional::coordinate(ctx, 0, int(1));
        assert_eq!(phi.apply(&vec5(&[(1, int(3))])).unwrap(), int(0));

        let other = FinSuppVector::basis(PrimeContext::new(3).unwrap(), Ambient::C0, 0).unwrap();
        assert_eq!(phi.apply(&other), Err(Error::ContextMismatch(5, 3)));
    }

    #[test]
    fn tailed_norm_and_entries() {
        let ctx = c5();
        let head = FinSuppVector::from_entries(ctx, Ambient::C0, [(0, int(7))]).unwrap();
        let v = TailedVector::with_tail(head, 2, rat(1, 5), int(5)).unwrap();
        assert_eq!(v.sup_norm(), PNormValue::Pow(1));
        assert_eq!(v.get(4), int(5));
        assert!(TailedVector::with_tail(vec5(&[]), 0, int(1), int(1)).is_err());
    }

    #[test]
    fn tailed_shifts_and_cancellation() {
        // v = (1, 5, 25, ...) is fixed by T up to the factor 5.
        let v = TailedVector::with_tail(vec5(&[]), 0, int(1), int(5)).unwrap();
        let tv = v.left_shift();
        assert!(tv.sub(&v.scale(&int(5))).unwrap().is_zero());
        let sv = v.right_shift();
        assert_eq!(sv.get(0), int(0));
        assert_eq!(sv.get(3), int(25));
        // mismatched ratios are rejected
        let w = TailedVector::with_tail(vec5(&[]), 0, int(1), int(10)).unwrap();
        assert_eq!(v.add(&w), Err(Error::RatioMismatch));
    }

    proptest::proptest! {
        #[test]
        fn normalize_and_functional_laws(
            raw in proptest::collection::vec((0usize..8, -50i64..50, 1i64..50, -3i64..=3), 1..6)
        ) {
            let ctx = c5();
            let x = FinSuppVector::from_entries(
                ctx,
                Ambient::C0,
                raw.iter().map(|(i, n, d, s)| (*i, rat(*n, *d) * ctx.power(*s))),
            ).unwrap();
            proptest::prop_assume!(!x.is_zero());
            let phi = x.unit_functional().unwrap();
            proptest::prop_assert_eq!(phi.apply(&x).unwrap(), int(1));
            proptest::prop_assert_eq!(Some(phi.norm()), x.sup_norm().recip());
            let (z, c) = x.normalize().unwrap();
            proptest::prop_assert_eq!(z.sup_norm(), PNormValue::one());
            proptest::prop_assert_eq!(ctx.pnorm(&c), x.sup_norm());
            proptest::prop_assert_eq!(z.scale(&c), x.clone());
            // |φ(y)| <= ||φ|| ||y||
            let y = x.scale(&int(3)).add(&FinSuppVector::basis(ctx, Ambient::C0, 9).unwrap()).unwrap();
            proptest::prop_assert!(ctx.pnorm(&phi.apply(&y).unwrap()) <= phi.norm() * y.sup_norm());
        }
    }
}
