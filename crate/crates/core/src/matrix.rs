//! Dense exact matrices over `Q` with p-adic pivoting.
//!
//! Determinants use Bareiss elimination on the row-scaled integer matrix and
//! inverses use the fraction-free Gauss–Jordan variant; in both the pivot is
//! the candidate of smallest p-adic valuation, ties going to the lowest row.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::padic::{PNormValue, PrimeContext, Rational};
use crate::sequence::{Ambient, FinSuppVector};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    n: usize,
    rows: Vec<Vec<Rational>>,
    ctx: PrimeContext,
}

impl Matrix {
    pub fn new(ctx: PrimeContext, rows: Vec<Vec<Rational>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Shape("matrix must have at least one row".into()));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::Shape(format!("row {bad} has length {} in a {n}x{n} matrix", rows[bad].len())));
        }
        Ok(Self { n, rows, ctx })
    }

    pub fn from_fn(ctx: PrimeContext, n: usize, f: impl Fn(usize, usize) -> Rational) -> Self {
        let rows = (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect();
        Self { n, rows, ctx }
    }

    pub fn identity(ctx: PrimeContext, n: usize) -> Self {
        Self::from_fn(ctx, n, |i, j| if i == j { Rational::one() } else { Rational::zero() })
    }

    pub fn zero(ctx: PrimeContext, n: usize) -> Self {
        Self::from_fn(ctx, n, |_, _| Rational::zero())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn context(&self) -> PrimeContext {
        self.ctx
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.rows[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Rational) {
        self.rows[i][j] = value;
    }

    /// Max entry norm, which is the operator norm for the sup norm on `Q_p^n`.
    pub fn max_entry_norm(&self) -> PNormValue {
        self.rows
            .iter()
            .flatten()
            .map(|q| self.ctx.pnorm(q))
            .max()
            .unwrap_or(PNormValue::Zero)
    }

    pub fn column_norm(&self, j: usize) -> PNormValue {
        (0..self.n).map(|i| self.ctx.pnorm(&self.rows[i][j])).max().unwrap_or(PNormValue::Zero)
    }

    pub fn column(&self, j: usize) -> FinSuppVector {
        FinSuppVector::from_entries(self.ctx, Ambient::Kn(self.n), (0..self.n).map(|i| (i, self.rows[i][j].clone())))
            .expect("indices below n")
    }

    fn ensure_same_shape(&self, other: &Matrix) -> Result<()> {
        self.ctx.ensure_same(&other.ctx)?;
        if self.n != other.n {
            return Err(Error::Shape(format!("{0}x{0} vs {1}x{1}", self.n, other.n)));
        }
        Ok(())
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        self.ensure_same_shape(other)?;
        Ok(Self::from_fn(self.ctx, self.n, |i, j| {
            (0..self.n)
                .map(|k| &self.rows[i][k] * &other.rows[k][j])
                .fold(Rational::zero(), |a, b| a + b)
        }))
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.ensure_same_shape(other)?;
        Ok(Self::from_fn(self.ctx, self.n, |i, j| &self.rows[i][j] + &other.rows[i][j]))
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.ensure_same_shape(other)?;
        Ok(Self::from_fn(self.ctx, self.n, |i, j| &self.rows[i][j] - &other.rows[i][j]))
    }

    pub fn scale(&self, c: &Rational) -> Matrix {
        Self::from_fn(self.ctx, self.n, |i, j| &self.rows[i][j] * c)
    }

    pub fn transpose(&self) -> Matrix {
        Self::from_fn(self.ctx, self.n, |i, j| self.rows[j][i].clone())
    }

    /// `M - λI`.
    pub fn shift_diagonal(&self, lambda: &Rational) -> Matrix {
        let mut m = self.clone();
        for i in 0..self.n {
            m.rows[i][i] -= lambda;
        }
        m
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.ctx, self.n)
    }

    pub fn apply(&self, x: &FinSuppVector) -> Result<FinSuppVector> {
        self.ctx.ensure_same(&x.context())?;
        Ambient::Kn(self.n).ensure_same(&x.ambient())?;
        let entries = (0..self.n).map(|i| {
            let s = x
                .entries()
                .iter()
                .map(|(j, v)| &self.rows[i][*j] * v)
                .fold(Rational::zero(), |a, b| a + b);
            (i, s)
        });
        FinSuppVector::from_entries(self.ctx, Ambient::Kn(self.n), entries)
    }

    /// Rows multiplied by the lcm of their denominators, plus those factors.
    fn integer_rows(&self) -> (Vec<Vec<BigInt>>, Vec<BigInt>) {
        let mut scales = Vec::with_capacity(self.n);
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let l = row.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
                let ints = row.iter().map(|q| (q * Rational::from_integer(l.clone())).to_integer()).collect();
                scales.push(l);
                ints
            })
            .collect();
        (rows, scales)
    }

    fn pivot_row(&self, a: &[Vec<BigInt>], col: usize, rows: impl Iterator<Item = usize>) -> Option<usize> {
        rows.filter(|&r| !a[r][col].is_zero())
            .min_by_key(|&r| (self.ctx.valuation(&Rational::from_integer(a[r][col].clone())), r))
    }

    /// Exact determinant by Bareiss elimination.
    pub fn determinant(&self) -> Rational {
        let (mut a, scales) = self.integer_rows();
        let n = self.n;
        let mut prev = BigInt::one();
        let mut negate = false;
        for k in 0..n {
            let Some(r) = self.pivot_row(&a, k, k..n) else {
                return Rational::zero();
            };
            if r != k {
                a.swap(r, k);
                negate = !negate;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                    a[i][j] = exact_div(&num, &prev);
                }
                a[i][k] = BigInt::zero();
            }
            prev = a[k][k].clone();
        }
        let mut det = Rational::from_integer(a[n - 1][n - 1].clone());
        if negate {
            det = -det;
        }
        let scale = scales.into_iter().fold(BigInt::one(), |acc, s| acc * s);
        det / Rational::from_integer(scale)
    }

    /// Exact inverse by fraction-free Gauss–Jordan elimination on `[N | I]`,
    /// where `N` is the row-scaled integer form of `self`.
    pub fn inverse(&self) -> Result<Matrix> {
        let (int_rows, scales) = self.integer_rows();
        let n = self.n;
        let mut a: Vec<Vec<BigInt>> = int_rows
            .into_iter()
            .enumerate()
            .map(|(i, mut row)| {
                row.extend((0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }));
                row
            })
            .collect();
        let mut prev = BigInt::one();
        for k in 0..n {
            let r = self.pivot_row(&a, k, k..n).ok_or(Error::Singular)?;
            a.swap(r, k);
            for i in (0..n).filter(|&i| i != k) {
                for j in (0..2 * n).filter(|&j| j != k) {
                    let num = &a[k][k] * &a[i][j] - &a[i][k] * &a[k][j];
                    a[i][j] = exact_div(&num, &prev);
                }
                a[i][k] = BigInt::zero();
            }
            prev = a[k][k].clone();
        }
        let d = prev;
        // N^{-1} = R / d, and M^{-1} = N^{-1} diag(scales).
        let inv = Self::from_fn(self.ctx, n, |i, j| {
            Rational::new(a[i][n + j].clone() * &scales[j], d.clone())
        });
        debug_assert!(inv.mul(self).map(|m| m.is_identity()).unwrap_or(false));
        Ok(inv)
    }

    /// A nonzero `v` with `Mv = 0`, or `None` if `M` is nonsingular.
    pub fn kernel_vector(&self) -> Option<FinSuppVector> {
        let n = self.n;
        let mut a = self.rows.clone();
        let mut pivot_cols = Vec::new();
        let mut row = 0;
        for col in 0..n {
            let candidate = (row..n)
                .filter(|&r| !a[r][col].is_zero())
                .min_by_key(|&r| (self.ctx.valuation(&a[r][col]), r));
            let Some(r) = candidate else { continue };
            a.swap(row, r);
            let inv = a[row][col].recip();
            for j in 0..n {
                a[row][j] = &a[row][j] * &inv;
            }
            for i in (0..n).filter(|&i| i != row) {
                if a[i][col].is_zero() {
                    continue;
                }
                let f = a[i][col].clone();
                for j in 0..n {
                    let delta = &f * &a[row][j];
                    a[i][j] -= delta;
                }
            }
            pivot_cols.push(col);
            row += 1;
            if row == n {
                break;
            }
        }
        let free = (0..n).find(|c| !pivot_cols.contains(c))?;
        let mut entries = vec![(free, Rational::one())];
        for (r, &pc) in pivot_cols.iter().enumerate() {
            entries.push((pc, -a[r][free].clone()));
        }
        let v = FinSuppVector::from_entries(self.ctx, Ambient::Kn(n), entries).ok()?;
        debug_assert!(self.apply(&v).map(|w| w.is_zero()).unwrap_or(false));
        Some(v)
    }

    /// Index of the first column of maximal norm.
    pub fn max_norm_column(&self) -> usize {
        let best = self.max_entry_norm();
        (0..self.n).find(|&j| self.column_norm(j) == best).unwrap_or(0)
    }
}

fn exact_div(num: &BigInt, den: &BigInt) -> BigInt {
    let (q, r) = num.div_rem(den);
    assert!(r.is_zero(), "fraction-free elimination produced a non-exact quotient");
    q
}
