//! Seeded generators for scalars, vectors and catalog operators.
//!
//! Nonzero scalars are `±u·p^v` with `u = a + b·p`, `1 <= a < p`, `0 <= b < p`.

use std::ops::RangeInclusive;

use num_traits::Zero;
use rand::Rng;

use crate::matrix::Matrix;
use crate::operator::Operator;
use crate::padic::{PrimeContext, Rational};
use crate::sequence::{Ambient, FinSuppVector, Functional};

pub const DEFAULT_VALUATIONS: RangeInclusive<i64> = -3..=3;

pub fn random_unit<R: Rng>(rng: &mut R, ctx: PrimeContext) -> Rational {
    let p = ctx.p() as i64;
    let a = rng.gen_range(1..p);
    let b = if rng.gen_bool(0.5) { 0 } else { rng.gen_range(0..p) };
    let u = Rational::from_integer((a + b * p).into());
    if rng.gen_bool(0.5) { -u } else { u }
}

pub fn random_nonzero<R: Rng>(rng: &mut R, ctx: PrimeContext, valuations: RangeInclusive<i64>) -> Rational {
    random_unit(rng, ctx) * ctx.power(rng.gen_range(valuations))
}

pub fn random_scalar<R: Rng>(rng: &mut R, ctx: PrimeContext, valuations: RangeInclusive<i64>, zero_prob: f64) -> Rational {
    if rng.gen_bool(zero_prob) {
        Rational::zero()
    } else {
        random_nonzero(rng, ctx, valuations)
    }
}

/// A random `n × n` matrix; about a third are upper triangular so that
/// their diagonal entries are rational eigenvalues.
pub fn random_matrix<R: Rng>(rng: &mut R, ctx: PrimeContext, n: usize, valuations: RangeInclusive<i64>) -> Matrix {
    let triangular = rng.gen_bool(1.0 / 3.0);
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if triangular && j < i {
                        Rational::zero()
                    } else {
                        random_scalar(rng, ctx, valuations.clone(), 0.25)
                    }
                })
                .collect()
        })
        .collect();
    Matrix::new(ctx, rows).expect("square")
}

pub fn random_diagonal<R: Rng>(rng: &mut R, ctx: PrimeContext, valuations: RangeInclusive<i64>) -> Operator {
    let len = rng.gen_range(0..=3);
    let prefix = (0..len).map(|_| random_scalar(rng, ctx, valuations.clone(), 0.2)).collect();
    Operator::diagonal(ctx, prefix, random_scalar(rng, ctx, valuations, 0.1))
}

/// `β·S + α` or `β·T + α` with `β ≠ 0`.
pub fn random_shift_form<R: Rng>(rng: &mut R, ctx: PrimeContext, valuations: RangeInclusive<i64>) -> Operator {
    let base = if rng.gen_bool(0.5) { Operator::right_shift(ctx) } else { Operator::left_shift(ctx) };
    let beta = random_nonzero(rng, ctx, valuations.clone());
    let alpha = random_scalar(rng, ctx, valuations, 0.3);
    base.affine(&alpha, &beta).expect("nonzero beta")
}

/// A random finite matrix (`n <= max_n`), diagonal, or shift-family operator.
pub fn random_operator<R: Rng>(rng: &mut R, ctx: PrimeContext, max_n: usize, valuations: RangeInclusive<i64>) -> Operator {
    match rng.gen_range(0..4) {
        0 | 1 => {
            let n = rng.gen_range(1..=max_n);
            Operator::matrix(random_matrix(rng, ctx, n, valuations))
        }
        2 => random_diagonal(rng, ctx, valuations),
        _ => random_shift_form(rng, ctx, valuations),
    }
}

pub fn random_vector<R: Rng>(rng: &mut R, ctx: PrimeContext, ambient: Ambient, len: usize, valuations: RangeInclusive<i64>) -> FinSuppVector {
    let len = match ambient {
        Ambient::Kn(n) => len.min(n),
        Ambient::C0 => len,
    };
    FinSuppVector::from_entries(ctx, ambient, (0..len).map(|i| (i, random_scalar(rng, ctx, valuations.clone(), 0.3))))
        .expect("indices in range")
}

pub fn random_functional<R: Rng>(rng: &mut R, ctx: PrimeContext, len: usize, valuations: RangeInclusive<i64>) -> Functional {
    Functional::from_entries(ctx, (0..len).map(|i| (i, random_scalar(rng, ctx, valuations.clone(), 0.3)))).expect("finite")
}
