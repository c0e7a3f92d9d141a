//! One-sided invertibility, minimal one-sided inverse norms, canonical
//! one-sided inverses and the perturbed inverse `D = C_l (I + C C_l)^{-1}`.
//!
//! Closed forms by family (write `A = β(S - ν)` or `β(T - ν)`):
//!
//! | family | left inverse | right inverse |
//! |--------|--------------|---------------|
//! | `S - ν` | always, norm `1/max(1,|ν|)` | iff `|ν| > 1` |
//! | `T - ν` | iff `|ν| >= 1` | always, norm `1/max(1,|ν|)` |
//!
//! Every existing one-sided inverse of a shift-family operator has minimal
//! norm exactly `1/||A||`, the universal lower bound.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::operator::{Operator, OperatorExpr, ShiftForm, ShiftKind};
use crate::padic::{PNormValue, PrimeContext, Rational};
use crate::sequence::{Ambient, FinSuppVector, Functional, TailedVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
    TwoSided,
}

impl Side {
    pub const ALL: [Side; 3] = [Side::Left, Side::Right, Side::TwoSided];
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::TwoSided => "two_sided",
        })
    }
}

/// A bounded functional vanishing on the range of the operator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Annihilator {
    Functional(Functional),
    /// `ψ(y) = Σ_j ratio^j y_j` with `|ratio| <= 1`.
    Geometric { ratio: Rational },
}

impl Annihilator {
    pub fn eval(&self, y: &TailedVector) -> Result<Rational> {
        match self {
            Annihilator::Functional(phi) => phi.apply_tailed(y),
            Annihilator::Geometric { ratio } => {
                let mut acc = Rational::zero();
                for (j, v) in y.head().entries() {
                    acc += num_traits::pow::Pow::pow(ratio, *j as u32) * v;
                }
                if let Some(t) = y.tail() {
                    // Σ_k ρ^{s+k} f r^k = f ρ^s / (1 - ρ r), valid because |ρ r| < 1.
                    let rho_s: Rational = num_traits::pow::Pow::pow(ratio, t.start as u32);
                    acc += &t.first * rho_s / (Rational::one() - ratio * &t.ratio);
                }
                Ok(acc)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CanonicalInverse {
    /// Entrywise reciprocals of an invertible diagonal.
    Diagonal { prefix: Vec<Rational>, tail: Rational },
    /// The exact recursion inverting `β(S - ν)` or `β(T - ν)` on `side`.
    Shift { form: ShiftForm, side: Side },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Certificate {
    ExactInverse(Matrix),
    KernelVector(TailedVector),
    NonSurjectivity { missed: FinSuppVector, annihilator: Annihilator },
    CanonicalInverse(CanonicalInverse),
    /// `||Ax|| >= gamma ||x||` for every `x`, with equality for shift families.
    LowerBoundIsometry { gamma: PNormValue },
}

impl Certificate {
    pub fn kind(&self) -> &'static str {
        match self {
            Certificate::ExactInverse(_) => "exact_inverse",
            Certificate::KernelVector(_) => "kernel_vector",
            Certificate::NonSurjectivity { .. } => "non_surjectivity",
            Certificate::CanonicalInverse(_) => "canonical_inverse",
            Certificate::LowerBoundIsometry { .. } => "lower_bound_isometry",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub side: Side,
    pub invertible: bool,
    /// Infimum (attained) of the norms of all inverses on `side`;
    /// `None` stands for `+∞`.
    pub min_inverse_norm: Option<PNormValue>,
    pub certificate: Certificate,
}

impl Verdict {
    fn invertible(side: Side, norm: PNormValue, certificate: Certificate) -> Self {
        Self { side, invertible: true, min_inverse_norm: Some(norm), certificate }
    }

    fn singular(side: Side, certificate: Certificate) -> Self {
        Self { side, invertible: false, min_inverse_norm: None, certificate }
    }
}

enum Family<'a> {
    Matrix(&'a Matrix),
    Diagonal(&'a [Rational], &'a Rational),
    Shift(ShiftForm),
}

fn classify(expr: &OperatorExpr) -> Result<Family<'_>> {
    match expr {
        OperatorExpr::Matrix(m) => Ok(Family::Matrix(m)),
        OperatorExpr::Diagonal { prefix, tail } => Ok(Family::Diagonal(prefix, tail)),
        OperatorExpr::RankOne { .. } => Err(Error::UnsupportedFamily(
            "rank-one update of an infinite-dimensional operator".into(),
        )),
        other => crate::operator::shift_form_of(other)
            .map(Family::Shift)
            .ok_or_else(|| Error::UnsupportedFamily(format!("{other:?}"))),
    }
}

/// Decides invertibility of `op` on `side` and computes the minimal norm of
/// an inverse on that side.
pub fn decide(op: &Operator, side: Side) -> Result<Verdict> {
    let normalized = op.normalized();
    let ctx = op.context();
    match classify(normalized.expr())? {
        Family::Matrix(m) => Ok(decide_matrix(m, side)),
        Family::Diagonal(prefix, tail) => Ok(decide_diagonal(ctx, prefix, tail, side)),
        Family::Shift(form) => Ok(decide_shift(ctx, form, side)),
    }
}

fn decide_matrix(m: &Matrix, side: Side) -> Verdict {
    let ctx = m.context();
    // BA = I is solved through the transpose, AC = I directly.
    let left = || m.transpose().inverse().map(|b| b.transpose());
    let right = || m.inverse();
    let inverse = match side {
        Side::Left => left(),
        Side::Right => right(),
        Side::TwoSided => left().and_then(|b| {
            let c = right()?;
            assert_eq!(b, c, "left and right inverses of a square matrix differ");
            Ok(b)
        }),
    };
    match inverse {
        Ok(inv) => Verdict::invertible(side, inv.max_entry_norm(), Certificate::ExactInverse(inv)),
        Err(_) => match side {
            Side::Right => {
                let coeffs = m.transpose().kernel_vector().expect("singular matrix has a left kernel");
                let missed_index = *coeffs.entries().keys().next().expect("nonzero kernel vector");
                let psi = Functional::from_entries(ctx, coeffs.entries().clone()).expect("finite functional");
                Verdict::singular(
                    side,
                    Certificate::NonSurjectivity {
                        missed: FinSuppVector::basis(ctx, Ambient::Kn(m.n()), missed_index).expect("index < n"),
                        annihilator: Annihilator::Functional(psi),
                    },
                )
            }
            _ => {
                let v = m.kernel_vector().expect("singular matrix has a kernel");
                Verdict::singular(side, Certificate::KernelVector(v.into()))
            }
        },
    }
}

fn decide_diagonal(ctx: PrimeContext, prefix: &[Rational], tail: &Rational, side: Side) -> Verdict {
    let zero_at = prefix
        .iter()
        .position(|d| d.is_zero())
        .or_else(|| tail.is_zero().then_some(prefix.len()));
    if let Some(i) = zero_at {
        let e = FinSuppVector::basis(ctx, Ambient::C0, i).expect("c0 index");
        let cert = match side {
            Side::Right => Certificate::NonSurjectivity {
                missed: e,
                annihilator: Annihilator::Functional(Functional::coordinate(ctx, i, Rational::one())),
            },
            _ => Certificate::KernelVector(e.into()),
        };
        return Verdict::singular(side, cert);
    }
    let smallest = prefix.iter().chain(std::iter::once(tail)).map(|d| ctx.pnorm(d)).min().expect("tail present");
    let inv = CanonicalInverse::Diagonal {
        prefix: prefix.iter().map(|d| d.recip()).collect(),
        tail: tail.recip(),
    };
    Verdict::invertible(side, smallest.recip().expect("nonzero entries"), Certificate::CanonicalInverse(inv))
}

fn shift_invertible(kind: ShiftKind, center_norm: PNormValue, side: Side) -> bool {
    let one = PNormValue::one();
    match (kind, side) {
        (ShiftKind::Right, Side::Left) => true,
        (ShiftKind::Right, _) => center_norm > one,
        (ShiftKind::Left, Side::Right) => true,
        (ShiftKind::Left, _) => center_norm >= one,
    }
}

fn decide_shift(ctx: PrimeContext, form: ShiftForm, side: Side) -> Verdict {
    let nu = form.center();
    let nu_norm = ctx.pnorm(&nu);
    let op_norm = ctx.pnorm(&form.beta) * nu_norm.max(PNormValue::one());
    if shift_invertible(form.kind, nu_norm, side) {
        let min_norm = op_norm.recip().expect("shift family is nonzero");
        let cert = if side == Side::Left && !shift_invertible(form.kind, nu_norm, Side::Right) {
            Certificate::LowerBoundIsometry { gamma: op_norm }
        } else {
            Certificate::CanonicalInverse(CanonicalInverse::Shift { form, side })
        };
        return Verdict::invertible(side, min_norm, cert);
    }
    let cert = match form.kind {
        // range of S - ν lies in ker ψ with ψ(y) = Σ ν^j y_j and ψ(e_0) = 1
        ShiftKind::Right => Certificate::NonSurjectivity {
            missed: FinSuppVector::basis(ctx, Ambient::C0, 0).expect("c0"),
            annihilator: Annihilator::Geometric { ratio: nu },
        },
        // (1, ν, ν², ...) is an exact eigenvector of T for |ν| < 1
        ShiftKind::Left => {
            let zero = FinSuppVector::zero(ctx, Ambient::C0);
            let v = TailedVector::with_tail(zero, 0, Rational::one(), nu).expect("|ν| < 1");
            Certificate::KernelVector(v)
        }
    };
    Verdict::singular(side, cert)
}

/// `(1, ν, …, ν^m, 0, …)`: `||(T - ν)x|| / ||x|| = |ν|^{m+1}`.
pub fn truncated_eigenvector(ctx: PrimeContext, nu: &Rational, m: usize) -> FinSuppVector {
    let mut power = Rational::one();
    let mut entries = Vec::with_capacity(m + 1);
    for i in 0..=m {
        entries.push((i, power.clone()));
        power *= nu;
    }
    FinSuppVector::from_entries(ctx, Ambient::C0, entries).expect("c0")
}

/// Exact lower modulus `inf ||Ax|| / ||x||`.
pub fn lower_modulus(op: &Operator) -> Result<PNormValue> {
    let normalized = op.normalized();
    let ctx = op.context();
    Ok(match classify(normalized.expr())? {
        Family::Matrix(m) => match m.inverse() {
            Ok(inv) => inv.max_entry_norm().recip().expect("inverse is nonzero"),
            Err(_) => PNormValue::Zero,
        },
        Family::Diagonal(prefix, tail) => prefix.iter().chain(std::iter::once(tail)).map(|d| ctx.pnorm(d)).min().expect("tail"),
        Family::Shift(form) => {
            let nu_norm = ctx.pnorm(&form.center());
            if shift_invertible(form.kind, nu_norm, Side::Left) {
                ctx.pnorm(&form.beta) * nu_norm.max(PNormValue::one())
            } else {
                PNormValue::Zero
            }
        }
    })
}

/// Applies the canonical minimal-norm inverse of `op` on `side` to `y`.
pub fn canonical_inverse_apply(op: &Operator, side: Side, y: &FinSuppVector) -> Result<TailedVector> {
    let ctx = op.context();
    ctx.ensure_same(&y.context())?;
    op.ambient().ensure_same(&y.ambient())?;
    let normalized = op.normalized();
    let verdict = decide(&normalized, side)?;
    if !verdict.invertible {
        return Err(Error::NotInvertibleOnSide(side));
    }
    match classify(normalized.expr())? {
        Family::Matrix(m) => {
            let Certificate::ExactInverse(inv) = &verdict.certificate else { unreachable!("matrix verdicts carry inverses") };
            debug_assert_eq!(inv.context(), m.context());
            Ok(inv.apply(y)?.into())
        }
        Family::Diagonal(prefix, tail) => Ok(FinSuppVector::from_entries(
            ctx,
            Ambient::C0,
            y.entries().iter().map(|(i, v)| (*i, v / prefix.get(*i).unwrap_or(tail))),
        )?
        .into()),
        Family::Shift(form) => shift_inverse_apply(ctx, &form, y),
    }
}

fn shift_inverse_apply(ctx: PrimeContext, form: &ShiftForm, y: &FinSuppVector) -> Result<TailedVector> {
    let nu = form.center();
    let nu_norm = ctx.pnorm(&nu);
    let one = PNormValue::one();
    let n = y.support_end();
    let zero_vec = || FinSuppVector::zero(ctx, Ambient::C0);
    let base: TailedVector = match form.kind {
        // x_i = y_{i+1} + ν x_{i+1}, i.e. x = Σ_k ν^k T^{k+1} y
        ShiftKind::Right if nu_norm <= one => {
            let mut x = vec![Rational::zero(); n];
            for i in (0..n.saturating_sub(1)).rev() {
                x[i] = y.get(i + 1) + &nu * &x[i + 1];
            }
            FinSuppVector::from_entries(ctx, Ambient::C0, x.into_iter().enumerate())?.into()
        }
        // forward recursion x_i = (x_{i-1} - y_i)/ν, geometric with ratio 1/ν past the support
        ShiftKind::Right => {
            if n == 0 {
                zero_vec().into()
            } else {
                let mut x = Vec::with_capacity(n);
                let mut prev = Rational::zero();
                for i in 0..n {
                    prev = (&prev - y.get(i)) / &nu;
                    x.push(prev.clone());
                }
                let first = &prev / &nu;
                let head = FinSuppVector::from_entries(ctx, Ambient::C0, x.into_iter().enumerate())?;
                TailedVector::with_tail(head, n, first, nu.recip())?
            }
        }
        // x_0 = 0, x_{i+1} = y_i + ν x_i, geometric with ratio ν past the support
        ShiftKind::Left if nu_norm < one => {
            let mut x = vec![Rational::zero(); n + 1];
            for i in 0..n {
                x[i + 1] = y.get(i) + &nu * &x[i];
            }
            let first = &nu * &x[n];
            let head = FinSuppVector::from_entries(ctx, Ambient::C0, x.into_iter().enumerate())?;
            TailedVector::with_tail(head, n + 1, first, nu.clone())?
        }
        // x_i = (x_{i+1} - y_i)/ν, i.e. x = -Σ_k ν^{-k-1} T^k y
        ShiftKind::Left => {
            let mut x = vec![Rational::zero(); n + 1];
            for i in (0..n).rev() {
                x[i] = (&x[i + 1] - y.get(i)) / &nu;
            }
            FinSuppVector::from_entries(ctx, Ambient::C0, x.into_iter().enumerate())?.into()
        }
    };
    Ok(base.scale(&form.beta.recip()))
}

/// The finite-dimensional closed form and series of `D = C_l (I + C C_l)^{-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixNeumann {
    pub left_inverse: Matrix,
    pub perturbation: Matrix,
    /// `||C C_l||`
    pub contraction: PNormValue,
    pub closed_form: Matrix,
    /// `D_n = Σ_{k<=n} C_l (-C C_l)^k` for `n = 0..=n_max`.
    pub truncations: Vec<Matrix>,
}

impl MatrixNeumann {
    /// `||C_l|| · ||C C_l||^{n+1}`.
    pub fn tail_bound(&self, n: usize) -> PNormValue {
        let q = self.contraction;
        (0..=n).fold(self.left_inverse.max_entry_norm(), |acc, _| acc * q)
    }

    /// `||D_n - D||` for every stored truncation.
    pub fn truncation_errors(&self) -> Vec<PNormValue> {
        self.truncations
            .iter()
            .map(|dn| dn.sub(&self.closed_form).expect("same shape").max_entry_norm())
            .collect()
    }

    pub fn final_tail_bound(&self) -> PNormValue {
        self.tail_bound(self.truncations.len().saturating_sub(1))
    }
}

/// Builds `D` for a left inverse `C_l` and a perturbation `C` with
/// `||C C_l|| < 1`.
pub fn neumann_inverse_matrix(left_inverse: &Matrix, perturbation: &Matrix, n_max: usize) -> Result<MatrixNeumann> {
    let ctx = left_inverse.context();
    let n = left_inverse.n();
    let ccl = perturbation.mul(left_inverse)?;
    let contraction = ccl.max_entry_norm();
    if contraction >= PNormValue::one() {
        return Err(Error::ContractionFailure(contraction.render(&ctx)));
    }
    let id = Matrix::identity(ctx, n);
    let closed_form = left_inverse.mul(&id.add(&ccl)?.inverse()?)?;
    let step = ccl.scale(&-Rational::one());
    let mut truncations = Vec::with_capacity(n_max + 1);
    let mut power = id.clone();
    let mut partial = Matrix::zero(ctx, n);
    for _ in 0..=n_max {
        partial = partial.add(&left_inverse.mul(&power)?)?;
        truncations.push(partial.clone());
        power = power.mul(&step)?;
    }
    Ok(MatrixNeumann { left_inverse: left_inverse.clone(), perturbation: perturbation.clone(), contraction, closed_form, truncations })
}

/// `D` for a left-invertible `c_0` operator perturbed by `Cy = φ(y)u`,
/// applied through Sherman–Morrison:
/// `Dy = C_l y - C_l u · φ(C_l y) / (1 + φ(C_l u))`.
#[derive(Debug, Clone)]
pub struct RankOneNeumann {
    pub operator: Operator,
    pub u: FinSuppVector,
    pub phi: Functional,
    /// `||C||·||C_l||`, an upper bound for `||C C_l||`.
    pub contraction: PNormValue,
    pub left_inverse_norm: PNormValue,
    cl_u: TailedVector,
    denominator: Rational,
}

impl RankOneNeumann {
    pub fn apply(&self, y: &FinSuppVector) -> Result<TailedVector> {
        let cly = canonical_inverse_apply(&self.operator, Side::Left, y)?;
        let coeff = self.phi.apply_tailed(&cly)? / &self.denominator;
        cly.sub(&self.cl_u.scale(&coeff))
    }

    /// `Σ_{k<=n} C_l (-C C_l)^k y`.
    pub fn apply_truncated(&self, y: &FinSuppVector, n: usize) -> Result<TailedVector> {
        let mut sum = canonical_inverse_apply(&self.operator, Side::Left, y)?;
        let mut term = sum.clone();
        for _ in 0..n {
            let c = -self.phi.apply_tailed(&term)?;
            term = self.cl_u.scale(&c);
            sum = sum.add(&term)?;
        }
        Ok(sum)
    }

    pub fn tail_bound(&self, n: usize) -> PNormValue {
        (0..=n).fold(self.left_inverse_norm, |acc, _| acc * self.contraction)
    }
}

pub fn neumann_inverse_rank_one(op: &Operator, u: &FinSuppVector, phi: &Functional) -> Result<RankOneNeumann> {
    let ctx = op.context();
    let verdict = decide(op, Side::Left)?;
    let left_inverse_norm = verdict.min_inverse_norm.ok_or(Error::NotInvertibleOnSide(Side::Left))?;
    let contraction = phi.norm() * u.sup_norm() * left_inverse_norm;
    if contraction >= PNormValue::one() {
        return Err(Error::ContractionFailure(contraction.render(&ctx)));
    }
    let cl_u = canonical_inverse_apply(op, Side::Left, u)?;
    let denominator = Rational::one() + phi.apply_tailed(&cl_u)?;
    Ok(RankOneNeumann {
        operator: op.clone(),
        u: u.clone(),
        phi: phi.clone(),
        contraction,
        left_inverse_norm,
        cl_u,
        denominator,
    })
}
