//! The operator catalog: finite matrices, eventually constant diagonals,
//! the two unilateral shifts on `c_0`, and the constructors `A - λI`,
//! `βA + αI` and `A + φ(·)u`.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::padic::{PNormValue, PrimeContext, Rational};
use crate::sequence::{Ambient, FinSuppVector, Functional, TailedVector};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OperatorExpr {
    Matrix(Matrix),
    /// `d_i = prefix[i]` for `i < prefix.len()`, `tail` afterwards.
    Diagonal { prefix: Vec<Rational>, tail: Rational },
    RightShift,
    LeftShift,
    /// `inner - λI`
    Shifted { inner: Box<OperatorExpr>, lambda: Rational },
    /// `β·inner + αI`
    Affine { inner: Box<OperatorExpr>, alpha: Rational, beta: Rational },
    /// `inner + C` with `Cy = φ(y)u`
    RankOne { inner: Box<OperatorExpr>, u: FinSuppVector, phi: Functional },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShiftKind {
    Right,
    Left,
}

/// `β·S + γ·I` (or with `T`), the normal form of every shift-family operator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftForm {
    pub kind: ShiftKind,
    pub beta: Rational,
    pub gamma: Rational,
}

impl ShiftForm {
    /// `ν` with `βS + γI = β(S - νI)`.
    pub fn center(&self) -> Rational {
        -(&self.gamma / &self.beta)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Operator {
    ctx: PrimeContext,
    expr: OperatorExpr,
}

impl Operator {
    pub fn matrix(m: Matrix) -> Self {
        Self { ctx: m.context(), expr: OperatorExpr::Matrix(m) }
    }

    pub fn diagonal(ctx: PrimeContext, prefix: Vec<Rational>, tail: Rational) -> Self {
        Self { ctx, expr: OperatorExpr::Diagonal { prefix, tail } }
    }

    pub fn right_shift(ctx: PrimeContext) -> Self {
        Self { ctx, expr: OperatorExpr::RightShift }
    }

    pub fn left_shift(ctx: PrimeContext) -> Self {
        Self { ctx, expr: OperatorExpr::LeftShift }
    }

    /// Wraps a raw expression tree after validating it. No folding happens;
    /// use [`Operator::normalized`] for that.
    pub fn from_expr(ctx: PrimeContext, expr: OperatorExpr) -> Result<Self> {
        validate(&ctx, &expr)?;
        Ok(Self { ctx, expr })
    }

    pub fn context(&self) -> PrimeContext {
        self.ctx
    }

    pub fn expr(&self) -> &OperatorExpr {
        &self.expr
    }

    pub fn ambient(&self) -> Ambient {
        ambient_of(&self.expr)
    }

    pub fn is_finite_dimensional(&self) -> bool {
        matches!(self.ambient(), Ambient::Kn(_))
    }

    /// `A - λI`, folded into matrices, diagonals and existing shifts.
    pub fn shift_by_lambda(&self, lambda: &Rational) -> Operator {
        Self { ctx: self.ctx, expr: shift_expr(&self.expr, lambda) }
    }

    /// `βA + αI`.
    pub fn affine(&self, alpha: &Rational, beta: &Rational) -> Result<Operator> {
        if beta.is_zero() {
            return Err(Error::ZeroBeta);
        }
        Ok(Self { ctx: self.ctx, expr: affine_expr(&self.expr, alpha, beta) })
    }

    /// `A + C` with `Cy = φ(y)u`; folds into the matrix for `K^n`.
    pub fn add_rank_one(&self, u: &FinSuppVector, phi: &Functional) -> Result<Operator> {
        check_rank_one(&self.ctx, self.ambient(), u, phi)?;
        Ok(Self { ctx: self.ctx, expr: rank_one_expr(&self.expr, u, phi) })
    }

    /// Re-applies the folding constructors bottom-up.
    pub fn normalized(&self) -> Operator {
        Self { ctx: self.ctx, expr: normalize_expr(&self.expr) }
    }

    pub fn shift_form(&self) -> Option<ShiftForm> {
        shift_form_of(&self.expr)
    }

    /// `Some(c)` when the operator is exactly `cI`.
    pub fn scalar_value(&self) -> Option<Rational> {
        match &normalize_expr(&self.expr) {
            OperatorExpr::Matrix(m) => {
                let c = m.get(0, 0).clone();
                let n = m.n();
                let scalar = (0..n).all(|i| (0..n).all(|j| *m.get(i, j) == if i == j { c.clone() } else { Rational::zero() }));
                scalar.then_some(c)
            }
            OperatorExpr::Diagonal { prefix, tail } => prefix.iter().all(|d| d == tail).then(|| tail.clone()),
            _ => None,
        }
    }

    pub fn apply(&self, x: &FinSuppVector) -> Result<FinSuppVector> {
        self.ctx.ensure_same(&x.context())?;
        self.ambient().ensure_same(&x.ambient())?;
        apply_expr(&self.expr, x)
    }

    /// Action on vectors with a geometric tail (`c_0` families only for
    /// genuinely infinite inputs).
    pub fn apply_tailed(&self, x: &TailedVector) -> Result<TailedVector> {
        self.ctx.ensure_same(&x.context())?;
        self.ambient().ensure_same(&x.ambient())?;
        apply_tailed_expr(&self.expr, x)
    }

    /// Exact operator norm for the sup norm.
    pub fn op_norm(&self) -> PNormValue {
        let expr = normalize_expr(&self.expr);
        match &expr {
            OperatorExpr::Matrix(m) => m.max_entry_norm(),
            OperatorExpr::Diagonal { prefix, tail } => prefix
                .iter()
                .chain(std::iter::once(tail))
                .map(|d| self.ctx.pnorm(d))
                .max()
                .unwrap_or(PNormValue::Zero),
            _ => match shift_form_of(&expr) {
                Some(f) => self.ctx.pnorm(&f.beta).max(self.ctx.pnorm(&f.gamma)),
                None => self.column_scan_norm(),
            },
        }
    }

    /// `sup_j ||A e_j||`, evaluated on the finite window of columns after
    /// which every column has the same norm.
    pub fn column_scan_norm(&self) -> PNormValue {
        let last = match self.ambient() {
            Ambient::Kn(n) => n - 1,
            Ambient::C0 => column_window(&self.expr),
        };
        (0..=last)
            .map(|j| {
                let e = FinSuppVector::basis(self.ctx, self.ambient(), j).expect("index in range");
                self.apply(&e).expect("compatible basis vector").sup_norm()
            })
            .max()
            .unwrap_or(PNormValue::Zero)
    }

    /// Entrywise fold into an explicit matrix.
    pub fn materialize(&self) -> Result<Matrix> {
        materialize_expr(&self.expr)
    }
}

fn ambient_of(expr: &OperatorExpr) -> Ambient {
    match expr {
        OperatorExpr::Matrix(m) => Ambient::Kn(m.n()),
        OperatorExpr::Diagonal { .. } | OperatorExpr::RightShift | OperatorExpr::LeftShift => Ambient::C0,
        OperatorExpr::Shifted { inner, .. } | OperatorExpr::Affine { inner, .. } | OperatorExpr::RankOne { inner, .. } => {
            ambient_of(inner)
        }
    }
}

fn check_rank_one(ctx: &PrimeContext, ambient: Ambient, u: &FinSuppVector, phi: &Functional) -> Result<()> {
    ctx.ensure_same(&u.context())?;
    ctx.ensure_same(&phi.context())?;
    ambient.ensure_same(&u.ambient())?;
    if let Some(&last) = phi.coefficients().keys().next_back() {
        ambient.check_index(last)?;
    }
    Ok(())
}

fn validate(ctx: &PrimeContext, expr: &OperatorExpr) -> Result<()> {
    match expr {
        OperatorExpr::Matrix(m) => ctx.ensure_same(&m.context()),
        OperatorExpr::Diagonal { .. } | OperatorExpr::RightShift | OperatorExpr::LeftShift => Ok(()),
        OperatorExpr::Shifted { inner, .. } => validate(ctx, inner),
        OperatorExpr::Affine { inner, beta, .. } => {
            if beta.is_zero() {
                return Err(Error::ZeroBeta);
            }
            validate(ctx, inner)
        }
        OperatorExpr::RankOne { inner, u, phi } => {
            validate(ctx, inner)?;
            check_rank_one(ctx, ambient_of(inner), u, phi)
        }
    }
}

fn shift_expr(expr: &OperatorExpr, lambda: &Rational) -> OperatorExpr {
    if lambda.is_zero() {
        return expr.clone();
    }
    match expr {
        OperatorExpr::Matrix(m) => OperatorExpr::Matrix(m.shift_diagonal(lambda)),
        OperatorExpr::Diagonal { prefix, tail } => OperatorExpr::Diagonal {
            prefix: prefix.iter().map(|d| d - lambda).collect(),
            tail: tail - lambda,
        },
        OperatorExpr::Shifted { inner, lambda: mu } => {
            let total = mu + lambda;
            if total.is_zero() {
                (**inner).clone()
            } else {
                OperatorExpr::Shifted { inner: inner.clone(), lambda: total }
            }
        }
        OperatorExpr::Affine { inner, alpha, beta } => {
            let alpha = alpha - lambda;
            if alpha.is_zero() && beta.is_one() {
                (**inner).clone()
            } else {
                OperatorExpr::Affine { inner: inner.clone(), alpha, beta: beta.clone() }
            }
        }
        OperatorExpr::RankOne { inner, u, phi } => OperatorExpr::RankOne {
            inner: Box::new(shift_expr(inner, lambda)),
            u: u.clone(),
            phi: phi.clone(),
        },
        OperatorExpr::RightShift | OperatorExpr::LeftShift => {
            OperatorExpr::Shifted { inner: Box::new(expr.clone()), lambda: lambda.clone() }
        }
    }
}

fn affine_expr(expr: &OperatorExpr, alpha: &Rational, beta: &Rational) -> OperatorExpr {
    if alpha.is_zero() && beta.is_one() {
        return expr.clone();
    }
    match expr {
        OperatorExpr::Matrix(m) => OperatorExpr::Matrix(m.scale(beta).shift_diagonal(&-alpha)),
        OperatorExpr::Diagonal { prefix, tail } => OperatorExpr::Diagonal {
            prefix: prefix.iter().map(|d| beta * d + alpha).collect(),
            tail: beta * tail + alpha,
        },
        OperatorExpr::Shifted { inner, lambda } => affine_expr(inner, &(alpha - beta * lambda), beta),
        OperatorExpr::Affine { inner, alpha: a0, beta: b0 } => affine_expr(inner, &(beta * a0 + alpha), &(beta * b0)),
        OperatorExpr::RankOne { inner, u, phi } => OperatorExpr::RankOne {
            inner: Box::new(affine_expr(inner, alpha, beta)),
            u: u.scale(beta),
            phi: phi.clone(),
        },
        OperatorExpr::RightShift | OperatorExpr::LeftShift => {
            if beta.is_one() {
                shift_expr(expr, &-alpha)
            } else {
                OperatorExpr::Affine { inner: Box::new(expr.clone()), alpha: alpha.clone(), beta: beta.clone() }
            }
        }
    }
}

fn rank_one_expr(expr: &OperatorExpr, u: &FinSuppVector, phi: &Functional) -> OperatorExpr {
    if u.is_zero() || phi.is_zero() {
        return expr.clone();
    }
    match expr {
        OperatorExpr::Matrix(m) => {
            let mut out = m.clone();
            for (i, ui) in u.entries() {
                for (j, cj) in phi.coefficients() {
                    let v = out.get(*i, *j) + ui * cj;
                    out.set(*i, *j, v);
                }
            }
            OperatorExpr::Matrix(out)
        }
        _ => OperatorExpr::RankOne { inner: Box::new(expr.clone()), u: u.clone(), phi: phi.clone() },
    }
}

fn normalize_expr(expr: &OperatorExpr) -> OperatorExpr {
    match expr {
        OperatorExpr::Shifted { inner, lambda } => shift_expr(&normalize_expr(inner), lambda),
        OperatorExpr::Affine { inner, alpha, beta } => affine_expr(&normalize_expr(inner), alpha, beta),
        OperatorExpr::RankOne { inner, u, phi } => rank_one_expr(&normalize_expr(inner), u, phi),
        other => other.clone(),
    }
}

pub(crate) fn shift_form_of(expr: &OperatorExpr) -> Option<ShiftForm> {
    match expr {
        OperatorExpr::RightShift => Some(ShiftForm { kind: ShiftKind::Right, beta: Rational::one(), gamma: Rational::zero() }),
        OperatorExpr::LeftShift => Some(ShiftForm { kind: ShiftKind::Left, beta: Rational::one(), gamma: Rational::zero() }),
        OperatorExpr::Shifted { inner, lambda } => shift_form_of(inner).map(|f| ShiftForm { gamma: f.gamma - lambda, ..f }),
        OperatorExpr::Affine { inner, alpha, beta } => shift_form_of(inner).map(|f| ShiftForm {
            kind: f.kind,
            beta: beta * &f.beta,
            gamma: beta * &f.gamma + alpha,
        }),
        _ => None,
    }
}

/// Columns `A e_j` with `j` at or beyond this index all share one norm.
fn column_window(expr: &OperatorExpr) -> usize {
    match expr {
        OperatorExpr::Matrix(m) => m.n() - 1,
        OperatorExpr::Diagonal { prefix, .. } => prefix.len(),
        OperatorExpr::RightShift => 0,
        OperatorExpr::LeftShift => 1,
        OperatorExpr::Shifted { inner, .. } | OperatorExpr::Affine { inner, .. } => column_window(inner),
        OperatorExpr::RankOne { inner, phi, .. } => column_window(inner).max(phi.support_end()),
    }
}

fn diagonal_entry<'a>(prefix: &'a [Rational], tail: &'a Rational, i: usize) -> &'a Rational {
    prefix.get(i).unwrap_or(tail)
}

fn apply_expr(expr: &OperatorExpr, x: &FinSuppVector) -> Result<FinSuppVector> {
    let (ctx, amb) = (x.context(), x.ambient());
    match expr {
        OperatorExpr::Matrix(m) => m.apply(x),
        OperatorExpr::Diagonal { prefix, tail } => FinSuppVector::from_entries(
            ctx,
            amb,
            x.entries().iter().map(|(i, v)| (*i, diagonal_entry(prefix, tail, *i) * v)),
        ),
        OperatorExpr::RightShift => FinSuppVector::from_entries(ctx, amb, x.entries().iter().map(|(i, v)| (i + 1, v.clone()))),
        OperatorExpr::LeftShift => FinSuppVector::from_entries(
            ctx,
            amb,
            x.entries().iter().filter(|(i, _)| **i > 0).map(|(i, v)| (i - 1, v.clone())),
        ),
        OperatorExpr::Shifted { inner, lambda } => apply_expr(inner, x)?.sub(&x.scale(lambda)),
        OperatorExpr::Affine { inner, alpha, beta } => apply_expr(inner, x)?.scale(beta).add(&x.scale(alpha)),
        OperatorExpr::RankOne { inner, u, phi } => apply_expr(inner, x)?.add(&u.scale(&phi.apply(x)?)),
    }
}

fn apply_tailed_expr(expr: &OperatorExpr, x: &TailedVector) -> Result<TailedVector> {
    if x.is_finite() {
        return Ok(apply_expr(expr, x.head())?.into());
    }
    match expr {
        OperatorExpr::Matrix(_) => Err(Error::InfiniteSupport("geometric tail in K^n".into())),
        OperatorExpr::Diagonal { prefix, tail } => {
            let mut v = x.clone();
            v.expand_to(prefix.len());
            let head = FinSuppVector::from_entries(
                x.context(),
                x.ambient(),
                v.head().entries().iter().map(|(i, q)| (*i, diagonal_entry(prefix, tail, *i) * q)),
            )?;
            let t = v.tail().expect("tail survives expansion");
            TailedVector::with_tail(head, t.start, &t.first * tail, t.ratio.clone())
        }
        OperatorExpr::RightShift => Ok(x.right_shift()),
        OperatorExpr::LeftShift => Ok(x.left_shift()),
        OperatorExpr::Shifted { inner, lambda } => apply_tailed_expr(inner, x)?.sub(&x.scale(lambda)),
        OperatorExpr::Affine { inner, alpha, beta } => apply_tailed_expr(inner, x)?.scale(beta).add(&x.scale(alpha)),
        OperatorExpr::RankOne { inner, u, phi } => {
            let c = phi.apply_tailed(x)?;
            apply_tailed_expr(inner, x)?.add(&TailedVector::from(u.scale(&c)))
        }
    }
}

fn materialize_expr(expr: &OperatorExpr) -> Result<Matrix> {
    match expr {
        OperatorExpr::Matrix(m) => Ok(m.clone()),
        OperatorExpr::Shifted { inner, lambda } => Ok(materialize_expr(inner)?.shift_diagonal(lambda)),
        OperatorExpr::Affine { inner, alpha, beta } => Ok(materialize_expr(inner)?.scale(beta).shift_diagonal(&-alpha)),
        OperatorExpr::RankOne { inner, u, phi } => {
            let mut m = materialize_expr(inner)?;
            for (i, ui) in u.entries() {
                for (j, cj) in phi.coefficients() {
                    let v = m.get(*i, *j) + ui * cj;
                    m.set(*i, *j, v);
                }
            }
            Ok(m)
        }
        _ => Err(Error::NotFiniteDimensional),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::{int, rat};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c5() -> PrimeContext {
        PrimeContext::new(5).unwrap()
    }

    fn v(ctx: PrimeContext, amb: Ambient, e: &[(usize, Rational)]) -> FinSuppVector {
        FinSuppVector::from_entries(ctx, amb, e.iter().cloned()).unwrap()
    }

    fn mat(rows: &[&[Rational]]) -> Operator {
        Operator::matrix(Matrix::new(c5(), rows.iter().map(|r| r.to_vec()).collect()).unwrap())
    }

    #[test]
    fn apply_examples() {
        let c = c5();
        let e0 = v(c, Ambient::C0, &[(0, int(1))]);
        assert_eq!(Operator::right_shift(c).apply(&e0).unwrap(), v(c, Ambient::C0, &[(1, int(1))]));
        assert!(Operator::left_shift(c).apply(&e0).unwrap().is_zero());
        let d = Operator::diagonal(c, vec![int(2)], int(3));
        let x = v(c, Ambient::C0, &[(0, int(1)), (5, int(1))]);
        assert_eq!(d.apply(&x).unwrap(), v(c, Ambient::C0, &[(0, int(2)), (5, int(3))]));
    }

    #[test]
    fn apply_rejects_mismatches() {
        let c = c5();
        let e0 = v(c, Ambient::Kn(2), &[(0, int(1))]);
        assert!(matches!(Operator::right_shift(c).apply(&e0), Err(Error::AmbientMismatch(..))));
        let other = FinSuppVector::basis(PrimeContext::new(3).unwrap(), Ambient::C0, 0).unwrap();
        assert_eq!(Operator::right_shift(c).apply(&other), Err(Error::ContextMismatch(5, 3)));
    }

    #[test]
    fn op_norm_examples() {
        let c = c5();
        assert_eq!(mat(&[&[int(1), rat(1, 5)], &[int(0), int(2)]]).op_norm(), PNormValue::Pow(1));
        assert_eq!(Operator::right_shift(c).shift_by_lambda(&int(5)).op_norm(), PNormValue::Pow(0));
        let inner = Operator::diagonal(c, vec![int(1)], rat(1, 25));
        let raw = OperatorExpr::RankOne {
            inner: Box::new(inner.expr().clone()),
            u: FinSuppVector::zero(c, Ambient::C0),
            phi: Functional::coordinate(c, 0, int(1)),
        };
        let op = Operator::from_expr(c, raw).unwrap();
        assert_eq!(op.op_norm(), inner.op_norm());
        assert_eq!(op.op_norm(), PNormValue::Pow(2));
    }

    #[test]
    fn materialize_examples() {
        let c = c5();
        let m = mat(&[&[int(1), int(0)], &[int(0), int(2)]]);
        assert_eq!(m.materialize().unwrap(), match m.expr() {
            OperatorExpr::Matrix(x) => x.clone(),
            _ => unreachable!(),
        });
        let raw = OperatorExpr::Shifted { inner: Box::new(m.expr().clone()), lambda: int(1) };
        let shifted = Operator::from_expr(c, raw).unwrap().materialize().unwrap();
        assert_eq!(shifted.rows(), &[vec![int(0), int(0)], vec![int(0), int(1)]]);

        let zero = Operator::matrix(Matrix::zero(c, 2));
        let raw = OperatorExpr::RankOne {
            inner: Box::new(zero.expr().clone()),
            u: v(c, Ambient::Kn(2), &[(0, int(1))]),
            phi: Functional::coordinate(c, 1, int(1)),
        };
        let r1 = Operator::from_expr(c, raw).unwrap().materialize().unwrap();
        assert_eq!(r1.rows(), &[vec![int(0), int(1)], vec![int(0), int(0)]]);
        assert_eq!(Operator::right_shift(c).materialize(), Err(Error::NotFiniteDimensional));
    }

    #[test]
    fn constructor_examples() {
        let c = c5();
        let d = Operator::diagonal(c, vec![int(1)], int(2)).shift_by_lambda(&int(1));
        assert_eq!(d.expr(), &OperatorExpr::Diagonal { prefix: vec![int(0)], tail: int(1) });
        let s = Operator::right_shift(c);
        assert_eq!(s.affine(&int(0), &int(1)).unwrap(), s);
        assert_eq!(s.affine(&int(1), &int(0)), Err(Error::ZeroBeta));
        let zero = Operator::matrix(Matrix::zero(c, 2));
        let e0 = v(c, Ambient::Kn(2), &[(0, int(1))]);
        let a = zero.add_rank_one(&e0, &Functional::coordinate(c, 0, int(1))).unwrap();
        assert_eq!(a.materialize().unwrap().rows(), &[vec![int(1), int(0)], vec![int(0), int(0)]]);
        // φ outside K^2 is rejected
        assert!(zero.add_rank_one(&e0, &Functional::coordinate(c, 2, int(1))).is_err());
    }

    #[test]
    fn shift_forms_compose() {
        let c = c5();
        let s = Operator::right_shift(c);
        // 5(S - 2) + 3 = 5S - 7
        let a = s.shift_by_lambda(&int(2)).affine(&int(3), &int(5)).unwrap();
        let f = a.shift_form().unwrap();
        assert_eq!((f.kind, f.beta.clone(), f.gamma.clone()), (ShiftKind::Right, int(5), int(-7)));
        assert_eq!(f.center(), rat(7, 5));
        assert_eq!(a.op_norm(), PNormValue::Pow(-1).max(c.pnorm(&int(7))));
        assert_eq!(a.op_norm(), a.column_scan_norm());
    }

    fn random_rational(rng: &mut ChaCha8Rng, ctx: PrimeContext) -> Rational {
        if rng.gen_bool(0.2) {
            return Rational::zero();
        }
        rat(rng.gen_range(-12..=12), rng.gen_range(1..=7)) * ctx.power(rng.gen_range(-2..=2))
    }

    fn random_c0_operator(rng: &mut ChaCha8Rng, ctx: PrimeContext) -> Operator {
        let base = match rng.gen_range(0..3) {
            0 => Operator::diagonal(ctx, (0..rng.gen_range(0..4)).map(|_| random_rational(rng, ctx)).collect(), random_rational(rng, ctx)),
            1 => Operator::right_shift(ctx),
            _ => Operator::left_shift(ctx),
        };
        let mut op = base.shift_by_lambda(&random_rational(rng, ctx));
        let beta = random_rational(rng, ctx);
        if !beta.is_zero() {
            op = op.affine(&random_rational(rng, ctx), &beta).unwrap();
        }
        if rng.gen_bool(0.5) {
            let u = FinSuppVector::from_entries(ctx, Ambient::C0, (0..4).map(|i| (i, random_rational(rng, ctx)))).unwrap();
            let phi = Functional::from_entries(ctx, (0..4).map(|i| (i, random_rational(rng, ctx)))).unwrap();
            op = op.add_rank_one(&u, &phi).unwrap();
        }
        op
    }

    #[test]
    fn closed_form_norms_agree_with_column_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for p in [2u64, 3, 5] {
            let ctx = PrimeContext::new(p).unwrap();
            for _ in 0..200 {
                let op = random_c0_operator(&mut rng, ctx);
                assert_eq!(op.op_norm(), op.column_scan_norm(), "{op:?}");
                for _ in 0..10 {
                    let x = FinSuppVector::from_entries(ctx, Ambient::C0, (0..7).map(|i| (i, random_rational(&mut rng, ctx)))).unwrap();
                    assert!(op.apply(&x).unwrap().sup_norm() <= op.op_norm() * x.sup_norm());
                }
            }
        }
    }

    #[test]
    fn folding_matches_direct_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let ctx = PrimeContext::new(3).unwrap();
        for _ in 0..200 {
            let n = rng.gen_range(1..=4);
            let m = Matrix::from_fn(ctx, n, |_, _| Rational::zero());
            let mut rows = m.rows().to_vec();
            for row in rows.iter_mut() {
                for q in row.iter_mut() {
                    *q = random_rational(&mut rng, ctx);
                }
            }
            let base = Operator::matrix(Matrix::new(ctx, rows).unwrap());
            let raw = OperatorExpr::RankOne {
                inner: Box::new(OperatorExpr::Affine {
                    inner: Box::new(OperatorExpr::Shifted { inner: Box::new(base.expr().clone()), lambda: random_rational(&mut rng, ctx) }),
                    alpha: random_rational(&mut rng, ctx),
                    beta: int(rng.gen_range(1..5)),
                }),
                u: FinSuppVector::from_entries(ctx, Ambient::Kn(n), (0..n).map(|i| (i, random_rational(&mut rng, ctx)))).unwrap(),
                phi: Functional::from_entries(ctx, (0..n).map(|i| (i, random_rational(&mut rng, ctx)))).unwrap(),
            };
            let op = Operator::from_expr(ctx, raw).unwrap();
            let folded = op.materialize().unwrap();
            assert_eq!(Operator::matrix(folded.clone()), op.normalized());
            for _ in 0..5 {
                let x = FinSuppVector::from_entries(ctx, Ambient::Kn(n), (0..n).map(|i| (i, random_rational(&mut rng, ctx)))).unwrap();
                assert_eq!(folded.apply(&x).unwrap(), op.apply(&x).unwrap());
            }
        }
    }

    #[test]
    fn tailed_application_agrees_on_finite_vectors_and_kills_eigenvectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ctx = c5();
        for _ in 0..200 {
            let op = random_c0_operator(&mut rng, ctx);
            let x = FinSuppVector::from_entries(ctx, Ambient::C0, (0..6).map(|i| (i, random_rational(&mut rng, ctx)))).unwrap();
            assert_eq!(op.apply_tailed(&x.clone().into()).unwrap(), TailedVector::from(op.apply(&x).unwrap()));
        }
        // (1, λ, λ², ...) spans the kernel of T - λ for |λ| < 1.
        let lambda = rat(10, 3);
        let eig = TailedVector::with_tail(FinSuppVector::zero(ctx, Ambient::C0), 0, int(1), lambda.clone()).unwrap();
        let t = Operator::left_shift(ctx).shift_by_lambda(&lambda);
        assert!(t.apply_tailed(&eig).unwrap().is_zero());
    }
}
