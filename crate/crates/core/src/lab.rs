//! Witnesses and rank-one destabilizers for left pseudospectra, seeded
//! perturbation sampling, and the executable law suite.

use std::cmp::Ordering;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::inverse::{decide, Certificate, Side};
use crate::json;
use crate::matrix::Matrix;
use crate::operator::{Operator, OperatorExpr};
use crate::padic::{format_rational, PNormValue, PrimeContext, Rational};
use crate::sample;
use crate::sequence::{Ambient, FinSuppVector, Functional, TailedVector};
use crate::spectral::{c_a, check_epsilon, SpectralEngine};

/// The rank-one operator `Cy = φ(y)u` together with a nonzero `z` in the
/// kernel of `A - λI + C`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Destabilizer {
    pub u: FinSuppVector,
    pub phi: Functional,
    pub kernel_witness: TailedVector,
    /// `||C|| = ||φ||·||u||`.
    pub norm: PNormValue,
    /// The strict upper bound the construction targets.
    pub bound: Rational,
    /// `norm < bound`, decided exactly.
    pub norm_bound_checked: bool,
}

impl Destabilizer {
    pub fn is_zero(&self) -> bool {
        self.u.is_zero() || self.phi.is_zero()
    }

    /// `A + C`.
    pub fn perturbed(&self, a: &Operator) -> Result<Operator> {
        if self.is_zero() {
            Ok(a.clone())
        } else {
            a.add_rank_one(&self.u, &self.phi)
        }
    }

    /// `(A - λI + C)z = 0` with `z ≠ 0`, checked entry by entry.
    pub fn kernel_holds(&self, a: &Operator, lambda: &Rational) -> Result<bool> {
        let image = self.perturbed(a)?.shift_by_lambda(lambda).apply_tailed(&self.kernel_witness)?;
        Ok(!self.kernel_witness.is_zero() && image.is_zero())
    }

    /// `det(A + C - λI)` for finite-dimensional `A`.
    pub fn determinant(&self, a: &Operator, lambda: &Rational) -> Result<Option<Rational>> {
        if !a.is_finite_dimensional() {
            return Ok(None);
        }
        Ok(Some(self.perturbed(a)?.shift_by_lambda(lambda).materialize()?.determinant()))
    }
}

/// A nonzero `x` minimizing `||(A - λI)x|| / ||x||`; the minimum equals the
/// reciprocal of the minimal left inverse norm.
pub fn extremal_vector(a: &Operator, lambda: &Rational) -> Result<FinSuppVector> {
    let ctx = a.context();
    let shifted = a.shift_by_lambda(lambda).normalized();
    match shifted.expr() {
        OperatorExpr::Matrix(m) => {
            let inv = m.inverse().map_err(|_| Error::InSpectrum)?;
            Ok(inv.column(inv.max_norm_column()))
        }
        OperatorExpr::Diagonal { prefix, tail } => {
            let (index, value) = prefix
                .iter()
                .chain(std::iter::once(tail))
                .enumerate()
                .min_by_key(|(_, d)| ctx.pnorm(d))
                .expect("tail present");
            if value.is_zero() {
                return Err(Error::InSpectrum);
            }
            FinSuppVector::basis(ctx, Ambient::C0, index)
        }
        OperatorExpr::RankOne { .. } => Err(Error::UnsupportedFamily("rank-one update on c0".into())),
        _ => {
            // shift families are isometric up to the factor ||A - λ|| wherever left invertible
            if decide(&shifted, Side::Left)?.invertible {
                FinSuppVector::basis(ctx, Ambient::C0, 0)
            } else {
                Err(Error::InSpectrum)
            }
        }
    }
}

fn bound_is_strict(ctx: PrimeContext, lhs: PNormValue, bound: &Rational) -> bool {
    ctx.norm_compare(lhs, bound) == Ordering::Less
}

/// `||(A - λI)x|| < t·||x||`, exact.
fn ratio_below(a: &Operator, lambda: &Rational, x: &FinSuppVector, t: &Rational) -> Result<bool> {
    let ctx = a.context();
    let image = a.shift_by_lambda(lambda).apply(x)?.sup_norm();
    let scaled = t * ctx.norm_to_rational(x.sup_norm());
    Ok(scaled > Rational::zero() && bound_is_strict(ctx, image, &scaled))
}

fn exact_norm_rational(a: &Operator, lambda: &Rational) -> Rational {
    a.context().norm_to_rational(a.shift_by_lambda(lambda).op_norm())
}

fn require_off_spectrum(a: &Operator, lambda: &Rational) -> Result<()> {
    if decide(&a.shift_by_lambda(lambda), Side::Left)?.invertible {
        Ok(())
    } else {
        Err(Error::InSpectrum)
    }
}

/// `x ≠ 0` with `||(A - λI)x|| < ε||x||`.
pub fn pseudo_witness(a: &Operator, lambda: &Rational, eps: &Rational) -> Result<FinSuppVector> {
    check_epsilon(eps)?;
    require_off_spectrum(a, lambda)?;
    if !SpectralEngine::exact().in_pseudospectrum(a, lambda, eps, Side::Left)? {
        return Err(Error::NotInPseudospectrum);
    }
    let x = extremal_vector(a, lambda)?;
    debug_assert!(ratio_below(a, lambda, &x, eps)?);
    Ok(x)
}

/// `x ≠ 0` with `||(A - λI)x|| < ε||A - λI||·||x||`.
pub fn condition_witness(a: &Operator, lambda: &Rational, eps: &Rational) -> Result<FinSuppVector> {
    check_epsilon(eps)?;
    require_off_spectrum(a, lambda)?;
    if !SpectralEngine::exact().in_condition_pseudospectrum(a, lambda, eps, Side::Left)? {
        return Err(Error::NotInConditionPseudospectrum);
    }
    let x = extremal_vector(a, lambda)?;
    debug_assert!(ratio_below(a, lambda, &x, &(eps * exact_norm_rational(a, lambda)))?);
    Ok(x)
}

/// `C = 0` with the kernel certificate of a point of the left spectrum.
fn zero_destabilizer(a: &Operator, lambda: &Rational, bound: Rational) -> Result<Destabilizer> {
    let ctx = a.context();
    let verdict = decide(&a.shift_by_lambda(lambda), Side::Left)?;
    let Certificate::KernelVector(z) = verdict.certificate else {
        return Err(Error::UnsupportedFamily("left spectrum point without kernel certificate".into()));
    };
    Ok(Destabilizer {
        u: FinSuppVector::zero(ctx, a.ambient()),
        phi: Functional::from_entries(ctx, [])?,
        kernel_witness: z,
        norm: PNormValue::Zero,
        norm_bound_checked: bound > Rational::zero(),
        bound,
    })
}

/// `Cy = -φ(y)(A - λI)z` from the extremal vector, normalized to `||z|| = 1`
/// and `φ(z) = 1`. The strict bound is evaluated, not assumed.
pub fn construct_destabilizer(a: &Operator, lambda: &Rational, bound: Rational) -> Result<Destabilizer> {
    let ctx = a.context();
    let x = extremal_vector(a, lambda)?;
    let (z, _) = x.normalize()?;
    let phi = z.unit_functional()?;
    let u = a.shift_by_lambda(lambda).apply(&z)?.scale(&-Rational::one());
    let norm = phi.norm() * u.sup_norm();
    Ok(Destabilizer {
        u,
        phi,
        kernel_witness: z.into(),
        norm,
        norm_bound_checked: bound_is_strict(ctx, norm, &bound),
        bound,
    })
}

fn side_supported(a: &Operator, side: Side) -> Result<()> {
    if side != Side::Left && !a.is_finite_dimensional() {
        return Err(Error::UnsupportedFamily("right-sided destabilizers exist only for matrices".into()));
    }
    Ok(())
}

/// `C` with `||C|| < ε` and `λ ∈ σ(A + C)` on `side`.
pub fn destabilizer(a: &Operator, lambda: &Rational, eps: &Rational, side: Side) -> Result<Destabilizer> {
    check_epsilon(eps)?;
    side_supported(a, side)?;
    let engine = SpectralEngine::exact();
    if engine.in_spectrum(a, lambda, Side::Left)? {
        return zero_destabilizer(a, lambda, eps.clone());
    }
    if !engine.in_pseudospectrum(a, lambda, eps, Side::Left)? {
        return Err(Error::NotInPseudospectrum);
    }
    let d = construct_destabilizer(a, lambda, eps.clone())?;
    debug_assert!(d.norm_bound_checked);
    Ok(d)
}

/// `C` with `||C|| < ε||A - λI||` and `λ ∈ σ(A + C)` on `side`.
pub fn condition_destabilizer(a: &Operator, lambda: &Rational, eps: &Rational, side: Side) -> Result<Destabilizer> {
    check_epsilon(eps)?;
    side_supported(a, side)?;
    let engine = SpectralEngine::exact();
    let bound = eps * exact_norm_rational(a, lambda);
    if engine.in_spectrum(a, lambda, Side::Left)? {
        return zero_destabilizer(a, lambda, bound);
    }
    if !engine.in_condition_pseudospectrum(a, lambda, eps, Side::Left)? {
        return Err(Error::NotInConditionPseudospectrum);
    }
    let d = construct_destabilizer(a, lambda, bound)?;
    debug_assert!(d.norm_bound_checked);
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationShape {
    Matrix(usize),
    /// `φ(·)u` on `c_0` with `u` and `φ` supported on `0..support`.
    RankOneC0 { support: usize },
}

/// A seeded operator `C` with exact `||C|| < bound`.
pub fn random_bounded_perturbation(seed: u64, ctx: PrimeContext, shape: PerturbationShape, bound: &Rational) -> Result<Operator> {
    check_epsilon(bound)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = ctx.greatest_power_below(bound);
    // entry norms at most p^k
    let vals = -k..=-k + 3;
    Ok(match shape {
        PerturbationShape::Matrix(n) => {
            let mut rows = Vec::with_capacity(n);
            for _ in 0..n {
                rows.push((0..n).map(|_| sample::random_scalar(&mut rng, ctx, vals.clone(), 0.3)).collect());
            }
            Operator::matrix(Matrix::new(ctx, rows)?)
        }
        PerturbationShape::RankOneC0 { support } => {
            let u = sample::random_vector(&mut rng, ctx, Ambient::C0, support, vals);
            let phi = sample::random_functional(&mut rng, ctx, support, 0..=3);
            Operator::diagonal(ctx, vec![], Rational::zero()).add_rank_one(&u, &phi)?
        }
    })
}

/// A candidate `C = -φ(·)(A - λI)z` with `φ(z) = 1`, which makes `A - λI + C`
/// singular; `z` is biased toward the columns of `(A - λI)^{-1}`.
pub fn singularizing_perturbation<R: Rng>(rng: &mut R, shifted: &Matrix) -> Matrix {
    let ctx = shifted.context();
    let n = shifted.n();
    let z = loop {
        let z = match shifted.inverse() {
            Ok(inv) if rng.gen_bool(0.6) => {
                let col = inv.column(rng.gen_range(0..n));
                let noise = sample::random_vector(rng, ctx, Ambient::Kn(n), n, 0..=4);
                if rng.gen_bool(0.5) { col } else { col.add(&noise).expect("same space") }
            }
            _ => sample::random_vector(rng, ctx, Ambient::Kn(n), n, -3..=3),
        };
        if !z.is_zero() {
            break z;
        }
    };
    let psi = sample::random_functional(rng, ctx, n, -2..=2);
    let value = psi.apply(&z).expect("same context");
    let phi = if value.is_zero() || rng.gen_bool(0.3) {
        z.unit_functional().expect("nonzero")
    } else {
        Functional::from_entries(ctx, psi.coefficients().iter().map(|(i, c)| (*i, c / &value))).expect("finite")
    };
    let w = shifted.apply(&z).expect("same space");
    Matrix::from_fn(ctx, n, |i, j| -(w.get(i) * phi.coefficients().get(&j).cloned().unwrap_or_else(Rational::zero)))
}

/// Outcome of sampling perturbations below a bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingReport {
    pub samples: usize,
    pub below_bound: usize,
    pub singular: usize,
    /// A perturbation making `A - λI + C` singular although the claimed
    /// membership is false.
    pub violation: Option<Matrix>,
}

/// Samples `C` with `||C|| < bound` and records whether any singularizes
/// `A - λI + C`. `claimed` is the membership the implication must produce.
pub fn sample_singularizing(a: &Matrix, lambda: &Rational, bound: &Rational, claimed: bool, seed: u64, samples: usize) -> SamplingReport {
    let ctx = a.context();
    let shifted = a.shift_diagonal(lambda);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SamplingReport { samples, below_bound: 0, singular: 0, violation: None };
    for s in 0..samples {
        let c = if s % 2 == 0 {
            let op = random_bounded_perturbation(rng.gen(), ctx, PerturbationShape::Matrix(a.n()), bound).expect("positive bound");
            op.materialize().expect("matrix")
        } else {
            singularizing_perturbation(&mut rng, &shifted)
        };
        if !bound_is_strict(ctx, c.max_entry_norm(), bound) {
            continue;
        }
        report.below_bound += 1;
        if shifted.add(&c).expect("same shape").determinant().is_zero() {
            report.singular += 1;
            if !claimed && report.violation.is_none() {
                report.violation = Some(c);
            }
        }
    }
    report
}

pub const LAWS: [&str; 14] = ["L10", "L11i", "L11ii", "L12", "L13", "L16", "L17i", "L17ii", "L18", "L19", "L20", "L21", "L22", "L23"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LawInstance {
    pub op: Operator,
    pub lambda: Rational,
    pub eps: Rational,
    pub seed: u64,
    /// Perturbations drawn by the sampling laws.
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawVerdict {
    pub law_id: String,
    pub instance: Value,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

struct Check {
    pass: bool,
    counterexample: Option<Value>,
    note: Option<String>,
}

impl Check {
    fn ok() -> Self {
        Self { pass: true, counterexample: None, note: None }
    }

    fn vacuous(note: &str) -> Self {
        Self { pass: true, counterexample: None, note: Some(note.into()) }
    }

    fn fail(counterexample: Value) -> Self {
        Self { pass: false, counterexample: Some(counterexample), note: None }
    }

    fn with_note(mut self, note: String) -> Self {
        self.note = Some(note);
        self
    }
}

fn fmt_q(q: &Rational) -> String {
    format_rational(q)
}

/// Runs one law on one instance with the exact engine.
pub fn law_check(law_id: &str, inst: &LawInstance) -> Result<LawVerdict> {
    law_check_with(SpectralEngine::exact(), law_id, inst)
}

pub fn law_check_with(engine: SpectralEngine, law_id: &str, inst: &LawInstance) -> Result<LawVerdict> {
    check_epsilon(&inst.eps)?;
    let check = match law_id {
        "L10" => inclusion_law(engine, inst, false)?,
        "L16" => inclusion_law(engine, inst, true)?,
        "L11i" => intersection_law(engine, inst, false)?,
        "L17i" => intersection_law(engine, inst, true)?,
        "L11ii" => nesting_law(engine, inst, false)?,
        "L17ii" => nesting_law(engine, inst, true)?,
        "L12" => perturbation_inclusion_law(engine, inst, false)?,
        "L22" => perturbation_inclusion_law(engine, inst, true)?,
        "L13" => destabilizer_law(engine, inst, false)?,
        "L23" => destabilizer_law(engine, inst, true)?,
        "L18" => scaling_law(engine, inst)?,
        "L19" => affine_law(engine, inst)?,
        "L20" => c_a_law(engine, inst)?,
        "L21" => witness_law(engine, inst)?,
        other => return Err(Error::UnknownLaw(other.to_string())),
    };
    Ok(LawVerdict {
        law_id: law_id.to_string(),
        instance: json::law_instance_value(inst),
        pass: check.pass,
        counterexample: check.counterexample,
        note: check.note,
    })
}

fn member(engine: SpectralEngine, a: &Operator, lambda: &Rational, eps: &Rational, side: Side, condition: bool) -> Result<bool> {
    if condition {
        engine.in_condition_pseudospectrum(a, lambda, eps, side)
    } else {
        engine.in_pseudospectrum(a, lambda, eps, side)
    }
}

/// `σ^s ⊆ σ^s_ε ⊆ σ_ε` (or with `Λ`) for `s` left and right.
fn inclusion_law(engine: SpectralEngine, inst: &LawInstance, condition: bool) -> Result<Check> {
    let (a, l, e) = (&inst.op, &inst.lambda, &inst.eps);
    let two = member(engine, a, l, e, Side::TwoSided, condition)?;
    for side in [Side::Left, Side::Right] {
        let spec = engine.in_spectrum(a, l, side)?;
        let m = member(engine, a, l, e, side, condition)?;
        if (spec && !m) || (m && !two) {
            return Ok(Check::fail(json!({"side": side, "spectrum": spec, "member": m, "two_sided_member": two})));
        }
    }
    Ok(Check::ok())
}

/// `ε = p^{-k}` for `k = 0..=60`: points of the spectrum stay, every other
/// point eventually leaves for good.
fn intersection_law(engine: SpectralEngine, inst: &LawInstance, condition: bool) -> Result<Check> {
    let (a, l) = (&inst.op, &inst.lambda);
    let ctx = a.context();
    let mut k0s = Vec::new();
    for side in Side::ALL {
        let spec = engine.in_spectrum(a, l, side)?;
        let flags: Vec<bool> = (0..=60).map(|k| member(engine, a, l, &ctx.power(-k), side, condition)).collect::<Result<_>>()?;
        let last_true = flags.iter().rposition(|f| *f);
        let ok = if spec { flags.iter().all(|f| *f) } else { last_true.is_none_or(|k| k < 60) };
        if !ok {
            return Ok(Check::fail(json!({"side": side, "spectrum": spec, "ladder": flags})));
        }
        if !spec {
            k0s.push(last_true.map_or(0, |k| k + 1));
        }
    }
    Ok(Check::ok().with_note(format!("exclusion from k = {k0s:?}")))
}

fn nesting_law(engine: SpectralEngine, inst: &LawInstance, condition: bool) -> Result<Check> {
    let (a, l, e) = (&inst.op, &inst.lambda, &inst.eps);
    let p = Rational::from_integer(a.context().p().into());
    let mut ladder = [e / &p, e.clone(), e * (&p + Rational::one()) / &p, e * &p];
    ladder.sort();
    for side in Side::ALL {
        let flags: Vec<bool> = ladder.iter().map(|x| member(engine, a, l, x, side, condition)).collect::<Result<_>>()?;
        if flags.windows(2).any(|w| w[0] && !w[1]) {
            let eps: Vec<String> = ladder.iter().map(fmt_q).collect();
            return Ok(Check::fail(json!({"side": side, "epsilons": eps, "members": flags})));
        }
    }
    Ok(Check::ok())
}

/// Sampled `C` below the bound that singularize `A - λI + C` force
/// membership: `ε` for the pseudospectrum, `ε||A - λI||` for the condition
/// pseudospectrum. The condition variant also feeds in destabilizers built
/// for larger `ε`.
fn perturbation_inclusion_law(engine: SpectralEngine, inst: &LawInstance, condition: bool) -> Result<Check> {
    let (a, l, e) = (&inst.op, &inst.lambda, &inst.eps);
    let claimed = member(engine, a, l, e, Side::Left, condition)?;
    let bound = if condition { e * exact_norm_rational(a, l) } else { e.clone() };
    if bound.is_zero() {
        return Ok(Check::vacuous("A = λI"));
    }
    if condition {
        let p = Rational::from_integer(a.context().p().into());
        for wider in [e * &p, e * &p * &p] {
            let Ok(d) = condition_destabilizer(a, l, &wider, Side::Left) else { continue };
            let below = bound_is_strict(a.context(), d.norm, &bound);
            if below && d.kernel_holds(a, l)? && !claimed {
                return Ok(Check::fail(json!({"u": json::vector_value(&d.u), "phi": json::functional_value(&d.phi)})));
            }
        }
    }
    let OperatorExpr::Matrix(m) = a.normalized().expr().clone() else {
        return Ok(Check::vacuous("sampling covers finite matrices only"));
    };
    let report = sample_singularizing(&m, l, &bound, claimed, inst.seed, inst.samples);
    Ok(match report.violation {
        Some(c) => Check::fail(json!({"perturbation": json::matrix_value(&c), "bound": fmt_q(&bound)})),
        None => Check::ok().with_note(format!("{} of {} samples below bound, {} singular", report.below_bound, report.samples, report.singular)),
    })
}

/// Membership holds exactly when the extremal destabilizer meets the strict
/// bound; in the left spectrum the kernel certificate suffices.
fn destabilizer_law(engine: SpectralEngine, inst: &LawInstance, condition: bool) -> Result<Check> {
    let (a, l, e) = (&inst.op, &inst.lambda, &inst.eps);
    let bound = if condition { e * exact_norm_rational(a, l) } else { e.clone() };
    if bound.is_zero() {
        return Ok(Check::vacuous("A = λI: no C satisfies ||C|| < 0"));
    }
    let claimed = member(engine, a, l, e, Side::Left, condition)?;
    let d = if engine.in_spectrum(a, l, Side::Left)? {
        zero_destabilizer(a, l, bound.clone())?
    } else {
        construct_destabilizer(a, l, bound.clone())?
    };
    let kernel = d.kernel_holds(a, l)?;
    let det_zero = d.determinant(a, l)?.is_none_or(|det| det.is_zero());
    let certified = d.norm_bound_checked && kernel && det_zero;
    if claimed == certified {
        Ok(Check::ok())
    } else {
        Ok(Check::fail(json!({
            "claimed_member": claimed,
            "u": json::vector_value(&d.u),
            "phi": json::functional_value(&d.phi),
            "norm": d.norm,
            "bound": fmt_q(&bound),
            "kernel_holds": kernel,
        })))
    }
}

fn scaling_law(engine: SpectralEngine, inst: &LawInstance) -> Result<Check> {
    let (a, l, e) = (&inst.op, &inst.lambda, &inst.eps);
    let n = exact_norm_rational(a, l);
    if n.is_zero() {
        return Ok(Check::vacuous("A = λI"));
    }
    for side in Side::ALL {
        let cps = engine.in_condition_pseudospectrum(a, l, e, side)?;
        let ps = engine.in_pseudospectrum(a, l, e, side)?;
        let ps_scaled = engine.in_pseudospectrum(a, l, &(e * &n), side)?;
        let cps_scaled = engine.in_condition_pseudospectrum(a, l, &(e / &n), side)?;
        if cps != ps_scaled || ps != cps_scaled {
            return Ok(Check::fail(json!({"side": side, "norm": fmt_q(&n), "condition": cps, "pseudo_at_eps_norm": ps_scaled, "pseudo": ps, "condition_at_eps_over_norm": cps_scaled})));
        }
    }
    Ok(Check::ok())
}

/// `Λ_ε(βA + α) = α + βΛ_ε(A)` and `σ_ε(βA + α) = α + βσ_{ε/|β|}(A)`.
fn affine_law(engine: SpectralEngine, inst: &LawInstance) -> Result<Check> {
    let (a, l, e) = (&inst.op, &inst.lambda, &inst.eps);
    let ctx = a.context();
    let mut rng = ChaCha8Rng::seed_from_u64(inst.seed ^ 0x19);
    let alpha = sample::random_scalar(&mut rng, ctx, -2..=2, 0.3);
    let beta = sample::random_nonzero(&mut rng, ctx, -2..=2);
    let b = ctx.norm_to_rational(ctx.pnorm(&beta));
    let aff = a.affine(&alpha, &beta)?;
    let mu = &alpha + &beta * l;
    for side in Side::ALL {
        let lhs_c = engine.in_condition_pseudospectrum(&aff, &mu, e, side)?;
        let rhs_c = engine.in_condition_pseudospectrum(a, l, e, side)?;
        let lhs_p = engine.in_pseudospectrum(&aff, &mu, e, side)?;
        let rhs_p = engine.in_pseudospectrum(a, l, &(e / &b), side)?;
        if lhs_c != rhs_c || lhs_p != rhs_p {
            return Ok(Check::fail(json!({"side": side, "alpha": fmt_q(&alpha), "beta": fmt_q(&beta), "condition": [lhs_c, rhs_c], "pseudo": [lhs_p, rhs_p]})));
        }
    }
    Ok(Check::ok())
}

/// `σ^l_ε(A) ⊆ Λ^l_{ε/C_A}(A)`.
fn c_a_law(engine: SpectralEngine, inst: &LawInstance) -> Result<Check> {
    let (a, l, e) = (&inst.op, &inst.lambda, &inst.eps);
    let ca = match c_a(a) {
        Ok(v) => a.context().norm_to_rational(v),
        Err(Error::ScalarOperator) => return Ok(Check::vacuous("scalar operator")),
        Err(err) => return Err(err),
    };
    for side in Side::ALL {
        let ps = engine.in_pseudospectrum(a, l, e, side)?;
        if ps && !engine.in_condition_pseudospectrum(a, l, &(e / &ca), side)? {
            return Ok(Check::fail(json!({"side": side, "c_a": fmt_q(&ca)})));
        }
    }
    Ok(Check::ok())
}

/// Off the left spectrum, condition pseudospectrum membership yields an
/// exact witness `||(A - λI)x|| < ε||A - λI||·||x||`.
fn witness_law(engine: SpectralEngine, inst: &LawInstance) -> Result<Check> {
    let (a, l, e) = (&inst.op, &inst.lambda, &inst.eps);
    if engine.in_spectrum(a, l, Side::Left)? || !engine.in_condition_pseudospectrum(a, l, e, Side::Left)? {
        return Ok(Check::vacuous("premise false"));
    }
    let x = extremal_vector(a, l)?;
    let t = e * exact_norm_rational(a, l);
    if ratio_below(a, l, &x, &t)? {
        Ok(Check::ok())
    } else {
        Ok(Check::fail(json!({"witness": json::vector_value(&x), "threshold": fmt_q(&t)})))
    }
}

/// Seeded operators over `Q_2`, `Q_3`, `Q_5`: matrices up to `4 × 4`,
/// diagonals and shift-family operators, each at several `λ` and `ε`.
pub fn standard_ensemble(seed: u64) -> Vec<LawInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for p in [2u64, 3, 5] {
        let ctx = PrimeContext::new(p).expect("prime");
        for i in 0..30 {
            let op = match i % 6 {
                0..=3 => Operator::matrix(sample::random_matrix(&mut rng, ctx, 1 + i % 4, sample::DEFAULT_VALUATIONS)),
                4 => sample::random_diagonal(&mut rng, ctx, sample::DEFAULT_VALUATIONS),
                _ => sample::random_shift_form(&mut rng, ctx, sample::DEFAULT_VALUATIONS),
            };
            for lambda in ensemble_points(&mut rng, ctx, &op) {
                let eps = ctx.power(rng.gen_range(-2..=2));
                out.push(LawInstance { op: op.clone(), lambda, eps, seed: rng.gen(), samples: 200 });
            }
        }
    }
    out
}

/// A spectral point when one is rational, a point near it, and a random point.
fn ensemble_points<R: Rng>(rng: &mut R, ctx: PrimeContext, op: &Operator) -> Vec<Rational> {
    let anchor = match op.normalized().expr() {
        OperatorExpr::Matrix(m) => m.get(rng.gen_range(0..m.n()), rng.gen_range(0..m.n())).clone(),
        OperatorExpr::Diagonal { prefix, tail } => prefix.first().unwrap_or(tail).clone(),
        _ => op.shift_form().map(|f| f.gamma).unwrap_or_else(Rational::zero),
    };
    let near = &anchor + sample::random_nonzero(rng, ctx, 0..=3);
    vec![anchor, near, sample::random_scalar(rng, ctx, -3..=3, 0.1)]
}

/// Runs every law on every instance.
pub fn run_laws(engine: SpectralEngine, laws: &[&str], instances: &[LawInstance]) -> Result<Vec<LawVerdict>> {
    instances
        .par_iter()
        .flat_map_iter(|inst| laws.iter().map(move |law| law_check_with(engine, law, inst)))
        .collect()
}

/// Number of verdicts that differ between the exact engine and one whose
/// minimal inverse norms are multiplied by `p^shift`.
pub fn mutation_flips(shift: i64, instances: &[LawInstance]) -> Result<usize> {
    let exact = run_laws(SpectralEngine::exact(), &LAWS, instances)?;
    let mutated = run_laws(SpectralEngine::mutated(shift), &LAWS, instances)?;
    Ok(exact.iter().zip(&mutated).filter(|(a, b)| a.pass != b.pass).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::{int, rat};

    fn c5() -> PrimeContext {
        PrimeContext::new(5).unwrap()
    }

    fn diag15(c: PrimeContext) -> Operator {
        Operator::matrix(Matrix::new(c, vec![vec![int(1), int(0)], vec![int(0), int(5)]]).unwrap())
    }

    fn kn(c: PrimeContext, n: usize, e: &[(usize, Rational)]) -> FinSuppVector {
        FinSuppVector::from_entries(c, Ambient::Kn(n), e.iter().cloned()).unwrap()
    }

    #[test]
    fn pseudo_witness_examples() {
        let c = c5();
        let zero = Operator::diagonal(c, vec![], int(0));
        // |25| = 1/25 < 1/5
        let x = pseudo_witness(&zero, &int(25), &rat(1, 5)).unwrap();
        assert_eq!(x, FinSuppVector::basis(c, Ambient::C0, 0).unwrap());

        let a = diag15(c);
        let x = pseudo_witness(&a, &int(0), &rat(1, 2)).unwrap();
        assert_eq!(x, kn(c, 2, &[(1, rat(1, 5))]));
        assert!(ratio_below(&a, &int(0), &x, &rat(1, 2)).unwrap());

        let id = Operator::matrix(Matrix::identity(c, 2));
        let x = pseudo_witness(&id, &int(6), &int(1)).unwrap();
        assert!(ratio_below(&id, &int(6), &x, &int(1)).unwrap());

        assert_eq!(pseudo_witness(&a, &int(1), &int(1)), Err(Error::InSpectrum));
        assert_eq!(pseudo_witness(&a, &int(2), &rat(1, 2)), Err(Error::NotInPseudospectrum));
    }

    #[test]
    fn condition_witness_examples() {
        let c = c5();
        let a = diag15(c);
        assert_eq!(condition_witness(&a, &int(0), &rat(1, 2)).unwrap(), kn(c, 2, &[(1, rat(1, 5))]));
        // A - I = diag(0, -4/5) is singular
        let d = Operator::diagonal(c, vec![int(1)], rat(1, 5));
        assert_eq!(condition_witness(&d, &int(1), &rat(1, 5)), Err(Error::InSpectrum));
        // at λ = 0 the condition number is 5
        assert_eq!(condition_witness(&d, &int(0), &rat(1, 5)), Err(Error::NotInConditionPseudospectrum));
        let x = condition_witness(&d, &int(0), &rat(1, 4)).unwrap();
        assert!(ratio_below(&d, &int(0), &x, &(rat(1, 4) * int(5))).unwrap());
    }

    #[test]
    fn destabilizer_examples() {
        let c = c5();
        let a = diag15(c);
        let d = destabilizer(&a, &int(0), &rat(1, 2), Side::Left).unwrap();
        assert_eq!(d.kernel_witness, kn(c, 2, &[(1, int(1))]).into());
        assert_eq!(d.phi, Functional::coordinate(c, 1, int(1)));
        assert_eq!(d.u, kn(c, 2, &[(1, int(-5))]));
        assert_eq!(d.norm, PNormValue::Pow(-1));
        assert!(d.norm_bound_checked);
        let perturbed = d.perturbed(&a).unwrap().materialize().unwrap();
        assert_eq!(perturbed.rows(), &[vec![int(1), int(0)], vec![int(0), int(0)]]);
        assert_eq!(d.determinant(&a, &int(0)).unwrap(), Some(int(0)));
        assert_eq!(condition_destabilizer(&a, &int(0), &rat(1, 2), Side::Left).unwrap(), Destabilizer { bound: rat(1, 2), ..d });

        let z = destabilizer(&a, &int(5), &rat(1, 2), Side::Left).unwrap();
        assert!(z.is_zero());
        assert!(z.kernel_holds(&a, &int(5)).unwrap());

        let s = Operator::right_shift(c);
        let d = destabilizer(&s, &int(1), &int(5), Side::Left).unwrap();
        assert!(d.norm_bound_checked && d.kernel_holds(&s, &int(1)).unwrap());
        assert_eq!(d.norm, PNormValue::one());
        assert_eq!(destabilizer(&s, &int(1), &int(1), Side::Left), Err(Error::NotInPseudospectrum));
        assert!(matches!(destabilizer(&s, &int(1), &int(5), Side::Right), Err(Error::UnsupportedFamily(_))));
    }

    #[test]
    fn destabilizers_are_sound_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut built = 0;
        for p in [2u64, 3, 5] {
            let ctx = PrimeContext::new(p).unwrap();
            for _ in 0..150 {
                let a = sample::random_operator(&mut rng, ctx, 4, -2..=2);
                let lambda = sample::random_scalar(&mut rng, ctx, -2..=2, 0.2);
                let eps = ctx.power(rng.gen_range(-2..=2));
                for condition in [false, true] {
                    let r = if condition { condition_destabilizer(&a, &lambda, &eps, Side::Left) } else { destabilizer(&a, &lambda, &eps, Side::Left) };
                    match r {
                        Ok(d) => {
                            built += 1;
                            // ε||A - λI|| = 0 leaves no room for a strict bound
                            let degenerate = condition && d.bound.is_zero();
                            assert!(d.norm_bound_checked || degenerate, "{a:?} {lambda} {eps} {d:?}");
                            assert!(d.kernel_holds(&a, &lambda).unwrap());
                            if let Some(det) = d.determinant(&a, &lambda).unwrap() {
                                assert!(det.is_zero());
                            }
                        }
                        Err(Error::NotInPseudospectrum | Error::NotInConditionPseudospectrum) => {}
                        Err(e) => panic!("{e}"),
                    }
                }
            }
        }
        assert!(built > 200);
    }

    #[test]
    fn random_perturbations_respect_bound() {
        let c = c5();
        let p = random_bounded_perturbation(3, c, PerturbationShape::Matrix(3), &rat(1, 5)).unwrap();
        let m = p.materialize().unwrap();
        assert!(m.rows().iter().flatten().all(|q| c.pnorm(q) <= PNormValue::Pow(-2)));
        assert_eq!(p, random_bounded_perturbation(3, c, PerturbationShape::Matrix(3), &rat(1, 5)).unwrap());
        for seed in 0..200 {
            for bound in [rat(1, 5), rat(7, 3), int(1_000_000), rat(1, 1_000_000)] {
                for shape in [PerturbationShape::Matrix(4), PerturbationShape::RankOneC0 { support: 4 }] {
                    let op = random_bounded_perturbation(seed, c, shape, &bound).unwrap();
                    assert_eq!(c.norm_compare(op.op_norm(), &bound), Ordering::Less);
                }
            }
        }
    }

    #[test]
    fn singularizing_candidates_are_singular() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ctx = PrimeContext::new(3).unwrap();
        for _ in 0..200 {
            let m = sample::random_matrix(&mut rng, ctx, 3, -2..=2);
            let c = singularizing_perturbation(&mut rng, &m);
            assert!(m.add(&c).unwrap().determinant().is_zero());
        }
    }

    #[test]
    fn worked_law_instances_pass() {
        let c = c5();
        let inst = LawInstance { op: diag15(c), lambda: int(0), eps: rat(1, 2), seed: 1, samples: 300 };
        for law in LAWS {
            let v = law_check(law, &inst).unwrap();
            assert!(v.pass, "{law}: {v:?}");
        }
        assert_eq!(law_check("L99", &inst), Err(Error::UnknownLaw("L99".into())));
    }

    #[test]
    fn mutation_flips_a_law_on_worked_instances() {
        let c = c5();
        let instances = vec![
            LawInstance { op: Operator::right_shift(c), lambda: int(1), eps: int(1), seed: 2, samples: 20 },
            LawInstance { op: diag15(c), lambda: int(0), eps: rat(1, 5), seed: 3, samples: 100 },
        ];
        assert!(run_laws(SpectralEngine::exact(), &LAWS, &instances).unwrap().iter().all(|v| v.pass));
        assert!(mutation_flips(1, &instances).unwrap() > 0);
    }
}
