//! Membership in the left/right spectra, ε-pseudospectra and condition
//! ε-pseudospectra, the constant `C_A = inf_λ ||A - λI||`, symbolic
//! regions for diagonals and shifts, and grid scans.

use std::collections::BTreeSet;
use std::cmp::Ordering;
use std::fmt;
use std::fmt::Write as _;
use std::ops::RangeInclusive;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inverse::{decide, Side, Verdict};
use crate::operator::{Operator, OperatorExpr, ShiftKind};
use crate::padic::{format_rational, parse_rational, PNormValue, PrimeContext, Rational, Valuation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    Spectrum,
    Pseudospectrum,
    ConditionPseudospectrum,
}

pub(crate) fn check_epsilon(eps: &Rational) -> Result<()> {
    if eps.is_positive() {
        Ok(())
    } else {
        Err(Error::NonPositiveEpsilon(format_rational(eps)))
    }
}

/// `A - λI` together with its norm and the one-sided verdict.
#[derive(Debug, Clone)]
pub struct Resolvent {
    pub op_norm: PNormValue,
    pub verdict: Verdict,
}

/// Evaluates the membership predicates.
///
/// `inverse_norm_shift = k` multiplies every reported minimal inverse norm
/// by `p^k`; only the harness self-test sets it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SpectralEngine {
    pub inverse_norm_shift: i64,
}

impl SpectralEngine {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn mutated(shift: i64) -> Self {
        Self { inverse_norm_shift: shift }
    }

    pub fn resolvent(&self, a: &Operator, lambda: &Rational, side: Side) -> Result<Resolvent> {
        let shifted = a.shift_by_lambda(lambda);
        let mut verdict = decide(&shifted, side)?;
        verdict.min_inverse_norm = verdict.min_inverse_norm.map(|m| m.scale_pow(self.inverse_norm_shift));
        Ok(Resolvent { op_norm: shifted.op_norm(), verdict })
    }

    pub fn in_spectrum(&self, a: &Operator, lambda: &Rational, side: Side) -> Result<bool> {
        Ok(!self.resolvent(a, lambda, side)?.verdict.invertible)
    }

    pub fn in_pseudospectrum(&self, a: &Operator, lambda: &Rational, eps: &Rational, side: Side) -> Result<bool> {
        check_epsilon(eps)?;
        let r = self.resolvent(a, lambda, side)?;
        Ok(pseudo_member(a.context(), &r, eps))
    }

    pub fn in_condition_pseudospectrum(&self, a: &Operator, lambda: &Rational, eps: &Rational, side: Side) -> Result<bool> {
        check_epsilon(eps)?;
        let r = self.resolvent(a, lambda, side)?;
        Ok(condition_member(a.context(), &r, eps))
    }

    pub fn member(&self, a: &Operator, lambda: &Rational, eps: Option<&Rational>, side: Side, kind: SetKind) -> Result<bool> {
        match (kind, eps) {
            (SetKind::Spectrum, _) => self.in_spectrum(a, lambda, side),
            (SetKind::Pseudospectrum, Some(e)) => self.in_pseudospectrum(a, lambda, e, side),
            (SetKind::ConditionPseudospectrum, Some(e)) => self.in_condition_pseudospectrum(a, lambda, e, side),
            (_, None) => Err(Error::NonPositiveEpsilon("missing".into())),
        }
    }

    /// All six left/right memberships at one point.
    pub fn membership(&self, a: &Operator, lambda: &Rational, eps: &Rational) -> Result<Membership> {
        check_epsilon(eps)?;
        let ctx = a.context();
        let left = self.resolvent(a, lambda, Side::Left)?;
        let right = self.resolvent(a, lambda, Side::Right)?;
        Ok(Membership {
            sigma_l: !left.verdict.invertible,
            sigma_r: !right.verdict.invertible,
            sigma_l_eps: pseudo_member(ctx, &left, eps),
            sigma_r_eps: pseudo_member(ctx, &right, eps),
            lambda_l_eps: condition_member(ctx, &left, eps),
            lambda_r_eps: condition_member(ctx, &right, eps),
            op_norm: left.op_norm,
            min_left: left.verdict.min_inverse_norm,
            min_right: right.verdict.min_inverse_norm,
        })
    }
}

fn pseudo_member(ctx: PrimeContext, r: &Resolvent, eps: &Rational) -> bool {
    match r.verdict.min_inverse_norm {
        None => true,
        Some(m) => ctx.norm_compare(m, &eps.recip()) == Ordering::Greater,
    }
}

fn condition_member(ctx: PrimeContext, r: &Resolvent, eps: &Rational) -> bool {
    match r.verdict.min_inverse_norm {
        None => true,
        Some(m) => ctx.norm_compare(r.op_norm * m, &eps.recip()) == Ordering::Greater,
    }
}

pub fn in_spectrum(a: &Operator, lambda: &Rational, side: Side) -> Result<bool> {
    SpectralEngine::exact().in_spectrum(a, lambda, side)
}

pub fn in_pseudospectrum(a: &Operator, lambda: &Rational, eps: &Rational, side: Side) -> Result<bool> {
    SpectralEngine::exact().in_pseudospectrum(a, lambda, eps, side)
}

pub fn in_condition_pseudospectrum(a: &Operator, lambda: &Rational, eps: &Rational, side: Side) -> Result<bool> {
    SpectralEngine::exact().in_condition_pseudospectrum(a, lambda, eps, side)
}

fn largest_power_below(ctx: PrimeContext, t: &Rational) -> PNormValue {
    PNormValue::Pow(ctx.greatest_power_below(t))
}

/// Largest `max_{d,d'} |d - d'|` over a finite set.
fn diameter(ctx: PrimeContext, values: &[Rational]) -> PNormValue {
    // ultrametric: every point realizes the diameter as its farthest distance
    values.iter().map(|d| ctx.pnorm(&(d - &values[0]))).max().unwrap_or(PNormValue::Zero)
}

/// `inf_λ ||A - λI||`, attained at some `λ ∈ Q`.
pub fn c_a(a: &Operator) -> Result<PNormValue> {
    let ctx = a.context();
    if a.scalar_value().is_some() {
        return Err(Error::ScalarOperator);
    }
    let normalized = a.normalized();
    match normalized.expr() {
        OperatorExpr::Matrix(m) => {
            let n = m.n();
            let diag: Vec<Rational> = (0..n).map(|i| m.get(i, i).clone()).collect();
            let off = (0..n)
                .flat_map(|i| (0..n).filter(move |j| *j != i).map(move |j| (i, j)))
                .map(|(i, j)| ctx.pnorm(m.get(i, j)))
                .max()
                .unwrap_or(PNormValue::Zero);
            Ok(off.max(diameter(ctx, &diag)))
        }
        OperatorExpr::Diagonal { prefix, tail } => {
            let mut values = prefix.clone();
            values.push(tail.clone());
            Ok(diameter(ctx, &values))
        }
        expr => match normalized.shift_form() {
            Some(f) => Ok(ctx.pnorm(&f.beta)),
            None => Err(Error::UnsupportedFamily(format!("{expr:?}"))),
        },
    }
}

/// The closed ball `{λ : |λ - center| <= radius}`; radius `0` is a point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ball {
    pub center: Rational,
    pub radius: PNormValue,
}

impl Ball {
    pub fn contains(&self, ctx: PrimeContext, lambda: &Rational) -> bool {
        ctx.pnorm(&(lambda - &self.center)) <= self.radius
    }
}

/// A union of intersections of balls. An empty clause is all of `K`;
/// no clauses is the empty set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionDescription {
    pub ctx: PrimeContext,
    pub clauses: Vec<Vec<Ball>>,
}

impl RegionDescription {
    fn empty(ctx: PrimeContext) -> Self {
        Self { ctx, clauses: Vec::new() }
    }

    fn everything(ctx: PrimeContext) -> Self {
        Self { ctx, clauses: vec![Vec::new()] }
    }

    fn balls(ctx: PrimeContext, balls: impl IntoIterator<Item = Ball>) -> Self {
        Self { ctx, clauses: balls.into_iter().map(|b| vec![b]).collect() }
    }

    pub fn contains(&self, lambda: &Rational) -> bool {
        self.clauses.iter().any(|c| c.iter().all(|b| b.contains(self.ctx, lambda)))
    }
}

impl fmt::Display for RegionDescription {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.clauses.is_empty() {
            return f.write_str("empty");
        }
        let parts: Vec<String> = self
            .clauses
            .iter()
            .map(|c| {
                if c.is_empty() {
                    "all".to_string()
                } else {
                    c.iter()
                        .map(|b| format!("|λ - {}| <= {}", format_rational(&b.center), b.radius.render(&self.ctx)))
                        .collect::<Vec<_>>()
                        .join(" and ")
                }
            })
            .collect();
        f.write_str(&parts.join(" or "))
    }
}

/// Symbolic description of a spectral set of a diagonal or shift-family
/// operator.
pub fn closed_form_region(a: &Operator, eps: Option<&Rational>, side: Side, kind: SetKind) -> Result<RegionDescription> {
    let ctx = a.context();
    if let Some(e) = eps {
        check_epsilon(e)?;
    }
    let eps = match (kind, eps) {
        (SetKind::Spectrum, _) => None,
        (_, Some(e)) => Some(e),
        (_, None) => return Err(Error::NonPositiveEpsilon("missing".into())),
    };
    let normalized = a.normalized();
    if let OperatorExpr::Diagonal { prefix, tail } = normalized.expr() {
        let mut values: Vec<Rational> = prefix.clone();
        values.push(tail.clone());
        let distinct: Vec<Rational> = values.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
        let point_balls = |radius: PNormValue| distinct.iter().map(move |d| Ball { center: d.clone(), radius });
        return Ok(match eps {
            None => RegionDescription::balls(ctx, point_balls(PNormValue::Zero)),
            Some(e) if kind == SetKind::Pseudospectrum => RegionDescription::balls(ctx, point_balls(largest_power_below(ctx, e))),
            Some(e) => {
                // ||A - λ|| = max(m, δ) with m the distance to the nearest entry
                if *e > Rational::one() {
                    RegionDescription::everything(ctx)
                } else {
                    let delta = diameter(ctx, &distinct);
                    let radius = match delta {
                        PNormValue::Zero => PNormValue::Zero,
                        d => largest_power_below(ctx, &(e * ctx.norm_to_rational(d))),
                    };
                    RegionDescription::balls(ctx, point_balls(radius))
                }
            }
        });
    }
    let form = match normalized.expr() {
        OperatorExpr::Matrix(_) | OperatorExpr::RankOne { .. } => None,
        _ => normalized.shift_form(),
    }
    .ok_or_else(|| Error::UnsupportedFamily("closed forms cover diagonals and shifts".into()))?;
    // A - λ = β(S - μ) with μ = (λ - γ)/β, so |μ| <= 1 iff |λ - γ| <= |β|.
    let b = ctx.pnorm(&form.beta);
    let ball = |radius| Ball { center: form.gamma.clone(), radius };
    let unit = ball(b);
    let inside = ball(b.scale_pow(-1));
    let left_side = side == Side::Left;
    let right_only = side == Side::Right;
    // shape of σ: S fails right, T fails left (and both fail two-sided)
    let spectrum = match form.kind {
        ShiftKind::Right if left_side => RegionDescription::empty(ctx),
        ShiftKind::Right => RegionDescription::balls(ctx, [unit.clone()]),
        ShiftKind::Left if right_only => RegionDescription::empty(ctx),
        ShiftKind::Left => RegionDescription::balls(ctx, [inside]),
    };
    Ok(match (kind, eps) {
        (SetKind::Spectrum, _) => spectrum,
        (SetKind::Pseudospectrum, Some(e)) => {
            // min inverse norm 1/(|β| max(1, |μ|)) > 1/ε iff |β| < ε and |λ - γ| < ε
            let mut region = spectrum;
            if ctx.norm_compare(b, e) == Ordering::Less {
                region.clauses.push(vec![ball(largest_power_below(ctx, e))]);
            }
            region
        }
        // the condition number is 1 wherever an inverse exists
        (_, Some(e)) => {
            if *e > Rational::one() {
                RegionDescription::everything(ctx)
            } else {
                spectrum
            }
        }
        (_, None) => unreachable!("checked above"),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Membership {
    pub sigma_l: bool,
    pub sigma_r: bool,
    pub sigma_l_eps: bool,
    pub sigma_r_eps: bool,
    pub lambda_l_eps: bool,
    pub lambda_r_eps: bool,
    pub op_norm: PNormValue,
    pub min_left: Option<PNormValue>,
    pub min_right: Option<PNormValue>,
}

impl Membership {
    /// `σ ⊆ σ_ε` and `σ ⊆ Λ_ε` on both sides.
    pub fn inclusions_hold(&self) -> bool {
        (!self.sigma_l || (self.sigma_l_eps && self.lambda_l_eps)) && (!self.sigma_r || (self.sigma_r_eps && self.lambda_r_eps))
    }

    fn flags(&self) -> [bool; 6] {
        [self.sigma_l, self.sigma_r, self.sigma_l_eps, self.sigma_r_eps, self.lambda_l_eps, self.lambda_r_eps]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionRow {
    pub lambda: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub membership: Option<Membership>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unsupported: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionReport {
    pub p: u64,
    pub epsilon: String,
    pub rows: Vec<RegionRow>,
}

/// `λ = u·p^v` for every unit `u` and valuation `v`, preceded by `0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec {
    pub units: Vec<Rational>,
    pub valuations: RangeInclusive<i64>,
}

impl GridSpec {
    /// Units `1, …, p-1, 1+p` and valuations `-3..=3`.
    pub fn standard(ctx: PrimeContext) -> Self {
        let p = ctx.p() as i64;
        let mut units: Vec<Rational> = (1..p).map(|u| Rational::from_integer(u.into())).collect();
        units.push(Rational::from_integer((1 + p).into()));
        Self { units, valuations: -3..=3 }
    }

    pub fn points(&self, ctx: PrimeContext) -> Vec<Rational> {
        let mut out = vec![Rational::zero()];
        for v in self.valuations.clone() {
            for u in &self.units {
                out.push(u * ctx.power(v));
            }
        }
        out
    }
}

pub fn scan(a: &Operator, grid: &[Rational], eps: &Rational, engine: SpectralEngine) -> Result<RegionReport> {
    check_epsilon(eps)?;
    let rows = grid
        .par_iter()
        .map(|lambda| match engine.membership(a, lambda, eps) {
            Ok(m) => RegionRow { lambda: format_rational(lambda), membership: Some(m), unsupported: None },
            Err(e) => RegionRow { lambda: format_rational(lambda), membership: None, unsupported: Some(e.to_string()) },
        })
        .collect();
    Ok(RegionReport { p: a.context().p(), epsilon: format_rational(eps), rows })
}

pub const CSV_HEADER: &str = "lambda,sigma_l,sigma_r,sigma_l_eps,sigma_r_eps,lambda_l_eps,lambda_r_eps,op_norm,min_left,min_right";

impl RegionReport {
    pub fn inclusions_hold(&self) -> bool {
        self.rows.iter().filter_map(|r| r.membership.as_ref()).all(Membership::inclusions_hold)
    }

    fn context(&self) -> PrimeContext {
        PrimeContext::new(self.p).expect("reports carry a prime")
    }

    pub fn to_csv(&self) -> String {
        let ctx = self.context();
        let norm = |n: Option<PNormValue>| n.map_or_else(|| "inf".to_string(), |v| v.render(&ctx));
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            match &row.membership {
                Some(m) => {
                    let flags: Vec<&str> = m.flags().iter().map(|b| if *b { "1" } else { "0" }).collect();
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{}",
                        row.lambda,
                        flags.join(","),
                        m.op_norm.render(&ctx),
                        norm(m.min_left),
                        norm(m.min_right)
                    );
                }
                None => {
                    let _ = writeln!(out, "{}{}", row.lambda, ",unsupported".repeat(9));
                }
            }
        }
        out
    }

    /// Heat grid: columns are valuations of `λ` (`0` last), rows are unit
    /// parts, shading counts the sets containing `λ`.
    pub fn to_svg(&self) -> String {
        const CELL: i64 = 28;
        const MARGIN: i64 = 60;
        let ctx = self.context();
        let mut cells = Vec::new();
        let mut units: Vec<Rational> = Vec::new();
        for row in &self.rows {
            let lambda = parse_rational(&row.lambda).expect("rendered by this report");
            let (v, unit) = match ctx.valuation(&lambda) {
                Valuation::Infinite => (None, Rational::zero()),
                Valuation::Finite(v) => (Some(v), &lambda / ctx.power(v)),
            };
            let y = units.iter().position(|u| *u == unit).unwrap_or_else(|| {
                units.push(unit.clone());
                units.len() - 1
            });
            cells.push((v, y, row));
        }
        let vals: Vec<i64> = cells.iter().filter_map(|c| c.0).collect();
        let (vmin, vmax) = (vals.iter().min().copied().unwrap_or(0), vals.iter().max().copied().unwrap_or(0));
        let cols = vmax - vmin + 2;
        let width = MARGIN + cols * CELL + 10;
        let height = MARGIN + units.len() as i64 * CELL + 10;
        let mut svg = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" font-family=\"monospace\" font-size=\"10\">\n"
        );
        let _ = writeln!(svg, "<text x=\"4\" y=\"14\">p={} eps={}</text>", self.p, self.epsilon);
        for v in vmin..=vmax {
            let _ = writeln!(svg, "<text x=\"{}\" y=\"{}\">{}</text>", MARGIN + (v - vmin) * CELL + 4, MARGIN - 6, v);
        }
        let _ = writeln!(svg, "<text x=\"{}\" y=\"{}\">0</text>", MARGIN + (cols - 1) * CELL + 4, MARGIN - 6);
        for (i, u) in units.iter().enumerate() {
            let _ = writeln!(svg, "<text x=\"4\" y=\"{}\">{}</text>", MARGIN + i as i64 * CELL + 18, format_rational(u));
        }
        for (v, y, row) in cells {
            let x = MARGIN + v.map_or(cols - 1, |v| v - vmin) * CELL;
            let fill = match &row.membership {
                Some(m) => {
                    let level = 255 - 40 * m.flags().iter().filter(|b| **b).count() as i64;
                    format!("rgb({level},{level},255)")
                }
                None => "rgb(255,200,200)".to_string(),
            };
            let _ = writeln!(
                svg,
                "<rect x=\"{x}\" y=\"{}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"{fill}\" stroke=\"#888\"><title>{}</title></rect>",
                MARGIN + y as i64 * CELL,
                row.lambda
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}
