//! JSON documents for operators, vectors, functionals, verdicts,
//! destabilizers and law instances. Rationals travel as `"a"` or `"a/b"`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::inverse::{Annihilator, CanonicalInverse, Certificate, Side, Verdict};
use crate::lab::{Destabilizer, LawInstance};
use crate::matrix::Matrix;
use crate::operator::{Operator, OperatorExpr, ShiftKind};
use crate::padic::{format_rational, parse_rational, PNormValue, PrimeContext, Rational};
use crate::sequence::{Ambient, FinSuppVector, Functional, TailedVector};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorDoc {
    Matrix {
        entries: Vec<Vec<String>>,
    },
    Diagonal {
        #[serde(default)]
        prefix: Vec<String>,
        tail: String,
    },
    RightShift {},
    LeftShift {},
    Shifted {
        inner: Box<OperatorDoc>,
        lambda: String,
    },
    Affine {
        inner: Box<OperatorDoc>,
        #[serde(default = "zero_text")]
        alpha: String,
        beta: String,
    },
    RankOne {
        inner: Box<OperatorDoc>,
        u: VectorDoc,
        phi: FunctionalDoc,
    },
}

fn zero_text() -> String {
    "0".into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AmbientDoc {
    Named(String),
    Kn { kn: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorDoc {
    pub ambient: AmbientDoc,
    #[serde(default)]
    pub entries: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalDoc {
    #[serde(default)]
    pub entries: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TailDoc {
    pub start: usize,
    pub first: String,
    pub ratio: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TailedVectorDoc {
    pub ambient: AmbientDoc,
    pub entries: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailDoc>,
}

pub fn rational(text: &str) -> Result<Rational> {
    parse_rational(text)
}

fn index(text: &str) -> Result<usize> {
    text.parse().map_err(|_| Error::Schema(format!("`{text}` is not a coordinate index")))
}

pub fn context(p: u64) -> Result<PrimeContext> {
    PrimeContext::new(p)
}

impl AmbientDoc {
    pub fn to_ambient(&self) -> Result<Ambient> {
        match self {
            AmbientDoc::Named(s) if s == "c0" => Ok(Ambient::C0),
            AmbientDoc::Named(s) => Err(Error::Schema(format!("unknown ambient `{s}`"))),
            AmbientDoc::Kn { kn } => Ok(Ambient::Kn(*kn)),
        }
    }

    pub fn from_ambient(a: Ambient) -> Self {
        match a {
            Ambient::C0 => AmbientDoc::Named("c0".into()),
            Ambient::Kn(n) => AmbientDoc::Kn { kn: n },
        }
    }
}

fn entries_doc<'a>(it: impl IntoIterator<Item = (&'a usize, &'a Rational)>) -> BTreeMap<String, String> {
    it.into_iter().map(|(i, q)| (i.to_string(), format_rational(q))).collect()
}

fn parse_entries(entries: &BTreeMap<String, String>) -> Result<Vec<(usize, Rational)>> {
    entries.iter().map(|(i, q)| Ok((index(i)?, rational(q)?))).collect()
}

impl VectorDoc {
    pub fn to_vector(&self, ctx: PrimeContext) -> Result<FinSuppVector> {
        FinSuppVector::from_entries(ctx, self.ambient.to_ambient()?, parse_entries(&self.entries)?)
    }

    pub fn from_vector(x: &FinSuppVector) -> Self {
        Self { ambient: AmbientDoc::from_ambient(x.ambient()), entries: entries_doc(x.entries()) }
    }
}

impl FunctionalDoc {
    pub fn to_functional(&self, ctx: PrimeContext) -> Result<Functional> {
        Functional::from_entries(ctx, parse_entries(&self.entries)?)
    }

    pub fn from_functional(phi: &Functional) -> Self {
        Self { entries: entries_doc(phi.coefficients()) }
    }
}

impl TailedVectorDoc {
    pub fn from_tailed(x: &TailedVector) -> Self {
        Self {
            ambient: AmbientDoc::from_ambient(x.ambient()),
            entries: entries_doc(x.head().entries()),
            tail: x.tail().map(|t| TailDoc { start: t.start, first: format_rational(&t.first), ratio: format_rational(&t.ratio) }),
        }
    }

    pub fn to_tailed(&self, ctx: PrimeContext) -> Result<TailedVector> {
        let head = FinSuppVector::from_entries(ctx, self.ambient.to_ambient()?, parse_entries(&self.entries)?)?;
        match &self.tail {
            None => Ok(head.into()),
            Some(t) => TailedVector::with_tail(head, t.start, rational(&t.first)?, rational(&t.ratio)?)
                .map_err(|e| Error::Schema(e.to_string())),
        }
    }
}

impl OperatorDoc {
    pub fn to_expr(&self, ctx: PrimeContext) -> Result<OperatorExpr> {
        Ok(match self {
            OperatorDoc::Matrix { entries } => {
                let rows = entries.iter().map(|r| r.iter().map(|q| rational(q)).collect()).collect::<Result<_>>()?;
                OperatorExpr::Matrix(Matrix::new(ctx, rows)?)
            }
            OperatorDoc::Diagonal { prefix, tail } => OperatorExpr::Diagonal {
                prefix: prefix.iter().map(|q| rational(q)).collect::<Result<_>>()?,
                tail: rational(tail)?,
            },
            OperatorDoc::RightShift {} => OperatorExpr::RightShift,
            OperatorDoc::LeftShift {} => OperatorExpr::LeftShift,
            OperatorDoc::Shifted { inner, lambda } => OperatorExpr::Shifted { inner: Box::new(inner.to_expr(ctx)?), lambda: rational(lambda)? },
            OperatorDoc::Affine { inner, alpha, beta } => OperatorExpr::Affine {
                inner: Box::new(inner.to_expr(ctx)?),
                alpha: rational(alpha)?,
                beta: rational(beta)?,
            },
            OperatorDoc::RankOne { inner, u, phi } => OperatorExpr::RankOne {
                inner: Box::new(inner.to_expr(ctx)?),
                u: u.to_vector(ctx)?,
                phi: phi.to_functional(ctx)?,
            },
        })
    }

    pub fn from_expr(expr: &OperatorExpr) -> Self {
        let q = format_rational;
        match expr {
            OperatorExpr::Matrix(m) => OperatorDoc::Matrix { entries: matrix_entries(m) },
            OperatorExpr::Diagonal { prefix, tail } => OperatorDoc::Diagonal { prefix: prefix.iter().map(q).collect(), tail: q(tail) },
            OperatorExpr::RightShift => OperatorDoc::RightShift {},
            OperatorExpr::LeftShift => OperatorDoc::LeftShift {},
            OperatorExpr::Shifted { inner, lambda } => OperatorDoc::Shifted { inner: Box::new(Self::from_expr(inner)), lambda: q(lambda) },
            OperatorExpr::Affine { inner, alpha, beta } => {
                OperatorDoc::Affine { inner: Box::new(Self::from_expr(inner)), alpha: q(alpha), beta: q(beta) }
            }
            OperatorExpr::RankOne { inner, u, phi } => OperatorDoc::RankOne {
                inner: Box::new(Self::from_expr(inner)),
                u: VectorDoc::from_vector(u),
                phi: FunctionalDoc::from_functional(phi),
            },
        }
    }
}

pub fn matrix_entries(m: &Matrix) -> Vec<Vec<String>> {
    m.rows().iter().map(|r| r.iter().map(format_rational).collect()).collect()
}

pub fn operator(p: u64, doc: &OperatorDoc) -> Result<Operator> {
    let ctx = context(p)?;
    Operator::from_expr(ctx, doc.to_expr(ctx)?)
}

/// `{"p": …, "op": …}`.
pub fn operator_value(a: &Operator) -> Value {
    json!({"p": a.context().p(), "op": OperatorDoc::from_expr(a.expr())})
}

pub fn vector_value(x: &FinSuppVector) -> Value {
    serde_json::to_value(VectorDoc::from_vector(x)).expect("serializable")
}

pub fn functional_value(phi: &Functional) -> Value {
    serde_json::to_value(FunctionalDoc::from_functional(phi)).expect("serializable")
}

pub fn tailed_value(x: &TailedVector) -> Value {
    serde_json::to_value(TailedVectorDoc::from_tailed(x)).expect("serializable")
}

pub fn matrix_value(m: &Matrix) -> Value {
    json!(matrix_entries(m))
}

fn certificate_value(c: &Certificate) -> Value {
    let body = match c {
        Certificate::ExactInverse(m) => json!({"inverse": matrix_value(m)}),
        Certificate::KernelVector(v) => json!({"vector": tailed_value(v)}),
        Certificate::NonSurjectivity { missed, annihilator } => {
            let ann = match annihilator {
                Annihilator::Functional(phi) => json!({"type": "functional", "entries": functional_value(phi)["entries"]}),
                Annihilator::Geometric { ratio } => json!({"type": "geometric", "ratio": format_rational(ratio)}),
            };
            json!({"missed": vector_value(missed), "annihilator": ann})
        }
        Certificate::CanonicalInverse(CanonicalInverse::Diagonal { prefix, tail }) => {
            json!({"diagonal": {"prefix": prefix.iter().map(format_rational).collect::<Vec<_>>(), "tail": format_rational(tail)}})
        }
        Certificate::CanonicalInverse(CanonicalInverse::Shift { form, side }) => json!({"shift": {
            "kind": match form.kind { ShiftKind::Right => "right_shift", ShiftKind::Left => "left_shift" },
            "beta": format_rational(&form.beta),
            "gamma": format_rational(&form.gamma),
            "side": side,
        }}),
        Certificate::LowerBoundIsometry { gamma } => json!({"gamma": gamma}),
    };
    let mut v = body;
    v["type"] = json!(c.kind());
    v
}

pub fn verdict_value(v: &Verdict) -> Value {
    json!({
        "invertible": v.invertible,
        "min_inverse_norm": v.min_inverse_norm,
        "side": v.side,
        "certificate": certificate_value(&v.certificate),
    })
}

pub fn destabilizer_value(d: &Destabilizer) -> Value {
    json!({
        "u": vector_value(&d.u),
        "phi": functional_value(&d.phi),
        "kernel_witness": tailed_value(&d.kernel_witness),
        "norm": d.norm,
        "bound": format_rational(&d.bound),
        "norm_bound_checked": d.norm_bound_checked,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawInstanceDoc {
    pub p: u64,
    pub op: OperatorDoc,
    pub lambda: String,
    pub epsilon: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    1000
}

impl LawInstanceDoc {
    pub fn to_instance(&self) -> Result<LawInstance> {
        let eps = rational(&self.epsilon)?;
        crate::spectral::check_epsilon(&eps)?;
        Ok(LawInstance { op: operator(self.p, &self.op)?, lambda: rational(&self.lambda)?, eps, seed: self.seed, samples: self.samples })
    }

    pub fn from_instance(inst: &LawInstance) -> Self {
        Self {
            p: inst.op.context().p(),
            op: OperatorDoc::from_expr(inst.op.expr()),
            lambda: format_rational(&inst.lambda),
            epsilon: format_rational(&inst.eps),
            seed: inst.seed,
            samples: inst.samples,
        }
    }
}

pub fn law_instance_value(inst: &LawInstance) -> Value {
    serde_json::to_value(LawInstanceDoc::from_instance(inst)).expect("serializable")
}

/// Parses a norm document `{"zero":true}` or `{"pow":e}`.
pub fn norm(v: &Value) -> Result<PNormValue> {
    serde_json::from_value(v.clone()).map_err(|e| Error::Schema(e.to_string()))
}

pub fn side_text(side: Side) -> String {
    side.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::{int, rat};
    use crate::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn operator_documents_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in [2u64, 3, 5] {
            let ctx = PrimeContext::new(p).unwrap();
            for _ in 0..100 {
                let a = sample::random_operator(&mut rng, ctx, 4, -3..=3).shift_by_lambda(&sample::random_scalar(&mut rng, ctx, -2..=2, 0.3));
                let text = serde_json::to_string(&operator_value(&a)).unwrap();
                let v: Value = serde_json::from_str(&text).unwrap();
                let doc: OperatorDoc = serde_json::from_value(v["op"].clone()).unwrap();
                assert_eq!(operator(v["p"].as_u64().unwrap(), &doc).unwrap(), a);
            }
        }
    }

    #[test]
    fn parses_documented_shapes() {
        let doc: OperatorDoc = serde_json::from_str(r#"{"kind":"matrix","entries":[["1","0"],["0","5"]]}"#).unwrap();
        let a = operator(5, &doc).unwrap();
        assert_eq!(a.op_norm(), PNormValue::one());
        let doc: OperatorDoc = serde_json::from_str(r#"{"kind":"right_shift"}"#).unwrap();
        assert_eq!(operator(5, &doc).unwrap(), Operator::right_shift(PrimeContext::new(5).unwrap()));
        let doc: OperatorDoc = serde_json::from_str(
            r#"{"kind":"rank_one","inner":{"kind":"left_shift"},"u":{"ambient":"c0","entries":{"0":"1/5"}},"phi":{"entries":{"2":"3"}}}"#,
        )
        .unwrap();
        assert!(operator(5, &doc).is_ok());
        let v: VectorDoc = serde_json::from_str(r#"{"ambient":{"kn":3},"entries":{"2":"-7/2"}}"#).unwrap();
        let x = v.to_vector(PrimeContext::new(7).unwrap()).unwrap();
        assert_eq!(x.get(2), rat(-7, 2));
        assert_eq!(VectorDoc::from_vector(&x), v);
    }

    #[test]
    fn rejects_malformed_documents() {
        let ctx = PrimeContext::new(5).unwrap();
        let bad = [
            r#"{"kind":"matrix","entries":[["1","0"],["0"]]}"#,
            r#"{"kind":"matrix","entries":[["1/0"]]}"#,
            r#"{"kind":"diagonal","tail":"x"}"#,
            r#"{"kind":"affine","inner":{"kind":"right_shift"},"beta":"0"}"#,
        ];
        for text in bad {
            let doc: OperatorDoc = serde_json::from_str(text).unwrap();
            let err = operator(5, &doc).unwrap_err();
            assert!(err.is_schema(), "{text}: {err}");
        }
        assert!(serde_json::from_str::<OperatorDoc>(r#"{"kind":"spiral"}"#).is_err());
        assert!(serde_json::from_str::<OperatorDoc>(r#"{"kind":"right_shift","extra":1}"#).is_err());
        let v: VectorDoc = serde_json::from_str(r#"{"ambient":{"kn":2},"entries":{"5":"1"}}"#).unwrap();
        assert!(v.to_vector(ctx).unwrap_err().is_schema());
        let v: VectorDoc = serde_json::from_str(r#"{"ambient":"l2","entries":{}}"#).unwrap();
        assert!(v.to_vector(ctx).unwrap_err().is_schema());
        assert_eq!(operator(6, &OperatorDoc::RightShift {}), Err(Error::NotPrime(6)));
    }

    #[test]
    fn tailed_vectors_round_trip() {
        let ctx = PrimeContext::new(3).unwrap();
        let head = FinSuppVector::from_entries(ctx, Ambient::C0, [(0, int(2))]).unwrap();
        let x = TailedVector::with_tail(head, 2, int(1), int(3)).unwrap();
        let doc = TailedVectorDoc::from_tailed(&x);
        assert_eq!(doc.to_tailed(ctx).unwrap(), x);
    }

    #[test]
    fn verdict_document_shape() {
        let ctx = PrimeContext::new(5).unwrap();
        let a = Operator::matrix(Matrix::new(ctx, vec![vec![int(1), int(0)], vec![int(0), int(5)]]).unwrap());
        let v = verdict_value(&crate::inverse::decide(&a, Side::Left).unwrap());
        assert_eq!(v["invertible"], json!(true));
        assert_eq!(v["min_inverse_norm"], json!({"pow": 1}));
        assert_eq!(v["certificate"]["type"], json!("exact_inverse"));
        let s = crate::inverse::decide(&Operator::right_shift(ctx), Side::Right).unwrap();
        let v = verdict_value(&s);
        assert_eq!(v["min_inverse_norm"], Value::Null);
        assert_eq!(v["certificate"]["annihilator"], json!({"type": "geometric", "ratio": "0"}));
    }

    #[test]
    fn law_instances_round_trip() {
        let insts = crate::lab::standard_ensemble(1);
        for inst in insts.iter().take(40) {
            let doc = LawInstanceDoc::from_instance(inst);
            let back: LawInstanceDoc = serde_json::from_value(serde_json::to_value(&doc).unwrap()).unwrap();
            assert_eq!(&back.to_instance().unwrap(), inst);
        }
    }
}
