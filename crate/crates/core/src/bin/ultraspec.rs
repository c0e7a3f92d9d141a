//! Command-line front end. Every subcommand reads one JSON document (a path,
//! inline JSON, or `-` for stdin) and writes JSON to stdout.
//!
//! Exit codes: 0 success, 1 law failure, 2 schema violation, 3 contract error.

use std::io::{self, Read, Write};
use std::ops::RangeInclusive;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use ultraspec::inverse::{decide, Side};
use ultraspec::json::{self, LawInstanceDoc, OperatorDoc, VectorDoc};
use ultraspec::lab::{self, LawInstance, LAWS};
use ultraspec::operator::Operator;
use ultraspec::spectral::{scan, GridSpec, SetKind, SpectralEngine};
use ultraspec::Error;

#[derive(Parser)]
#[command(name = "ultraspec", version, about = "Exact one-sided spectra and pseudospectra over p-adic fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Operator norm of `op`, or sup norm of `vector`.
    Norm { input: String },
    /// Decide one-sided invertibility and print the certificate.
    Invert { input: String },
    /// Membership of `lambda` in a spectrum, pseudospectrum or condition pseudospectrum.
    Member { input: String },
    /// Membership table over a grid of `lambda`.
    Scan {
        input: String,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Comma-separated units, e.g. `1,2,6`.
        #[arg(long)]
        grid_units: Option<String>,
        /// Inclusive valuation range, e.g. `-3..3`.
        #[arg(long, allow_hyphen_values = true)]
        grid_valuations: Option<String>,
    },
    /// Vector attaining the resolvent bound at `lambda`.
    Witness { input: String },
    /// Rank-one perturbation putting `lambda` into the spectrum.
    Destabilize {
        input: String,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check laws on a list of instances, one verdict per line.
    Laws {
        /// Instance document; omit with `--standard`.
        input: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Run the seeded standard ensemble instead of an input document.
        #[arg(long)]
        standard: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NormRequest {
    p: u64,
    op: Option<OperatorDoc>,
    vector: Option<VectorDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InvertRequest {
    p: u64,
    op: OperatorDoc,
    #[serde(default = "left")]
    side: Side,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MemberRequest {
    p: u64,
    op: OperatorDoc,
    lambda: String,
    epsilon: Option<String>,
    #[serde(default = "left")]
    side: Side,
    kind: SetKind,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScanRequest {
    p: u64,
    op: OperatorDoc,
    epsilon: String,
    grid: Option<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PointRequest {
    p: u64,
    op: OperatorDoc,
    lambda: String,
    epsilon: String,
    #[serde(default = "left")]
    side: Side,
    #[serde(default = "pseudospectrum")]
    kind: SetKind,
    #[serde(default)]
    samples: usize,
    #[serde(default)]
    seed: u64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LawsRequest {
    List(Vec<LawInstanceDoc>),
    Doc(LawsDoc),
    One(Box<LawInstanceDoc>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LawsDoc {
    laws: Option<Vec<String>>,
    instances: Vec<LawInstanceDoc>,
}

fn left() -> Side {
    Side::Left
}

fn pseudospectrum() -> SetKind {
    SetKind::Pseudospectrum
}

/// Failure modes mapped onto exit codes.
enum Failure {
    Schema(String),
    Contract(String),
    Laws,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_schema() { Failure::Schema(e.to_string()) } else { Failure::Contract(e.to_string()) }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Schema(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Contract(e.to_string())
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn read_input(input: &str) -> Outcome<String> {
    let trimmed = input.trim_start();
    if input == "-" {
        let mut buf = String::new();
        io::stdin().read_to_string(&mut buf)?;
        Ok(buf)
    } else if trimmed.starts_with('{') || trimmed.starts_with('[') {
        Ok(input.to_string())
    } else {
        std::fs::read_to_string(input).map_err(|e| Failure::Schema(format!("cannot read {input}: {e}")))
    }
}

fn parse<T: DeserializeOwned>(input: &str) -> Outcome<T> {
    Ok(serde_json::from_str(&read_input(input)?)?)
}

fn epsilon(text: Option<&str>, kind: SetKind) -> Outcome<Option<ultraspec::padic::Rational>> {
    match (text, kind) {
        (None, SetKind::Spectrum) => Ok(None),
        (None, _) => Err(Failure::Schema("missing field `epsilon`".into())),
        (Some(t), _) => Ok(Some(json::rational(t)?)),
    }
}

fn parse_units(text: &str) -> Outcome<Vec<ultraspec::padic::Rational>> {
    text.split(',').map(|u| json::rational(u.trim()).map_err(Failure::from)).collect()
}

fn parse_valuations(text: &str) -> Outcome<RangeInclusive<i64>> {
    let bad = || Failure::Schema(format!("valuation range `{text}` is not of the form lo..hi"));
    let (lo, hi) = text.split_once("..").ok_or_else(bad)?;
    let hi = hi.strip_prefix('=').unwrap_or(hi);
    let lo: i64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: i64 = hi.trim().parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(bad());
    }
    Ok(lo..=hi)
}

fn emit(out: &mut impl Write, v: &Value) -> Outcome<()> {
    writeln!(out, "{}", serde_json::to_string(v)?)?;
    Ok(())
}

fn run(command: Command, out: &mut impl Write) -> Outcome<()> {
    match command {
        Command::Norm { input } => {
            let req: NormRequest = parse(&input)?;
            let ctx = json::context(req.p)?;
            let norm = match (req.op, req.vector) {
                (Some(op), None) => json::operator(req.p, &op)?.op_norm(),
                (None, Some(v)) => v.to_vector(ctx)?.sup_norm(),
                _ => return Err(Failure::Schema("exactly one of `op` and `vector` is required".into())),
            };
            emit(out, &json!({ "norm": norm }))
        }
        Command::Invert { input } => {
            let req: InvertRequest = parse(&input)?;
            let a = json::operator(req.p, &req.op)?;
            emit(out, &json::verdict_value(&decide(&a, req.side)?))
        }
        Command::Member { input } => {
            let req: MemberRequest = parse(&input)?;
            let a = json::operator(req.p, &req.op)?;
            let lambda = json::rational(&req.lambda)?;
            let eps = epsilon(req.epsilon.as_deref(), req.kind)?;
            let member = SpectralEngine::exact().member(&a, &lambda, eps.as_ref(), req.side, req.kind)?;
            emit(out, &json!({ "member": member }))
        }
        Command::Scan { input, format, grid_units, grid_valuations } => {
            let req: ScanRequest = parse(&input)?;
            let ctx = json::context(req.p)?;
            let a = json::operator(req.p, &req.op)?;
            let eps = json::rational(&req.epsilon)?;
            let grid = match req.grid {
                Some(points) => points.iter().map(|t| json::rational(t)).collect::<ultraspec::Result<Vec<_>>>()?,
                None => {
                    let mut spec = GridSpec::standard(ctx);
                    if let Some(u) = grid_units {
                        spec.units = parse_units(&u)?;
                    }
                    if let Some(v) = grid_valuations {
                        spec.valuations = parse_valuations(&v)?;
                    }
                    spec.points(ctx)
                }
            };
            let report = scan(&a, &grid, &eps, SpectralEngine::exact())?;
            match format {
                Format::Json => emit(out, &serde_json::to_value(&report)?),
                Format::Csv => Ok(out.write_all(report.to_csv().as_bytes())?),
                Format::Svg => Ok(out.write_all(report.to_svg().as_bytes())?),
            }
        }
        Command::Witness { input } => {
            let req: PointRequest = parse(&input)?;
            let (a, lambda, eps) = point(&req)?;
            let x = match req.kind {
                SetKind::Pseudospectrum => lab::pseudo_witness(&a, &lambda, &eps)?,
                SetKind::ConditionPseudospectrum => lab::condition_witness(&a, &lambda, &eps)?,
                SetKind::Spectrum => return Err(Failure::Schema("witness requires a pseudospectrum kind".into())),
            };
            emit(out, &json!({ "witness": json::vector_value(&x) }))
        }
        Command::Destabilize { input, seed } => {
            let req: PointRequest = parse(&input)?;
            let (a, lambda, eps) = point(&req)?;
            let d = match req.kind {
                SetKind::Pseudospectrum => lab::destabilizer(&a, &lambda, &eps, req.side)?,
                SetKind::ConditionPseudospectrum => lab::condition_destabilizer(&a, &lambda, &eps, req.side)?,
                SetKind::Spectrum => return Err(Failure::Schema("destabilize requires a pseudospectrum kind".into())),
            };
            let mut doc = json::destabilizer_value(&d);
            if req.samples > 0 && a.is_finite_dimensional() {
                let m = a.materialize()?;
                let r = lab::sample_singularizing(&m, &lambda, &d.bound, true, seed.unwrap_or(req.seed), req.samples);
                doc["sampling"] = json!({
                    "seed": seed.unwrap_or(req.seed),
                    "samples": r.samples,
                    "below_bound": r.below_bound,
                    "singular": r.singular,
                });
            }
            emit(out, &doc)
        }
        Command::Laws { input, seed, standard } => {
            let (laws, instances) = match (input, standard) {
                (None, true) => (None, lab::standard_ensemble(seed.unwrap_or(0))),
                (Some(input), false) => {
                    let (laws, docs) = match parse::<LawsRequest>(&input)? {
                        LawsRequest::List(docs) => (None, docs),
                        LawsRequest::Doc(d) => (d.laws, d.instances),
                        LawsRequest::One(d) => (None, vec![*d]),
                    };
                    let mut instances = docs.iter().map(LawInstanceDoc::to_instance).collect::<ultraspec::Result<Vec<LawInstance>>>()?;
                    if let Some(s) = seed {
                        instances.iter_mut().for_each(|i| i.seed = s);
                    }
                    (laws, instances)
                }
                _ => return Err(Failure::Schema("laws takes either an input document or --standard".into())),
            };
            let ids: Vec<&str> = match &laws {
                Some(ids) => {
                    if let Some(bad) = ids.iter().find(|id| !LAWS.contains(&id.as_str())) {
                        return Err(Error::UnknownLaw(bad.clone()).into());
                    }
                    ids.iter().map(String::as_str).collect()
                }
                None => LAWS.to_vec(),
            };
            let verdicts = lab::run_laws(SpectralEngine::exact(), &ids, &instances)?;
            for v in &verdicts {
                emit(out, &serde_json::to_value(v)?)?;
            }
            if verdicts.iter().all(|v| v.pass) { Ok(()) } else { Err(Failure::Laws) }
        }
    }
}

fn point(req: &PointRequest) -> Outcome<(Operator, ultraspec::padic::Rational, ultraspec::padic::Rational)> {
    Ok((json::operator(req.p, &req.op)?, json::rational(&req.lambda)?, json::rational(&req.epsilon)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run(cli.command, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Laws) => ExitCode::from(1),
        Err(Failure::Schema(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Contract(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
