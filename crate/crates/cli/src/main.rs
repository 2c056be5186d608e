//! Batch command-line front end: solve and normalize sentences, re-check
//! witnesses, run the brute-force oracle, and drive the definability lab.
//!
//! Exit codes: 0 when the command decided, 1 when a bounded run was
//! inconclusive or a validation failed, 2 on usage, parse, or input errors.

use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use holodec_core::deflab;
use holodec_core::formula;
use holodec_core::oracle;
use holodec_core::solver::{self, DecisionOutcome, Verdict};
use holodec_core::{Base, FieldElem, HeightBound, Place, PolyFp, RingSpec};

#[derive(Parser)]
#[command(
    name = "holodec",
    version,
    about = "decision procedures for divisibility sentences over holomorphy rings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RingArgs {
    /// Base ring: Z, F<p> or Fp:<p>
    #[arg(long)]
    base: String,
    /// Excluded finite places, comma separated (integrality holds exactly there)
    #[arg(long = "T", value_name = "PLACES")]
    t: Option<String>,
    /// Allowed pole set, comma separated, must contain `inf`
    #[arg(long = "S", value_name = "PLACES")]
    s: Option<String>,
}

#[derive(Args, Clone)]
struct SentenceArgs {
    /// Inline sentence, e.g. "E x . 3 div x & x div 1"
    sentence: Option<String>,
    /// Read the sentence from a file (UTF-8, `#` comments)
    #[arg(long)]
    file: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Decide a sentence over a cofinite-S ring
    Solve {
        #[command(flatten)]
        ring: RingArgs,
        #[command(flatten)]
        sentence: SentenceArgs,
        /// Depth budget for the local decider (bounded mode)
        #[arg(long)]
        budget: Option<i64>,
        /// Emit a machine-readable report
        #[arg(long)]
        json: bool,
    },
    /// Print the normal form of a sentence
    Normalize {
        #[command(flatten)]
        ring: RingArgs,
        #[command(flatten)]
        sentence: SentenceArgs,
    },
    /// Verify a witness tuple against a sentence
    Check {
        #[command(flatten)]
        ring: RingArgs,
        #[command(flatten)]
        sentence: SentenceArgs,
        /// Comma-separated witness entries, e.g. "3,1/2" or "t+1,(t+1)/t"
        #[arg(long)]
        witness: String,
    },
    /// Brute-force witness search within a height or degree bound
    Oracle {
        #[command(flatten)]
        ring: RingArgs,
        #[command(flatten)]
        sentence: SentenceArgs,
        /// Height bound over Z, degree bound over F_p[t]
        #[arg(long, default_value_t = 50)]
        bound: u64,
        /// Cap on examined assignment tuples
        #[arg(long)]
        max_tuples: Option<usize>,
    },
    /// Emit a defining formula over an S-integer ring
    DeflabEmit {
        #[command(flatten)]
        ring: RingArgs,
        /// Which formula: neq, squ or sq
        target: String,
    },
    /// Empirically validate a defining formula
    DeflabValidate {
        #[command(flatten)]
        ring: RingArgs,
        /// Which formula: neq, squ or sq
        target: String,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Degree bound for negative-side searches
        #[arg(long, default_value_t = 6)]
        bound: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Serialize)]
struct JsonReport {
    verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    places: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    thresholds: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    budget: Option<i64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {}", msg);
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Solve { ring, sentence, budget, json } => {
            let ring = parse_ring_flags(&ring, Need::Cofinite)?;
            let s = load_sentence(&sentence, ring.base())?;
            let outcome = solver::decide(&s, &ring, budget);
            if json {
                println!("{}", serde_json::to_string(&to_json(&outcome, budget)).unwrap());
            } else {
                match &outcome {
                    DecisionOutcome::Decided(Verdict::Sat { witness, .. }) => {
                        let w: Vec<String> = witness
                            .iter()
                            .enumerate()
                            .map(|(i, x)| format!("x{}={}", i + 1, x))
                            .collect();
                        println!("SAT {}", w.join(" "));
                    }
                    DecisionOutcome::Decided(Verdict::Unsat) => println!("UNSAT"),
                    DecisionOutcome::Inconclusive { unknown_disjuncts } => {
                        println!("UNKNOWN ({} disjuncts undecided)", unknown_disjuncts)
                    }
                }
            }
            Ok(match outcome {
                DecisionOutcome::Decided(_) => ExitCode::SUCCESS,
                DecisionOutcome::Inconclusive { .. } => ExitCode::from(1),
            })
        }
        Command::Normalize { ring, sentence } => {
            let ring = parse_ring_flags(&ring, Need::Cofinite)?;
            let s = load_sentence(&sentence, ring.base())?;
            let nf = formula::normalize(&s, ring.t_places());
            println!("{}", nf);
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { ring, sentence, witness } => {
            let ring = parse_ring_flags(&ring, Need::Cofinite)?;
            let s = load_sentence(&sentence, ring.base())?;
            let tuple = parse_witness(&witness, ring.base())?;
            let ok = solver::check_witness(&s, &tuple, &ring);
            println!("{}", ok);
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { ring, sentence, bound, max_tuples } => {
            let ring = parse_ring_flags(&ring, Need::Cofinite)?;
            let s = load_sentence(&sentence, ring.base())?;
            let b = match ring.base() {
                Base::Int => HeightBound::Height(bound),
                Base::Poly { .. } => HeightBound::Degree(bound as usize),
            };
            match oracle::brute_force(&s, &ring, b, max_tuples) {
                Some(w) => {
                    let parts: Vec<String> = w
                        .iter()
                        .enumerate()
                        .map(|(i, x)| format!("x{}={}", i + 1, x))
                        .collect();
                    println!("WITNESS {}", parts.join(" "));
                }
                None => println!("NONE within bound"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::DeflabEmit { ring, target } => {
            let ring = parse_ring_flags(&ring, Need::Finite)?;
            match target.as_str() {
                "neq" => {
                    let (formula, pair) = deflab::emit_neq(&ring).map_err(|e| e.to_string())?;
                    println!("q = {}", pair.q);
                    println!("b = {}", pair.b);
                    println!("unit image order {} of {}", pair.subgroup.len(), pair.group_order);
                    print!("{}", formula);
                }
                "squ" => {
                    let (formula, constants) = deflab::emit_squ(&ring).map_err(|e| e.to_string())?;
                    for (j, block) in constants.families.iter().enumerate() {
                        let names: Vec<String> = block.iter().map(|q| q.to_string()).collect();
                        println!("q[{}][*] = {}", j + 1, names.join(", "));
                    }
                    print!("{}", formula);
                }
                "sq" => {
                    let (formula, constants) = deflab::emit_sq(&ring).map_err(|e| e.to_string())?;
                    let inv = &constants.invariants;
                    println!(
                        "constants: C1={} C3={} N0={} N={} N1={}",
                        inv.c1, inv.c3, inv.n0, inv.chain_length, inv.n1
                    );
                    let qs: Vec<String> = constants.q_family.iter().map(|q| q.to_string()).collect();
                    println!("q_j = {}", qs.join(", "));
                    let rs: Vec<String> = constants.r_family.iter().map(|q| q.to_string()).collect();
                    println!("r_i = {}", rs.join(", "));
                    let ss: Vec<String> = constants.s_family.iter().map(|q| q.to_string()).collect();
                    println!("s_j = {}", ss.join(", "));
                    println!("q = {}", constants.q_anchor);
                    print!("{}", formula);
                }
                other => return Err(format!("unknown deflab target `{}`", other)),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::DeflabValidate { ring, target, samples, bound, seed } => {
            let ring = parse_ring_flags(&ring, Need::Finite)?;
            let report = match target.as_str() {
                "neq" => deflab::validate_neq(&ring, samples, bound, seed),
                "squ" => deflab::validate_squ(&ring, samples, seed),
                "sq" => deflab::validate_sq(&ring, samples, seed),
                other => return Err(format!("unknown deflab target `{}`", other)),
            }
            .map_err(|e| e.to_string())?;
            print!("{}", report);
            Ok(if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn to_json(outcome: &DecisionOutcome, budget: Option<i64>) -> JsonReport {
    match outcome {
        DecisionOutcome::Decided(Verdict::Sat { witness, provenance }) => JsonReport {
            verdict: "sat".into(),
            witness: Some(witness.iter().map(|x| x.to_string()).collect()),
            places: Some(provenance.places.iter().map(|p| p.place.to_string()).collect()),
            thresholds: Some(provenance.places.iter().map(|p| p.threshold).collect()),
            budget: None,
        },
        DecisionOutcome::Decided(Verdict::Unsat) => JsonReport {
            verdict: "unsat".into(),
            witness: None,
            places: None,
            thresholds: None,
            budget: None,
        },
        DecisionOutcome::Inconclusive { .. } => JsonReport {
            verdict: "unknown".into(),
            witness: None,
            places: None,
            thresholds: None,
            budget,
        },
    }
}

enum Need {
    Cofinite,
    Finite,
}

fn parse_base(spec: &str) -> Result<Base, String> {
    if spec == "Z" {
        return Ok(Base::Int);
    }
    let digits = spec
        .strip_prefix("Fp:")
        .or_else(|| spec.strip_prefix('F'))
        .ok_or_else(|| format!("unknown base `{}` (use Z, F<p> or Fp:<p>)", spec))?;
    let p: u64 = digits.parse().map_err(|_| format!("bad prime in base `{}`", spec))?;
    if !is_prime_u64(p) {
        return Err(format!("{} is not prime", p));
    }
    Ok(Base::Poly { p })
}

fn is_prime_u64(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn parse_place(token: &str, base: Base) -> Result<Place, String> {
    if token == "inf" {
        return Ok(Place::Infinity);
    }
    match base {
        Base::Int => {
            let v: i64 = token.parse().map_err(|_| format!("bad prime `{}`", token))?;
            Place::prime(v).map_err(|e| e.to_string())
        }
        Base::Poly { p } => {
            let q = PolyFp::parse(p, token)?;
            Place::irreducible(q).map_err(|e| e.to_string())
        }
    }
}

/// `--base` plus `--T` or `--S` into a validated ring.
fn parse_ring_flags(args: &RingArgs, need: Need) -> Result<RingSpec, String> {
    let base = parse_base(&args.base)?;
    match need {
        Need::Cofinite => {
            let spec = args
                .t
                .as_ref()
                .ok_or("this command needs --T with the excluded places")?;
            if args.s.is_some() {
                return Err("--S is not accepted here; use --T".into());
            }
            let places = spec
                .split(',')
                .map(|tok| parse_place(tok.trim(), base))
                .collect::<Result<Vec<_>, _>>()?;
            RingSpec::cofinite(base, places).map_err(|e| e.to_string())
        }
        Need::Finite => {
            let spec = args
                .s
                .as_ref()
                .ok_or("this command needs --S with the allowed pole set (including inf)")?;
            if args.t.is_some() {
                return Err("--T is not accepted here; use --S".into());
            }
            let places = spec
                .split(',')
                .map(|tok| parse_place(tok.trim(), base))
                .collect::<Result<Vec<_>, _>>()?;
            RingSpec::finite(base, places).map_err(|e| e.to_string())
        }
    }
}

fn load_sentence(args: &SentenceArgs, base: Base) -> Result<holodec_core::Sentence, String> {
    let text = match (&args.sentence, &args.file) {
        (Some(s), None) => s.clone(),
        (None, Some(path)) => {
            let raw = fs::read_to_string(path).map_err(|e| format!("{}: {}", path, e))?;
            raw.lines()
                .map(|line| line.split('#').next().unwrap_or(""))
                .collect::<Vec<_>>()
                .join(" ")
        }
        (Some(_), Some(_)) => return Err("give either an inline sentence or --file, not both".into()),
        (None, None) => return Err("no sentence given (inline or --file)".into()),
    };
    formula::parse(&text, base).map_err(|e| e.to_string())
}

/// Comma-separated field elements, each `num` or `num/den`.
fn parse_witness(spec: &str, base: Base) -> Result<Vec<FieldElem>, String> {
    spec.split(',')
        .map(|tok| FieldElem::parse(base, tok.trim()))
        .collect()
}
