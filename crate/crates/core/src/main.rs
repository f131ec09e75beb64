//! `odnf` command-line driver.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use odnf::criterion::{bc_certificate, classify_pair, BivarPoly};
use odnf::diffop::GradedOp;
use odnf::error::{Error, Result};
use odnf::gform::HcpSeries;
use odnf::newton::{classify_top_line, render_svg, report_json};
use odnf::parse::{eval_graded, eval_series, has_gform, parse};
use odnf::powerform::{expand_power, expand_power_oracle};
use odnf::schur::{normal_form_with, schur_operator, Gauge, NormalFormOptions};
use odnf::suites::run_suite;

#[derive(Parser)]
#[command(name = "odnf", version, about = "Exact normal forms of ordinary differential operators")]
struct Cli {
    /// Cyclotomic order for `xi`; for `expand-power` the exponent.
    #[arg(long, global = true)]
    k: Option<u32>,
    /// Number of orders below the top to compute.
    #[arg(long, global = true, default_value_t = 8)]
    depth: u32,
    /// Seed for randomized commands.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Treat operator inputs as known only down to order `ord - W` (truncated series data).
    #[arg(long, global = true)]
    input_window: Option<u32>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
    Svg,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and print an operator.
    Eval {
        expr: String,
        /// x-degree cap when expanding G-form literals.
        #[arg(long, default_value_t = 12)]
        xcap: i64,
    },
    /// Product `a*b`.
    Mul { a: String, b: String },
    /// Commutator `[a, b]`.
    Commutator { a: String, b: String },
    /// Schur operator `S` with `S^-1 Q S = d^q`.
    Schur {
        #[arg(long)]
        q: String,
    },
    /// Normal form `P' = S^-1 P S` as a G-form series.
    NormalForm {
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
        /// Use the seeded gauge (free Schur coefficients from `--seed`).
        #[arg(long)]
        seeded_gauge: bool,
        /// Write the JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Newton region and top line of a cached normal form.
    Newton {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Commutativity report for a pair.
    Classify {
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
        /// Candidate annihilating polynomial in X, Y.
        #[arg(long)]
        candidate: Option<String>,
    },
    /// Search for `F(P, Q) = 0` up to weight `wmax`.
    BcFind {
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
        #[arg(long)]
        wmax: i64,
    },
    /// Standard form of `(D + L)^k`, with `k` from `--k`.
    ExpandPower {
        /// Also compute the brute-force expansion and compare.
        #[arg(long)]
        oracle: bool,
    },
    /// Run a randomized property suite.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 200)]
        cases: usize,
    },
}

/// What a command produced: the JSON form plus text and svg renderings when they exist.
struct Output {
    json: Value,
    text: Option<String>,
    svg: Option<String>,
    default: Format,
    code: u8,
}

impl Output {
    fn new(json: Value, text: impl Into<String>, default: Format) -> Self {
        Output { json, text: Some(text.into()), svg: None, default, code: 0 }
    }
}

enum Operand {
    Graded(GradedOp),
    Series(HcpSeries),
}

fn operand(src: &str, kset: Option<u32>, xcap: i64) -> Result<Operand> {
    let e = parse(src, kset)?;
    let k = kset.unwrap_or(1);
    if has_gform(&e) {
        Ok(Operand::Series(eval_series(&e, k)?))
    } else {
        Ok(Operand::Graded(eval_graded(&e, k, xcap)?))
    }
}

fn graded(src: &str, cli: &Cli) -> Result<GradedOp> {
    let k = cli.k.unwrap_or(1);
    let op = eval_graded(&parse(src, cli.k)?, k, 64)?;
    match cli.input_window {
        Some(w) => Ok(op.truncate_below(op.ord()? - w as i64)),
        None => Ok(op),
    }
}

fn binary(a: &str, b: &str, k: Option<u32>, commutator: bool) -> Result<Output> {
    let r = match (operand(a, k, 12)?, operand(b, k, 12)?) {
        (Operand::Series(a), Operand::Series(b)) => {
            Operand::Series(if commutator { a.commutator(&b)? } else { a.mul(&b)? })
        }
        (Operand::Graded(a), Operand::Graded(b)) => {
            Operand::Graded(if commutator { a.commutator(&b)? } else { a.mul(&b)? })
        }
        _ => return Err(Error::Precondition("cannot mix G-form literals with x in one computation".into())),
    };
    Ok(match r {
        Operand::Series(s) => Output::new(s.to_json_value(), s.to_string(), Format::Text),
        Operand::Graded(g) => Output::new(g.to_json_value(), g.to_string(), Format::Text),
    })
}

fn load_series(path: &PathBuf) -> Result<HcpSeries> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| Error::Precondition(format!("cannot read {}: {}", path.display(), e)))?;
    let v: Value = serde_json::from_str(&src)?;
    HcpSeries::from_json_value(v.get("series").unwrap_or(&v))
}

fn write_file(path: &PathBuf, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::Precondition(format!("cannot write {}: {}", path.display(), e)))
}

fn run(cli: &Cli) -> Result<Output> {
    let k = cli.k.unwrap_or(1);
    if k == 0 {
        return Err(Error::Precondition("--k must be at least 1".into()));
    }
    match &cli.cmd {
        Cmd::Eval { expr, xcap } => Ok(match operand(expr, cli.k, *xcap)? {
            Operand::Series(s) => Output::new(s.to_json_value(), s.to_string(), Format::Text),
            Operand::Graded(g) => Output::new(g.to_json_value(), g.to_string(), Format::Text),
        }),
        Cmd::Mul { a, b } => binary(a, b, cli.k, false),
        Cmd::Commutator { a, b } => binary(a, b, cli.k, true),
        Cmd::Schur { q } => {
            let sp = schur_operator(&graded(q, cli)?, cli.depth)?;
            let text = format!("S = {}\nS^-1 = {}\nverified down to order {}", sp.s, sp.sinv, sp.verified_floor);
            Ok(Output::new(sp.to_json_value(), text, Format::Json))
        }
        Cmd::NormalForm { p, q, seeded_gauge, out } => {
            let mut opts = NormalFormOptions::new(cli.depth);
            if *seeded_gauge {
                opts.gauge = Gauge::Seeded(cli.seed);
            }
            let nf = normal_form_with(&graded(p, cli)?, &graded(q, cli)?, opts)?;
            let mut v = nf.to_json_value();
            v["pText"] = p.as_str().into();
            v["qText"] = q.as_str().into();
            if let Some(path) = out {
                write_file(path, &format!("{}\n", serde_json::to_string_pretty(&v)?))?;
            }
            Ok(Output::new(v, nf.series.to_string(), Format::Json))
        }
        Cmd::Newton { input, svg, json } => {
            let s = load_series(input)?;
            let class = classify_top_line(&s)?;
            let report = report_json(&s, &class);
            let picture = render_svg(&s, &class);
            if let Some(path) = svg {
                write_file(path, &picture)?;
            }
            if let Some(path) = json {
                write_file(path, &format!("{}\n", serde_json::to_string_pretty(&report)?))?;
            }
            let text = format!("{}{}", class.line.name(), if class.tentative { " (tentative)" } else { "" });
            let mut o = Output::new(report, text, Format::Json);
            o.svg = Some(picture);
            Ok(o)
        }
        Cmd::Classify { p, q, candidate } => {
            let cand = candidate.as_deref().map(BivarPoly::parse).transpose()?;
            let r = classify_pair(&graded(p, cli)?, &graded(q, cli)?, cli.depth, cand.as_ref())?;
            let mut v = r.to_json_value();
            v["inputs"]["p"] = p.as_str().into();
            v["inputs"]["q"] = q.as_str().into();
            Ok(Output::new(v, r.verdict.clone(), Format::Json))
        }
        Cmd::BcFind { p, q, wmax } => {
            let c = bc_certificate(&graded(p, cli)?, &graded(q, cli)?, *wmax, cli.depth)?;
            Ok(match c {
                Some(c) => {
                    Output::new(c.to_json_value(), format!("{} = 0 at weight {}", c.poly, c.weight), Format::Json)
                }
                None => Output::new(
                    json!({ "found": false, "wmax": wmax }),
                    format!("no annihilating polynomial up to weight {}", wmax),
                    Format::Json,
                ),
            })
        }
        Cmd::ExpandPower { oracle } => {
            let kk = cli.k.ok_or_else(|| Error::Precondition("expand-power needs --k".into()))?;
            let e = expand_power(kk)?;
            if !oracle {
                return Ok(Output::new(
                    json!({ "k": kk, "expansion": e.to_json_value() }),
                    e.to_string(),
                    Format::Text,
                ));
            }
            let o = expand_power_oracle(kk)?;
            let equal = e == o;
            let text = format!("closed form: {}\noracle:      {}\n{}", e, o, if equal { "equal" } else { "MISMATCH" });
            let v = json!({
                "k": kk,
                "expansion": e.to_json_value(),
                "oracle": o.to_json_value(),
                "equal": equal,
            });
            let mut out = Output::new(v, text, Format::Text);
            if !equal {
                out.code = 5;
            }
            Ok(out)
        }
        Cmd::Verify { suite, cases } => {
            let reports = run_suite(suite, *cases, cli.seed)?;
            let ok = reports.iter().all(|r| r.passed());
            let text = reports
                .iter()
                .map(|r| {
                    format!("{}: {} cases, {} checks, {} violations", r.name, r.cases, r.checks, r.violations.len())
                })
                .collect::<Vec<_>>()
                .join("\n");
            let v = json!({
                "seed": cli.seed,
                "passed": ok,
                "suites": reports.iter().map(|r| r.to_json_value()).collect::<Vec<_>>(),
            });
            let mut out = Output::new(v, text, Format::Json);
            if !ok {
                out.code = 5;
            }
            Ok(out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{}", e);
                return ExitCode::SUCCESS;
            }
            let v = json!({ "error": "usage", "message": e.to_string().trim_end(), "exitCode": 2 });
            eprintln!("{}", v);
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(out) => {
            let fmt = cli.format.unwrap_or(out.default);
            let body = match fmt {
                Format::Json => serde_json::to_string_pretty(&out.json).expect("serializable"),
                Format::Text => out.text.clone().unwrap_or_else(|| out.json.to_string()),
                Format::Svg => match &out.svg {
                    Some(s) => s.clone(),
                    None => {
                        let e = Error::Precondition("this command has no svg output".into());
                        eprintln!("{}", e.to_json());
                        return ExitCode::from(e.exit_code() as u8);
                    }
                },
            };
            println!("{}", body.trim_end());
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
