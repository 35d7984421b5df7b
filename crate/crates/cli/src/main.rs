//! Command line front end: reads connection JSON documents, runs the
//! normalization, equivalence, TW and torus pipelines, and writes JSON or
//! CSV reports.
//!
//! Exit codes: 0 on success, 2 on a well-defined negative mathematical
//! verdict (not flat, not equivalent), 1 on input or domain errors.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde_json::{json, Value};

use projtor_core::affine::{recover_rho, AffineConnection, CHECK_SEED};
use projtor_core::projective::normalize;
use projtor_core::report::{
    hlavaty_report, normalize_report, torus_scan_csv, torus_verify, tw_report,
};
use projtor_core::sample::Sampler;
use projtor_core::scalar::{parse_exact, Field, Mode};
use projtor_core::torus::solve_variety;
use projtor_core::tw::{normal_tw, structural_equiv_beta};

#[derive(Parser)]
#[command(name = "projtor", about = "Projective structures with torsion", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Normalize a connection to its projective data and report curvature.
    Normalize(ConnArgs),
    /// Report the curvature blocks of the normalized connection.
    Curvature(ConnArgs),
    /// Decide flatness on the sample set (exit 2 when not flat).
    Flat(ConnArgs),
    /// Decide projective equivalence of two connections (exit 2 when not).
    Equivalent(PairArgs),
    /// Report the trace-free Hlavaty coefficients.
    Hlavaty(ConnArgs),
    /// Build the normal TW connection and report its curvature and Ricci.
    Tw(ConnArgs),
    /// Decide structural equivalence of the normal TW connections of two
    /// inputs (exit 2 when not).
    TwEquiv(PairArgs),
    /// Torus moduli variety tools.
    Torus {
        #[command(subcommand)]
        action: TorusCmd,
    },
}

#[derive(Subcommand)]
enum TorusCmd {
    /// Sample the variety and emit a CSV table.
    Scan(TorusArgs),
    /// Check the worked examples and emit a pass/fail report.
    Verify {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Arithmetic mode; defaults to the mode declared in the input.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Seed for the deterministic sample points.
    #[arg(long, default_value_t = CHECK_SEED)]
    seed: u64,
    /// Number of sample points drawn from the seed.
    #[arg(long, default_value_t = 20)]
    samples: usize,
    /// JSON file with explicit sample points (array of arrays).
    #[arg(long)]
    points: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConnArgs {
    /// Connection JSON document.
    input: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct PairArgs {
    /// First connection JSON document.
    left: PathBuf,
    /// Second connection JSON document.
    right: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct TorusArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ModeArg {
    Exact,
    Float,
}

struct CliError(String);

fn cli_err(e: impl Display) -> CliError {
    CliError(e.to_string())
}

impl From<projtor_core::error::GeometryError> for CliError {
    fn from(e: projtor_core::error::GeometryError) -> Self {
        cli_err(e)
    }
}

impl From<projtor_core::error::EvalError> for CliError {
    fn from(e: projtor_core::error::EvalError) -> Self {
        cli_err(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        cli_err(e)
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(CliError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.cmd {
        Cmd::Normalize(a) | Cmd::Curvature(a) => {
            let c = load_connection(&a.input)?;
            let d = normalize(&c)?;
            let doc = match resolve_mode(&c, a.common.mode)? {
                Mode::Exact => {
                    let points = load_points::<BigRational>(&a.common, c.n())?;
                    serde_json::to_value(normalize_report(&d, &points)?)?
                }
                Mode::Float => {
                    let points = load_points::<f64>(&a.common, c.n())?;
                    serde_json::to_value(normalize_report(&d, &points)?)?
                }
            };
            write_output(&a.common.out, &pretty(&doc))?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Flat(a) => {
            let c = load_connection(&a.input)?;
            let d = normalize(&c)?;
            let flat = match resolve_mode(&c, a.common.mode)? {
                Mode::Exact => {
                    let points = load_points::<BigRational>(&a.common, c.n())?;
                    projtor_core::projective::is_flat(&d, &points)?
                }
                Mode::Float => {
                    let points = load_points::<f64>(&a.common, c.n())?;
                    projtor_core::projective::is_flat(&d, &points)?
                }
            };
            write_output(&a.common.out, &pretty(&json!({ "flat": flat })))?;
            Ok(verdict(flat))
        }
        Cmd::Equivalent(a) => {
            let left = load_connection(&a.left)?;
            let right = load_connection(&a.right)?;
            let rho = recover_rho(&left, &right)?;
            let doc = match &rho {
                Some(rho) => json!({
                    "equivalent": true,
                    "rho": rho.components.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
                }),
                None => json!({ "equivalent": false }),
            };
            write_output(&a.common.out, &pretty(&doc))?;
            Ok(verdict(rho.is_some()))
        }
        Cmd::Hlavaty(a) => {
            let c = load_connection(&a.input)?;
            let doc = json!({ "phi": hlavaty_report(&c)? });
            write_output(&a.common.out, &pretty(&doc))?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Tw(a) => {
            let c = load_connection(&a.input)?;
            let (t, v) = normal_tw(&c)?;
            let doc = match resolve_mode(&c, a.common.mode)? {
                Mode::Exact => {
                    let points = load_points::<BigRational>(&a.common, c.n())?;
                    serde_json::to_value(tw_report(&t, &v, &points)?)?
                }
                Mode::Float => {
                    let points = load_points::<f64>(&a.common, c.n())?;
                    serde_json::to_value(tw_report(&t, &v, &points)?)?
                }
            };
            write_output(&a.common.out, &pretty(&doc))?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::TwEquiv(a) => {
            let left = load_connection(&a.left)?;
            let right = load_connection(&a.right)?;
            let (t1, _) = normal_tw(&left)?;
            let (t2, _) = normal_tw(&right)?;
            let beta = structural_equiv_beta(&t1, &t2)?;
            let doc = match &beta {
                Some(b) => {
                    let mut entries = serde_json::Map::new();
                    for (j, row) in b.entries.iter().enumerate() {
                        for (k, e) in row.iter().enumerate() {
                            entries.insert(
                                format!("{},{}", j + 1, k + 1),
                                Value::String(e.to_string()),
                            );
                        }
                    }
                    json!({
                        "equivalent": true,
                        "beta": Value::Object(entries),
                        "bar": b.bar.components.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
                    })
                }
                None => json!({ "equivalent": false }),
            };
            write_output(&a.common.out, &pretty(&doc))?;
            Ok(verdict(beta.is_some()))
        }
        Cmd::Torus { action } => match action {
            TorusCmd::Scan(a) => {
                let samples = solve_variety(a.seed, a.samples)?;
                write_output(&a.out, &torus_scan_csv(&samples))?;
                Ok(ExitCode::SUCCESS)
            }
            TorusCmd::Verify { out } => {
                let items = torus_verify()?;
                let pass = items.iter().all(|i| i.pass);
                write_output(&out, &pretty(&serde_json::to_value(&items)?))?;
                Ok(verdict(pass))
            }
        },
    }
}

fn verdict(positive: bool) -> ExitCode {
    if positive {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn load_connection(path: &Path) -> Result<AffineConnection, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError(format!("{}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| CliError(format!("{}: {e}", path.display())))?;
    AffineConnection::from_json(&doc).map_err(|e| CliError(format!("{}: {e}", path.display())))
}

fn resolve_mode(c: &AffineConnection, requested: Option<ModeArg>) -> Result<Mode, CliError> {
    match requested {
        None => Ok(c.mode()),
        Some(ModeArg::Float) => Ok(Mode::Float),
        Some(ModeArg::Exact) => {
            if c.mode() == Mode::Float {
                Err(CliError(
                    "exact mode requested but the input is declared float".into(),
                ))
            } else {
                Ok(Mode::Exact)
            }
        }
    }
}

fn load_points<F: Field>(common: &Common, n: usize) -> Result<Vec<Vec<F>>, CliError> {
    match &common.points {
        None => {
            let mut sampler = Sampler::new(common.seed);
            Ok(sampler.unit_points(n, common.samples))
        }
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError(format!("{}: {e}", path.display())))?;
            let doc: Value = serde_json::from_str(&text)
                .map_err(|e| CliError(format!("{}: {e}", path.display())))?;
            let rows = doc
                .as_array()
                .ok_or_else(|| CliError("points file must be an array of arrays".into()))?;
            let mut out = Vec::with_capacity(rows.len());
            for row in rows {
                let coords = row
                    .as_array()
                    .ok_or_else(|| CliError("points file must be an array of arrays".into()))?;
                if coords.len() != n {
                    return Err(CliError(format!(
                        "point has {} coordinates, expected {n}",
                        coords.len()
                    )));
                }
                let mut p = Vec::with_capacity(n);
                for v in coords {
                    p.push(parse_point_value(v)?);
                }
                out.push(p);
            }
            Ok(out)
        }
    }
}

fn parse_point_value<F: Field>(v: &Value) -> Result<F, CliError> {
    match v {
        Value::String(s) => {
            let r = parse_exact(s)
                .ok_or_else(|| CliError(format!("cannot parse point coordinate {s:?}")))?;
            Ok(F::from_rational(&r))
        }
        Value::Number(num) => {
            if let Some(i) = num.as_i64() {
                Ok(F::from_int(i))
            } else {
                // Fractional literals carry float precision; route them
                // through the closest rational so exact mode rejects
                // nothing silently.
                let f = num
                    .as_f64()
                    .ok_or_else(|| CliError(format!("cannot parse point coordinate {num}")))?;
                let r = BigRational::from_float(f)
                    .ok_or_else(|| CliError(format!("non-finite point coordinate {num}")))?;
                Ok(F::from_rational(&r))
            }
        }
        other => Err(CliError(format!("cannot parse point coordinate {other}"))),
    }
}

fn pretty(doc: &Value) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("serializable document");
    s.push('\n');
    s
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
