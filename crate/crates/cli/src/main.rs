use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use flagquer::exec::with_threads;
use flagquer::functional::{dpp_flag_ratio, functional_i, phi_r_of_function, FunctionSpec, QuasiConcaveFn};
use flagquer::harness::{registry, run_suite, DEFAULT_SEED};
use flagquer::quermass::{example2_a, phi_full, phi_omega, phi_r, psi_full, psi_omega, psi_r};
use flagquer::report::{self, ResultRecord};
use flagquer::{Body, BodySpec, Estimate, IndexSeq, McConfig, Permutation};

const CSV_HELP: &str = "CSV columns: quantity, body, indices, permutation, mean, std_error, samples, seed, wall_time_ms.\n\
verify/reproduce CSV columns: check, criterion, case, assertion, lhs_mean, lhs_std_error, rhs_mean, rhs_std_error, margin_se, verdict, samples, seed.";

#[derive(Parser, Debug)]
#[command(name = "flagquer", version, about = "Flag quermassintegral estimators and verification suite", after_help = CSV_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// Monte Carlo samples per quantity.
    #[arg(long, default_value_t = flagquer::exec::DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads; results do not depend on this.
    #[arg(long, env = "FLAGQUER_THREADS")]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write output to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate a single quantity.
    Compute {
        #[arg(long, value_enum)]
        quantity: Quantity,
        /// Body as inline JSON or a path to a JSON file.
        #[arg(long)]
        body: Option<String>,
        /// Function as inline JSON or a path to a JSON file.
        #[arg(long)]
        function: Option<String>,
        /// Comma-separated index sequence, e.g. 1,2.
        #[arg(long, value_delimiter = ',')]
        indices: Option<Vec<usize>>,
        /// Comma-separated permutation of 1..n, e.g. 2,1,3.
        #[arg(long, value_delimiter = ',')]
        permutation: Option<Vec<usize>>,
        /// Comma-separated d1,d2,d3 for example2_a.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        d: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Run named checks, or all of them.
    Verify {
        #[arg(default_value = "all")]
        checks: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Reproduce one of the worked examples.
    Reproduce {
        #[arg(value_enum)]
        target: Target,
        #[command(flatten)]
        common: Common,
    },
    /// List registered checks, body types and quantities.
    List,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
#[value(rename_all = "snake_case")]
enum Quantity {
    PhiR,
    PsiR,
    PhiFull,
    PsiFull,
    PhiOmega,
    PsiOmega,
    FunctionalI,
    DppRatio,
    PhiRFunction,
    Example2A,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
#[value(rename_all = "kebab-case")]
enum Target {
    Example1,
    Example2,
    BusemannStraus,
    SantaloPair,
}

impl Target {
    fn check(self) -> &'static str {
        match self {
            Target::Example1 => "example1-4-over-pi",
            Target::Example2 => "example2-ordering",
            Target::BusemannStraus => "busemann-straus-cube",
            Target::SantaloPair => "santalo-pair",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Text,
    Json,
    Csv,
}

/// Configuration error naming the offending flag.
fn flag_err(flag: &str, msg: impl std::fmt::Display) -> String {
    format!("--{flag}: {msg}")
}

fn read_json(flag: &str, arg: &str) -> Result<String, String> {
    if arg.trim_start().starts_with('{') {
        Ok(arg.to_string())
    } else {
        fs::read_to_string(arg).map_err(|e| flag_err(flag, format!("cannot read '{arg}': {e}")))
    }
}

fn parse_body(arg: Option<&String>) -> Result<(Body, serde_json::Value), String> {
    let arg = arg.ok_or_else(|| flag_err("body", "required for this quantity"))?;
    let text = read_json("body", arg)?;
    let parsed: BodySpec = serde_json::from_str(&text).map_err(|e| flag_err("body", format!("malformed JSON: {e}")))?;
    let body = parsed.build().map_err(|e| flag_err("body", e))?;
    Ok((body, serde_json::to_value(&parsed).expect("specs serialize")))
}

fn parse_function(arg: Option<&String>) -> Result<(QuasiConcaveFn, serde_json::Value), String> {
    let arg = arg.ok_or_else(|| flag_err("function", "required for this quantity"))?;
    let text = read_json("function", arg)?;
    let parsed: FunctionSpec =
        serde_json::from_str(&text).map_err(|e| flag_err("function", format!("malformed JSON: {e}")))?;
    let f = parsed.build().map_err(|e| flag_err("function", e))?;
    Ok((f, serde_json::to_value(&parsed).expect("specs serialize")))
}

fn parse_indices(n: usize, arg: Option<&Vec<usize>>) -> Result<IndexSeq, String> {
    let v = arg.ok_or_else(|| flag_err("indices", "required for this quantity"))?;
    IndexSeq::new(n, v.clone()).map_err(|e| flag_err("indices", e))
}

fn parse_permutation(n: usize, arg: Option<&Vec<usize>>) -> Result<Permutation, String> {
    let v = arg.ok_or_else(|| flag_err("permutation", "required for this quantity"))?;
    let p = Permutation::new(v.clone()).map_err(|e| flag_err("permutation", e))?;
    if p.n() != n {
        return Err(flag_err("permutation", format!("must permute 1..{n}, got length {}", p.n())));
    }
    Ok(p)
}

/// A validated single-quantity job.
enum Job {
    Body(Quantity, Body, Option<IndexSeq>, Option<Permutation>),
    Function(Quantity, QuasiConcaveFn, IndexSeq),
    Example2([f64; 3]),
}

struct ComputeArgs<'a> {
    quantity: Quantity,
    body: Option<&'a String>,
    function: Option<&'a String>,
    indices: Option<&'a Vec<usize>>,
    permutation: Option<&'a Vec<usize>>,
    d: Option<&'a Vec<f64>>,
}

fn build_job(a: &ComputeArgs) -> Result<(Job, serde_json::Value), String> {
    use Quantity::*;
    match a.quantity {
        PhiR | PsiR | PhiFull | PsiFull | PhiOmega | PsiOmega => {
            let (body, json) = parse_body(a.body)?;
            let n = body.n();
            let seq = matches!(a.quantity, PhiR | PsiR)
                .then(|| parse_indices(n, a.indices))
                .transpose()?;
            let perm = matches!(a.quantity, PhiOmega | PsiOmega)
                .then(|| parse_permutation(n, a.permutation))
                .transpose()?;
            Ok((Job::Body(a.quantity, body, seq, perm), json))
        }
        FunctionalI | DppRatio | PhiRFunction => {
            let (f, json) = parse_function(a.function)?;
            let seq = parse_indices(f.n(), a.indices)?;
            if a.quantity == PhiRFunction && !matches!(f, QuasiConcaveFn::LevelStack(_)) {
                return Err(flag_err("function", "phi_r_function needs a level_stack function"));
            }
            Ok((Job::Function(a.quantity, f, seq), json))
        }
        Example2A => {
            let d = a.d.ok_or_else(|| flag_err("d", "required for example2_a"))?;
            let d: [f64; 3] = d
                .as_slice()
                .try_into()
                .map_err(|_| flag_err("d", format!("expected 3 values, got {}", d.len())))?;
            Ok((Job::Example2(d), serde_json::json!({ "d": d })))
        }
    }
}

fn quantity_name(q: Quantity) -> String {
    q.to_possible_value().expect("no skipped variants").get_name().to_string()
}

fn run_job(job: &Job, json: serde_json::Value, cfg: &McConfig) -> flagquer::Result<ResultRecord> {
    let start = Instant::now();
    let ms = |s: Instant| s.elapsed().as_secs_f64() * 1e3;
    let rec = |q: Quantity, e: &Estimate, json: serde_json::Value| ResultRecord::new(quantity_name(q), json, e, ms(start));
    Ok(match job {
        Job::Body(q, body, seq, perm) => {
            let est = match q {
                Quantity::PhiR => phi_r(body, seq.as_ref().expect("validated"), cfg)?,
                Quantity::PsiR => psi_r(body, seq.as_ref().expect("validated"), cfg)?,
                Quantity::PhiFull => phi_full(body, cfg)?,
                Quantity::PsiFull => psi_full(body, cfg)?,
                Quantity::PhiOmega => phi_omega(body, perm.as_ref().expect("validated"), cfg)?,
                _ => psi_omega(body, perm.as_ref().expect("validated"), cfg)?,
            };
            let mut r = rec(*q, &est, json);
            if let Some(s) = seq {
                r = r.with_indices(s.indices());
            }
            if let Some(p) = perm {
                r = r.with_permutation(p.values());
            }
            r
        }
        Job::Function(q, f, seq) => {
            let r = match q {
                Quantity::FunctionalI => rec(*q, &functional_i(f, seq, cfg)?, json),
                Quantity::DppRatio => {
                    let b = dpp_flag_ratio(f, seq, cfg)?;
                    rec(*q, &b.lhs, json).with_bound(b.rhs)
                }
                _ => {
                    let QuasiConcaveFn::LevelStack(stack) = f else {
                        unreachable!("validated")
                    };
                    rec(*q, &phi_r_of_function(stack, seq, cfg)?, json)
                }
            };
            r.with_indices(seq.indices())
        }
        Job::Example2(d) => rec(Quantity::Example2A, &example2_a(*d, cfg)?, json),
    })
}

fn emit(common: &Common, text: String) -> Result<(), String> {
    match &common.output {
        Some(path) => fs::write(path, text).map_err(|e| flag_err("output", format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| e.to_string())
        }
    }
}

fn csv_string(f: impl FnOnce(&mut Vec<u8>) -> flagquer::Result<()>) -> Result<String, String> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| e.to_string())?;
    String::from_utf8(buf).map_err(|e| e.to_string())
}

fn suite(names: Vec<String>, common: &Common) -> Result<i32, String> {
    let report = with_threads(common.threads, || run_suite(&names, common.seed, Some(common.samples)))
        .map_err(|e| e.to_string())?;
    let text = match common.format {
        Format::Text => report.text(),
        Format::Json => report.json().map_err(|e| e.to_string())? + "\n",
        Format::Csv => csv_string(|b| report.write_csv(b))?,
    };
    emit(common, text)?;
    Ok(report.summary.exit_code())
}

fn list() -> String {
    let mut out = String::from("checks:\n");
    for c in registry() {
        out.push_str(&format!("  {:<34} criterion {:>2}  {}\n", c.name, c.criterion, c.description));
    }
    out.push_str("body types: ball, ellipsoid, cube, polytope_v, polytope_h\n");
    out.push_str("function types: gaussian, level_stack\n");
    let qs: Vec<String> = Quantity::value_variants().iter().map(|q| quantity_name(*q)).collect();
    out.push_str(&format!("quantities: {}\n", qs.join(", ")));
    out.push_str("reproduce targets: example1, example2, busemann-straus, santalo-pair\n");
    out
}

fn run(cli: Cli) -> Result<i32, String> {
    match cli.command {
        Command::Compute {
            quantity,
            body,
            function,
            indices,
            permutation,
            d,
            common,
        } => {
            let args = ComputeArgs {
                quantity,
                body: body.as_ref(),
                function: function.as_ref(),
                indices: indices.as_ref(),
                permutation: permutation.as_ref(),
                d: d.as_ref(),
            };
            let (job, json) = build_job(&args)?;
            if common.samples < 2 {
                return Err(flag_err("samples", "need at least 2 samples"));
            }
            let cfg = McConfig::new(common.samples, common.seed);
            let record = with_threads(common.threads, || run_job(&job, json, &cfg)).map_err(|e| e.to_string())?;
            let text = match common.format {
                Format::Text => record.text() + "\n",
                Format::Json => report::to_json(std::slice::from_ref(&record)).map_err(|e| e.to_string())? + "\n",
                Format::Csv => csv_string(|b| report::write_csv(std::slice::from_ref(&record), b))?,
            };
            emit(&common, text)?;
            Ok(0)
        }
        Command::Verify { checks, common } => suite(checks, &common),
        Command::Reproduce { target, common } => suite(vec![target.check().to_string()], &common),
        Command::List => {
            print!("{}", list());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
