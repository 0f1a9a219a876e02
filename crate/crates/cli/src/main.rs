use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use cqp::bisim::{check_full_equiv, check_process_equiv, EquivConfig, ProcessVerdict, Relation, DEFAULT_TOL};
use cqp::lang::{load_program, Program, Type, Value};
use cqp::models;
use cqp::semantics::{to_dot, to_json, InputPolicy, Limits, Options, Semantics};

/// `println!` that tolerates a closed stdout, e.g. when piped into `head`.
macro_rules! out {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Parser, Debug)]
#[command(name = "cqp", version, about = "Parse, run and compare Communicating Quantum Processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct RunArgs {
    /// Input policy: tomo, basis, bell, random[:SEED[:N]] or explicit:ALPHA,BETA. Repeat to combine.
    #[arg(long = "policy", value_name = "POLICY")]
    policies: Vec<String>,
    /// Seed for `--policy random` without an explicit seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Let interface channels synchronise internally.
    #[arg(long)]
    open_system: bool,
    /// Collapse measurements into probabilistic branches (regression mode).
    #[arg(long)]
    eager_collapse: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TextOrJson {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LtsFormat {
    Text,
    Json,
    Dot,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and typecheck a source file.
    Parse {
        file: String,
        #[arg(long, value_enum, default_value = "text")]
        format: TextOrJson,
    },
    /// Follow one run, always taking the first available transition.
    Trace {
        file: String,
        #[arg(long)]
        entry: Option<String>,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 1000)]
        max_steps: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: TextOrJson,
    },
    /// Explore the full transition system and export it.
    Lts {
        file: String,
        #[arg(long)]
        entry: Option<String>,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: LtsFormat,
        /// Write the export here instead of stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 200_000, value_parser = clap::value_parser!(u64).range(1..))]
        max_states: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        max_depth: Option<u64>,
    },
    /// Decide whether two processes are equivalent.
    Equiv {
        file: String,
        left: String,
        right: String,
        /// Take the right process from this file instead.
        #[arg(long)]
        right_file: Option<String>,
        #[command(flatten)]
        run: RunArgs,
        /// Also range over every assignment of bit parameters.
        #[arg(long)]
        full: bool,
        /// Use strong bisimulation instead of branching bisimilarity.
        #[arg(long)]
        strong: bool,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = 200_000, value_parser = clap::value_parser!(u64).range(1..))]
        max_states: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: TextOrJson,
    },
    /// List the bundled models.
    Catalog,
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

struct Style {
    on: bool,
}

impl Style {
    fn from_env() -> Self {
        let on = std::env::var("CQP_COLOR").is_ok_and(|v| matches!(v.as_str(), "1" | "always" | "true" | "on"));
        Style { on }
    }

    fn paint(&self, code: &str, s: &str) -> String {
        if self.on {
            format!("\x1b[{code}m{s}\x1b[0m")
        } else {
            s.to_string()
        }
    }

    fn good(&self, s: &str) -> String {
        self.paint("32", s)
    }

    fn bad(&self, s: &str) -> String {
        self.paint("31", s)
    }

    fn dim(&self, s: &str) -> String {
        self.paint("2", s)
    }
}

/// Source text and the catalog entry point, if `spec` names a bundled model.
fn read_source(spec: &str) -> Result<(String, Option<String>), Failure> {
    let path = Path::new(spec);
    if path.exists() {
        return Ok((std::fs::read_to_string(path)?, None));
    }
    if let Some(e) = models::find(spec) {
        return Ok((e.source, Some(e.entry.to_string())));
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(spec);
    match models::source_by_stem(stem) {
        Some(src) => Ok((src.to_string(), None)),
        None => Err(Failure(format!("no such file or bundled model: {spec}"))),
    }
}

fn load(spec: &str) -> Result<(Program, Option<String>), Failure> {
    let (src, entry) = read_source(spec)?;
    let prog = load_program(&src).map_err(|d| Failure(format!("{spec}:\n{d}")))?;
    Ok((prog, entry))
}

fn policy(run: &RunArgs) -> Result<InputPolicy, Failure> {
    if run.policies.is_empty() {
        return Ok(InputPolicy::tomographic());
    }
    let mut out: Option<InputPolicy> = None;
    for p in &run.policies {
        let sel = if p == "random" { format!("random:{}", run.seed) } else { p.clone() };
        let next = InputPolicy::parse(&sel)?;
        out = Some(match out {
            Some(acc) => acc.merge(next),
            None => next,
        });
    }
    Ok(out.expect("at least one policy"))
}

fn options(run: &RunArgs) -> Options {
    Options { open_system: run.open_system, eager_collapse: run.eager_collapse }
}

fn entry_args(prog: &Program, entry: &str) -> Result<Vec<Value>, Failure> {
    let def = prog.get(entry).ok_or_else(|| Failure(format!("unknown process `{entry}`")))?;
    def.params
        .iter()
        .map(|p| match p.ty {
            Type::Chan(_) => Ok(Value::Chan(p.name.clone())),
            _ => Err(Failure(format!("`{entry}` has parameter `{}: {}`; only channel parameters can be left open", p.name, p.ty))),
        })
        .collect()
}

fn pick_entry(given: Option<String>, default: Option<String>) -> Result<String, Failure> {
    given.or(default).ok_or_else(|| Failure("missing --entry".into()))
}

fn cmd_parse(file: &str, format: TextOrJson) -> Result<ExitCode, Failure> {
    let (src, _) = read_source(file)?;
    match load_program(&src) {
        Ok(prog) => {
            match format {
                TextOrJson::Text => {
                    out!("ok: {} definition(s)", prog.definitions.len());
                    for d in &prog.definitions {
                        let ps: Vec<String> = d.params.iter().map(|p| format!("{}: {}", p.name, p.ty)).collect();
                        out!("  {}({})", d.name, ps.join(", "));
                    }
                }
                TextOrJson::Json => {
                    let defs: Vec<_> = prog
                        .definitions
                        .iter()
                        .map(|d| {
                            let ps: Vec<_> =
                                d.params.iter().map(|p| json!({ "name": p.name, "type": p.ty.to_string() })).collect();
                            json!({ "name": d.name, "params": ps })
                        })
                        .collect();
                    out!("{}", serde_json::to_string_pretty(&json!({ "ok": true, "definitions": defs }))?);
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Err(d) => {
            match format {
                TextOrJson::Text => eprintln!("{file}:\n{d}"),
                TextOrJson::Json => {
                    let errs: Vec<String> = d.iter().map(|e| e.to_string()).collect();
                    out!("{}", serde_json::to_string_pretty(&json!({ "ok": false, "diagnostics": errs }))?);
                }
            }
            Ok(ExitCode::from(2))
        }
    }
}

fn cmd_trace(
    file: &str,
    entry: Option<String>,
    run: &RunArgs,
    max_steps: usize,
    format: TextOrJson,
    style: &Style,
) -> Result<ExitCode, Failure> {
    let (prog, default) = load(file)?;
    let entry = pick_entry(entry, default)?;
    let args = entry_args(&prog, &entry)?;
    let sem = Semantics::new(prog, policy(run)?, options(run));
    let steps = sem.trace(sem.initial_config(&entry, &args)?, max_steps)?;
    match format {
        TextOrJson::Text => {
            for (i, s) in steps.iter().enumerate() {
                match &s.label {
                    None => out!("{}", style.dim(&format!("[{i}] initial"))),
                    Some(l) => out!("{}", style.dim(&format!("[{i}] --{l}-->"))),
                }
                out!("{}", s.config);
            }
        }
        TextOrJson::Json => {
            let out: Vec<_> = steps
                .iter()
                .map(|s| json!({ "label": s.label.as_ref().map(|l| l.to_string()), "config": s.config.to_string() }))
                .collect();
            out!("{}", serde_json::to_string_pretty(&out)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_lts(
    file: &str,
    entry: Option<String>,
    run: &RunArgs,
    format: LtsFormat,
    output: Option<PathBuf>,
    max_states: u64,
    max_depth: Option<u64>,
) -> Result<ExitCode, Failure> {
    let (prog, default) = load(file)?;
    let entry = pick_entry(entry, default)?;
    let args = entry_args(&prog, &entry)?;
    let sem = Semantics::new(prog, policy(run)?, options(run));
    let limits = Limits {
        max_states: usize::try_from(max_states).unwrap_or(usize::MAX),
        max_depth: max_depth.map_or(usize::MAX, |d| usize::try_from(d).unwrap_or(usize::MAX)),
    };
    let lts = sem.explore(&entry, &args, limits)?;
    let text = match format {
        LtsFormat::Json => serde_json::to_string_pretty(&to_json(&lts))?,
        LtsFormat::Dot => to_dot(&lts),
        LtsFormat::Text => {
            let probabilistic = lts.states().iter().filter(|s| s.config.is_probabilistic()).count();
            format!(
                "{entry}: {} states ({probabilistic} probabilistic), {} transitions{}",
                lts.len(),
                lts.transitions().len(),
                if lts.truncated { ", truncated" } else { "" }
            )
        }
    };
    match output {
        Some(path) => std::fs::write(&path, text + "\n")?,
        None => out!("{text}"),
    }
    if lts.truncated {
        eprintln!("warning: exploration stopped at a limit");
    }
    Ok(ExitCode::SUCCESS)
}

fn print_verdict(left: &str, right: &str, v: &ProcessVerdict, style: &Style) {
    let word = if v.equivalent { style.good("equivalent") } else { style.bad("inequivalent") };
    out!("{left} vs {right}: {word}");
    for r in &v.sigma_results {
        let w = if r.equivalent { style.good("equivalent") } else { style.bad("inequivalent") };
        out!("  {}: {w} {}", r.input, style.dim(&format!("({} + {} states)", r.states.0, r.states.1)));
        if let Some(wit) = &r.witness {
            for line in wit.to_string().lines() {
                out!("    {line}");
            }
        }
    }
    for c in &v.caveats {
        out!("note: {c}");
    }
}

fn cmd_equiv(cmd: Command, style: &Style) -> Result<ExitCode, Failure> {
    let Command::Equiv { file, left, right, right_file, run, full, strong, tol, max_states, format } = cmd else {
        unreachable!("dispatched on Equiv")
    };
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Failure("--tol must be positive".into()));
    }
    let (lp, _) = load(&file)?;
    let rp = match &right_file {
        Some(f) => load(f)?.0,
        None => lp.clone(),
    };
    let cfg = EquivConfig {
        tol,
        options: options(&run),
        limits: Limits { max_states: usize::try_from(max_states).unwrap_or(usize::MAX), max_depth: usize::MAX },
        relation: if strong { Relation::Strong } else { Relation::Branching },
    };
    let pol = policy(&run)?;
    let v = if full {
        check_full_equiv(&lp, &left, &rp, &right, &pol, &cfg)?
    } else {
        check_process_equiv(&lp, &left, &rp, &right, &pol, &cfg)?
    };
    match format {
        TextOrJson::Text => print_verdict(&left, &right, &v, style),
        TextOrJson::Json => out!("{}", serde_json::to_string_pretty(&v.to_json())?),
    }
    Ok(if v.equivalent { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_catalog() -> ExitCode {
    for e in models::catalog() {
        let mut rel = Vec::new();
        if !e.equivalent_to.is_empty() {
            rel.push(format!("equivalent to {}", e.equivalent_to.join(", ")));
        }
        if !e.inequivalent_to.is_empty() {
            rel.push(format!("not equivalent to {}", e.inequivalent_to.join(", ")));
        }
        out!("{:<10} {}.cqp ({}) {}", e.name, e.file, e.interface.join(", "), rel.join("; "));
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let style = Style::from_env();
    let result = match cli.command {
        Command::Parse { file, format } => cmd_parse(&file, format),
        Command::Trace { file, entry, run, max_steps, format } => {
            cmd_trace(&file, entry, &run, max_steps, format, &style)
        }
        Command::Lts { file, entry, run, format, output, max_states, max_depth } => {
            cmd_lts(&file, entry, &run, format, output, max_states, max_depth)
        }
        cmd @ Command::Equiv { .. } => cmd_equiv(cmd, &style),
        Command::Catalog => Ok(cmd_catalog()),
    };
    match result {
        Ok(code) => code,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
