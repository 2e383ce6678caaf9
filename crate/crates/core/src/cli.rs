// SPDX-License-Identifier: Apache-2.0

//! Command-line front end.
//!
//! Exit status: 0 on success, 1 when constraints are inconsistent or a solve
//! does not converge, 2 on usage, input or parse errors.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::consistency::{global_consistent, local_check, GLOBAL_CAP};
use crate::dist::uniform;
use crate::engine::{bench, query, solve_decomposed};
use crate::graphops::{
    d_separated, decompose, fill_in_anneal, fill_in_greedy, parse_graph, AnnealOptions, Decomposition, FillMethod,
    GraphSpec,
};
use crate::mce::{mce_dual_solve, successive_solve, MceError, SolverOptions};
use crate::model::{build_network, parse_model, validate_scope_rule, Model};

#[derive(Parser, Debug)]
#[command(
    name = "maxent-cycles",
    version,
    about = "Maximum-entropy inference for belief networks with directed cycles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for the maximum-entropy distribution.
    Solve {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Decomposed)]
        method: Method,
        /// Residual tolerance [default: 1e-8 for dual, 1e-4 otherwise].
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = 100)]
        max_cycles: usize,
        /// Print the update trace after the tables.
        #[arg(long)]
        trace: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Fill-in used by the decomposed method.
        #[arg(long, value_enum, default_value_t = Fill::Greedy)]
        fill: Fill,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check constraint consistency.
    Check {
        model: PathBuf,
        #[arg(long, conflicts_with = "local")]
        global: bool,
        #[arg(long)]
        local: bool,
        /// Print the witness tables of a consistent verdict.
        #[arg(long)]
        witness: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Decompose a model or graph file into an acyclic clique cover.
    Decompose {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Fill::Greedy)]
        method: Fill,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Test d-separation of two variables given a set.
    Dsep {
        input: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        /// Comma separated separating set.
        #[arg(long, default_value = "")]
        given: String,
    },
    /// Probability of literals, optionally conditioned, from the decomposed solution.
    Query {
        model: PathBuf,
        /// Comma separated literals, e.g. `C,~D`.
        #[arg(long)]
        event: String,
        #[arg(long, default_value = "")]
        given: String,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Time the full-joint dual solve against decomposed successive updating.
    Bench {
        model: PathBuf,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long, default_value_t = 20)]
        repetitions: usize,
    },
    /// Parse a model (or `.graph` file) and report scope-rule warnings.
    Validate { input: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Dual,
    Successive,
    Decomposed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Tsv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Fill {
    Greedy,
    Anneal,
}

/// Outcome of a verb: exit code with the text for stdout, or a failure message for stderr.
enum Failure {
    Usage(String),
    Input(String),
    Finding(String, String),
}

type Outcome = Result<String, Failure>;

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<Model, Failure> {
    parse_model(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn is_graph(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "graph")
}

fn load_graph(path: &Path) -> Result<GraphSpec, Failure> {
    parse_graph(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn method_of(fill: Fill, seed: u64) -> FillMethod {
    match fill {
        Fill::Greedy => FillMethod::Greedy,
        Fill::Anneal => FillMethod::Anneal(AnnealOptions::with_seed(seed)),
    }
}

fn opts(base: SolverOptions, tol: Option<f64>, max_cycles: usize) -> Result<SolverOptions, Failure> {
    let o = SolverOptions { tolerance: tol.unwrap_or(base.tolerance), max_cycles, ..base };
    o.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(o)
}

#[allow(clippy::too_many_arguments)]
fn solve(
    path: &Path,
    method: Method,
    tol: Option<f64>,
    max_cycles: usize,
    trace: bool,
    format: Format,
    fill: Fill,
    seed: u64,
) -> Outcome {
    let model = load_model(path)?;
    let table_out = |t: &crate::dist::JointTable| match format {
        Format::Text => t.to_text(&model.variables),
        Format::Tsv => {
            let names: Vec<&str> = t.scope().iter().map(|&v| model.name(v)).collect();
            format!("{}\t{}\n", names.join(","), t.to_tsv_row())
        }
    };
    match method {
        Method::Dual => {
            if trace {
                return Err(Failure::Usage("--trace applies to the successive and decomposed methods".into()));
            }
            let o = opts(SolverOptions::dual(), tol, max_cycles)?;
            let prior = uniform(&model.ids()).map_err(input)?;
            match mce_dual_solve(&prior, &model.constraints, &o) {
                Ok(t) => Ok(table_out(&t)),
                Err(e @ MceError::NotConverged { .. }) => Err(Failure::Finding(String::new(), e.to_string())),
                Err(e) => Err(input(e)),
            }
        }
        Method::Successive => {
            let o = opts(SolverOptions::successive(), tol, max_cycles)?;
            let prior = uniform(&model.ids()).map_err(input)?;
            let r = successive_solve(&prior, &model.constraints, &o).map_err(input)?;
            let mut out = table_out(&r.table);
            if format == Format::Text {
                out.push_str(&format!(
                    "converged: {}\ncycles: {}\nmax residual: {:.6e}\n",
                    if r.converged { "yes" } else { "no" },
                    r.cycles,
                    r.max_residual
                ));
            }
            if trace {
                out.push_str(&r.trace.to_tsv(&model));
            }
            if r.converged {
                Ok(out)
            } else {
                Err(Failure::Finding(out, "did not converge".into()))
            }
        }
        Method::Decomposed => {
            let o = opts(SolverOptions::successive(), tol, max_cycles)?;
            let d = decompose(&model, &method_of(fill, seed)).map_err(input)?;
            let r = solve_decomposed(&model, &d, &o).map_err(input)?;
            let mut out = match format {
                Format::Text => r.to_text(&model),
                Format::Tsv => r.to_tsv(&model),
            };
            if trace {
                out.push_str(&r.trace.to_tsv(&model));
            }
            if r.converged {
                Ok(out)
            } else {
                Err(Failure::Finding(out, "did not converge".into()))
            }
        }
    }
}

fn check(path: &Path, global: bool, local: bool, witness: bool, seed: u64) -> Outcome {
    let model = load_model(path)?;
    let use_local = local || (!global && model.variables.len() > GLOBAL_CAP);
    let report = if use_local {
        let d = decompose(&model, &FillMethod::Anneal(AnnealOptions::with_seed(seed))).map_err(input)?;
        local_check(&model, &d).map_err(input)?
    } else {
        global_consistent(&model).map_err(input)?
    };
    let text = report.to_text(&model, witness);
    if report.is_consistent() {
        Ok(text)
    } else {
        Err(Failure::Finding(text, String::new()))
    }
}

fn decompose_verb(path: &Path, fill: Fill, seed: u64) -> Outcome {
    let d: Decomposition = if is_graph(path) {
        let g = load_graph(path)?.neighbor_graph();
        match fill {
            Fill::Greedy => fill_in_greedy(&g),
            Fill::Anneal => fill_in_anneal(&g, &AnnealOptions::with_seed(seed)).map_err(input)?,
        }
    } else {
        decompose(&load_model(path)?, &method_of(fill, seed)).map_err(input)?
    };
    Ok(d.to_text())
}

fn dsep(path: &Path, x: &str, y: &str, given: &str) -> Outcome {
    let (net, lookup): (_, Box<dyn Fn(&str) -> Option<crate::model::VarId>>) = if is_graph(path) {
        let spec = load_graph(path)?;
        (spec.network(), Box::new(move |n: &str| spec.var(n)))
    } else {
        let model = load_model(path)?;
        (build_network(&model), Box::new(move |n: &str| model.var(n)))
    };
    let var = |n: &str| lookup(n.trim()).ok_or_else(|| Failure::Usage(format!("unknown variable `{}`", n.trim())));
    let (x, y) = (var(x)?, var(y)?);
    let given: BTreeSet<_> = given.split(',').filter(|s| !s.trim().is_empty()).map(var).collect::<Result<_, _>>()?;
    let sep = d_separated(&net, x, y, &given).map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(if sep { "separated\n".into() } else { "not separated\n".into() })
}

fn query_verb(path: &Path, event: &str, given: &str, tol: f64) -> Outcome {
    let model = load_model(path)?;
    let lits = |s: &str| {
        if s.trim().is_empty() {
            return Ok(Vec::new());
        }
        model.literals(s).ok_or_else(|| Failure::Usage(format!("cannot read literals `{s}`")))
    };
    let (event, given) = (lits(event)?, lits(given)?);
    let o = opts(SolverOptions::successive(), Some(tol), 100)?;
    let d = decompose(&model, &FillMethod::Greedy).map_err(input)?;
    let r = solve_decomposed(&model, &d, &o).map_err(input)?;
    if !r.converged {
        return Err(Failure::Finding(String::new(), "did not converge".into()));
    }
    let p = query(&r, &event, &given).map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(format!("{p:.6}\n"))
}

fn bench_verb(path: &Path, tol: f64, repetitions: usize) -> Outcome {
    let model = load_model(path)?;
    let o = opts(SolverOptions::successive(), Some(tol), 100)?;
    let b = bench(&model, &o, repetitions).map_err(input)?;
    Ok(b.to_text())
}

fn validate(path: &Path) -> Outcome {
    if is_graph(path) {
        let g = load_graph(path)?;
        return Ok(format!(
            "ok: {} nodes, {} edges, {} arcs, {} hyperedges\n",
            g.nodes.len(),
            g.edges.len(),
            g.arcs.len(),
            g.hedges.len()
        ));
    }
    let model = load_model(path)?;
    let mut out = format!("ok: {} variables, {} constraints\n", model.variables.len(), model.constraints.len());
    for w in validate_scope_rule(&model) {
        out.push_str(&format!("warning: {}: {}\n", model.constraint_text(w.constraint), w.message));
    }
    Ok(out)
}

fn dispatch(cmd: Command) -> Outcome {
    match cmd {
        Command::Solve { model, method, tol, max_cycles, trace, format, fill, seed } => {
            solve(&model, method, tol, max_cycles, trace, format, fill, seed)
        }
        Command::Check { model, global, local, witness, seed } => check(&model, global, local, witness, seed),
        Command::Decompose { input, method, seed } => decompose_verb(&input, method, seed),
        Command::Dsep { input, x, y, given } => dsep(&input, &x, &y, &given),
        Command::Query { model, event, given, tol } => query_verb(&model, &event, &given, tol),
        Command::Bench { model, tol, repetitions } => bench_verb(&model, tol, repetitions),
        Command::Validate { input } => validate(&input),
    }
}

/// Runs the tool on `args` (including the program name) and returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(text) => {
            let _ = out.write_all(text.as_bytes());
            0
        }
        Err(Failure::Finding(text, message)) => {
            let _ = out.write_all(text.as_bytes());
            if !message.is_empty() {
                let _ = writeln!(err, "error: {message}");
            }
            1
        }
        Err(Failure::Usage(message) | Failure::Input(message)) => {
            let _ = writeln!(err, "error: {message}");
            2
        }
    }
}
