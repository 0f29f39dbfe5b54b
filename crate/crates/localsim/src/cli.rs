//! The `localsim` command line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use localsim_core::decomposition::{ball_carving_sequential, distributed_decomposition, mpx_decomposition, validate, NetworkDecomposition};
use localsim_core::generators::Family;
use localsim_core::lll::{fg_solve, moser_tardos, LllInstance};
use localsim_core::problems::{check_solution, CheckReport, Mis, OrientationLabel, ProblemError, ProperColoring, SinklessOrientation};
use localsim_core::rng::split_seed;
use localsim_core::round_elim::{eliminate, search_table, verify_table, zero_round_analysis, ViewKind, ZeroRound};
use localsim_core::{Graph, RandomTape};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::bench::{read_csv, run_bench, write_csv, ExperimentConfig, Row};
use crate::formats::{LllDoc, RunDoc, TableDoc};
use crate::io::{load_graph, read_ids, write_graph, FormatError};
use crate::registry::{run_algorithm, RunError, RunOptions};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_INTERNAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "localsim", version, about = "LOCAL-model simulator and experiment harness")]
pub struct Cli {
    /// Master seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Bench output as JSON instead of CSV.
    #[arg(long, global = true)]
    pub json: bool,
    /// Run output as a CSV row in the bench schema instead of JSON.
    #[arg(long, global = true)]
    pub csv: bool,
    /// No summaries on stderr.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    /// Exit 0 even when a result fails its check.
    #[arg(long, global = true)]
    pub allow_invalid: bool,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Generate a graph file.
    Gen {
        /// cycle, path, random_regular, random_bounded_degree, branching_tree
        family: String,
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        delta: usize,
        #[arg(long, default_value_t = 0)]
        layers: usize,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run a registered algorithm on a graph file.
    Run {
        alg: String,
        graph: PathBuf,
        /// One id per line.
        #[arg(long)]
        ids: Option<PathBuf>,
        /// Algorithm parameter `key=value`; repeatable.
        #[arg(long = "param", short = 'p')]
        params: Vec<String>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Check labels against a problem: coloring:K, mis, sinkless:DELTA, decomposition.
    Check {
        problem: String,
        graph: PathBuf,
        /// A run document, a decomposition, or a JSON array of labels.
        labels: PathBuf,
    },
    /// Run a sweep described by a JSON config and write CSV.
    Bench {
        config: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Network decomposition by ballcarve, distdecomp or mpx.
    Decompose {
        method: String,
        graph: PathBuf,
        #[arg(long)]
        ids: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Solve an LLL instance file.
    Lll {
        instance: PathBuf,
        /// mt or fg
        #[arg(long, default_value = "mt")]
        method: String,
        #[arg(long, default_value_t = 1_000_000)]
        max_resamples: usize,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Round elimination on path-colouring tables: verify, eliminate, analyze, search.
    Roundelim {
        op: String,
        /// Input table (not used by search).
        table: Option<PathBuf>,
        /// For search: node or edge.
        #[arg(long, default_value = "node")]
        kind: String,
        /// For search: t, or s for edge views.
        #[arg(long, default_value_t = 1)]
        t: u32,
        #[arg(long = "ids", default_value_t = 6)]
        n_ids: u8,
        #[arg(long, default_value_t = 3)]
        k: u64,
        /// Eliminate this many times.
        #[arg(long, default_value_t = 1)]
        times: usize,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Internal(String),
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Usage(s) => CliError::Usage(s),
            RunError::Internal(s) => CliError::Internal(s),
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// What a command produced: text for stdout or a file, and whether the
/// result passed its check (`None` when nothing was checked).
struct Output {
    text: String,
    summary: String,
    valid: Option<bool>,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data");
    s.push('\n');
    s
}

fn load_ids(path: &Option<PathBuf>, g: &Graph) -> Result<Option<Vec<u64>>, CliError> {
    match path {
        None => Ok(None),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            Ok(Some(read_ids(&text, g.n())?))
        }
    }
}

fn parse_params(raw: &[String]) -> Result<BTreeMap<String, String>, CliError> {
    raw.iter()
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| usage(format!("parameter {kv} is not key=value")))?;
            Ok((k.to_string(), v.to_string()))
        })
        .collect()
}

fn rows_csv(rows: &[Row]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

fn labels_of(path: &Path) -> Result<Vec<Value>, CliError> {
    let v: Value = read_json(path)?;
    match v {
        Value::Array(a) => Ok(a),
        Value::Object(ref o) if o.contains_key("labels") => {
            let doc: RunDoc = serde_json::from_value(v).map_err(|e| usage(e.to_string()))?;
            Ok(doc.labels)
        }
        _ => Err(usage("labels file must be a run document or a JSON array")),
    }
}

fn typed<T: DeserializeOwned>(labels: Vec<Value>) -> Result<Vec<T>, CliError> {
    labels.into_iter().map(|v| serde_json::from_value(v).map_err(|e| usage(format!("bad label: {e}")))).collect()
}

fn report_output(problem: &str, rep: &CheckReport) -> Output {
    let doc = json!({
        "problem": problem,
        "valid": rep.valid,
        "violations": rep.violations.iter().map(|(u, m)| json!({"node": u, "reason": m})).collect::<Vec<_>>(),
    });
    Output {
        text: pretty(&doc),
        summary: format!("{problem}: {} ({} violations)", if rep.valid { "valid" } else { "INVALID" }, rep.violations.len()),
        valid: Some(rep.valid),
    }
}

fn cmd_check(problem: &str, graph: &Path, labels: &Path) -> Result<Output, CliError> {
    let g = load_graph(graph)?;
    let (kind, arg) = problem.split_once(':').unwrap_or((problem, ""));
    let num = |what: &str| -> Result<usize, CliError> { arg.parse().map_err(|_| usage(format!("{problem}: expected {what}"))) };
    let rep = match kind {
        "coloring" => {
            let k = num("coloring:K")? as u32;
            check_solution(&ProperColoring { k }, &g, &typed::<u32>(labels_of(labels)?)?)
        }
        "mis" => check_solution(&Mis, &g, &typed::<bool>(labels_of(labels)?)?),
        "sinkless" => {
            let delta = num("sinkless:DELTA")?;
            check_solution(&SinklessOrientation { delta }, &g, &typed::<OrientationLabel>(labels_of(labels)?)?)
        }
        "decomposition" => {
            let v: Value = read_json(labels)?;
            let nd: NetworkDecomposition = serde_json::from_value(v).map_err(|e| usage(format!("not a decomposition: {e}")))?;
            if nd.n() != g.n() {
                return Err(usage(format!("decomposition covers {} nodes, graph has {}", nd.n(), g.n())));
            }
            return Ok(report_output(problem, &validate(&g, &nd)));
        }
        _ => return Err(usage(format!("unknown problem {problem} (coloring:K, mis, sinkless:DELTA, decomposition)"))),
    }
    ;
    let rep = match rep {
        Ok(r) => r,
        // a label outside the alphabet is a wrong answer, not a wrong call
        Err(e @ ProblemError::LabelOutOfRange(u)) => CheckReport::from_violations(vec![(u, e.to_string())]),
        Err(e) => return Err(usage(e.to_string())),
    };
    Ok(report_output(problem, &rep))
}

fn cmd_gen(family: &str, n: usize, delta: usize, layers: usize, seed: u64) -> Result<Output, CliError> {
    let fam = match family {
        "cycle" => Family::Cycle { n },
        "path" => Family::Path { n },
        "random_regular" => Family::RandomRegular { n, delta },
        "random_bounded_degree" => Family::RandomBoundedDegree { n, delta },
        "branching_tree" => Family::BranchingTree { delta, layers },
        _ => return Err(usage(format!("unknown family {family}"))),
    };
    let g = fam.generate(seed).map_err(|e| usage(e.to_string()))?;
    Ok(Output {
        text: write_graph(&g),
        summary: format!("{family}: n = {}, m = {}, max degree {}", g.n(), g.m(), g.max_degree()),
        valid: None,
    })
}

fn cmd_decompose(method: &str, g: &Graph, ids: Option<Vec<u64>>, seed: u64) -> Result<Output, CliError> {
    let nd = match method {
        "ballcarve" => ball_carving_sequential(g).0,
        "distdecomp" => {
            let ids = match ids {
                Some(ids) => ids,
                None => localsim_core::ids::assign_ids(g, 3, split_seed(seed, 0), localsim_core::ids::IdMode::Random)
                    .map_err(|e| CliError::Internal(e.to_string()))?
                    .ids,
            };
            distributed_decomposition(g, &ids).0
        }
        "mpx" => mpx_decomposition(g, split_seed(seed, 1)).0,
        _ => return Err(usage(format!("unknown method {method} (ballcarve, distdecomp, mpx)"))),
    };
    let rep = validate(g, &nd);
    Ok(Output {
        text: pretty(&nd),
        summary: format!("{method}: {} colours, diameter bound {}, {}", nd.c, nd.d, if rep.valid { "valid" } else { "INVALID" }),
        valid: Some(rep.valid),
    })
}

fn count_violated(inst: &LllInstance, a: &[u64]) -> usize {
    (0..inst.events.len()).filter(|&e| inst.violated(e, a)).count()
}

fn cmd_lll(path: &Path, method: &str, max_resamples: usize, seed: u64) -> Result<Output, CliError> {
    let doc: LllDoc = read_json(path)?;
    let inst = doc.to_instance()?;
    let (assignment, extra) = match method {
        "mt" => {
            let r = moser_tardos(&inst, seed, max_resamples).map_err(|e| CliError::Internal(e.to_string()))?;
            (r.assignment, json!({"resamples": r.resamples}))
        }
        "fg" => {
            let width = inst.bits.iter().copied().max().unwrap_or(1) as usize;
            let tape = RandomTape::generate(inst.bits.len(), width.max(1), seed);
            let order: Vec<usize> = (0..inst.bits.len()).collect();
            let s = fg_solve(&inst, &order, &tape).map_err(|e| CliError::Internal(e.to_string()))?;
            let extra = json!({
                "residual_events": s.shatter.residual_events.len(),
                "max_component": s.shatter.max_component(),
                "max_residual": s.shatter.max_residual.to_f64(),
                "fallbacks": s.fallbacks,
            });
            (s.assignment, extra)
        }
        _ => return Err(usage(format!("unknown method {method} (mt, fg)"))),
    };
    let bad = count_violated(&inst, &assignment);
    let out = json!({"method": method, "seed": seed, "assignment": assignment, "violated": bad, "valid": bad == 0, "stats": extra});
    Ok(Output {
        text: pretty(&out),
        summary: format!("lll {method}: {} events, {bad} violated", inst.events.len()),
        valid: Some(bad == 0),
    })
}

fn cmd_roundelim(
    op: &str,
    table: Option<&Path>,
    kind: &str,
    t: u32,
    n_ids: u8,
    k: u64,
    times: usize,
    seed: u64,
) -> Result<Output, CliError> {
    let load = || -> Result<_, CliError> {
        let p = table.ok_or_else(|| usage(format!("roundelim {op} needs a table file")))?;
        Ok(read_json::<TableDoc>(p)?.to_table()?)
    };
    match op {
        "verify" => {
            let tab = load()?;
            let res = verify_table(&tab);
            let doc = match &res {
                Ok(()) => json!({"valid": true}),
                Err(w) => json!({"valid": false, "witness": format!("{w:?}")}),
            };
            Ok(Output { text: pretty(&doc), summary: format!("table valid: {}", res.is_ok()), valid: Some(res.is_ok()) })
        }
        "eliminate" => {
            let mut tab = load()?;
            let valid_in = verify_table(&tab).is_ok();
            let mut ks = vec![tab.k];
            for _ in 0..times {
                tab = eliminate(&tab).map_err(|e| usage(e.to_string()))?;
                ks.push(tab.k);
            }
            // a valid input must stay valid
            let valid_out = verify_table(&tab).is_ok();
            if valid_in && !valid_out {
                return Err(CliError::Internal("elimination broke a valid table".into()));
            }
            Ok(Output {
                text: pretty(&TableDoc::from_table(&tab)),
                summary: format!("colour ranges {ks:?}, output valid: {valid_out}"),
                valid: Some(valid_out),
            })
        }
        "analyze" => {
            let tab = load()?;
            let z = zero_round_analysis(&tab).map_err(|e| usage(e.to_string()))?;
            let doc = match &z {
                ZeroRound::Witness { .. } => json!({"result": "witness", "detail": format!("{z:?}")}),
                ZeroRound::Injective => json!({"result": "injective"}),
            };
            Ok(Output { text: pretty(&doc), summary: format!("{z:?}"), valid: None })
        }
        "search" => {
            let vk = match kind {
                "node" => ViewKind::Node { t },
                "edge" => ViewKind::Edge { s: t },
                _ => return Err(usage(format!("unknown view kind {kind}"))),
            };
            let tab = search_table(vk, n_ids, k, Some(seed), 1 << 22)
                .ok_or_else(|| usage(format!("no valid {k}-colouring table for {vk:?} with {n_ids} ids")))?;
            Ok(Output {
                text: pretty(&TableDoc::from_table(&tab)),
                summary: format!("found table with {} entries", tab.entries.len()),
                valid: Some(true),
            })
        }
        _ => Err(usage(format!("unknown op {op} (verify, eliminate, analyze, search)"))),
    }
}

fn execute(cli: &Cli) -> Result<(Output, Option<PathBuf>), CliError> {
    let seed = cli.seed;
    Ok(match &cli.cmd {
        Cmd::Gen { family, n, delta, layers, out } => (cmd_gen(family, *n, *delta, *layers, seed)?, out.clone()),
        Cmd::Run { alg, graph, ids, params, out } => {
            let g = load_graph(graph)?;
            let opts = RunOptions { seed, params: parse_params(params)?, ids: load_ids(ids, &g)? };
            let o = run_algorithm(alg, &g, &opts)?;
            let summary = format!(
                "{alg}: n = {}, rounds = {}, valid = {}",
                o.doc.n,
                o.doc.rounds,
                o.doc.valid.map_or("n/a".into(), |v| v.to_string())
            );
            let text = if cli.csv {
                let row = Row {
                    family: graph.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
                    n: g.n(),
                    delta: g.max_degree(),
                    alg: alg.clone(),
                    seed,
                    rounds: o.doc.rounds,
                    colors_or_metric: o.metric,
                    valid: o.doc.valid,
                    max_component: o.max_component,
                    wall_ms: None,
                };
                rows_csv(&[row])
            } else {
                o.doc.to_json() + "\n"
            };
            (Output { text, summary, valid: o.doc.valid }, out.clone())
        }
        Cmd::Check { problem, graph, labels } => (cmd_check(problem, graph, labels)?, None),
        Cmd::Bench { config, out } => {
            let cfg: ExperimentConfig = read_json(config)?;
            let rows = run_bench(&cfg)?;
            let bad = rows.iter().filter(|r| r.valid == Some(false)).count();
            let text = if cli.json { pretty(&rows) } else { rows_csv(&rows) };
            let o = Output { text, summary: format!("{} rows, {bad} invalid", rows.len()), valid: Some(bad == 0) };
            (o, out.clone().or(cfg.output))
        }
        Cmd::Decompose { method, graph, ids, out } => {
            let g = load_graph(graph)?;
            let ids = load_ids(ids, &g)?;
            (cmd_decompose(method, &g, ids, seed)?, out.clone())
        }
        Cmd::Lll { instance, method, max_resamples, out } => (cmd_lll(instance, method, *max_resamples, seed)?, out.clone()),
        Cmd::Roundelim { op, table, kind, t, n_ids, k, times, out } => {
            (cmd_roundelim(op, table.as_deref(), kind, *t, *n_ids, *k, *times, seed)?, out.clone())
        }
    })
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| execute(&cli)));
    match res {
        Err(_) => ExitCode::from(EXIT_INTERNAL),
        Ok(Err(CliError::Usage(m))) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Ok(Err(CliError::Internal(m))) => {
            eprintln!("internal error: {m}");
            ExitCode::from(EXIT_INTERNAL)
        }
        Ok(Ok((out, path))) => {
            let emit = match path {
                Some(p) => std::fs::write(&p, &out.text).map_err(|e| format!("{}: {e}", p.display())),
                None => {
                    print!("{}", out.text);
                    Ok(())
                }
            };
            if let Err(m) = emit {
                eprintln!("error: {m}");
                return ExitCode::from(EXIT_USAGE);
            }
            if !cli.quiet {
                eprintln!("{}", out.summary);
            }
            if out.valid == Some(false) && !cli.allow_invalid {
                ExitCode::from(EXIT_INVALID)
            } else {
                ExitCode::from(EXIT_OK)
            }
        }
    }
}

/// Reads a bench CSV back; used by tests and scripts.
pub fn load_bench_csv(path: &Path) -> Result<Vec<Row>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(e.to_string()))?;
    read_csv(&text).map_err(usage)
}
