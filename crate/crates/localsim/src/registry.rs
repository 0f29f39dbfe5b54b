//! Run-by-name dispatch. Every algorithm runs on a graph with a seed and
//! string parameters, and its output is checked against the problem it
//! claims to solve.

use std::collections::{BTreeMap, BTreeSet};

use localsim_core::compilers::{
    decompose_power, slocal_via_decomposition, speedup_constantize, ColeVishkin, CompileError, CompiledViaColoring, Decomposer,
    SpeedupParams,
};
use localsim_core::decomposition::{ball_carving_sequential, distributed_decomposition, mpx_decomposition, validate, NetworkDecomposition};
use localsim_core::engine::{run_sequential, FromProtocol, Order, SequentialAlgorithm};
use localsim_core::ids::{assign_ids, path_order, range_bound, IdAssignment, IdMode};
use localsim_core::lll::{decode_orientation, fg_solve, moser_tardos, sinkless_to_lll};
use localsim_core::problems::{check_solution, orientation_labels, Mis, ProperColoring, SinklessOrientation};
use localsim_core::rng::split_seed;
use localsim_core::round_elim::{search_table, ViewKind};
use localsim_core::symmetry::{check_proper, cycle_3color_randomized, linial_color, luby_mis, ColoringError, GreedyColoring, GreedyMis};
use localsim_core::{Graph, RandomTape, RunResult};
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::formats::RunDoc;

#[derive(Debug, Error)]
pub enum RunError {
    /// Bad name, parameter or input shape.
    #[error("{0}")]
    Usage(String),
    /// An internal check failed.
    #[error("{0}")]
    Internal(String),
}

fn usage(msg: impl Into<String>) -> RunError {
    RunError::Usage(msg.into())
}

fn internal(e: impl std::fmt::Display) -> RunError {
    RunError::Internal(e.to_string())
}

fn coloring_err(e: ColoringError) -> RunError {
    match e {
        ColoringError::NotOrientedCycle | ColoringError::NoRed => usage(e.to_string()),
        ColoringError::Engine(localsim_core::EngineError::Tape(_)) => usage(format!("{e}; raise the `iterations` parameter")),
        _ => internal(e),
    }
}

fn compile_err(e: CompileError) -> RunError {
    match e {
        CompileError::IdRange { .. } | CompileError::ColorRange { .. } | CompileError::SpeedupInequality { .. } => usage(e.to_string()),
        _ => internal(e),
    }
}

pub const ALGORITHMS: &[&str] = &[
    "linial",
    "luby",
    "cycle3color",
    "ballcarve",
    "distdecomp",
    "mpx",
    "slocal:mis",
    "slocal:coloring",
    "compiled:mis",
    "compiled:coloring",
    "compiled:speedup3",
    "lll:mt",
    "lll:fg",
    "roundelim:table",
];

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: u64,
    pub params: BTreeMap<String, String>,
    /// Explicit ids; drawn from the seed otherwise.
    pub ids: Option<Vec<u64>>,
}

impl RunOptions {
    pub fn new(seed: u64) -> Self {
        RunOptions { seed, ..Default::default() }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.into(), value.to_string());
        self
    }

    fn param<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, RunError> {
        match self.params.get(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| usage(format!("bad value for parameter {key}: {s}"))),
        }
    }

    fn exponent(&self) -> Result<u32, RunError> {
        let c = self.param("C", 3u32)?;
        if c == 0 {
            return Err(usage("C must be at least 1"));
        }
        Ok(c)
    }

    fn ids(&self, g: &Graph) -> Result<IdAssignment, RunError> {
        let c = self.exponent()?;
        match &self.ids {
            Some(ids) => {
                let top = ids.iter().copied().max().unwrap_or(0);
                let bound = range_bound(g.n(), c).max(top.saturating_add(1));
                IdAssignment::new(ids.clone(), bound, c).map_err(|e| usage(e.to_string()))
            }
            None => assign_ids(g, c, split_seed(self.seed, 0), IdMode::Random).map_err(internal),
        }
    }
}

/// A checked run: the JSON document plus the numbers the bench records.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub doc: RunDoc,
    /// Colours used, MIS size, decomposition colours, resamples, ...
    pub metric: Option<f64>,
    pub max_component: Option<usize>,
}

fn to_values<T: Serialize>(xs: &[T]) -> Vec<Value> {
    xs.iter().map(|x| serde_json::to_value(x).expect("plain data")).collect()
}

fn distinct<T: Ord + Clone>(xs: &[T]) -> usize {
    xs.iter().cloned().collect::<BTreeSet<_>>().len()
}

struct Builder<'a> {
    name: &'a str,
    g: &'a Graph,
    seed: u64,
    stats: BTreeMap<String, Value>,
}

impl Builder<'_> {
    fn stat(&mut self, k: &str, v: impl Serialize) {
        self.stats.insert(k.into(), serde_json::to_value(v).expect("plain data"));
    }

    fn done<T: Serialize>(self, res: &RunResult<T>, valid: Option<bool>, metric: Option<f64>, max_component: Option<usize>) -> Outcome {
        let doc = RunDoc {
            n: self.g.n(),
            algorithm: self.name.into(),
            rounds: res.rounds_used,
            labels: to_values(&res.labels),
            valid,
            seed: self.seed,
            stats: self.stats,
        };
        Outcome { doc, metric, max_component }
    }
}

fn decomposition_outcome(mut b: Builder<'_>, nd: &NetworkDecomposition, rounds: usize) -> Outcome {
    let report = validate(b.g, nd);
    b.stat("c", nd.c);
    b.stat("d", nd.d);
    b.stat("violations", report.violations.len());
    let clusters = nd.clusters();
    let largest = clusters.values().map(Vec::len).max().unwrap_or(0);
    let colors = nd.color.iter().copied().collect::<BTreeSet<_>>().len();
    let res = RunResult {
        labels: nd.color.iter().zip(&nd.cluster).map(|(&c, &k)| (c, k)).collect::<Vec<_>>(),
        rounds_used: rounds,
        locality_used: 0,
        trace: None,
        max_stored: None,
    };
    b.done(&res, Some(report.valid), Some(colors as f64), Some(largest))
}

fn sequential<A>(alg: &A, g: &Graph, opts: &RunOptions) -> Result<RunResult<A::Output>, RunError>
where
    A: SequentialAlgorithm<Label = ()>,
{
    let order = Order::Seeded(split_seed(opts.seed, 1));
    let res = run_sequential(alg, g, &vec![(); g.n()], order).map_err(internal)?;
    Ok(res.run_result())
}

fn decomposer(opts: &RunOptions) -> Result<Decomposer, RunError> {
    match opts.params.get("decomposer").map(String::as_str) {
        None | Some("distdecomp") => Ok(Decomposer::Distributed),
        Some("ballcarve") => Ok(Decomposer::BallCarving),
        Some("mpx") => Ok(Decomposer::Mpx { seed: split_seed(opts.seed, 2) }),
        Some(other) => Err(usage(format!("unknown decomposer {other} (ballcarve, distdecomp, mpx)"))),
    }
}

fn compiled<A>(alg: A, g: &Graph, opts: &RunOptions, b: &mut Builder<'_>) -> Result<RunResult<A::Output>, RunError>
where
    A: SequentialAlgorithm<Label = ()>,
    A::Output: PartialEq,
{
    let ids = opts.ids(g)?;
    let inputs = vec![(); g.n()];
    let run = match opts.params.get("via").map(String::as_str) {
        None | Some("decomposition") => {
            let how = decomposer(opts)?;
            let (nd, dec_rounds) = decompose_power(g, alg.locality(g.n()), &ids.ids, how);
            b.stat("decomposition_rounds", dec_rounds);
            b.stat("decomposition_colors", nd.c);
            slocal_via_decomposition(&alg, g, &inputs, &ids.ids, &nd, dec_rounds).map_err(compile_err)?
        }
        Some("coloring") => {
            let c = CompiledViaColoring::new(alg, g.max_degree(), ids.exponent);
            b.stat("classes", c.classes(g.n()));
            c.run(g, &inputs, &ids.ids).map_err(compile_err)?
        }
        Some(other) => return Err(usage(format!("unknown route {other} (decomposition, coloring)"))),
    };
    b.stat("class_rounds", &run.class_rounds);
    Ok(run.result)
}

fn sinkless_outcome(mut b: Builder<'_>, delta: usize, assignment: &[u64], rounds: usize) -> Result<Outcome, RunError> {
    let g = b.g;
    let labels = orientation_labels(g, &decode_orientation(assignment));
    let rep = check_solution(&SinklessOrientation { delta }, g, &labels).map_err(internal)?;
    b.stat("delta", delta);
    let res = RunResult { labels, rounds_used: rounds, locality_used: 0, trace: None, max_stored: None };
    let metric = b.stats.get("resamples").and_then(Value::as_f64);
    let comp = b.stats.get("max_component").and_then(Value::as_u64).map(|x| x as usize);
    Ok(b.done(&res, Some(rep.valid), metric, comp))
}

/// Runs the named algorithm on `g`.
pub fn run_algorithm(name: &str, g: &Graph, opts: &RunOptions) -> Result<Outcome, RunError> {
    let mut b = Builder { name, g, seed: opts.seed, stats: BTreeMap::new() };
    let n = g.n();
    match name {
        "linial" => {
            let ids = opts.ids(g)?;
            let res = linial_color(g, &ids).map_err(coloring_err)?;
            let valid = check_proper(g, &res.labels).is_ok();
            b.stat("max_color", res.labels.iter().max());
            let used = distinct(&res.labels);
            Ok(b.done(&res, Some(valid), Some(used as f64), None))
        }
        "luby" => {
            let ids = opts.ids(g)?;
            let it: usize = opts.param("iterations", 64)?;
            let tape = RandomTape::generate(n, 64 * it, split_seed(opts.seed, 1));
            let res = luby_mis(g, &ids, &tape).map_err(coloring_err)?;
            let valid = check_solution(&Mis, g, &res.labels).map_err(internal)?.valid;
            let size = res.labels.iter().filter(|&&x| x).count();
            Ok(b.done(&res, Some(valid), Some(size as f64), None))
        }
        "cycle3color" => {
            let tape = RandomTape::generate(n, 1, split_seed(opts.seed, 1));
            let res = cycle_3color_randomized(g, &tape).map_err(coloring_err)?;
            let valid = check_solution(&ProperColoring { k: 3 }, g, &res.labels).map_err(internal)?.valid;
            let used = distinct(&res.labels);
            Ok(b.done(&res, Some(valid), Some(used as f64), None))
        }
        "ballcarve" => {
            let (nd, phases) = ball_carving_sequential(g);
            b.stat("phases", phases.len());
            Ok(decomposition_outcome(b, &nd, 0))
        }
        "distdecomp" => {
            let ids = opts.ids(g)?;
            let (nd, trace) = distributed_decomposition(g, &ids.ids);
            b.stat("b", trace.b);
            Ok(decomposition_outcome(b, &nd, trace.rounds))
        }
        "mpx" => {
            let (nd, stats) = mpx_decomposition(g, split_seed(opts.seed, 1));
            b.stat("repetitions", stats.len());
            Ok(decomposition_outcome(b, &nd, 0))
        }
        "slocal:mis" => {
            let res = sequential(&GreedyMis::<()>::new(), g, opts)?;
            let valid = check_solution(&Mis, g, &res.labels).map_err(internal)?.valid;
            let size = res.labels.iter().filter(|&&x| x).count();
            Ok(b.done(&res, Some(valid), Some(size as f64), None))
        }
        "slocal:coloring" | "compiled:coloring" => {
            let res = if name == "slocal:coloring" {
                sequential(&GreedyColoring::<()>::new(), g, opts)?
            } else {
                compiled(GreedyColoring::<()>::new(), g, opts, &mut b)?
            };
            let k = g.max_degree() as u32 + 1;
            let valid = check_solution(&ProperColoring { k }, g, &res.labels).map_err(internal)?.valid;
            let used = distinct(&res.labels);
            Ok(b.done(&res, Some(valid), Some(used as f64), None))
        }
        "compiled:mis" => {
            let res = compiled(GreedyMis::<()>::new(), g, opts, &mut b)?;
            let valid = check_solution(&Mis, g, &res.labels).map_err(internal)?.valid;
            let size = res.labels.iter().filter(|&&x| x).count();
            Ok(b.done(&res, Some(valid), Some(size as f64), None))
        }
        "compiled:speedup3" => {
            let params = SpeedupParams {
                n0: opts.param("n0", 512)?,
                t0: opts.param("t0", 7)?,
                r: 1,
                delta: 2,
                exponent: opts.param("C0", 2)?,
            };
            let bits: u32 = opts.param("bits", 16)?;
            let c = speedup_constantize(FromProtocol(ColeVishkin { bits }), params).map_err(compile_err)?;
            let ids = opts.ids(g)?;
            let run = c.run(g, &ids.ids).map_err(compile_err)?;
            let rep = check_solution(&ProperColoring { k: 3 }, g, &run.result.labels).map_err(internal)?;
            b.stat("unexplained_failures", c.unexplained_failures(g, &run.fake_ids, &rep).len());
            let used = distinct(&run.result.labels);
            Ok(b.done(&run.result, Some(rep.valid), Some(used as f64), None))
        }
        "lll:mt" | "lll:fg" => {
            let delta: usize = opts.param("delta", g.max_degree())?;
            let inst = sinkless_to_lll(g, delta, 2);
            if name == "lll:mt" {
                let cap: usize = opts.param("max_resamples", 100 * n.max(1))?;
                let mt = moser_tardos(&inst, split_seed(opts.seed, 1), cap).map_err(|e| usage(e.to_string()))?;
                b.stat("resamples", mt.resamples);
                sinkless_outcome(b, delta, &mt.assignment, 0)
            } else {
                let tape = RandomTape::generate(g.m(), 1, split_seed(opts.seed, 1));
                let order: Vec<usize> = (0..g.m()).collect();
                let sol = fg_solve(&inst, &order, &tape).map_err(|e| usage(e.to_string()))?;
                b.stat("residual_events", sol.shatter.residual_events.len());
                b.stat("max_component", sol.shatter.max_component());
                b.stat("max_residual", sol.shatter.max_residual.to_f64());
                b.stat("fallbacks", sol.fallbacks);
                sinkless_outcome(b, delta, &sol.assignment, 0)
            }
        }
        "roundelim:table" => {
            let t: u32 = opts.param("t", 1)?;
            let k: u64 = opts.param("k", 3)?;
            let order = path_order(g).ok_or_else(|| usage("roundelim:table needs an oriented path"))?;
            if n > 12 {
                return Err(usage("roundelim:table works on paths with at most 12 nodes"));
            }
            let n_ids: u8 = opts.param("N", n.max(1) as u8)?;
            if (n_ids as usize) < n {
                return Err(usage("N must be at least the path length"));
            }
            let kind = ViewKind::Node { t };
            let tab = search_table(kind, n_ids, k, opts.params.contains_key("seeded").then_some(opts.seed), 1 << 22)
                .ok_or_else(|| usage(format!("no {k}-colouring table for t = {t}, N = {n_ids}")))?;
            // ids 1..=n along the path
            let mut pos = vec![0usize; n];
            for (i, &u) in order.iter().enumerate() {
                pos[u] = i;
            }
            let ti = t as i64;
            let labels: Vec<u32> = (0..n)
                .map(|u| {
                    let p = pos[u] as i64;
                    let view: Vec<u8> =
                        (p - ti..=p + ti).map(|j| if j < 0 || j >= n as i64 { 0 } else { (j + 1) as u8 }).collect();
                    tab.get(&view).expect("table is total") as u32 + 1
                })
                .collect();
            let valid = check_solution(&ProperColoring { k: k as u32 }, g, &labels).map_err(internal)?.valid;
            b.stat("entries", tab.entries.len());
            let used = distinct(&labels);
            let res = RunResult { labels, rounds_used: t as usize, locality_used: t as usize, trace: None, max_stored: None };
            Ok(b.done(&res, Some(valid), Some(used as f64), None))
        }
        _ => Err(usage(format!("unknown algorithm {name}; known: {}", ALGORITHMS.join(", ")))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use localsim_core::generators;

    #[test]
    fn every_name_runs_somewhere() {
        let cyc = generators::cycle(40).unwrap();
        let reg = generators::random_regular(40, 3, 2).unwrap();
        let path = generators::path(6).unwrap();
        for &name in ALGORITHMS {
            let g = match name {
                "cycle3color" | "compiled:speedup3" => &cyc,
                "roundelim:table" => &path,
                _ => &reg,
            };
            let out = run_algorithm(name, g, &RunOptions::new(7)).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(out.doc.valid, Some(true), "{name}");
            assert_eq!(out.doc.labels.len(), g.n());
        }
    }

    #[test]
    fn unknown_is_usage() {
        let g = generators::cycle(5).unwrap();
        assert!(matches!(run_algorithm("nope", &g, &RunOptions::new(1)), Err(RunError::Usage(_))));
        assert!(matches!(run_algorithm("cycle3color", &generators::path(5).unwrap(), &RunOptions::new(1)), Err(RunError::Usage(_))));
    }

    #[test]
    fn deterministic() {
        let g = generators::random_regular(60, 4, 1).unwrap();
        for name in ["linial", "luby", "mpx", "lll:mt"] {
            let a = run_algorithm(name, &g, &RunOptions::new(3)).unwrap();
            let b = run_algorithm(name, &g, &RunOptions::new(3)).unwrap();
            assert_eq!(a.doc.to_json(), b.doc.to_json());
        }
    }
}
