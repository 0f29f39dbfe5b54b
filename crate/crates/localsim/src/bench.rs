//! Parameter sweeps written as CSV.
//!
//! Trial `j` of ladder size `i` gets the seed `split_seed(master, i * trials + j)`;
//! the graph is generated from `split_seed(trial_seed, 0)` and the algorithm
//! runs with `trial_seed` itself.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use localsim_core::generators::Family;
use localsim_core::rng::split_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::registry::{run_algorithm, RunError, RunOptions};

pub const CSV_VERSION_LINE: &str = "# localsim-bench v1";
pub const CSV_COLUMNS: [&str; 10] =
    ["family", "n", "delta", "alg", "seed", "rounds", "colors_or_metric", "valid", "max_component", "wall_ms"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub algorithm: String,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
    /// cycle, path, random_regular, random_bounded_degree or branching_tree.
    pub family: String,
    #[serde(default)]
    pub delta: usize,
    /// Node counts; layer counts for branching trees.
    pub sizes: Vec<usize>,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Record wall-clock time. Off makes the CSV byte-reproducible.
    #[serde(default = "yes")]
    pub timing: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<std::path::PathBuf>,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub family: String,
    pub n: usize,
    pub delta: usize,
    pub alg: String,
    pub seed: u64,
    pub rounds: usize,
    pub colors_or_metric: Option<f64>,
    pub valid: Option<bool>,
    pub max_component: Option<usize>,
    pub wall_ms: Option<f64>,
}

impl ExperimentConfig {
    pub fn family(&self, size: usize) -> Result<Family, RunError> {
        let (n, delta) = (size, self.delta);
        Ok(match self.family.as_str() {
            "cycle" => Family::Cycle { n },
            "path" => Family::Path { n },
            "random_regular" => Family::RandomRegular { n, delta },
            "random_bounded_degree" => Family::RandomBoundedDegree { n, delta },
            "branching_tree" => Family::BranchingTree { delta, layers: size },
            other => return Err(RunError::Usage(format!("unknown family {other}"))),
        })
    }

    pub fn trial_seed(&self, size_index: usize, trial: usize) -> u64 {
        split_seed(self.seed, (size_index * self.trials + trial) as u64)
    }
}

fn run_trial(cfg: &ExperimentConfig, size_index: usize, trial: usize) -> Result<Row, RunError> {
    let seed = cfg.trial_seed(size_index, trial);
    let fam = cfg.family(cfg.sizes[size_index])?;
    let g = fam.generate(split_seed(seed, 0)).map_err(|e| RunError::Usage(e.to_string()))?;
    let mut opts = RunOptions::new(seed);
    opts.params = cfg.params.clone();
    let start = Instant::now();
    let out = run_algorithm(&cfg.algorithm, &g, &opts)?;
    let wall = start.elapsed().as_secs_f64() * 1e3;
    Ok(Row {
        family: fam.name().into(),
        n: g.n(),
        delta: g.max_degree(),
        alg: cfg.algorithm.clone(),
        seed,
        rounds: out.doc.rounds,
        colors_or_metric: out.metric,
        valid: out.doc.valid,
        max_component: out.max_component,
        wall_ms: cfg.timing.then_some(wall),
    })
}

/// Thread pool capped by `LOCALSIM_THREADS` when set.
pub fn pool() -> Result<rayon::ThreadPool, RunError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(s) = std::env::var("LOCALSIM_THREADS") {
        let k: usize = s.trim().parse().map_err(|_| RunError::Usage(format!("LOCALSIM_THREADS={s} is not a number")))?;
        b = b.num_threads(k.max(1));
    }
    b.build().map_err(|e| RunError::Internal(e.to_string()))
}

/// All trials, in (size, trial) order whatever the completion order.
pub fn run_bench(cfg: &ExperimentConfig) -> Result<Vec<Row>, RunError> {
    if cfg.trials == 0 || cfg.sizes.is_empty() {
        return Err(RunError::Usage("bench needs at least one size and one trial".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..cfg.sizes.len()).flat_map(|i| (0..cfg.trials).map(move |j| (i, j))).collect();
    pool()?.install(|| jobs.par_iter().map(|&(i, j)| run_trial(cfg, i, j)).collect())
}

pub fn write_csv<W: Write>(mut w: W, rows: &[Row]) -> std::io::Result<()> {
    writeln!(w, "{CSV_VERSION_LINE}")?;
    let mut cw = csv::Writer::from_writer(w);
    cw.write_record(CSV_COLUMNS)?;
    let opt = |x: Option<String>| x.unwrap_or_default();
    for r in rows {
        cw.write_record([
            r.family.clone(),
            r.n.to_string(),
            r.delta.to_string(),
            r.alg.clone(),
            r.seed.to_string(),
            r.rounds.to_string(),
            opt(r.colors_or_metric.map(|x| x.to_string())),
            opt(r.valid.map(|x| x.to_string())),
            opt(r.max_component.map(|x| x.to_string())),
            opt(r.wall_ms.map(|x| format!("{x:.3}"))),
        ])?;
    }
    cw.flush()
}

pub fn read_csv(text: &str) -> Result<Vec<Row>, String> {
    let body = text.strip_prefix(CSV_VERSION_LINE).ok_or("missing version line")?.trim_start_matches(['\r', '\n']);
    let mut rd = csv::Reader::from_reader(body.as_bytes());
    let header = rd.headers().map_err(|e| e.to_string())?;
    if header.iter().ne(CSV_COLUMNS) {
        return Err(format!("unexpected columns {header:?}"));
    }
    let none_if_empty = |s: &str| (!s.is_empty()).then(|| s.to_string());
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let p = |i: usize| none_if_empty(&rec[i]);
        let num = |i: usize| rec[i].parse::<usize>().map_err(|e| format!("column {}: {e}", CSV_COLUMNS[i]));
        rows.push(Row {
            family: rec[0].to_string(),
            n: num(1)?,
            delta: num(2)?,
            alg: rec[3].to_string(),
            seed: rec[4].parse().map_err(|e| format!("seed: {e}"))?,
            rounds: num(5)?,
            colors_or_metric: p(6).map(|s| s.parse().map_err(|e| format!("metric: {e}"))).transpose()?,
            valid: p(7).map(|s| s.parse().map_err(|e| format!("valid: {e}"))).transpose()?,
            max_component: p(8).map(|s| s.parse().map_err(|e| format!("max_component: {e}"))).transpose()?,
            wall_ms: p(9).map(|s| s.parse().map_err(|e| format!("wall_ms: {e}"))).transpose()?,
        });
    }
    Ok(rows)
}

/// Median of `rounds` per ladder size, in ladder order.
pub fn median_rounds(rows: &[Row]) -> Vec<(usize, f64)> {
    let mut by_n: Vec<(usize, Vec<usize>)> = Vec::new();
    for r in rows {
        match by_n.iter_mut().find(|(n, _)| *n == r.n) {
            Some((_, v)) => v.push(r.rounds),
            None => by_n.push((r.n, vec![r.rounds])),
        }
    }
    by_n.into_iter()
        .map(|(n, mut v)| {
            v.sort_unstable();
            let m = v.len();
            let med = if m % 2 == 1 { v[m / 2] as f64 } else { (v[m / 2 - 1] + v[m / 2]) as f64 / 2.0 };
            (n, med)
        })
        .collect()
}
