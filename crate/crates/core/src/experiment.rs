//! Experiment grids on disk: instance generation, portfolio runs and reports.
//!
//! Layout under the output directory:
//!
//! ```text
//! manifest.csv                graph_id,n,d,index,seed,path
//! instances/<graph_id>.edges  edge lists
//! results.csv                 one row per run
//! failures.csv                runs that errored or hit a non-finite loss
//! traces/<graph_id>_<variant>_s<k>.csv
//! aggregate.csv               written by `cmd_report`
//! ```

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{generate_regular, Graph};
use crate::metrics::{self, AggregateRow, ResultRow, TieScheme};
use crate::qubo::{Problem, QuboInstance, DEFAULT_MIS_PENALTY};
use crate::seed::{derive_seed, graph_seed};
use crate::trainer::{train, TrainConfig, Variant};

pub const DEFAULT_DEGREES: [usize; 7] = [3, 5, 10, 20, 30, 40, 50];

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub sizes: Vec<usize>,
    pub degrees: Vec<usize>,
    pub graphs_per_setting: usize,
    pub seeds: usize,
    pub variants: Vec<Variant>,
    pub train: TrainConfig,
    pub mis_penalty: f64,
    /// Combined off-diagonal MaxCut coefficient; 2 is the exact encoding.
    pub maxcut_edge_weight: f64,
    pub out: PathBuf,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    pub master_seed: u64,
    pub tie_scheme: TieScheme,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            problem: Problem::MaxCut,
            sizes: vec![100],
            degrees: DEFAULT_DEGREES.to_vec(),
            graphs_per_setting: 5,
            seeds: 5,
            variants: Variant::ALL.to_vec(),
            train: TrainConfig { max_epochs: 20_000, ..Default::default() },
            mis_penalty: DEFAULT_MIS_PENALTY,
            maxcut_edge_weight: 2.0,
            out: PathBuf::from("out"),
            threads: 0,
            master_seed: 0,
            tie_scheme: TieScheme::Competition,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse(key, s)).collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("invalid value {value:?} for {key}"))),
    }
}

impl ExperimentConfig {
    /// Sets one option by name. Keys use the config-file spelling.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let t = &mut self.train;
        match key {
            "problem" => self.problem = value.parse()?,
            "n" | "sizes" => self.sizes = parse_list(key, value)?,
            "d" | "degrees" => self.degrees = parse_list(key, value)?,
            "graphs" | "graphs_per_setting" => self.graphs_per_setting = parse(key, value)?,
            "seeds" => self.seeds = parse(key, value)?,
            "variants" => {
                self.variants = if value == "all" {
                    Variant::ALL.to_vec()
                } else {
                    value.split(',').map(|s| s.trim().parse()).collect::<Result<_>>()?
                }
            }
            "threads" => self.threads = parse(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "master_seed" => self.master_seed = parse(key, value)?,
            "tie_scheme" => self.tie_scheme = value.parse()?,
            "mis_penalty" => self.mis_penalty = parse(key, value)?,
            "maxcut_edge_weight" => self.maxcut_edge_weight = parse(key, value)?,
            "max_epochs" => t.max_epochs = parse(key, value)?,
            "lr" => t.lr = parse(key, value)?,
            "es_tolerance" => t.es_tolerance = parse(key, value)?,
            "es_patience" => t.es_patience = parse(key, value)?,
            "trace" => t.trace = parse_bool(key, value)?,
            "trace_bins" => t.trace_bins = parse(key, value)?,
            "trace_every" => t.trace_every = parse(key, value)?,
            "regularizer" => t.regularizer = value.parse()?,
            "reg_alpha" => t.reg_alpha = parse(key, value)?,
            "embedding_dim" => t.model.embedding_dim = Some(parse(key, value)?),
            "hidden_dim" => t.model.hidden_dim = Some(parse(key, value)?),
            "embedding_scale" => t.model.embedding_scale = parse(key, value)?,
            "bias" => t.model.bias = parse_bool(key, value)?,
            _ => return Err(Error::Config(format!("unknown option {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: i + 1, msg: format!("expected key = value, got {line:?}") })?;
            self.apply(key.trim(), value).map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.degrees.is_empty() || self.variants.is_empty() {
            return Err(Error::Config("sizes, degrees and variants must be non-empty".into()));
        }
        if self.graphs_per_setting == 0 || self.seeds == 0 {
            return Err(Error::Config("graphs and seeds must be positive".into()));
        }
        for &n in &self.sizes {
            for &d in &self.degrees {
                if d >= n || (n * d) % 2 == 1 {
                    return Err(Error::InvalidDegree { n, d, reason: "need d < n and n*d even" });
                }
            }
        }
        if self.problem == Problem::Mis && !(self.mis_penalty > 1.0) {
            return Err(Error::Config("MIS penalty must exceed 1".into()));
        }
        if !(self.maxcut_edge_weight > 0.0 && self.maxcut_edge_weight.is_finite()) {
            return Err(Error::Config("MaxCut edge weight must be positive".into()));
        }
        self.train.validate()
    }

    fn manifest_path(&self) -> PathBuf {
        self.out.join("manifest.csv")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub graph_id: String,
    pub n: usize,
    pub d: usize,
    pub index: usize,
    pub seed: u64,
    /// Relative to the output directory.
    pub path: String,
}

pub fn graph_id(n: usize, d: usize, index: usize) -> String {
    format!("n{n}_d{d}_g{index}")
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv { path: path.to_path_buf(), source }
}

/// Samples every instance of the grid and writes the manifest.
pub fn cmd_generate(cfg: &ExperimentConfig) -> Result<Vec<ManifestEntry>> {
    cfg.validate()?;
    let dir = cfg.out.join("instances");
    create_dir(&dir)?;
    let mut entries = Vec::new();
    for &n in &cfg.sizes {
        for &d in &cfg.degrees {
            for index in 0..cfg.graphs_per_setting {
                let seed = graph_seed(cfg.master_seed, n, d, index);
                let g = generate_regular(n, d, seed)?;
                let graph_id = graph_id(n, d, index);
                let rel = format!("instances/{graph_id}.edges");
                write_file(&cfg.out.join(&rel), |w| g.write_edgelist(w))?;
                entries.push(ManifestEntry { graph_id, n, d, index, seed, path: rel });
            }
        }
    }
    let path = cfg.manifest_path();
    let mut w = csv::Writer::from_path(&path).map_err(csv_error(&path))?;
    for e in &entries {
        w.serialize(e).map_err(csv_error(&path))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(entries)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error(path))?;
    r.deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| Error::Parse { line: i + 2, msg: format!("{}: {e}", path.display()) }))
        .collect()
}

pub fn load_graph(path: &Path) -> Result<Graph> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Graph::read_edgelist(BufReader::new(file)).map_err(|e| match e {
        Error::Parse { line, msg } => Error::Parse { line, msg: format!("{}: {msg}", path.display()) },
        other => other,
    })
}

/// A run that did not finish normally.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub graph_id: String,
    pub variant: String,
    pub seed: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub rows: Vec<ResultRow>,
    pub failures: Vec<Failure>,
}

struct Job<'a> {
    entry: &'a ManifestEntry,
    graph: &'a Graph,
    qubo: &'a QuboInstance,
    variant: Variant,
    seed_index: usize,
}

fn run_job(cfg: &ExperimentConfig, job: &Job) -> Result<(ResultRow, Option<Failure>)> {
    let seed = derive_seed(cfg.master_seed, &job.entry.graph_id, job.variant.name(), job.seed_index);
    let mut row = ResultRow {
        problem: cfg.problem.to_string(),
        n: job.entry.n,
        d: job.entry.d,
        graph_id: job.entry.graph_id.clone(),
        variant: job.variant.name().to_string(),
        seed: job.seed_index,
        objective: 0.0,
        feasible: true,
    };
    let failure = |message: String| Failure {
        graph_id: job.entry.graph_id.clone(),
        variant: job.variant.name().to_string(),
        seed: job.seed_index,
        message,
    };
    match train(job.graph, job.qubo, job.variant, &cfg.train, seed) {
        Ok(r) => {
            if cfg.train.trace {
                let path = cfg.out.join("traces").join(format!("{}_{}_s{}.csv", row.graph_id, row.variant, row.seed));
                write_file(&path, |w| r.write_trace_csv(w))?;
            }
            row.objective = r.objective;
            row.feasible = r.feasible;
            Ok((row, r.failed.map(failure)))
        }
        Err(e) => Ok((row, Some(failure(e.to_string())))),
    }
}

/// Runs every (graph, variant, seed) of the grid listed in the manifest.
///
/// Individual run errors become rows with objective 0 plus an entry in
/// `failures.csv`; only I/O problems abort.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let manifest = read_manifest(&cfg.manifest_path())?;
    let entries: Vec<&ManifestEntry> =
        manifest.iter().filter(|e| cfg.sizes.contains(&e.n) && cfg.degrees.contains(&e.d)).collect();
    if entries.is_empty() {
        return Err(Error::Config(format!("manifest {} has no instances for this grid", cfg.manifest_path().display())));
    }
    let mut graphs = Vec::with_capacity(entries.len());
    for e in &entries {
        let g = load_graph(&cfg.out.join(&e.path))?;
        let q = match cfg.problem {
            Problem::MaxCut => QuboInstance::encode_maxcut_weighted(&g, cfg.maxcut_edge_weight),
            Problem::Mis => QuboInstance::encode_mis(&g, cfg.mis_penalty)?,
        };
        graphs.push((g, q));
    }
    if cfg.train.trace {
        create_dir(&cfg.out.join("traces"))?;
    }
    let mut jobs = Vec::new();
    for (entry, (graph, qubo)) in entries.iter().zip(&graphs) {
        for &variant in &cfg.variants {
            for seed_index in 0..cfg.seeds {
                jobs.push(Job { entry, graph, qubo, variant, seed_index });
            }
        }
    }

    let outcomes = execute(cfg.threads, &jobs, |job| run_job(cfg, job))?;
    let mut rows = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for (row, failure) in outcomes {
        rows.push(row);
        failures.extend(failure);
    }

    let path = cfg.out.join("results.csv");
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    metrics::write_results_csv(&rows, BufWriter::new(file))?;
    let fpath = cfg.out.join("failures.csv");
    if failures.is_empty() {
        if fpath.exists() {
            fs::remove_file(&fpath).map_err(|e| Error::io(&fpath, e))?;
        }
    } else {
        let mut w = csv::Writer::from_path(&fpath).map_err(csv_error(&fpath))?;
        for f in &failures {
            w.serialize(f).map_err(csv_error(&fpath))?;
        }
        w.flush().map_err(|e| Error::io(&fpath, e))?;
    }
    Ok(RunSummary { rows, failures })
}

#[cfg(feature = "parallel")]
fn execute<J: Sync, T: Send>(threads: usize, jobs: &[J], f: impl Fn(&J) -> Result<T> + Sync) -> Result<Vec<T>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| jobs.par_iter().map(&f).collect())
}

#[cfg(not(feature = "parallel"))]
fn execute<J, T>(_threads: usize, jobs: &[J], f: impl Fn(&J) -> Result<T>) -> Result<Vec<T>> {
    jobs.iter().map(f).collect()
}

/// Aggregates a results CSV and writes `aggregate.csv` next to it (or to `out`).
pub fn cmd_report(results: &Path, out: &Path, scheme: TieScheme) -> Result<Vec<AggregateRow>> {
    let file = File::open(results).map_err(|e| Error::io(results, e))?;
    let rows = metrics::read_results_csv(BufReader::new(file)).map_err(|e| match e {
        Error::Parse { line, msg } => Error::Parse { line, msg: format!("{}: {msg}", results.display()) },
        other => other,
    })?;
    let agg = metrics::aggregate(&rows, scheme)?;
    let file = File::create(out).map_err(|e| Error::io(out, e))?;
    metrics::write_aggregate_csv(&agg, BufWriter::new(file))?;
    Ok(agg)
}

/// Plain-text table with one block per `(problem, n, d)`.
pub fn render_table(rows: &[AggregateRow]) -> String {
    let mut s = String::new();
    let mut current = None;
    for r in rows {
        let key = (&r.problem, r.n, r.d);
        if current != Some(key) {
            if current.is_some() {
                s.push('\n');
            }
            let _ = writeln!(s, "{} n={} d={}", r.problem, r.n, r.d);
            let _ = writeln!(s, "{:<10} {:>10} {:>6} {:>10} {:>6}", "variant", "BoN", "RR", "Avg", "RR");
            current = Some(key);
        }
        let _ = writeln!(s, "{:<10} {:>10.2} {:>6.2} {:>10.2} {:>6.2}", r.variant, r.bon, r.rr_bon, r.avg, r.rr_avg);
    }
    s
}
