//! Command-line driver for instance generation, portfolio runs and reports.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use pignn::experiment::{cmd_generate, cmd_report, cmd_run, load_graph, render_table, ExperimentConfig};
use pignn::gradcheck::check_variant;
use pignn::metrics::TieScheme;
use pignn::oracle::exact_solve;
use pignn::seed::graph_seed;
use pignn::{generate_regular, Graph, Problem, QuboInstance, Variant};

#[derive(Parser)]
#[command(name = "pignn", version, about = "Unsupervised GNN solvers for MaxCut and MIS on regular graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the random regular instances of a grid
    Generate(GridArgs),
    /// Train every variant and seed on every generated instance
    Run(GridArgs),
    /// Aggregate a results CSV into BoN, Avg and MRR per variant
    Report(ReportArgs),
    /// Solve one small instance exactly
    Oracle(OracleArgs),
    /// Compare analytic and finite-difference gradients
    Gradcheck(GradcheckArgs),
}

/// Options shared by `generate` and `run`. Flags override the config file.
#[derive(Args)]
struct GridArgs {
    /// `key = value` config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// maxcut or mis
    #[arg(long)]
    problem: Option<String>,
    /// Comma-separated graph sizes
    #[arg(long)]
    n: Option<String>,
    /// Comma-separated degrees
    #[arg(long)]
    d: Option<String>,
    /// Graphs per (n, d) setting
    #[arg(long)]
    graphs: Option<usize>,
    /// Seeds per (graph, variant)
    #[arg(long)]
    seeds: Option<usize>,
    /// Comma-separated variant names, or "all"
    #[arg(long)]
    variants: Option<String>,
    /// Worker threads, 0 for all cores
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    master_seed: Option<u64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    /// Record activation histograms under <out>/traces
    #[arg(long)]
    trace: bool,
    /// Extra `key=value` options, repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl GridArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        let flags: [(&str, Option<String>); 10] = [
            ("problem", self.problem.clone()),
            ("n", self.n.clone()),
            ("d", self.d.clone()),
            ("graphs", self.graphs.map(|v| v.to_string())),
            ("seeds", self.seeds.map(|v| v.to_string())),
            ("variants", self.variants.clone()),
            ("threads", self.threads.map(|v| v.to_string())),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("master_seed", self.master_seed.map(|v| v.to_string())),
            ("max_epochs", self.max_epochs.map(|v| v.to_string())),
        ];
        for (key, value) in flags {
            if let Some(value) = value {
                cfg.apply(key, &value)?;
            }
        }
        if self.trace {
            cfg.train.trace = true;
        }
        for kv in &self.set {
            let (key, value) = kv.split_once('=').with_context(|| format!("expected KEY=VALUE, got {kv:?}"))?;
            cfg.apply(key.trim(), value)?;
        }
        // a short budget simply means no early stop
        cfg.train.es_patience = cfg.train.es_patience.min(cfg.train.max_epochs);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding results.csv; aggregate.csv is written there
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Results CSV to read instead of <out>/results.csv
    #[arg(long)]
    results: Option<PathBuf>,
    /// competition or block-average
    #[arg(long, default_value = "competition")]
    tie_scheme: String,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value = "maxcut")]
    problem: String,
    /// Edge-list file; when absent a regular graph is generated from --n and --d
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, default_value_t = 12)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    master_seed: u64,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value = "maxcut")]
    problem: String,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    d: usize,
    #[arg(long, default_value = "all")]
    variants: String,
    /// Parameter points per variant
    #[arg(long, default_value_t = 20)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    master_seed: u64,
    /// Largest accepted relative error
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
}

fn parse_variants(text: &str) -> Result<Vec<Variant>> {
    if text == "all" {
        return Ok(Variant::ALL.to_vec());
    }
    Ok(text.split(',').map(|s| s.trim().parse()).collect::<pignn::Result<_>>()?)
}

fn encode(problem: Problem, g: &Graph) -> Result<QuboInstance> {
    Ok(match problem {
        Problem::MaxCut => QuboInstance::encode_maxcut(g),
        Problem::Mis => QuboInstance::encode_mis(g, 2.0)?,
    })
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Generate(args) => {
            let cfg = args.config()?;
            let entries = cmd_generate(&cfg)?;
            println!("wrote {} instances to {}", entries.len(), cfg.out.display());
        }
        Command::Run(args) => {
            let cfg = args.config()?;
            let summary = cmd_run(&cfg)?;
            println!("wrote {} rows to {}", summary.rows.len(), cfg.out.join("results.csv").display());
            if !summary.failures.is_empty() {
                eprintln!("{} runs failed, see {}", summary.failures.len(), cfg.out.join("failures.csv").display());
            }
        }
        Command::Report(args) => {
            let scheme: TieScheme = args.tie_scheme.parse()?;
            let results = args.results.unwrap_or_else(|| args.out.join("results.csv"));
            let agg = cmd_report(&results, &args.out.join("aggregate.csv"), scheme)?;
            print!("{}", render_table(&agg));
        }
        Command::Oracle(args) => {
            let problem: Problem = args.problem.parse()?;
            let g = match &args.graph {
                Some(path) => load_graph(path)?,
                None => generate_regular(args.n, args.d, graph_seed(args.master_seed, args.n, args.d, 0))?,
            };
            let sol = exact_solve(problem, &g)?;
            let bits: String = sol.assignment.iter().map(|b| char::from(b'0' + b)).collect();
            println!("{problem} n={} edges={} optimum={} optimal_assignments={}", g.n(), g.num_edges(), sol.value, sol.count_optimal);
            println!("assignment {bits}");
        }
        Command::Gradcheck(args) => {
            let problem: Problem = args.problem.parse()?;
            let g = generate_regular(args.n, args.d, graph_seed(args.master_seed, args.n, args.d, 0))?;
            let q = encode(problem, &g)?;
            let mut ok = true;
            for v in parse_variants(&args.variants)? {
                let c = check_variant(&g, &q, v, args.points, args.master_seed)?;
                let pass = c.max_rel_err < args.tolerance;
                ok &= pass;
                println!(
                    "{:<10} points={} rejected={} max_rel_err={:.3e} {}",
                    v,
                    c.points,
                    c.rejected,
                    c.max_rel_err,
                    if pass { "ok" } else { "FAIL" }
                );
            }
            return Ok(ok);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
