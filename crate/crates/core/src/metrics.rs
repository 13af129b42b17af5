//! Rounding, best-of-N / average aggregation and mean reciprocal rank.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trainer::Variant;

/// `x_i = 1` iff `a_i >= 0.5`.
pub fn round_assignment(a_post: &[f64]) -> Result<Vec<u8>> {
    a_post
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            if (0.0..=1.0).contains(&value) {
                Ok(u8::from(value >= 0.5))
            } else {
                Err(Error::Domain { index, value })
            }
        })
        .collect()
}

pub fn best_of_n(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("best-of-N over no runs"));
    }
    Ok(values.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

pub fn avg(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("average over no runs"));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// How tied values share reciprocal ranks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TieScheme {
    /// Every member of a tie gets `1 / (best rank of the block)`.
    #[default]
    Competition,
    /// Every member of a tie gets the mean of `1/r` over the ranks the block spans.
    BlockAverage,
}

impl FromStr for TieScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "competition" => Ok(TieScheme::Competition),
            "block-average" => Ok(TieScheme::BlockAverage),
            _ => Err(Error::Config(format!("unknown tie scheme {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aggregator {
    BoN,
    Avg,
}

impl Aggregator {
    pub fn apply(self, values: &[f64]) -> Result<f64> {
        match self {
            Aggregator::BoN => best_of_n(values),
            Aggregator::Avg => avg(values),
        }
    }
}

/// Reciprocal rank of each entry, larger values ranking first.
pub fn reciprocal_ranks(values: &[f64], scheme: TieScheme) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut rr = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let share = match scheme {
            TieScheme::Competition => 1.0 / (start + 1) as f64,
            TieScheme::BlockAverage => (start + 1..=end).map(|r| 1.0 / r as f64).sum::<f64>() / (end - start) as f64,
        };
        for &i in &order[start..end] {
            rr[i] = share;
        }
        start = end;
    }
    rr
}

/// Mean reciprocal rank per variant; `per_graph[g][v]` is the aggregated
/// value of variant `v` on graph `g`.
pub fn mrr(per_graph: &[Vec<f64>], scheme: TieScheme) -> Result<Vec<f64>> {
    let first = per_graph.first().ok_or(Error::Empty("ranking over no graphs"))?;
    let q = first.len();
    if q == 0 {
        return Err(Error::Empty("ranking over no variants"));
    }
    let mut total = vec![0.0; q];
    for (g, row) in per_graph.iter().enumerate() {
        if row.len() != q {
            return Err(Error::IncompleteGrid(format!("graph {g} has {} variants, expected {q}", row.len())));
        }
        for (t, r) in total.iter_mut().zip(reciprocal_ranks(row, scheme)) {
            *t += r;
        }
    }
    Ok(total.into_iter().map(|t| t / per_graph.len() as f64).collect())
}

/// One run in the results CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub problem: String,
    pub n: usize,
    pub d: usize,
    pub graph_id: String,
    pub variant: String,
    pub seed: usize,
    pub objective: f64,
    pub feasible: bool,
}

impl ResultRow {
    /// Objective with infeasible runs counted as the empty assignment.
    pub fn nullified(&self) -> f64 {
        if self.feasible {
            self.objective
        } else {
            0.0
        }
    }
}

/// One `(problem, n, d, variant)` line of the aggregate report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub problem: String,
    pub n: usize,
    pub d: usize,
    pub variant: String,
    pub bon: f64,
    pub rr_bon: f64,
    pub avg: f64,
    pub rr_avg: f64,
}

pub fn write_results_csv<W: Write>(rows: &[ResultRow], sink: W) -> Result<()> {
    write_csv(rows, sink)
}

pub fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], sink: W) -> Result<()> {
    write_csv(rows, sink)
}

fn write_csv<T: Serialize, W: Write>(rows: &[T], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Config(format!("csv write failed: {e}")))?;
    }
    w.flush().map_err(|e| Error::Config(format!("csv write failed: {e}")))
}

const RESULTS_HEADER: [&str; 8] = ["problem", "n", "d", "graph_id", "variant", "seed", "objective", "feasible"];

/// Parses a results CSV, reporting the 1-based line of the first bad row.
pub fn read_results_csv<R: Read>(source: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(source);
    let header = r.headers().map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?;
    if header.iter().ne(RESULTS_HEADER) {
        return Err(Error::Parse { line: 1, msg: format!("expected header {}", RESULTS_HEADER.join(",")) });
    }
    r.deserialize()
        .enumerate()
        .map(|(i, row)| {
            let row: ResultRow = row.map_err(|e| Error::Parse { line: i + 2, msg: e.to_string() })?;
            if !row.objective.is_finite() {
                return Err(Error::Parse { line: i + 2, msg: "objective is not finite".into() });
            }
            Ok(row)
        })
        .collect()
}

fn variant_order(name: &str) -> (usize, String) {
    let pos = Variant::ALL.iter().position(|v| v.name() == name).unwrap_or(Variant::ALL.len());
    (pos, name.to_string())
}

/// Per-setting BoN / Avg (means over graphs) and their MRRs.
///
/// Rows are grouped by `(problem, n, d)`; within a group every
/// `(graph, variant)` pair must carry the same seed set. Output order does not
/// depend on input row order.
pub fn aggregate(rows: &[ResultRow], scheme: TieScheme) -> Result<Vec<AggregateRow>> {
    type Setting = (String, usize, usize);
    type Seeds = BTreeMap<usize, f64>;
    // setting -> graph -> variant -> seed -> value
    let mut grid: BTreeMap<Setting, BTreeMap<String, BTreeMap<String, Seeds>>> = BTreeMap::new();
    for r in rows {
        let runs = grid
            .entry((r.problem.clone(), r.n, r.d))
            .or_default()
            .entry(r.graph_id.clone())
            .or_default()
            .entry(r.variant.clone())
            .or_default();
        if runs.insert(r.seed, r.nullified()).is_some() {
            return Err(Error::IncompleteGrid(format!(
                "duplicate run {} n={} d={} graph={} variant={} seed={}",
                r.problem, r.n, r.d, r.graph_id, r.variant, r.seed
            )));
        }
    }

    let mut out = Vec::new();
    for ((problem, n, d), graphs) in grid {
        let mut variants: Vec<String> =
            graphs.values().flat_map(|m| m.keys().cloned()).collect::<BTreeSet<_>>().into_iter().collect();
        variants.sort_by_key(|v| variant_order(v));
        let seeds: BTreeSet<usize> = graphs.values().flat_map(|m| m.values()).flat_map(|s| s.keys().copied()).collect();

        let mut bon = vec![Vec::new(); graphs.len()];
        let mut mean = vec![Vec::new(); graphs.len()];
        for (gi, (gid, by_variant)) in graphs.iter().enumerate() {
            for v in &variants {
                let runs = by_variant.get(v).ok_or_else(|| {
                    Error::IncompleteGrid(format!("{problem} n={n} d={d}: graph {gid} lacks variant {v}"))
                })?;
                if !runs.keys().copied().eq(seeds.iter().copied()) {
                    return Err(Error::IncompleteGrid(format!(
                        "{problem} n={n} d={d}: graph {gid} variant {v} has seeds {:?}, expected {:?}",
                        runs.keys().collect::<Vec<_>>(),
                        seeds
                    )));
                }
                let values: Vec<f64> = runs.values().copied().collect();
                bon[gi].push(best_of_n(&values)?);
                mean[gi].push(avg(&values)?);
            }
        }
        let rr_bon = mrr(&bon, scheme)?;
        let rr_avg = mrr(&mean, scheme)?;
        let g = graphs.len() as f64;
        for (vi, v) in variants.iter().enumerate() {
            out.push(AggregateRow {
                problem: problem.clone(),
                n,
                d,
                variant: v.clone(),
                bon: bon.iter().map(|row| row[vi]).sum::<f64>() / g,
                rr_bon: rr_bon[vi],
                avg: mean.iter().map(|row| row[vi]).sum::<f64>() / g,
                rr_avg: rr_avg[vi],
            });
        }
    }
    Ok(out)
}
