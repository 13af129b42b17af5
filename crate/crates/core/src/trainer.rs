//! Training loop, inverse-temperature schedules, activation tracing and the
//! multi-seed portfolio runner.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnn::{ActivationVariant, Adam, AdamConfig, Model, ModelOverrides, Propagator};
use crate::graph::Graph;
use crate::metrics::round_assignment;
use crate::qubo::{self, QuboInstance, Regularizer, TNorm};
use crate::seed::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Schedule {
    Constant,
    Linear,
    Logarithmic,
    Exponential,
}

/// Inverse temperature at epoch `i` (1-based) of `max_epochs`.
///
/// The linear and exponential schedules run from 1 to `max_epochs`, the
/// logarithmic one reaches `log2(max_epochs + 1)`; results are clamped to
/// `[1, max_epochs]`.
pub fn inv_temp_schedule(kind: Schedule, i: usize, max_epochs: usize) -> f64 {
    let e = max_epochs.max(1) as f64;
    let i = i as f64;
    let raw = match kind {
        Schedule::Constant => return 1.0,
        Schedule::Linear => i,
        Schedule::Logarithmic => (i + 1.0).log2(),
        Schedule::Exponential => (i * e.log2() / e).exp2(),
    };
    raw.clamp(1.0, e)
}

/// The eight architectures compared in the portfolio.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    Baseline,
    TempLin,
    TempLog,
    TempExp,
    BinSte,
    BinSig,
    FuzzyStd,
    FuzzyLuk,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VariantSpec {
    pub variant: Variant,
    pub activation: ActivationVariant,
    pub tnorm: TNorm,
    pub schedule: Schedule,
}

impl Variant {
    pub const ALL: [Variant; 8] = [
        Variant::Baseline,
        Variant::TempLin,
        Variant::TempLog,
        Variant::TempExp,
        Variant::BinSte,
        Variant::BinSig,
        Variant::FuzzyStd,
        Variant::FuzzyLuk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::TempLin => "temp-lin",
            Variant::TempLog => "temp-log",
            Variant::TempExp => "temp-exp",
            Variant::BinSte => "bin-ste",
            Variant::BinSig => "bin-sig",
            Variant::FuzzyStd => "fuzzy-std",
            Variant::FuzzyLuk => "fuzzy-luk",
        }
    }

    pub fn spec(self) -> VariantSpec {
        use ActivationVariant as A;
        let (activation, tnorm, schedule) = match self {
            Variant::Baseline => (A::Sigmoid, TNorm::Product, Schedule::Constant),
            Variant::TempLin => (A::TemperedSigmoid, TNorm::Product, Schedule::Linear),
            Variant::TempLog => (A::TemperedSigmoid, TNorm::Product, Schedule::Logarithmic),
            Variant::TempExp => (A::TemperedSigmoid, TNorm::Product, Schedule::Exponential),
            Variant::BinSte => (A::StepSte, TNorm::Product, Schedule::Constant),
            Variant::BinSig => (A::StepSigmoidBackward, TNorm::Product, Schedule::Constant),
            Variant::FuzzyStd => (A::Sigmoid, TNorm::Standard, Schedule::Constant),
            Variant::FuzzyLuk => (A::Sigmoid, TNorm::Lukasiewicz, Schedule::Constant),
        };
        VariantSpec { variant: self, activation, tnorm, schedule }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub max_epochs: usize,
    pub es_tolerance: f64,
    pub es_patience: usize,
    pub trace: bool,
    pub trace_bins: usize,
    pub trace_every: usize,
    pub model: ModelOverrides,
    pub regularizer: Regularizer,
    pub reg_alpha: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-4,
            max_epochs: 100_000,
            es_tolerance: 1e-4,
            es_patience: 1_000,
            trace: false,
            trace_bins: 100,
            trace_every: 100,
            model: ModelOverrides::default(),
            regularizer: Regularizer::None,
            reg_alpha: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.lr > 0.0) {
            return bad("learning rate must be positive");
        }
        if self.max_epochs == 0 || self.es_patience == 0 || self.trace_every == 0 {
            return bad("epoch counts must be positive");
        }
        if self.es_patience > self.max_epochs {
            return bad("early-stopping patience exceeds the epoch budget");
        }
        if !(self.es_tolerance > 0.0) {
            return bad("early-stopping tolerance must be positive");
        }
        if self.trace_bins < 2 {
            return bad("histograms need at least two bins");
        }
        if !(self.reg_alpha >= 0.0) {
            return bad("regularization weight must be non-negative");
        }
        Ok(())
    }
}

/// Counts per uniform bin over `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_edges(&self, k: usize) -> (f64, f64) {
        let w = (self.hi - self.lo) / self.bins() as f64;
        (self.lo + w * k as f64, self.lo + w * (k + 1) as f64)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Bins `values` uniformly over `range`. Values outside the range land in the
/// nearest edge bin, so the counts always sum to `values.len()`.
pub fn record_histogram(values: &[f64], bins: usize, range: (f64, f64)) -> Histogram {
    assert!(bins >= 2, "histogram needs at least two bins");
    let (lo, hi) = range;
    assert!(hi > lo, "histogram range must be non-empty");
    let mut counts = vec![0u64; bins];
    let scale = bins as f64 / (hi - lo);
    for &v in values {
        let k = ((v - lo) * scale).floor();
        let k = if k.is_nan() { 0 } else { (k.max(0.0) as usize).min(bins - 1) };
        counts[k] += 1;
    }
    Histogram { lo, hi, counts }
}

/// Symmetric range `[-m, m]` covering every value, with `m` at least 1
/// rounded up to a whole number.
pub fn symmetric_range(values: &[f64]) -> (f64, f64) {
    let m = values.iter().filter(|v| v.is_finite()).fold(1.0f64, |acc, v| acc.max(v.abs()));
    let m = m.ceil();
    (-m, m)
}

/// Snapshot of the output distribution at one epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceFrame {
    pub epoch: usize,
    pub loss: f64,
    pub pre: Histogram,
    pub post: Histogram,
    pub post_mean: f64,
    pub post_frac_above_09: f64,
    pub pre_abs_p95: f64,
}

impl TraceFrame {
    fn capture(epoch: usize, loss: f64, a_pre: &[f64], a_post: &[f64], bins: usize) -> Self {
        let n = a_post.len().max(1) as f64;
        let mut abs_pre: Vec<f64> = a_pre.iter().map(|v| v.abs()).collect();
        abs_pre.sort_by(f64::total_cmp);
        let p95 = if abs_pre.is_empty() {
            0.0
        } else {
            let idx = ((0.95 * abs_pre.len() as f64).ceil() as usize).clamp(1, abs_pre.len()) - 1;
            abs_pre[idx]
        };
        TraceFrame {
            epoch,
            loss,
            pre: record_histogram(a_pre, bins, symmetric_range(a_pre)),
            post: record_histogram(a_post, bins, (0.0, 1.0)),
            post_mean: a_post.iter().sum::<f64>() / n,
            post_frac_above_09: a_post.iter().filter(|&&v| v > 0.9).count() as f64 / n,
            pre_abs_p95: p95,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub assignment: Vec<u8>,
    pub objective: f64,
    pub feasible: bool,
    /// Diagnostic for runs aborted on a non-finite loss.
    pub failed: Option<String>,
    pub relaxed_loss_final: f64,
    pub epochs_run: usize,
    pub trace: Vec<TraceFrame>,
}

impl RunResult {
    fn failed(n: usize, epochs_run: usize, msg: String, trace: Vec<TraceFrame>) -> Self {
        RunResult {
            assignment: vec![0; n],
            objective: 0.0,
            feasible: true,
            failed: Some(msg),
            relaxed_loss_final: f64::NAN,
            epochs_run,
            trace,
        }
    }

    /// Writes the trace as CSV rows `epoch,kind,bin_lo,bin_hi,count`.
    pub fn write_trace_csv<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        writeln!(sink, "epoch,kind,bin_lo,bin_hi,count")?;
        for frame in &self.trace {
            for (kind, h) in [("pre", &frame.pre), ("post", &frame.post)] {
                for (k, c) in h.counts.iter().enumerate() {
                    let (lo, hi) = h.bin_edges(k);
                    writeln!(sink, "{},{kind},{lo},{hi},{c}", frame.epoch)?;
                }
            }
        }
        Ok(())
    }
}

fn score(g: &Graph, q: &QuboInstance, xb: &[u8]) -> (f64, bool) {
    match q.problem() {
        Some(p) => qubo::objective_value(p, g, xb),
        None => {
            let x: Vec<f64> = xb.iter().map(|&b| b as f64).collect();
            (-q.energy(&x, TNorm::Product), true)
        }
    }
}

/// Trains one model on one instance. Deterministic for a fixed seed.
pub fn train(g: &Graph, q: &QuboInstance, variant: Variant, config: &TrainConfig, seed: u64) -> Result<RunResult> {
    train_spec(g, q, variant.spec(), config, seed)
}

pub fn train_spec(g: &Graph, q: &QuboInstance, spec: VariantSpec, config: &TrainConfig, seed: u64) -> Result<RunResult> {
    config.validate()?;
    if q.n() != g.n() {
        return Err(Error::Dimension(format!("QUBO has {} variables, graph has {} nodes", q.n(), g.n())));
    }
    let n = g.n();
    let adj = Propagator::new(g);
    let mut model = Model::init(n, spec.activation, seed, &config.model)?;
    let sizes: Vec<usize> = model.param_slices_mut().iter().map(|s| s.len()).collect();
    let mut adam = Adam::new(AdamConfig { lr: config.lr, ..Default::default() }, &sizes);
    let temp = |i: usize| inv_temp_schedule(spec.schedule, i.min(config.max_epochs), config.max_epochs);
    let loss_of = |x: &[f64]| q.energy(x, spec.tnorm) + config.reg_alpha * qubo::penalty(config.regularizer, x);

    let mut trace = Vec::new();
    let mut fwd = model.forward(&adj, temp(1))?;
    let mut loss = loss_of(&fwd.a_post);
    if config.trace {
        trace.push(TraceFrame::capture(0, loss, &fwd.a_pre, &fwd.a_post, config.trace_bins));
    }
    if !loss.is_finite() {
        return Ok(RunResult::failed(n, 0, format!("non-finite loss {loss} at initialization"), trace));
    }

    let mut best = loss;
    let mut stale = 0usize;
    let mut epochs_run = 0;
    let mut grad_post = vec![0.0; n];
    for epoch in 1..=config.max_epochs {
        q.energy_grad_into(&fwd.a_post, spec.tnorm, &mut grad_post);
        qubo::add_penalty_grad(config.regularizer, config.reg_alpha, &fwd.a_post, &mut grad_post);
        let grads = model.backward(&adj, &fwd, &grad_post)?;
        let g_b2 = [grads.b2];
        adam.step(
            &mut model.param_slices_mut(),
            &[grads.embeddings.as_slice(), grads.w1.as_slice(), grads.w2.as_slice(), &grads.b1, &g_b2],
        );

        fwd = model.forward(&adj, temp(epoch + 1))?;
        loss = loss_of(&fwd.a_post);
        epochs_run = epoch;
        if !loss.is_finite() {
            return Ok(RunResult::failed(n, epoch, format!("non-finite loss {loss} at epoch {epoch}"), trace));
        }
        if best - loss > config.es_tolerance {
            best = loss;
            stale = 0;
        } else {
            stale += 1;
        }
        let stop = stale >= config.es_patience;
        if config.trace && (epoch % config.trace_every == 0 || stop || epoch == config.max_epochs) {
            trace.push(TraceFrame::capture(epoch, loss, &fwd.a_pre, &fwd.a_post, config.trace_bins));
        }
        if stop {
            break;
        }
    }

    let assignment = round_assignment(&fwd.a_post)?;
    let (objective, feasible) = score(g, q, &assignment);
    Ok(RunResult { assignment, objective, feasible, failed: None, relaxed_loss_final: loss, epochs_run, trace })
}

/// One entry of a portfolio table.
#[derive(Clone, Debug, PartialEq)]
pub struct PortfolioEntry {
    pub variant: Variant,
    pub seed_index: usize,
    pub seed: u64,
    pub result: RunResult,
}

/// Runs every `(variant, seed index)` pair on one instance.
///
/// Entries are ordered by variant (in the given order), then seed index. The
/// per-run seed is derived from `(base_seed, graph_key, variant, seed index)`,
/// so the table is identical whether runs execute in parallel or not.
pub fn run_portfolio(
    g: &Graph,
    q: &QuboInstance,
    variants: &[Variant],
    n_seeds: usize,
    config: &TrainConfig,
    base_seed: u64,
    graph_key: &str,
) -> Result<Vec<PortfolioEntry>> {
    if n_seeds == 0 {
        return Err(Error::Config("portfolio needs at least one seed".into()));
    }
    config.validate()?;
    let jobs: Vec<(Variant, usize, u64)> = variants
        .iter()
        .flat_map(|&v| (0..n_seeds).map(move |s| (v, s, derive_seed(base_seed, graph_key, v.name(), s))))
        .collect();
    let run = |&(variant, seed_index, seed): &(Variant, usize, u64)| -> Result<PortfolioEntry> {
        let result = train(g, q, variant, config, seed)?;
        Ok(PortfolioEntry { variant, seed_index, seed, result })
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        jobs.iter().map(run).collect()
    }
}

/// Sequential twin of [`run_portfolio`].
pub fn run_portfolio_sequential(
    g: &Graph,
    q: &QuboInstance,
    variants: &[Variant],
    n_seeds: usize,
    config: &TrainConfig,
    base_seed: u64,
    graph_key: &str,
) -> Result<Vec<PortfolioEntry>> {
    if n_seeds == 0 {
        return Err(Error::Config("portfolio needs at least one seed".into()));
    }
    let mut out = Vec::with_capacity(variants.len() * n_seeds);
    for &variant in variants {
        for seed_index in 0..n_seeds {
            let seed = derive_seed(base_seed, graph_key, variant.name(), seed_index);
            out.push(PortfolioEntry { variant, seed_index, seed, result: train(g, q, variant, config, seed)? });
        }
    }
    Ok(out)
}
