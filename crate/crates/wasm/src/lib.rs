//! Browser bindings: train one variant with activation traces, plot t-norm
//! landscapes and compare annealing schedules. Every export returns JSON.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use pignn::trainer::{inv_temp_schedule, Schedule};
use pignn::{generate_regular, train, Problem, QuboInstance, TNorm, TrainConfig, Variant};

#[derive(Serialize)]
struct Frame {
    epoch: usize,
    loss: f64,
    post_mean: f64,
    frac_above_09: f64,
    counts: Vec<u64>,
}

#[derive(Serialize)]
struct TrainReport {
    problem: String,
    variant: String,
    n: usize,
    edges: usize,
    objective: f64,
    feasible: bool,
    failed: Option<String>,
    epochs_run: usize,
    frames: Vec<Frame>,
}

#[derive(Serialize)]
struct Landscape {
    tnorm: String,
    steps: usize,
    /// Row-major `a ∧ b` for `a, b` on a uniform grid over `[0, 1]`.
    values: Vec<f64>,
}

#[derive(Serialize)]
struct Curves {
    epochs: Vec<usize>,
    linear: Vec<f64>,
    logarithmic: Vec<f64>,
    exponential: Vec<f64>,
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// Trains `variant` on a random `d`-regular graph and returns its trace.
#[allow(clippy::too_many_arguments)]
pub fn train_trace_json(
    problem: &str,
    n: usize,
    d: usize,
    variant: &str,
    seed: u64,
    max_epochs: usize,
    lr: f64,
    trace_every: usize,
) -> Result<String, String> {
    let run = || -> pignn::Result<TrainReport> {
        let problem: Problem = problem.parse()?;
        let variant: Variant = variant.parse()?;
        let g = generate_regular(n, d, seed)?;
        let q = match problem {
            Problem::MaxCut => QuboInstance::encode_maxcut(&g),
            Problem::Mis => QuboInstance::encode_mis(&g, 2.0)?,
        };
        let mut cfg = TrainConfig { lr, max_epochs, trace: true, trace_every, trace_bins: 40, ..Default::default() };
        cfg.es_patience = cfg.es_patience.min(max_epochs.max(1));
        let r = train(&g, &q, variant, &cfg, seed)?;
        let frames = r
            .trace
            .into_iter()
            .map(|f| Frame {
                epoch: f.epoch,
                loss: f.loss,
                post_mean: f.post_mean,
                frac_above_09: f.post_frac_above_09,
                counts: f.post.counts,
            })
            .collect();
        Ok(TrainReport {
            problem: problem.to_string(),
            variant: variant.to_string(),
            n,
            edges: g.num_edges(),
            objective: r.objective,
            feasible: r.feasible,
            failed: r.failed,
            epochs_run: r.epochs_run,
            frames,
        })
    };
    to_json(&run().map_err(|e| e.to_string())?)
}

/// Values of a fuzzy conjunction over the unit square.
pub fn tnorm_landscape_json(tnorm: &str, steps: usize) -> Result<String, String> {
    let t: TNorm = tnorm.parse().map_err(|e: pignn::Error| e.to_string())?;
    if steps < 2 {
        return Err("need at least two grid steps".into());
    }
    let at = |k: usize| k as f64 / (steps - 1) as f64;
    let values = (0..steps).flat_map(|i| (0..steps).map(move |j| t.apply(at(i), at(j)))).collect();
    to_json(&Landscape { tnorm: t.as_str().to_string(), steps, values })
}

/// Inverse temperature of each schedule at `points` epochs spread over the budget.
pub fn schedule_curves_json(max_epochs: usize, points: usize) -> Result<String, String> {
    if max_epochs == 0 || points < 2 {
        return Err("need a positive budget and at least two points".into());
    }
    let epochs: Vec<usize> = (0..points).map(|k| 1 + k * (max_epochs - 1) / (points - 1)).collect();
    let curve = |s| epochs.iter().map(|&i| inv_temp_schedule(s, i, max_epochs)).collect();
    to_json(&Curves {
        linear: curve(Schedule::Linear),
        logarithmic: curve(Schedule::Logarithmic),
        exponential: curve(Schedule::Exponential),
        epochs,
    })
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn train_trace(
    problem: &str,
    n: usize,
    d: usize,
    variant: &str,
    seed: u32,
    max_epochs: usize,
    lr: f64,
    trace_every: usize,
) -> Result<String, JsValue> {
    train_trace_json(problem, n, d, variant, seed as u64, max_epochs, lr, trace_every).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn tnorm_landscape(tnorm: &str, steps: usize) -> Result<String, JsValue> {
    tnorm_landscape_json(tnorm, steps).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn schedule_curves(max_epochs: usize, points: usize) -> Result<String, JsValue> {
    schedule_curves_json(max_epochs, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn variant_names() -> String {
    Variant::ALL.iter().map(|v| v.name()).collect::<Vec<_>>().join(",")
}
