//! Finite-difference checks of the full `loss(forward(params))` gradient.
//!
//! Step variants are checked against their surrogate: the forward output is
//! replaced by the smooth function whose derivative the backward pass uses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::gnn::{ActivationVariant, Model, ModelOverrides, Propagator};
use crate::graph::Graph;
use crate::oracle::finite_diff_grad;
use crate::qubo::{QuboInstance, TNorm};
use crate::trainer::Variant;

/// Distance kept from every non-differentiable point when sampling.
const KINK_MARGIN: f64 = 1e-3;
const STEP: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    pub variant: Variant,
    pub points: usize,
    /// Points rejected for sitting too close to a kink.
    pub rejected: usize,
    /// Worst `max|analytic - numeric| / max(max|numeric|, 1e-3)` over all points.
    pub max_rel_err: f64,
}

fn flatten(model: &mut Model) -> Vec<f64> {
    model.param_slices_mut().iter().flat_map(|s| s.iter().copied()).collect()
}

fn load(model: &mut Model, flat: &[f64]) {
    let mut k = 0;
    for s in model.param_slices_mut() {
        let len = s.len();
        s.copy_from_slice(&flat[k..k + len]);
        k += len;
    }
}

fn surrogate_loss(model: &Model, adj: &Propagator, q: &QuboInstance, tnorm: TNorm, inv_temp: f64) -> Result<f64> {
    let f = model.forward(adj, inv_temp)?;
    let x: Vec<f64> = f.a_pre.iter().map(|&v| model.activation.surrogate(v, inv_temp)).collect();
    Ok(q.energy(&x, tnorm))
}

/// Whether every kink of relu, the surrogate and the t-norm is at least
/// `KINK_MARGIN` away.
fn is_interior(model: &Model, adj: &Propagator, q: &QuboInstance, tnorm: TNorm, inv_temp: f64) -> Result<bool> {
    let f = model.forward(adj, inv_temp)?;
    let far = |v: f64, k: f64| (v - k).abs() > KINK_MARGIN;
    // relu inputs are the hidden pre-activations; h1 == 0 exactly where z1 <= 0
    let hidden = model.embeddings.matmul(&model.w1)?;
    let mut z1 = adj.apply(&hidden);
    if model.bias {
        let d1 = model.b1.len();
        for (k, z) in z1.as_mut_slice().iter_mut().enumerate() {
            *z += model.b1[k % d1];
        }
    }
    if !z1.as_slice().iter().all(|&z| far(z, 0.0)) {
        return Ok(false);
    }
    if model.activation == ActivationVariant::StepSte && !f.a_pre.iter().all(|&v| far(v, 0.0) && far(v, 1.0)) {
        return Ok(false);
    }
    let x: Vec<f64> = f.a_pre.iter().map(|&v| model.activation.surrogate(v, inv_temp)).collect();
    let ok = match tnorm {
        TNorm::Product => true,
        TNorm::Standard => q.offdiag().iter().all(|&(i, j, _)| far(x[i], x[j])),
        TNorm::Lukasiewicz => {
            q.offdiag().iter().all(|&(i, j, _)| far(x[i] + x[j], 1.0)) && x.iter().all(|&v| far(v, 0.5))
        }
    };
    Ok(ok)
}

/// Checks `variant` at `points` random interior parameter vectors.
///
/// Biases are enabled so every parameter tensor is exercised; tempered
/// variants use a random inverse temperature in `[1, 4]`.
pub fn check_variant(g: &Graph, q: &QuboInstance, variant: Variant, points: usize, seed: u64) -> Result<GradCheck> {
    let spec = variant.spec();
    let adj = Propagator::new(g);
    let overrides = ModelOverrides { bias: true, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accepted = 0;
    let mut rejected = 0;
    let mut worst = 0.0f64;
    while accepted < points {
        let mut model = Model::init(g.n(), spec.activation, rng.gen(), &overrides)?;
        model.b1.iter_mut().for_each(|b| *b = rng.gen_range(-0.5..0.5));
        model.b2 = rng.gen_range(-0.5..0.5);
        let inv_temp = if spec.activation == ActivationVariant::TemperedSigmoid { rng.gen_range(1.0..4.0) } else { 1.0 };
        if !is_interior(&model, &adj, q, spec.tnorm, inv_temp)? {
            rejected += 1;
            assert!(rejected < 100 * points.max(1), "no interior points found");
            continue;
        }
        accepted += 1;

        let mut cache = model.forward(&adj, inv_temp)?;
        for (post, &pre) in cache.a_post.iter_mut().zip(&cache.a_pre) {
            *post = spec.activation.surrogate(pre, inv_temp);
        }
        let mut d_post = vec![0.0; g.n()];
        q.energy_grad_into(&cache.a_post, spec.tnorm, &mut d_post);
        let grads = model.backward(&adj, &cache, &d_post)?;
        let analytic: Vec<f64> = [grads.embeddings.as_slice(), grads.w1.as_slice(), grads.w2.as_slice(), &grads.b1, &[grads.b2]]
            .concat();

        let theta = flatten(&mut model);
        let mut probe = model.clone();
        let numeric = finite_diff_grad(
            |p| {
                load(&mut probe, p);
                surrogate_loss(&probe, &adj, q, spec.tnorm, inv_temp).unwrap_or(f64::NAN)
            },
            &theta,
            STEP,
        );
        let scale = numeric.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-3);
        let err = analytic.iter().zip(&numeric).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        worst = worst.max(err / scale);
    }
    Ok(GradCheck { variant, points, rejected, max_rel_err: worst })
}
