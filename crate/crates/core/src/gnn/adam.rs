/// Adam hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First and second moment estimates for one parameter tensor.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState { m: vec![0.0; len], v: vec![0.0; len] }
    }
}

/// One bias-corrected Adam update; `step_index` starts at 1.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, cfg: &AdamConfig, step_index: u64) {
    assert_eq!(params.len(), grads.len(), "parameter and gradient lengths differ");
    assert_eq!(params.len(), state.m.len(), "optimizer state length differs");
    debug_assert!(step_index >= 1);
    let t = step_index as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
}

/// Adam over a fixed list of tensors sharing one step counter.
#[derive(Clone, Debug)]
pub struct Adam {
    pub config: AdamConfig,
    states: Vec<AdamState>,
    step: u64,
}

impl Adam {
    pub fn new(config: AdamConfig, sizes: &[usize]) -> Self {
        Adam { config, states: sizes.iter().map(|&n| AdamState::new(n)).collect(), step: 0 }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) {
        assert_eq!(params.len(), self.states.len());
        assert_eq!(grads.len(), self.states.len());
        self.step += 1;
        for ((p, g), s) in params.iter_mut().zip(grads).zip(&mut self.states) {
            adam_step(p, g, s, &self.config, self.step);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = vec![1.0, -2.0, 3.5];
        let mut s = AdamState::new(3);
        for t in 1..=10 {
            adam_step(&mut p, &[0.0; 3], &mut s, &AdamConfig::default(), t);
        }
        assert_eq!(p, vec![1.0, -2.0, 3.5]);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let cfg = AdamConfig { lr: 1e-2, ..Default::default() };
        let mut p = vec![0.0; 4];
        let mut s = AdamState::new(4);
        adam_step(&mut p, &[3.0, -0.5, 1e-3, -100.0], &mut s, &cfg, 1);
        for (v, sign) in p.iter().zip([-1.0, 1.0, -1.0, 1.0]) {
            assert!((v - sign * 1e-2).abs() < 1e-7, "{v}");
        }
    }

    #[test]
    fn identical_problems_have_identical_trajectories() {
        let run = || {
            let mut opt = Adam::new(AdamConfig::default(), &[1]);
            let mut x = [2.0];
            let mut trail = Vec::new();
            for _ in 0..100 {
                let g = [2.0 * (x[0] - 0.5)];
                opt.step(&mut [&mut x], &[&g]);
                trail.push(x[0]);
            }
            trail
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut opt = Adam::new(AdamConfig { lr: 0.05, ..Default::default() }, &[2]);
        let mut x = [3.0, -4.0];
        for _ in 0..2000 {
            let g = [2.0 * (x[0] - 1.0), 2.0 * (x[1] + 2.0)];
            opt.step(&mut [&mut x], &[&g]);
        }
        assert!((x[0] - 1.0).abs() < 1e-3 && (x[1] + 2.0).abs() < 1e-3);
        assert_eq!(opt.steps_taken(), 2000);
    }
}
