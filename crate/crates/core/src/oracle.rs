//! Exhaustive ground truth for small instances and a finite-difference
//! gradient estimator.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::qubo::{Problem, QuboInstance};

/// Largest instance the exhaustive solvers accept.
pub const MAX_EXACT_N: usize = 24;

#[derive(Clone, Debug, PartialEq)]
pub struct ExactSolution {
    pub value: f64,
    pub assignment: Vec<u8>,
    pub count_optimal: u64,
}

fn check_cap(n: usize) -> Result<()> {
    if n > MAX_EXACT_N {
        return Err(Error::SizeCap { n, cap: MAX_EXACT_N });
    }
    Ok(())
}

fn mask_to_bits(mask: u64, n: usize) -> Vec<u8> {
    (0..n).map(|i| ((mask >> i) & 1) as u8).collect()
}

/// Tracks the best value over an enumeration; `better(a, b)` means `a` beats `b`.
struct Best<F> {
    value: f64,
    mask: u64,
    count: u64,
    better: F,
}

impl<F: Fn(f64, f64) -> bool> Best<F> {
    fn new(value: f64, better: F) -> Self {
        Best { value, mask: 0, count: 1, better }
    }

    fn offer(&mut self, value: f64, mask: u64) {
        if (self.better)(value, self.value) {
            self.value = value;
            self.mask = mask;
            self.count = 1;
        } else if value == self.value {
            self.count += 1;
        }
    }
}

/// Visits every mask in Gray-code order, calling `flip(bit, now_set)` before
/// `visit(mask)`. The all-zero mask is visited first without a flip.
fn gray_walk(n: usize, mut flip: impl FnMut(usize, bool), mut visit: impl FnMut(u64)) {
    let mut mask = 0u64;
    visit(mask);
    for k in 1u64..(1u64 << n) {
        let bit = k.trailing_zeros() as usize;
        mask ^= 1 << bit;
        flip(bit, mask & (1 << bit) != 0);
        visit(mask);
    }
}

/// Maximum objective of `problem` on `g` by enumerating all `2^n` assignments.
pub fn exact_solve(problem: Problem, g: &Graph) -> Result<ExactSolution> {
    let n = g.n();
    check_cap(n)?;
    // the empty assignment (value 0, feasible) seeds both problems
    let best = std::cell::RefCell::new(Best::new(0.0, |a: f64, b: f64| a > b));
    let side = std::cell::RefCell::new(vec![false; n]);
    match problem {
        Problem::MaxCut => {
            let cut = std::cell::Cell::new(0i64);
            gray_walk(
                n,
                |bit, now| {
                    let mut side = side.borrow_mut();
                    side[bit] = now;
                    // edges to the new side stop being cut, the others start
                    let same = g.neighbors(bit).iter().filter(|&&u| side[u] == now).count() as i64;
                    let deg = g.degree(bit) as i64;
                    cut.set(cut.get() + deg - 2 * same);
                },
                |mask| {
                    if mask != 0 {
                        best.borrow_mut().offer(cut.get() as f64, mask);
                    }
                },
            );
        }
        Problem::Mis => {
            let (size, violations) = (std::cell::Cell::new(0i64), std::cell::Cell::new(0i64));
            gray_walk(
                n,
                |bit, now| {
                    let mut side = side.borrow_mut();
                    side[bit] = now;
                    let sel = g.neighbors(bit).iter().filter(|&&u| side[u]).count() as i64;
                    let sign = if now { 1 } else { -1 };
                    size.set(size.get() + sign);
                    violations.set(violations.get() + sign * sel);
                },
                |mask| {
                    if mask != 0 && violations.get() == 0 {
                        best.borrow_mut().offer(size.get() as f64, mask);
                    }
                },
            );
        }
    }
    let best = best.into_inner();
    Ok(ExactSolution { value: best.value, assignment: mask_to_bits(best.mask, n), count_optimal: best.count })
}

/// Plain enumeration without incremental updates; cross-check for [`exact_solve`].
pub fn exact_solve_naive(problem: Problem, g: &Graph) -> Result<ExactSolution> {
    let n = g.n();
    check_cap(n)?;
    let mut best = Best::new(0.0, |a: f64, b: f64| a > b);
    for mask in 1u64..(1u64 << n) {
        let xb = mask_to_bits(mask, n);
        let (value, feasible) = crate::qubo::objective_value(problem, g, &xb);
        if feasible {
            best.offer(value, mask);
        }
    }
    Ok(ExactSolution { value: best.value, assignment: mask_to_bits(best.mask, n), count_optimal: best.count })
}

/// Minimum of `x^T Q x` over binary `x`.
pub fn exact_qubo_min(q: &QuboInstance) -> Result<ExactSolution> {
    let n = q.n();
    check_cap(n)?;
    let mut nbrs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(i, j, c) in q.offdiag() {
        nbrs[i].push((j, c));
        nbrs[j].push((i, c));
    }
    let x = std::cell::RefCell::new(vec![false; n]);
    let energy = std::cell::Cell::new(0.0f64);
    let best = std::cell::RefCell::new(Best::new(0.0, |a: f64, b: f64| a < b));
    gray_walk(
        n,
        |bit, now| {
            let mut x = x.borrow_mut();
            x[bit] = now;
            let field: f64 = q.diag()[bit] + nbrs[bit].iter().filter(|(j, _)| x[*j]).map(|(_, c)| c).sum::<f64>();
            energy.set(if now { energy.get() + field } else { energy.get() - field });
        },
        |mask| {
            if mask != 0 {
                best.borrow_mut().offer(energy.get(), mask);
            }
        },
    );
    let best = best.into_inner();
    Ok(ExactSolution { value: best.value, assignment: mask_to_bits(best.mask, n), count_optimal: best.count })
}

/// Central differences `(f(x + h e_i) - f(x - h e_i)) / 2h`.
pub fn finite_diff_grad(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = f(&probe);
            probe[i] = orig - h;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}
