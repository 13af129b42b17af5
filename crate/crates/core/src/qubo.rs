//! QUBO encodings of MaxCut and MIS, and the fuzzy-relaxed Hamiltonian.
//!
//! An instance stores its diagonal and its upper-triangular off-diagonal
//! coefficients. The off-diagonal coefficient of `(i, j)` is the combined
//! weight `Q_ij + Q_ji`, so for binary `x`
//!
//! ```text
//! H(x) = sum_i diag_i * x_i + sum_{i<j} c_ij * x_i * x_j = x^T Q x.
//! ```
//!
//! The relaxed Hamiltonian replaces every conjunction `x_i * x_j` (including
//! the diagonal `x_i * x_i`) with a t-norm, so all three relaxations agree
//! with `x^T Q x` on binary inputs.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Default MIS edge penalty.
pub const DEFAULT_MIS_PENALTY: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Problem {
    MaxCut,
    Mis,
}

impl Problem {
    pub fn as_str(self) -> &'static str {
        match self {
            Problem::MaxCut => "maxcut",
            Problem::Mis => "mis",
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "maxcut" | "max-cut" => Ok(Problem::MaxCut),
            "mis" => Ok(Problem::Mis),
            _ => Err(Error::Config(format!("unknown problem {s:?}"))),
        }
    }
}

/// Fuzzy conjunction used in place of the product `x_i * x_j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TNorm {
    Product,
    /// Gödel / minimum t-norm.
    Standard,
    Lukasiewicz,
}

impl TNorm {
    pub const ALL: [TNorm; 3] = [TNorm::Product, TNorm::Standard, TNorm::Lukasiewicz];

    #[inline]
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            TNorm::Product => a * b,
            TNorm::Standard => a.min(b),
            TNorm::Lukasiewicz => (a + b - 1.0).max(0.0),
        }
    }

    /// Partial derivatives of `apply(a, b)` with respect to `a` and `b`.
    ///
    /// The minimum routes the whole derivative to the strictly smaller
    /// argument and splits it on ties. Łukasiewicz is flat on and below the
    /// kink `a + b = 1`.
    #[inline]
    pub fn partials(self, a: f64, b: f64) -> (f64, f64) {
        match self {
            TNorm::Product => (b, a),
            TNorm::Standard => {
                if a < b {
                    (1.0, 0.0)
                } else if b < a {
                    (0.0, 1.0)
                } else {
                    (0.5, 0.5)
                }
            }
            TNorm::Lukasiewicz => {
                if a + b > 1.0 {
                    (1.0, 1.0)
                } else {
                    (0.0, 0.0)
                }
            }
        }
    }

    /// `a ∧ a`.
    #[inline]
    pub fn apply_self(self, a: f64) -> f64 {
        self.apply(a, a)
    }

    /// Derivative of `a ∧ a` with respect to `a`.
    #[inline]
    pub fn derivative_self(self, a: f64) -> f64 {
        match self {
            TNorm::Product => 2.0 * a,
            TNorm::Standard => 1.0,
            TNorm::Lukasiewicz => {
                if a > 0.5 {
                    2.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TNorm::Product => "product",
            TNorm::Standard => "standard",
            TNorm::Lukasiewicz => "lukasiewicz",
        }
    }
}

impl FromStr for TNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "product" => Ok(TNorm::Product),
            "standard" | "min" | "godel" => Ok(TNorm::Standard),
            "lukasiewicz" | "luk" => Ok(TNorm::Lukasiewicz),
            _ => Err(Error::Config(format!("unknown t-norm {s:?}"))),
        }
    }
}

/// Penalty added to the Hamiltonian to push outputs towards discrete values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regularizer {
    #[default]
    None,
    L1,
    BinaryEntropy,
}

impl FromStr for Regularizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Regularizer::None),
            "l1" => Ok(Regularizer::L1),
            "entropy" | "binary-entropy" => Ok(Regularizer::BinaryEntropy),
            _ => Err(Error::Config(format!("unknown regularizer {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuboInstance {
    n: usize,
    diag: Vec<f64>,
    offdiag: Vec<(usize, usize, f64)>,
    problem: Option<Problem>,
    penalty: Option<f64>,
}

impl QuboInstance {
    /// Builds a generic instance. Off-diagonal entries must satisfy `i < j < n`
    /// and appear at most once.
    pub fn new(diag: Vec<f64>, mut offdiag: Vec<(usize, usize, f64)>) -> Result<Self> {
        let n = diag.len();
        for &(i, j, _) in &offdiag {
            if i >= j || j >= n {
                return Err(Error::InvalidGraph(format!("off-diagonal entry ({i}, {j}) invalid for n = {n}")));
            }
        }
        offdiag.sort_by_key(|&(i, j, _)| (i, j));
        if let Some(w) = offdiag.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::InvalidGraph(format!("duplicate off-diagonal entry ({}, {})", w[0].0, w[0].1)));
        }
        Ok(QuboInstance { n, diag, offdiag, problem: None, penalty: None })
    }

    /// MaxCut encoding with `H(x) = -cut(x)` on binary `x`: every edge adds
    /// `+2` to its off-diagonal coefficient and `-1` to both diagonal entries.
    pub fn encode_maxcut(g: &Graph) -> Self {
        Self::encode_maxcut_weighted(g, 2.0)
    }

    /// MaxCut matrix with diagonal `-deg(i)` and combined off-diagonal
    /// coefficient `edge_weight` per edge. Only `edge_weight = 2` gives
    /// `H(x) = -cut(x)`; other weights keep the rounded objective (the cut) but
    /// change the relaxed landscape.
    pub fn encode_maxcut_weighted(g: &Graph, edge_weight: f64) -> Self {
        let mut diag = vec![0.0; g.n()];
        let offdiag = g
            .edges()
            .iter()
            .map(|&(u, v)| {
                diag[u] -= 1.0;
                diag[v] -= 1.0;
                (u, v, edge_weight)
            })
            .collect();
        QuboInstance { n: g.n(), diag, offdiag, problem: Some(Problem::MaxCut), penalty: None }
    }

    /// MIS encoding `H(x) = -sum x_i + penalty * #{edges with both ends selected}`.
    pub fn encode_mis(g: &Graph, penalty: f64) -> Result<Self> {
        if !(penalty > 1.0) {
            return Err(Error::Config(format!("MIS penalty must exceed 1, got {penalty}")));
        }
        let offdiag = g.edges().iter().map(|&(u, v)| (u, v, penalty)).collect();
        Ok(QuboInstance {
            n: g.n(),
            diag: vec![-1.0; g.n()],
            offdiag,
            problem: Some(Problem::Mis),
            penalty: Some(penalty),
        })
    }

    pub fn encode(problem: Problem, g: &Graph, mis_penalty: f64) -> Result<Self> {
        match problem {
            Problem::MaxCut => Ok(Self::encode_maxcut(g)),
            Problem::Mis => Self::encode_mis(g, mis_penalty),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[(usize, usize, f64)] {
        &self.offdiag
    }

    pub fn problem(&self) -> Option<Problem> {
        self.problem
    }

    pub fn penalty(&self) -> Option<f64> {
        self.penalty
    }

    /// Symmetric dense matrix with `Q_ij = Q_ji = c_ij / 2`.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut q = vec![vec![0.0; self.n]; self.n];
        for (i, &d) in self.diag.iter().enumerate() {
            q[i][i] = d;
        }
        for &(i, j, c) in &self.offdiag {
            q[i][j] += c / 2.0;
            q[j][i] += c / 2.0;
        }
        q
    }

    fn check_domain(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Dimension(format!("assignment of length {} for n = {}", x.len(), self.n)));
        }
        match x.iter().position(|v| !(0.0..=1.0).contains(v)) {
            Some(index) => Err(Error::Domain { index, value: x[index] }),
            None => Ok(()),
        }
    }

    /// Relaxed Hamiltonian `sum_i diag_i (x_i ∧ x_i) + sum_{i<j} c_ij (x_i ∧ x_j)`.
    pub fn hamiltonian(&self, x: &[f64], t: TNorm) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.energy(x, t))
    }

    /// Gradient of [`QuboInstance::hamiltonian`] with respect to `x`.
    pub fn hamiltonian_grad(&self, x: &[f64], t: TNorm) -> Result<Vec<f64>> {
        self.check_domain(x)?;
        let mut grad = vec![0.0; self.n];
        self.energy_grad_into(x, t, &mut grad);
        Ok(grad)
    }

    /// Unchecked energy; summation in index order.
    pub(crate) fn energy(&self, x: &[f64], t: TNorm) -> f64 {
        let mut h = 0.0;
        for (i, &d) in self.diag.iter().enumerate() {
            h += d * t.apply_self(x[i]);
        }
        for &(i, j, c) in &self.offdiag {
            h += c * t.apply(x[i], x[j]);
        }
        h
    }

    pub(crate) fn energy_grad_into(&self, x: &[f64], t: TNorm, grad: &mut [f64]) {
        for (i, &d) in self.diag.iter().enumerate() {
            grad[i] = d * t.derivative_self(x[i]);
        }
        for &(i, j, c) in &self.offdiag {
            let (gi, gj) = t.partials(x[i], x[j]);
            grad[i] += c * gi;
            grad[j] += c * gj;
        }
    }

    /// `hamiltonian + alpha * penalty(x)`.
    pub fn regularized_loss(&self, x: &[f64], t: TNorm, reg: Regularizer, alpha: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.energy(x, t) + alpha * penalty(reg, x))
    }

    /// Writes `n`, then `i i c` diagonal lines, then `i j c` off-diagonal lines.
    pub fn write_text<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        writeln!(sink, "{}", self.n)?;
        for (i, d) in self.diag.iter().enumerate() {
            writeln!(sink, "{i} {i} {d}")?;
        }
        for (i, j, c) in &self.offdiag {
            writeln!(sink, "{i} {j} {c}")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(source: R) -> Result<Self> {
        let mut n = None;
        let mut diag = Vec::new();
        let mut offdiag = Vec::new();
        for (idx, line) in source.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::Parse { line: lineno, msg: e.to_string() })?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::Parse { line: lineno, msg: msg.to_string() };
            match n {
                None => {
                    let v: usize = match fields.as_slice() {
                        [v] => v.parse().map_err(|_| bad("invalid variable count"))?,
                        _ => return Err(bad("expected a single variable count")),
                    };
                    n = Some(v);
                    diag = vec![0.0; v];
                }
                Some(n) => {
                    let [i, j, c] = fields.as_slice() else {
                        return Err(bad("expected `i j c`"));
                    };
                    let i: usize = i.parse().map_err(|_| bad("invalid row index"))?;
                    let j: usize = j.parse().map_err(|_| bad("invalid column index"))?;
                    let c: f64 = c.parse().map_err(|_| bad("invalid coefficient"))?;
                    if i >= n || j >= n {
                        return Err(bad("index out of range"));
                    }
                    match i.cmp(&j) {
                        std::cmp::Ordering::Equal => diag[i] = c,
                        std::cmp::Ordering::Less => offdiag.push((i, j, c)),
                        std::cmp::Ordering::Greater => offdiag.push((j, i, c)),
                    }
                }
            }
        }
        if n.is_none() {
            return Err(Error::Parse { line: 1, msg: "missing variable count".into() });
        }
        QuboInstance::new(diag, offdiag)
    }
}

/// Value of the regularization penalty `P(x)`; entropy uses `0 log 0 = 0`.
pub fn penalty(reg: Regularizer, x: &[f64]) -> f64 {
    match reg {
        Regularizer::None => 0.0,
        Regularizer::L1 => x.iter().map(|v| v.abs()).sum(),
        Regularizer::BinaryEntropy => x.iter().map(|&v| binary_entropy(v)).sum(),
    }
}

/// Adds `alpha * dP/dx` to `grad`.
pub(crate) fn add_penalty_grad(reg: Regularizer, alpha: f64, x: &[f64], grad: &mut [f64]) {
    match reg {
        Regularizer::None => {}
        Regularizer::L1 => {
            for (g, &v) in grad.iter_mut().zip(x) {
                *g += alpha * v.signum();
            }
        }
        Regularizer::BinaryEntropy => {
            const EPS: f64 = 1e-12;
            for (g, &v) in grad.iter_mut().zip(x) {
                let v = v.clamp(EPS, 1.0 - EPS);
                *g += alpha * ((1.0 - v) / v).log2();
            }
        }
    }
}

fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.log2() };
    term(p) + term(1.0 - p)
}

/// Objective of a rounded assignment: the cut size for MaxCut, the set size
/// for MIS. Infeasible MIS assignments score `(0, false)`.
pub fn objective_value(problem: Problem, g: &Graph, xb: &[u8]) -> (f64, bool) {
    assert_eq!(xb.len(), g.n(), "assignment length must equal node count");
    match problem {
        Problem::MaxCut => {
            let cut = g.edges().iter().filter(|&&(u, v)| xb[u] != xb[v]).count();
            (cut as f64, true)
        }
        Problem::Mis => {
            if g.edges().iter().any(|&(u, v)| xb[u] == 1 && xb[v] == 1) {
                (0.0, false)
            } else {
                (xb.iter().filter(|&&b| b == 1).count() as f64, true)
            }
        }
    }
}
