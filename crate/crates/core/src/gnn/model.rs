use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::activation::ActivationVariant;
use super::matrix::{Matrix, Propagator};
use crate::error::{Error, Result};

/// Optional changes to the default two-layer architecture.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelOverrides {
    pub embedding_dim: Option<usize>,
    pub hidden_dim: Option<usize>,
    /// Half-width of the uniform embedding initialization.
    pub embedding_scale: f64,
    pub bias: bool,
}

impl Default for ModelOverrides {
    fn default() -> Self {
        ModelOverrides { embedding_dim: None, hidden_dim: None, embedding_scale: 1.0, bias: false }
    }
}

/// Trainable node embeddings followed by two graph convolutions.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub embeddings: Matrix,
    pub w1: Matrix,
    pub w2: Matrix,
    pub b1: Vec<f64>,
    pub b2: f64,
    pub bias: bool,
    pub activation: ActivationVariant,
}

/// Gradients with the same layout as [`Model`]'s parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub embeddings: Matrix,
    pub w1: Matrix,
    pub w2: Matrix,
    pub b1: Vec<f64>,
    pub b2: f64,
}

/// Output of a forward pass plus the intermediates needed by `backward`.
#[derive(Clone, Debug)]
pub struct Forward {
    pub a_pre: Vec<f64>,
    pub a_post: Vec<f64>,
    pub inv_temp: f64,
    z1: Matrix,
    h1: Matrix,
}

/// `(floor(sqrt(n)), max(1, floor(d0 / 2)))`.
pub fn default_dims(n: usize) -> (usize, usize) {
    let mut d0 = (n as f64).sqrt() as usize;
    while (d0 + 1) * (d0 + 1) <= n {
        d0 += 1;
    }
    while d0 * d0 > n {
        d0 -= 1;
    }
    let d0 = d0.max(1);
    (d0, (d0 / 2).max(1))
}

fn glorot(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-limit..=limit))
}

impl Model {
    /// Random initialization, deterministic per seed.
    pub fn init(n: usize, activation: ActivationVariant, seed: u64, overrides: &ModelOverrides) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("model needs at least one node".into()));
        }
        let (d0_default, _) = default_dims(n);
        let d0 = overrides.embedding_dim.unwrap_or(d0_default);
        let d1 = overrides.hidden_dim.unwrap_or((d0 / 2).max(1));
        if d0 == 0 || d1 == 0 {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = overrides.embedding_scale;
        let embeddings = Matrix::from_fn(n, d0, |_, _| if s > 0.0 { rng.gen_range(-s..=s) } else { 0.0 });
        let w1 = glorot(d0, d1, &mut rng);
        let w2 = glorot(d1, 1, &mut rng);
        Ok(Model { embeddings, w1, w2, b1: vec![0.0; d1], b2: 0.0, bias: overrides.bias, activation })
    }

    pub fn n(&self) -> usize {
        self.embeddings.rows()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.w1.rows(), self.w1.cols())
    }

    pub fn num_params(&self) -> usize {
        let base = self.embeddings.as_slice().len() + self.w1.as_slice().len() + self.w2.as_slice().len();
        if self.bias {
            base + self.b1.len() + 1
        } else {
            base
        }
    }

    fn check_shapes(&self, adj: &Propagator) -> Result<()> {
        let (n, d0) = self.embeddings.shape();
        if adj.n() != n {
            return Err(Error::Dimension(format!("adjacency has {} nodes, model has {n}", adj.n())));
        }
        if self.w1.rows() != d0 || self.w2.rows() != self.w1.cols() || self.w2.cols() != 1 {
            return Err(Error::Dimension("layer shapes do not chain".into()));
        }
        if self.b1.len() != self.w1.cols() {
            return Err(Error::Dimension("hidden bias length differs from hidden width".into()));
        }
        Ok(())
    }

    /// `H1 = relu(Â E W1 + b1)`, `a_pre = Â H1 W2 + b2`, `a_post = act(a_pre)`.
    pub fn forward(&self, adj: &Propagator, inv_temp: f64) -> Result<Forward> {
        self.check_shapes(adj)?;
        let xw = self.embeddings.matmul(&self.w1)?;
        let mut z1 = adj.apply(&xw);
        if self.bias {
            let d1 = self.b1.len();
            for (k, z) in z1.as_mut_slice().iter_mut().enumerate() {
                *z += self.b1[k % d1];
            }
        }
        let mut h1 = z1.clone();
        for v in h1.as_mut_slice() {
            *v = v.max(0.0);
        }
        let hw = h1.matmul(&self.w2)?;
        let mut a_pre = adj.apply_vec(hw.as_slice());
        if self.bias {
            for v in &mut a_pre {
                *v += self.b2;
            }
        }
        let a_post = a_pre.iter().map(|&x| self.activation.forward(x, inv_temp)).collect();
        Ok(Forward { a_pre, a_post, inv_temp, z1, h1 })
    }

    /// Reverse-mode gradients given `dL/da_post`. `cache` must come from
    /// `forward` on this model with unchanged parameters.
    pub fn backward(&self, adj: &Propagator, cache: &Forward, d_post: &[f64]) -> Result<Gradients> {
        if d_post.len() != cache.a_pre.len() {
            return Err(Error::Dimension("output gradient length differs from node count".into()));
        }
        let d_pre: Vec<f64> = cache
            .a_pre
            .iter()
            .zip(d_post)
            .map(|(&x, &g)| g * self.activation.backward(x, cache.inv_temp))
            .collect();
        let b2 = if self.bias { d_pre.iter().sum() } else { 0.0 };

        let d_hw = Matrix::from_vec(d_pre.len(), 1, adj.apply_vec(&d_pre))?;
        let w2 = cache.h1.t_matmul(&d_hw)?;
        let mut d_z1 = d_hw.matmul_t(&self.w2)?;
        for (g, &z) in d_z1.as_mut_slice().iter_mut().zip(cache.z1.as_slice()) {
            if z <= 0.0 {
                *g = 0.0;
            }
        }
        let mut b1 = vec![0.0; self.b1.len()];
        if self.bias {
            let d1 = b1.len();
            for (k, &g) in d_z1.as_slice().iter().enumerate() {
                b1[k % d1] += g;
            }
        }
        let d_xw = adj.apply(&d_z1);
        let w1 = self.embeddings.t_matmul(&d_xw)?;
        let embeddings = d_xw.matmul_t(&self.w1)?;
        Ok(Gradients { embeddings, w1, w2, b1, b2 })
    }

    pub(crate) fn param_slices_mut(&mut self) -> [&mut [f64]; 5] {
        [
            self.embeddings.as_mut_slice(),
            self.w1.as_mut_slice(),
            self.w2.as_mut_slice(),
            self.b1.as_mut_slice(),
            std::slice::from_mut(&mut self.b2),
        ]
    }

    /// Text checkpoint; floats use the shortest round-trip representation.
    pub fn write_checkpoint<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        writeln!(sink, "pignn-model 1")?;
        writeln!(sink, "activation {}", self.activation.as_str())?;
        writeln!(sink, "bias {}", u8::from(self.bias))?;
        for (name, m) in [("embeddings", &self.embeddings), ("w1", &self.w1), ("w2", &self.w2)] {
            writeln!(sink, "{name} {} {}", m.rows(), m.cols())?;
            for r in 0..m.rows() {
                let row: Vec<String> = m.row(r).iter().map(f64::to_string).collect();
                writeln!(sink, "{}", row.join(" "))?;
            }
        }
        let b1: Vec<String> = self.b1.iter().map(f64::to_string).collect();
        writeln!(sink, "b1 {}", b1.join(" "))?;
        writeln!(sink, "b2 {}", self.b2)
    }

    pub fn read_checkpoint<R: BufRead>(source: R) -> Result<Self> {
        let mut lines = source.lines().enumerate().map(|(i, l)| {
            l.map(|s| (i + 1, s)).map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })
        });
        let mut next = |what: &str| -> Result<(usize, String)> {
            lines.next().unwrap_or_else(|| Err(Error::Parse { line: 0, msg: format!("unexpected end before {what}") }))
        };
        let floats = |lineno: usize, s: &str| -> Result<Vec<f64>> {
            s.split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| Error::Parse { line: lineno, msg: format!("invalid number {t:?}") }))
                .collect()
        };
        let keyed = |(lineno, line): (usize, String), key: &str| -> Result<(usize, String)> {
            match line.strip_prefix(key) {
                Some(rest) => Ok((lineno, rest.trim().to_string())),
                None => Err(Error::Parse { line: lineno, msg: format!("expected `{key}`") }),
            }
        };

        let (lineno, version) = keyed(next("header")?, "pignn-model")?;
        if version != "1" {
            return Err(Error::Parse { line: lineno, msg: format!("unsupported checkpoint version {version}") });
        }
        let (lineno, act) = keyed(next("activation")?, "activation")?;
        let activation = act.parse().map_err(|e: Error| Error::Parse { line: lineno, msg: e.to_string() })?;
        let (_, bias) = keyed(next("bias")?, "bias")?;
        let bias = bias == "1";

        let mut mats = Vec::with_capacity(3);
        for name in ["embeddings", "w1", "w2"] {
            let (lineno, dims) = keyed(next(name)?, name)?;
            let dims: Vec<usize> = dims.split_whitespace().filter_map(|t| t.parse().ok()).collect();
            let [rows, cols] = dims[..] else {
                return Err(Error::Parse { line: lineno, msg: format!("expected `{name} rows cols`") });
            };
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (lineno, row) = next(name)?;
                let vals = floats(lineno, &row)?;
                if vals.len() != cols {
                    return Err(Error::Parse { line: lineno, msg: format!("expected {cols} values") });
                }
                data.extend(vals);
            }
            mats.push(Matrix::from_vec(rows, cols, data)?);
        }
        let (lineno, b1) = keyed(next("b1")?, "b1")?;
        let b1 = floats(lineno, &b1)?;
        let (lineno, b2) = keyed(next("b2")?, "b2")?;
        let b2 = b2.parse().map_err(|_| Error::Parse { line: lineno, msg: "invalid b2".into() })?;
        let w2 = mats.pop().unwrap();
        let w1 = mats.pop().unwrap();
        let embeddings = mats.pop().unwrap();
        Ok(Model { embeddings, w1, w2, b1, b2, bias, activation })
    }
}
