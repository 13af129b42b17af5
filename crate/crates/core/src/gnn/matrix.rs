use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Dense row-major matrix of `f64`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!("{} values for a {rows}x{cols} matrix", data.len())));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    /// `self * rhs`.
    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            let orow = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
            for (k, &a) in self.row(r).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in orow.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self^T * rhs`.
    pub fn t_matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.rows != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply ({}x{})^T by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Matrix::zeros(self.cols, rhs.cols);
        for r in 0..self.rows {
            let rrow = rhs.row(r);
            for (i, &a) in self.row(r).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * rhs^T`.
    pub fn matmul_t(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.cols {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by ({}x{})^T",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(Matrix::from_fn(self.rows, rhs.rows, |r, c| {
            self.row(r).iter().zip(rhs.row(c)).map(|(a, b)| a * b).sum()
        }))
    }
}

/// Dense `D^-1/2 (A + I) D^-1/2` with `D` the degree matrix of `A + I`.
pub fn normalized_adjacency(g: &Graph) -> Matrix {
    let prop = Propagator::new(g);
    let n = g.n();
    let mut m = Matrix::zeros(n, n);
    for r in 0..n {
        for k in prop.row_ptr[r]..prop.row_ptr[r + 1] {
            m.set(r, prop.cols[k], prop.vals[k]);
        }
    }
    m
}

/// Sparse (CSR) form of the normalized adjacency with self-loops.
///
/// The matrix is symmetric, so it is its own transpose in backward passes.
#[derive(Clone, Debug)]
pub struct Propagator {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Propagator {
    pub fn new(g: &Graph) -> Self {
        let n = g.n();
        let inv_sqrt: Vec<f64> = (0..n).map(|v| 1.0 / ((g.degree(v) + 1) as f64).sqrt()).collect();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(n + 2 * g.num_edges());
        let mut vals = Vec::with_capacity(cols.capacity());
        row_ptr.push(0);
        for r in 0..n {
            let mut entries: Vec<usize> = g.neighbors(r).to_vec();
            entries.push(r);
            entries.sort_unstable();
            for c in entries {
                cols.push(c);
                vals.push(inv_sqrt[r] * inv_sqrt[c]);
            }
            row_ptr.push(cols.len());
        }
        Propagator { n, row_ptr, cols, vals }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `Â * x`.
    pub fn apply(&self, x: &Matrix) -> Matrix {
        assert_eq!(x.rows(), self.n, "propagator expects {} rows", self.n);
        let width = x.cols();
        let mut out = Matrix::zeros(self.n, width);
        let od = out.as_mut_slice();
        for r in 0..self.n {
            let orow = &mut od[r * width..(r + 1) * width];
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let w = self.vals[k];
                for (o, &v) in orow.iter_mut().zip(x.row(self.cols[k])) {
                    *o += w * v;
                }
            }
        }
        out
    }

    /// `Â * v` for a column vector.
    pub fn apply_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n, "propagator expects length {}", self.n);
        (0..self.n)
            .map(|r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(|k| self.vals[k] * v[self.cols[k]]).sum())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isolated_node() {
        let m = normalized_adjacency(&Graph::new(1, []).unwrap());
        assert_eq!(m.as_slice(), &[1.0]);
    }

    #[test]
    fn single_edge_is_all_halves() {
        let m = normalized_adjacency(&Graph::path(2));
        assert!(m.as_slice().iter().all(|v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn symmetric_with_entries_in_unit_interval() {
        let g = crate::graph::generate_regular(30, 4, 5).unwrap();
        let m = normalized_adjacency(&g);
        for r in 0..30 {
            for c in 0..30 {
                assert_eq!(m.get(r, c), m.get(c, r));
                let v = m.get(r, c);
                assert!(v == 0.0 || (v > 0.0 && v <= 1.0));
            }
            assert!((m.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-12, "regular graph rows sum to one");
        }
    }

    #[test]
    fn sparse_matches_dense() {
        let g = crate::graph::generate_regular(12, 3, 1).unwrap();
        let dense = normalized_adjacency(&g);
        let prop = Propagator::new(&g);
        let x = Matrix::from_fn(12, 3, |r, c| (r * 3 + c) as f64 * 0.1 - 1.0);
        let a = dense.matmul(&x).unwrap();
        let b = prop.apply(&x);
        for (u, v) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((u - v).abs() < 1e-12);
        }
        let col: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let cm = Matrix::from_vec(12, 1, col.clone()).unwrap();
        let d = dense.matmul(&cm).unwrap();
        for (u, v) in d.as_slice().iter().zip(prop.apply_vec(&col)) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn matmul_variants_agree() {
        let a = Matrix::from_fn(3, 4, |r, c| (r + 2 * c) as f64 - 3.0);
        let b = Matrix::from_fn(4, 2, |r, c| (r * c) as f64 + 0.5);
        let ab = a.matmul(&b).unwrap();
        assert_eq!(a.transpose().t_matmul(&b).unwrap(), ab);
        assert_eq!(a.matmul_t(&b.transpose()).unwrap(), ab);
        assert!(matches!(a.matmul(&a), Err(Error::Dimension(_))));
    }
}
