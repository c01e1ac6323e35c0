use crate::error::{Error, Result};
use rayon::prelude::*;

/// Compressed sparse row matrix with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

const PAR_ROWS: usize = 4096;

impl CsrMatrix {
    /// Structure-only matrix from sorted, deduplicated row column lists.
    pub fn from_pattern(rows: &[Vec<usize>]) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for r in rows {
            col_idx.extend_from_slice(r);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        CsrMatrix { n, row_ptr, col_idx, values: vec![0.0; nnz] }
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Position of entry (i, j) in `values`.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi].binary_search(&j).ok().map(|k| lo + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.find(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.find(i, j).expect("entry outside sparsity pattern");
        self.values[k] += v;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// y = A x. Rows are independent, so the result does not depend on the
    /// number of worker threads.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let row = |(i, yi): (usize, &mut f64)| {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        };
        if self.n >= PAR_ROWS {
            y.par_iter_mut().enumerate().with_min_len(1024).for_each(row);
        } else {
            y.iter_mut().enumerate().for_each(row);
        }
    }

    /// a * self + b * other; both must share the sparsity pattern.
    pub fn linear_combination(&self, a: f64, other: &CsrMatrix, b: f64) -> CsrMatrix {
        assert_eq!(self.row_ptr, other.row_ptr);
        let mut out = self.clone();
        for (o, (x, y)) in out.values.iter_mut().zip(self.values.iter().zip(&other.values)) {
            *o = a * x + b * y;
        }
        out
    }

    /// Submatrix on the rows and columns where `keep` is set, with `map`
    /// giving the new index of each kept row.
    pub fn restrict(&self, map: &[Option<usize>]) -> CsrMatrix {
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.n {
            if map[i].is_none() {
                continue;
            }
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if let Some(j) = map[self.col_idx[k]] {
                    col_idx.push(j);
                    values.push(self.values[k]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { n: row_ptr.len() - 1, row_ptr, col_idx, values }
    }
}

/// Convergence report of a PCG solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients. Stops when the relative
/// residual ‖b − Ax‖/‖b‖ drops below `tol`; `x` holds the initial guess.
pub fn pcg(a: &CsrMatrix, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<CgStats> {
    let n = a.n;
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgStats { iterations: 0, residual: 0.0 });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = dot(&r, &r).sqrt() / bnorm;
    let mut it = 0;
    while res > tol {
        if it >= max_iter {
            return Err(Error::Solver { iterations: it, residual: res });
        }
        a.matvec(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(Error::Solver { iterations: it, residual: res });
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = dot(&r, &r).sqrt() / bnorm;
        it += 1;
        if !res.is_finite() {
            return Err(Error::Solver { iterations: it, residual: res });
        }
    }
    Ok(CgStats { iterations: it, residual: res })
}
