use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2};

use crate::error::{domain, Result};

/// Symmetric nonnegative sparse matrix in compressed-row form, with both
/// triangles stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSymmetric {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymmetric {
    /// Builds `M` from entries `(i, j, v)`, each setting both `M_ij` and
    /// `M_ji`. Repeated entries must agree; zeros are dropped.
    pub fn from_triplets(n: usize, entries: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, v) in entries {
            if i >= n || j >= n {
                return domain(format!("entry ({i}, {j}) out of range for n = {n}"));
            }
            if !v.is_finite() {
                return domain(format!("entry ({i}, {j}) is not finite"));
            }
            if v < 0.0 {
                return domain(format!("entry ({i}, {j}) = {v} is negative"));
            }
            for key in [(i, j), (j, i)] {
                match map.insert(key, v) {
                    Some(old) if old != v => {
                        return domain(format!(
                            "conflicting values {old} and {v} for entry ({}, {})",
                            key.0, key.1
                        ));
                    }
                    _ => {}
                }
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(map.len());
        let mut values = Vec::with_capacity(map.len());
        for (&(i, j), &v) in &map {
            if v == 0.0 {
                continue;
            }
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Keeps the nonzero entries of a dense symmetric matrix.
    pub fn from_dense(m: ArrayView2<f64>) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return domain(format!("matrix must be square, got {:?}", m.dim()));
        }
        for i in 0..n {
            for j in 0..i {
                if m[[i, j]] != m[[j, i]] {
                    return domain(format!("matrix is not symmetric at ({i}, {j})"));
                }
            }
        }
        let entries = (0..n)
            .flat_map(|i| (0..=i).map(move |j| (i, j)))
            .filter(|&(i, j)| m[[i, j]] != 0.0)
            .map(|(i, j)| (i, j, m[[i, j]]));
        Self::from_triplets(n, entries)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored nonzeros, counting both triangles.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// All stored entries `(i, j, v)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.col_idx[k], self.values[k]))
        })
    }

    /// Entries with `j ≤ i`.
    pub fn lower_triangle(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.iter().filter(|&(i, j, _)| j <= i)
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let cols = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        match cols.binary_search(&j) {
            Ok(k) => self.values[self.row_ptr[i] + k],
            Err(_) => 0.0,
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn mean_value(&self) -> f64 {
        if self.values.is_empty() {
            0.0
        } else {
            self.values.iter().sum::<f64>() / self.values.len() as f64
        }
    }

    /// `M X` in `O(nnz · r)`.
    pub fn mul_dense(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let r = x.ncols();
        let mut out = Array2::<f64>::zeros((self.n, r));
        for i in 0..self.n {
            let mut row = out.row_mut(i);
            for (j, v) in self.row(i) {
                row.scaled_add(v, &x.row(j));
            }
        }
        out
    }

    /// Same sparsity pattern with every value replaced by `f(i, j, v)`.
    pub fn map_values(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.values[k] = f(i, self.col_idx[k], self.values[k]);
            }
        }
        out
    }

    pub fn scaled(&self, t: f64) -> Self {
        self.map_values(|_, _, v| v * t)
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.n, self.n));
        for (i, j, v) in self.iter() {
            m[[i, j]] = v;
        }
        m
    }
}
