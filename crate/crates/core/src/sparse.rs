//! Compressed-row storage for the symmetric Galerkin matrices.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{param, Result};
use crate::mesh::TriangleMesh;

/// Square sparse matrix in CSR form with sorted, unique column indices per row.
///
/// Used for stiffness and mass matrices. The pattern comes from the mesh
/// (entry `(i, j)` is stored iff nodes `i` and `j` share a triangle), so
/// element loops scatter into a fixed set of slots in a fixed order and
/// repeated assemblies are bitwise reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSpdMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSpdMatrix {
    fn from_rows(rows: Vec<Vec<usize>>) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_unstable();
            row.dedup();
            col_idx.extend_from_slice(&row);
            row_ptr.push(col_idx.len());
        }
        let values = vec![0.0; col_idx.len()];
        Self {
            dim,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Zero matrix over the interior nodes of `mesh`.
    pub fn interior_pattern(mesh: &TriangleMesh) -> Self {
        let mut rows = vec![Vec::new(); mesh.n_interior()];
        for t in 0..mesh.n_triangles() {
            let nodes = mesh.local_unknowns(t);
            for i in nodes.iter().flatten() {
                for j in nodes.iter().flatten() {
                    rows[*i].push(*j);
                }
            }
        }
        Self::from_rows(rows)
    }

    /// Zero matrix over all vertices of `mesh`, boundary included.
    pub fn vertex_pattern(mesh: &TriangleMesh) -> Self {
        let mut rows = vec![Vec::new(); mesh.n_vertices()];
        for tri in mesh.triangles() {
            for &i in tri {
                rows[i].extend_from_slice(tri);
            }
        }
        Self::from_rows(rows)
    }

    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed
    /// in input order.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows = vec![Vec::new(); dim];
        for &(i, j, _) in triplets {
            if i >= dim || j >= dim {
                return Err(param("triplet index out of range"));
            }
            rows[i].push(j);
        }
        let mut m = Self::from_rows(rows);
        for &(i, j, v) in triplets {
            m.add(i, j, v);
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[lo..hi].binary_search(&j).ok().map(|k| lo + k)
    }

    /// Adds `v` to entry `(i, j)`, which must be in the pattern.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.slot(i, j).expect("entry outside the sparsity pattern");
        self.values[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.slot(i, j).is_some()
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for (i, yi) in y.iter_mut().enumerate() {
            let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
            *yi = self.col_idx[lo..hi]
                .iter()
                .zip(&self.values[lo..hi])
                .map(|(&j, &a)| a * x[j])
                .sum();
        }
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        let mut sum = 0.0;
        for i in 0..self.dim {
            let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let row: f64 = self.col_idx[lo..hi]
                .iter()
                .zip(&self.values[lo..hi])
                .map(|(&j, &a)| a * y[j])
                .sum();
            sum += x[i] * row;
        }
        sum
    }

    /// `xᵀ A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    /// Stored entries in `(row, col)` order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.col_idx[k], self.values[k]))
        })
    }

    /// `max |A_ij − A_ji|` over stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        self.entries()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.entries().all(|(i, j, _)| self.contains(j, i)) && self.max_asymmetry() <= tol
    }

    /// `max |A_ij − B_ij|` over the union of both patterns.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let a = self.entries().map(|(i, j, v)| (v - other.get(i, j)).abs());
        let b = other.entries().map(|(i, j, v)| (v - self.get(i, j)).abs());
        a.chain(b).fold(0.0, f64::max)
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }
}
