//! Symmetric sparse matrices stored as the lower triangle in compressed
//! columns, with a fill-reducing sparse Cholesky factorization.

mod cholesky;
mod ordering;

use std::sync::{Arc, OnceLock};

use faer::Mat;

pub use cholesky::{CholeskyFactor, Symbolic};
pub use ordering::minimum_degree;

/// Lower-triangular sparsity pattern in compressed column form.
///
/// Every column stores its diagonal first, then strictly-lower row indices in
/// increasing order. The symbolic Cholesky analysis is computed on first use
/// and shared by every matrix carrying this pattern.
#[derive(Debug)]
pub struct Pattern {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    symbolic: OnceLock<Arc<Symbolic>>,
}

impl Pattern {
    /// Builds a pattern from per-column strictly-lower row lists. Rows must be
    /// greater than the column index; duplicates are removed.
    pub fn from_lower_columns(n: usize, mut cols: Vec<Vec<usize>>) -> Self {
        assert_eq!(cols.len(), n, "one row list per column");
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for (j, rows) in cols.iter_mut().enumerate() {
            rows.sort_unstable();
            rows.dedup();
            row_idx.push(j);
            for &i in rows.iter() {
                assert!(i > j && i < n, "row {i} invalid for lower column {j}");
                row_idx.push(i);
            }
            col_ptr.push(row_idx.len());
        }
        Pattern {
            n,
            col_ptr,
            row_idx,
            symbolic: OnceLock::new(),
        }
    }

    pub fn diagonal(n: usize) -> Self {
        Self::from_lower_columns(n, vec![Vec::new(); n])
    }

    /// Full lower triangle.
    pub fn dense(n: usize) -> Self {
        Self::from_lower_columns(n, (0..n).map(|j| (j + 1..n).collect()).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored entries of the lower triangle, diagonal included.
    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Strictly-lower stored entries.
    pub fn nnz_off_diagonal(&self) -> usize {
        self.row_idx.len() - self.n
    }

    pub fn col_range(&self, j: usize) -> std::ops::Range<usize> {
        self.col_ptr[j]..self.col_ptr[j + 1]
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn is_diagonal(&self) -> bool {
        self.row_idx.len() == self.n
    }

    /// Position of entry (i, j) in the value array, either triangle.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let r = self.col_range(j);
        self.row_idx[r.clone()]
            .binary_search(&i)
            .ok()
            .map(|k| r.start + k)
    }

    /// Iterates `(row, col, position)` over the stored lower triangle.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.n).flat_map(move |j| self.col_range(j).map(move |p| (self.row_idx[p], j, p)))
    }

    /// Symbolic factorization (ordering, elimination tree, column counts).
    pub fn symbolic(&self) -> Arc<Symbolic> {
        self.symbolic
            .get_or_init(|| Arc::new(Symbolic::analyze(self)))
            .clone()
    }
}

/// Symmetric sparse matrix: a shared pattern plus one value per stored entry.
#[derive(Debug, Clone)]
pub struct SymSparse {
    pattern: Arc<Pattern>,
    values: Vec<f64>,
}

impl SymSparse {
    pub fn new(pattern: Arc<Pattern>, values: Vec<f64>) -> Self {
        assert_eq!(pattern.nnz(), values.len(), "one value per stored entry");
        SymSparse { pattern, values }
    }

    pub fn zeros(pattern: Arc<Pattern>) -> Self {
        let nnz = pattern.nnz();
        Self::new(pattern, vec![0.0; nnz])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self::new(Arc::new(Pattern::diagonal(diag.len())), diag.to_vec())
    }

    pub fn n(&self) -> usize {
        self.pattern.n
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.find(i, j).map_or(0.0, |p| self.values[p])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n())
            .map(|j| self.values[self.pattern.col_ptr[j]])
            .collect()
    }

    /// Same pattern, values transformed entrywise as `f(row, col, value)`.
    pub fn map(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Self {
        let values = self
            .pattern
            .entries()
            .map(|(i, j, p)| f(i, j, self.values[p]))
            .collect();
        Self::new(self.pattern.clone(), values)
    }

    /// Values of `scale * self + shift * I`, on the same pattern.
    pub fn scaled_shifted_values(&self, scale: f64, shift: f64) -> Vec<f64> {
        let mut v: Vec<f64> = self.values.iter().map(|x| scale * x).collect();
        for j in 0..self.n() {
            v[self.pattern.col_ptr[j]] += shift;
        }
        v
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n()];
        for (i, j, p) in self.pattern.entries() {
            let a = self.values[p];
            y[i] += a * x[j];
            if i != j {
                y[j] += a * x[i];
            }
        }
        y
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let n = self.n();
        let mut m = Mat::zeros(n, n);
        for (i, j, p) in self.pattern.entries() {
            m[(i, j)] = self.values[p];
            m[(j, i)] = self.values[p];
        }
        m
    }

    /// Frobenius norm over the full symmetric matrix.
    pub fn frobenius_norm(&self) -> f64 {
        self.pattern
            .entries()
            .map(|(i, j, p)| {
                let v = self.values[p] * self.values[p];
                if i == j {
                    v
                } else {
                    2.0 * v
                }
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Cholesky factor of `scale * self + shift * I`.
    pub fn factor_shifted(
        &self,
        scale: f64,
        shift: f64,
    ) -> Result<CholeskyFactor, crate::FactorError> {
        let values = self.scaled_shifted_values(scale, shift);
        CholeskyFactor::new(&self.pattern, &values)
    }
}
