//! Up-looking sparse Cholesky with a reusable symbolic analysis.

use faer::{Mat, MatMut};

use super::{minimum_degree, Pattern};
use crate::dense;
use crate::FactorError;

const NONE: usize = usize::MAX;

/// Predicted sparse work above this fraction of the dense Cholesky flop count
/// switches the numeric phase to a dense kernel.
const DENSE_FLOP_RATIO: f64 = 0.04;

/// Ordering, permuted upper pattern, elimination tree and column counts.
#[derive(Debug)]
pub struct Symbolic {
    n: usize,
    perm: Vec<usize>,
    // Upper triangle of P A P' by columns; `c_src` maps to the value array of
    // the original lower pattern.
    c_ptr: Vec<usize>,
    c_row: Vec<usize>,
    c_src: Vec<usize>,
    parent: Vec<usize>,
    l_ptr: Vec<usize>,
    flops: f64,
    dense: bool,
}

impl Symbolic {
    pub fn analyze(pattern: &Pattern) -> Self {
        let n = pattern.n();
        let perm = minimum_degree(pattern);
        let mut iperm = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }

        let mut counts = vec![0usize; n];
        for (i, j, _) in pattern.entries() {
            counts[iperm[i].max(iperm[j])] += 1;
        }
        let mut c_ptr = Vec::with_capacity(n + 1);
        c_ptr.push(0);
        for k in 0..n {
            c_ptr.push(c_ptr[k] + counts[k]);
        }
        let mut next = c_ptr[..n].to_vec();
        let mut c_row = vec![0; pattern.nnz()];
        let mut c_src = vec![0; pattern.nnz()];
        for (i, j, p) in pattern.entries() {
            let (a, b) = (iperm[i], iperm[j]);
            let col = a.max(b);
            c_row[next[col]] = a.min(b);
            c_src[next[col]] = p;
            next[col] += 1;
        }

        let parent = etree(n, &c_ptr, &c_row);
        let mut col_count = vec![1usize; n];
        let mut stack = vec![0; n];
        let mut mark = vec![NONE; n];
        for k in 0..n {
            let top = ereach(k, &c_ptr, &c_row, &parent, &mut stack, &mut mark);
            for &i in &stack[top..] {
                col_count[i] += 1;
            }
        }
        let mut l_ptr = Vec::with_capacity(n + 1);
        l_ptr.push(0);
        let mut flops = 0.0;
        for (k, &c) in col_count.iter().enumerate() {
            l_ptr.push(l_ptr[k] + c);
            flops += (c as f64) * (c as f64);
        }
        let dense_flops = (n as f64).powi(3) / 3.0;
        let dense = n > 1 && flops > DENSE_FLOP_RATIO * dense_flops;

        Symbolic {
            n,
            perm,
            c_ptr,
            c_row,
            c_src,
            parent,
            l_ptr,
            flops,
            dense,
        }
    }

    /// Elimination order, `perm[new] = old`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Stored entries of L, diagonal included.
    pub fn nnz_l(&self) -> usize {
        self.l_ptr[self.n]
    }

    /// Predicted multiply-add count of the sparse numeric phase.
    pub fn flops(&self) -> f64 {
        self.flops
    }

    /// Whether the numeric phase runs on a dense kernel.
    pub fn uses_dense(&self) -> bool {
        self.dense
    }
}

fn etree(n: usize, c_ptr: &[usize], c_row: &[usize]) -> Vec<usize> {
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        for &r in &c_row[c_ptr[k]..c_ptr[k + 1]] {
            let mut i = r;
            while i != NONE && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == NONE {
                    parent[i] = k;
                }
                i = next;
            }
        }
    }
    parent
}

/// Row pattern of L(k, :) below the diagonal, written to `stack[top..]` in
/// topological order.
fn ereach(
    k: usize,
    c_ptr: &[usize],
    c_row: &[usize],
    parent: &[usize],
    stack: &mut [usize],
    mark: &mut [usize],
) -> usize {
    let n = stack.len();
    let mut top = n;
    mark[k] = k;
    for &r in &c_row[c_ptr[k]..c_ptr[k + 1]] {
        let mut i = r;
        if i >= k {
            continue;
        }
        let mut len = 0;
        while mark[i] != k {
            stack[len] = i;
            len += 1;
            mark[i] = k;
            i = parent[i];
        }
        while len > 0 {
            len -= 1;
            top -= 1;
            stack[top] = stack[len];
        }
    }
    top
}

#[derive(Debug, Clone)]
enum Storage {
    Sparse { row: Vec<usize>, val: Vec<f64> },
    // Lower Cholesky factor in the original ordering.
    Dense(Mat<f64>),
}

/// Numeric Cholesky factor `A = P' L L' P`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    symbolic: std::sync::Arc<Symbolic>,
    storage: Storage,
}

impl CholeskyFactor {
    /// Factors the matrix with the given pattern and values (lower triangle).
    pub fn new(pattern: &Pattern, values: &[f64]) -> Result<Self, FactorError> {
        let symbolic = pattern.symbolic();
        let storage = if symbolic.dense {
            dense_numeric(pattern, values)?
        } else {
            sparse_numeric(&symbolic, values)?
        };
        Ok(CholeskyFactor { symbolic, storage })
    }

    pub fn n(&self) -> usize {
        self.symbolic.n
    }

    pub fn log_det(&self) -> f64 {
        let s: f64 = match &self.storage {
            Storage::Sparse { val, .. } => (0..self.n())
                .map(|j| val[self.symbolic.l_ptr[j]].ln())
                .sum(),
            Storage::Dense(l) => (0..self.n()).map(|j| l[(j, j)].ln()).sum(),
        };
        2.0 * s
    }

    /// Overwrites `x` with `A⁻¹ x`.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n();
        assert_eq!(x.len(), n);
        match &self.storage {
            Storage::Sparse { .. } => {
                let mut y = self.forward_vec(x);
                self.backward_vec(&mut y, x);
            }
            Storage::Dense(l) => {
                let rhs = faer::MatMut::from_column_major_slice_mut(x, n, 1);
                dense::solve_factor_in_place(l.as_ref(), rhs);
            }
        }
    }

    /// `L⁻¹ P x` for the sparse storage.
    fn forward_vec(&self, x: &[f64]) -> Vec<f64> {
        let Storage::Sparse { row, val } = &self.storage else {
            unreachable!("sparse storage only")
        };
        let lp = &self.symbolic.l_ptr;
        let mut y: Vec<f64> = self.symbolic.perm.iter().map(|&o| x[o]).collect();
        for j in 0..y.len() {
            let yj = y[j] / val[lp[j]];
            y[j] = yj;
            for p in lp[j] + 1..lp[j + 1] {
                y[row[p]] -= val[p] * yj;
            }
        }
        y
    }

    /// `x = P' L'⁻¹ y` for the sparse storage; `y` is overwritten.
    fn backward_vec(&self, y: &mut [f64], x: &mut [f64]) {
        let Storage::Sparse { row, val } = &self.storage else {
            unreachable!("sparse storage only")
        };
        let lp = &self.symbolic.l_ptr;
        for j in (0..y.len()).rev() {
            let mut s = y[j];
            for p in lp[j] + 1..lp[j + 1] {
                s -= val[p] * y[row[p]];
            }
            y[j] = s / val[lp[j]];
        }
        for (k, &o) in self.symbolic.perm.iter().enumerate() {
            x[o] = y[k];
        }
    }

    /// Overwrites every column of `b` with `A⁻¹ b`.
    pub fn solve_mat_in_place(&self, mut b: MatMut<'_, f64>) {
        match &self.storage {
            Storage::Dense(l) => dense::solve_factor_in_place(l.as_ref(), b),
            Storage::Sparse { .. } => {
                let mut col = vec![0.0; self.n()];
                for j in 0..b.ncols() {
                    for i in 0..col.len() {
                        col[i] = b[(i, j)];
                    }
                    self.solve_in_place(&mut col);
                    for i in 0..col.len() {
                        b[(i, j)] = col[i];
                    }
                }
            }
        }
    }

    /// Overwrites every column of `b` with `L⁻¹ P b`, where `P A P' = L L'`.
    pub fn forward_mat_in_place(&self, mut b: MatMut<'_, f64>) {
        match &self.storage {
            Storage::Dense(l) => dense::solve_lower_in_place(l.as_ref(), b),
            Storage::Sparse { .. } => {
                let mut col = vec![0.0; self.n()];
                for j in 0..b.ncols() {
                    for i in 0..col.len() {
                        col[i] = b[(i, j)];
                    }
                    let y = self.forward_vec(&col);
                    for i in 0..col.len() {
                        b[(i, j)] = y[i];
                    }
                }
            }
        }
    }

    /// Inverse of [`Self::forward_mat_in_place`] composed with `L'⁻¹`:
    /// overwrites every column of `b` with `P' L'⁻¹ b`.
    pub fn backward_mat_in_place(&self, mut b: MatMut<'_, f64>) {
        match &self.storage {
            Storage::Dense(l) => dense::solve_lower_transpose_in_place(l.as_ref(), b),
            Storage::Sparse { .. } => {
                let n = self.n();
                let mut y = vec![0.0; n];
                let mut x = vec![0.0; n];
                for j in 0..b.ncols() {
                    for i in 0..n {
                        y[i] = b[(i, j)];
                    }
                    self.backward_vec(&mut y, &mut x);
                    for i in 0..n {
                        b[(i, j)] = x[i];
                    }
                }
            }
        }
    }
}

fn dense_numeric(pattern: &Pattern, values: &[f64]) -> Result<Storage, FactorError> {
    let n = pattern.n();
    let mut a = Mat::<f64>::zeros(n, n);
    for (i, j, p) in pattern.entries() {
        a[(i, j)] = values[p];
        a[(j, i)] = values[p];
    }
    Ok(Storage::Dense(dense::cholesky_owned(a, "sparse core (dense kernel)")?))
}

fn sparse_numeric(sym: &Symbolic, values: &[f64]) -> Result<Storage, FactorError> {
    let n = sym.n;
    let nnz = sym.l_ptr[n];
    let mut row = vec![0usize; nnz];
    let mut val = vec![0.0f64; nnz];
    let mut next = sym.l_ptr[..n].to_vec();
    let mut x = vec![0.0f64; n];
    let mut stack = vec![0usize; n];
    let mut mark = vec![NONE; n];

    for k in 0..n {
        let top = ereach(k, &sym.c_ptr, &sym.c_row, &sym.parent, &mut stack, &mut mark);
        x[k] = 0.0;
        for p in sym.c_ptr[k]..sym.c_ptr[k + 1] {
            x[sym.c_row[p]] += values[sym.c_src[p]];
        }
        let mut d = x[k];
        x[k] = 0.0;
        for &i in &stack[top..] {
            let lki = x[i] / val[sym.l_ptr[i]];
            x[i] = 0.0;
            for p in sym.l_ptr[i] + 1..next[i] {
                x[row[p]] -= val[p] * lki;
            }
            d -= lki * lki;
            let p = next[i];
            next[i] += 1;
            row[p] = k;
            val[p] = lki;
        }
        if !(d > 0.0) {
            return Err(FactorError::Sparse {
                index: sym.perm[k],
                pivot: d,
            });
        }
        let p = next[k];
        next[k] += 1;
        row[p] = k;
        val[p] = d.sqrt();
    }
    Ok(Storage::Sparse { row, val })
}
