use super::ordering;
use super::SymSparseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const NONE: usize = usize::MAX;

/// `P A Pᵀ = L D Lᵀ` with unit lower `L` and diagonal `D`.
///
/// No pivoting is performed beyond the symmetric ordering, so `D` may hold
/// negative entries (indefinite input) but a vanishing pivot is an error.
#[derive(Debug, Clone)]
pub struct LdltFactorization<T> {
    order: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    perm_inv: Vec<usize>,
    l_col_ptr: Vec<usize>,
    l_row_idx: Vec<usize>,
    l_values: Vec<T>,
    d: Vec<T>,
}

impl<T: Scalar> LdltFactorization<T> {
    /// Factorizes with an approximate-minimum-degree ordering.
    pub fn factorize(a: &SymSparseMatrix<T>) -> Result<Self> {
        let perm = ordering::minimum_degree(&a.adjacency());
        Self::factorize_with_ordering(a, perm)
    }

    /// Factorizes in the natural order.
    pub fn factorize_natural(a: &SymSparseMatrix<T>) -> Result<Self> {
        Self::factorize_with_ordering(a, (0..a.order()).collect())
    }

    /// Factorizes `P A Pᵀ` for a caller-supplied `perm` (`perm[new] = old`).
    pub fn factorize_with_ordering(a: &SymSparseMatrix<T>, perm: Vec<usize>) -> Result<Self> {
        let n = a.order();
        if perm.len() != n {
            return Err(Error::InvalidPermutation);
        }
        let perm_inv = ordering::inverse(&perm)?;

        // Upper triangle of P A Pᵀ by columns: column k lists rows i <= k.
        let mut counts = vec![0usize; n + 1];
        for (i, j, _) in a.upper_entries() {
            let (pi, pj) = (perm_inv[i], perm_inv[j]);
            counts[pi.max(pj) + 1] += 1;
        }
        for k in 0..n {
            counts[k + 1] += counts[k];
        }
        let mut c_ptr = counts.clone();
        let mut c_row = vec![0usize; a.nnz()];
        let mut c_val = vec![T::zero(); a.nnz()];
        for (i, j, v) in a.upper_entries() {
            let (pi, pj) = (perm_inv[i], perm_inv[j]);
            let col = pi.max(pj);
            let slot = c_ptr[col];
            c_row[slot] = pi.min(pj);
            c_val[slot] = v;
            c_ptr[col] += 1;
        }
        let c_ptr = counts;

        // Elimination tree and column counts of L.
        let mut parent = vec![NONE; n];
        let mut flag = vec![NONE; n];
        let mut l_nz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for p in c_ptr[k]..c_ptr[k + 1] {
                let mut i = c_row[p];
                if i >= k {
                    continue;
                }
                while flag[i] != k {
                    if parent[i] == NONE {
                        parent[i] = k;
                    }
                    l_nz[i] += 1;
                    flag[i] = k;
                    i = parent[i];
                }
            }
        }
        let mut l_col_ptr = vec![0usize; n + 1];
        for k in 0..n {
            l_col_ptr[k + 1] = l_col_ptr[k] + l_nz[k];
        }
        let total = l_col_ptr[n];
        let mut l_row_idx = vec![0usize; total];
        let mut l_values = vec![T::zero(); total];
        let mut d = vec![T::zero(); n];

        // A pivot is numerically zero when it is lost in the round-off of
        // its own row; a global scale would misjudge rows that differ by
        // many orders of magnitude (boundary penalties, bordering rows).
        let mut row_scale = vec![T::zero(); n];
        for (i, j, v) in a.upper_entries() {
            let (pi, pj) = (perm_inv[i], perm_inv[j]);
            row_scale[pi] = row_scale[pi].max(v.abs());
            row_scale[pj] = row_scale[pj].max(v.abs());
        }
        let eps = T::epsilon();

        let mut y = vec![T::zero(); n];
        let mut pattern = vec![0usize; n];
        l_nz.iter_mut().for_each(|c| *c = 0);
        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            for p in c_ptr[k]..c_ptr[k + 1] {
                let mut i = c_row[p];
                y[i] += c_val[p];
                let mut len = 0;
                while flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = parent[i];
                }
                while len > 0 {
                    top -= 1;
                    len -= 1;
                    pattern[top] = pattern[len];
                }
            }
            d[k] = y[k];
            y[k] = T::zero();
            while top < n {
                let i = pattern[top];
                top += 1;
                let yi = y[i];
                y[i] = T::zero();
                let start = l_col_ptr[i];
                let end = start + l_nz[i];
                for p in start..end {
                    y[l_row_idx[p]] -= l_values[p] * yi;
                }
                let l_ki = yi / d[i];
                d[k] -= l_ki * yi;
                l_row_idx[end] = k;
                l_values[end] = l_ki;
                l_nz[i] += 1;
            }
            if d[k].abs() <= eps * row_scale[k] || !d[k].is_finite() {
                return Err(Error::ZeroPivot { index: k });
            }
        }

        Ok(Self {
            order: n,
            perm,
            perm_inv,
            l_col_ptr,
            l_row_idx,
            l_values,
            d,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Fill-reducing ordering used, `perm[new] = old`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn diagonal(&self) -> &[T] {
        &self.d
    }

    /// Strictly-lower nonzeros of `L`.
    pub fn l_nnz(&self) -> usize {
        self.l_values.len()
    }

    /// Number of negative pivots, i.e. eigenvalues of `A` below zero.
    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|&&v| v < T::zero()).count()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        if b.len() != self.order {
            return Err(Error::DimensionMismatch {
                expected: self.order,
                actual: b.len(),
            });
        }
        let mut x = vec![T::zero(); self.order];
        self.solve_into(b, &mut x);
        Ok(x)
    }

    /// Solves `A x = b` into `x`. Both slices must have the factor order.
    pub fn solve_into(&self, b: &[T], x: &mut [T]) {
        assert_eq!(b.len(), self.order);
        assert_eq!(x.len(), self.order);
        let n = self.order;
        let mut w: Vec<T> = (0..n).map(|k| b[self.perm[k]]).collect();
        for j in 0..n {
            let wj = w[j];
            if wj != T::zero() {
                for p in self.l_col_ptr[j]..self.l_col_ptr[j + 1] {
                    w[self.l_row_idx[p]] -= self.l_values[p] * wj;
                }
            }
        }
        for j in 0..n {
            w[j] /= self.d[j];
        }
        for j in (0..n).rev() {
            let mut s = w[j];
            for p in self.l_col_ptr[j]..self.l_col_ptr[j + 1] {
                s -= self.l_values[p] * w[self.l_row_idx[p]];
            }
            w[j] = s;
        }
        for (old, &new) in self.perm_inv.iter().enumerate() {
            x[old] = w[new];
        }
    }
}
