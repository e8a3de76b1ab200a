//! Symmetric sparse storage, products and direct factorization.
//!
//! Only the upper triangle is stored, row by row. Products mirror the stored
//! triangle on the fly, so callers always see the full symmetric matrix.

mod ldlt;
mod local;
pub mod market;
pub mod ordering;

pub use ldlt::LdltFactorization;
pub use local::LocalBlock;

#[cfg(test)]
pub(crate) use ldlt::tests as ldlt_tests;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Symmetric matrix in compressed-row form holding the upper triangle.
///
/// Row `i` stores columns `j >= i` in strictly increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct SymSparseMatrix<T> {
    order: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> SymSparseMatrix<T> {
    /// Builds a matrix from `(row, col, value)` triplets.
    ///
    /// Entries below the diagonal (`row > col`) are mirrored into the upper
    /// triangle, so each off-diagonal coupling must be supplied once. Repeated
    /// positions are summed.
    pub fn assemble<I>(order: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        if order == 0 {
            return Err(Error::EmptyMatrix);
        }
        let mut entries: Vec<(usize, usize, T)> = Vec::new();
        for (r, c, v) in triplets {
            if r >= order || c >= order {
                return Err(Error::IndexOutOfRange {
                    row: r,
                    col: c,
                    order,
                });
            }
            let (r, c) = if r <= c { (r, c) } else { (c, r) };
            entries.push((r, c, v));
        }
        entries.sort_unstable_by_key(|e| (e.0, e.1));

        let mut row_offsets = vec![0usize; order + 1];
        let mut col_indices = Vec::with_capacity(entries.len());
        let mut values: Vec<T> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(c);
                values.push(v);
                row_offsets[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..order {
            row_offsets[i + 1] += row_offsets[i];
        }
        Ok(Self {
            order,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn identity(order: usize) -> Result<Self> {
        Self::from_diagonal(&vec![T::one(); order])
    }

    pub fn from_diagonal(diag: &[T]) -> Result<Self> {
        Self::assemble(diag.len(), diag.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    /// Builds from a dense row-major square matrix, reading its upper triangle
    /// and dropping exact zeros off the diagonal.
    pub fn from_dense(order: usize, dense: &[T]) -> Result<Self> {
        if dense.len() != order * order {
            return Err(Error::DimensionMismatch {
                expected: order * order,
                actual: dense.len(),
            });
        }
        let trip = (0..order).flat_map(|i| {
            (i..order).filter_map(move |j| {
                let v = dense[i * order + j];
                (i == j || v != T::zero()).then_some((i, j, v))
            })
        });
        Self::assemble(order, trip)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of stored (upper-triangle) entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Iterates the stored entries `(row, col, value)` with `row <= col`.
    pub fn upper_entries(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.order).flat_map(move |i| {
            let range = self.row_offsets[i]..self.row_offsets[i + 1];
            range.map(move |p| (i, self.col_indices[p], self.values[p]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        let (r, c) = if row <= col { (row, col) } else { (col, row) };
        if r >= self.order || c >= self.order {
            return T::zero();
        }
        let cols = &self.col_indices[self.row_offsets[r]..self.row_offsets[r + 1]];
        match cols.binary_search(&c) {
            Ok(p) => self.values[self.row_offsets[r] + p],
            Err(_) => T::zero(),
        }
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.order).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs_diagonal(&self) -> T {
        self.diagonal()
            .into_iter()
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Frobenius norm of the full symmetric matrix.
    pub fn frobenius_norm(&self) -> T {
        self.upper_entries()
            .map(|(i, j, v)| if i == j { v * v } else { T::of(2.0) * v * v })
            .sum::<T>()
            .sqrt()
    }

    /// Returns `A x`.
    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.order {
            return Err(Error::DimensionMismatch {
                expected: self.order,
                actual: x.len(),
            });
        }
        let mut y = vec![T::zero(); self.order];
        self.matvec_into(x, &mut y);
        Ok(y)
    }

    /// Writes `A x` into `y`. Lengths must equal the order.
    pub fn matvec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.order);
        assert_eq!(y.len(), self.order);
        y.iter_mut().for_each(|v| *v = T::zero());
        for i in 0..self.order {
            let xi = x[i];
            let mut acc = T::zero();
            for p in self.row_offsets[i]..self.row_offsets[i + 1] {
                let j = self.col_indices[p];
                let a = self.values[p];
                acc += a * x[j];
                if j != i {
                    y[j] += a * xi;
                }
            }
            y[i] += acc;
        }
    }

    /// `xᵀ A y`
    pub fn bilinear(&self, x: &[T], y: &[T]) -> T {
        let mut s = T::zero();
        for i in 0..self.order {
            for p in self.row_offsets[i]..self.row_offsets[i + 1] {
                let j = self.col_indices[p];
                let a = self.values[p];
                s += a * x[i] * y[j];
                if j != i {
                    s += a * x[j] * y[i];
                }
            }
        }
        s
    }

    pub fn scaled(&self, s: T) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Returns `a·A + b·B` on the union of both patterns.
    pub fn linear_combination(a: T, lhs: &Self, b: T, rhs: &Self) -> Result<Self> {
        if lhs.order != rhs.order {
            return Err(Error::DimensionMismatch {
                expected: lhs.order,
                actual: rhs.order,
            });
        }
        let n = lhs.order;
        let mut row_offsets = Vec::with_capacity(n + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::with_capacity(lhs.nnz().max(rhs.nnz()));
        let mut values = Vec::with_capacity(lhs.nnz().max(rhs.nnz()));
        for i in 0..n {
            let (mut p, pe) = (lhs.row_offsets[i], lhs.row_offsets[i + 1]);
            let (mut q, qe) = (rhs.row_offsets[i], rhs.row_offsets[i + 1]);
            while p < pe || q < qe {
                let cp = if p < pe {
                    lhs.col_indices[p]
                } else {
                    usize::MAX
                };
                let cq = if q < qe {
                    rhs.col_indices[q]
                } else {
                    usize::MAX
                };
                if cp == cq {
                    col_indices.push(cp);
                    values.push(a * lhs.values[p] + b * rhs.values[q]);
                    p += 1;
                    q += 1;
                } else if cp < cq {
                    col_indices.push(cp);
                    values.push(a * lhs.values[p]);
                    p += 1;
                } else {
                    col_indices.push(cq);
                    values.push(b * rhs.values[q]);
                    q += 1;
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            order: n,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Decouples DOF `j`: clears row and column `j` and sets the diagonal to
    /// `diagonal`.
    pub fn pinned(&self, j: usize, diagonal: T) -> Result<Self> {
        if j >= self.order {
            return Err(Error::IndexOutOfRange {
                row: j,
                col: j,
                order: self.order,
            });
        }
        let trip = self
            .upper_entries()
            .filter(|&(r, c, _)| r != j && c != j)
            .chain(std::iter::once((j, j, diagonal)));
        Self::assemble(self.order, trip)
    }

    /// Appends one row and column: `[[A, border], [borderᵀ, corner]]`.
    pub fn bordered(&self, border: &[T], corner: T) -> Result<Self> {
        if border.len() != self.order {
            return Err(Error::DimensionMismatch {
                expected: self.order,
                actual: border.len(),
            });
        }
        let n = self.order;
        let mut row_offsets = Vec::with_capacity(n + 2);
        row_offsets.push(0);
        let mut col_indices = Vec::with_capacity(self.nnz() + n + 1);
        let mut values = Vec::with_capacity(self.nnz() + n + 1);
        for i in 0..n {
            for p in self.row_offsets[i]..self.row_offsets[i + 1] {
                col_indices.push(self.col_indices[p]);
                values.push(self.values[p]);
            }
            if border[i] != T::zero() {
                col_indices.push(n);
                values.push(border[i]);
            }
            row_offsets.push(col_indices.len());
        }
        col_indices.push(n);
        values.push(corner);
        row_offsets.push(col_indices.len());
        Ok(Self {
            order: n + 1,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Dense row-major copy of the full symmetric matrix.
    pub fn to_dense(&self) -> Vec<T> {
        let n = self.order;
        let mut d = vec![T::zero(); n * n];
        for (i, j, v) in self.upper_entries() {
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
        d
    }

    /// Adjacency of the off-diagonal structure (both directions, no self loops).
    pub(crate) fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.order];
        for (i, j, _) in self.upper_entries() {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        adj
    }
}
