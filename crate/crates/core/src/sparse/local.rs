use super::SymSparseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Symmetric matrix that is nonzero only on a small set of global DOFs,
/// stored as a dense block over that footprint.
///
/// Element-level derivative matrices live here so that per-parameter work
/// costs O(footprint²) instead of O(N).
#[derive(Debug, Clone, PartialEq)]
pub struct LocalBlock<T> {
    dofs: Vec<usize>,
    /// Row-major `dofs.len() × dofs.len()`.
    values: Vec<T>,
}

impl<T: Scalar> LocalBlock<T> {
    pub fn new(dofs: Vec<usize>, values: Vec<T>) -> Result<Self> {
        let m = dofs.len();
        if values.len() != m * m {
            return Err(Error::DimensionMismatch {
                expected: m * m,
                actual: values.len(),
            });
        }
        Ok(Self { dofs, values })
    }

    pub fn zero() -> Self {
        Self {
            dofs: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Collects the rows of `a` that carry any nonzero into a dense block.
    pub fn from_sparse(a: &SymSparseMatrix<T>) -> Self {
        let mut touched = vec![false; a.order()];
        for (i, j, v) in a.upper_entries() {
            if v != T::zero() {
                touched[i] = true;
                touched[j] = true;
            }
        }
        let dofs: Vec<usize> = (0..a.order()).filter(|&i| touched[i]).collect();
        let m = dofs.len();
        let mut values = vec![T::zero(); m * m];
        for (a_i, &gi) in dofs.iter().enumerate() {
            for (a_j, &gj) in dofs.iter().enumerate() {
                values[a_i * m + a_j] = a.get(gi, gj);
            }
        }
        Self { dofs, values }
    }

    pub fn to_sparse(&self, order: usize) -> Result<SymSparseMatrix<T>> {
        let m = self.dofs.len();
        let mut trip = Vec::with_capacity(m * m);
        for a in 0..m {
            for b in 0..m {
                let (gi, gj) = (self.dofs[a], self.dofs[b]);
                if gi <= gj {
                    trip.push((gi, gj, self.values[a * m + b]));
                }
            }
        }
        SymSparseMatrix::assemble(order, trip)
    }

    pub fn dofs(&self) -> &[usize] {
        &self.dofs
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == T::zero())
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            dofs: self.dofs.clone(),
            values: self.values.iter().map(|&v| v * s).collect(),
        }
    }

    /// `xᵀ B y` with global-length `x`, `y`.
    pub fn bilinear(&self, x: &[T], y: &[T]) -> T {
        let m = self.dofs.len();
        let mut s = T::zero();
        for a in 0..m {
            let xa = x[self.dofs[a]];
            if xa == T::zero() {
                continue;
            }
            let row = &self.values[a * m..(a + 1) * m];
            let mut r = T::zero();
            for (b, &v) in row.iter().enumerate() {
                r += v * y[self.dofs[b]];
            }
            s += xa * r;
        }
        s
    }

    pub fn quad(&self, x: &[T]) -> T {
        self.bilinear(x, x)
    }

    /// `out += scale · B x`
    pub fn add_apply(&self, scale: T, x: &[T], out: &mut [T]) {
        let m = self.dofs.len();
        for a in 0..m {
            let row = &self.values[a * m..(a + 1) * m];
            let mut r = T::zero();
            for (b, &v) in row.iter().enumerate() {
                r += v * x[self.dofs[b]];
            }
            out[self.dofs[a]] += scale * r;
        }
    }
}
