//! First-order derivatives of a single eigenpair with respect to one design
//! parameter: the eigenvalue derivative, Nelson's method and the bordered
//! algebraic system.
//!
//! The two linear systems involved do not depend on the parameter, so
//! [`NelsonSystem`] and [`BorderedSystem`] factorize once and are then reused
//! for every parameter (and by the adjoint engines for their single solve).

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::eigen::{largest_entry, EigenPair};
use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};
use crate::sparse::{ordering, LdltFactorization, LocalBlock, SymSparseMatrix};

/// `∂K/∂p_k` and `∂M/∂p_k` restricted to their nonzero footprint.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamDerivatives<T> {
    pub k: usize,
    pub dk: LocalBlock<T>,
    pub dm: LocalBlock<T>,
}

impl<T: Scalar> ParamDerivatives<T> {
    pub fn from_sparse(k: usize, dk: &SymSparseMatrix<T>, dm: &SymSparseMatrix<T>) -> Self {
        Self {
            k,
            dk: LocalBlock::from_sparse(dk),
            dm: LocalBlock::from_sparse(dm),
        }
    }

    /// `φᵀ(∂K − λ∂M)φ`
    pub fn shifted_quad(&self, lambda: T, phi: &[T]) -> T {
        self.dk.quad(phi) - lambda * self.dm.quad(phi)
    }

    /// `xᵀ(∂K − λ∂M)φ`
    pub fn shifted_bilinear(&self, lambda: T, x: &[T], phi: &[T]) -> T {
        self.dk.bilinear(x, phi) - lambda * self.dm.bilinear(x, phi)
    }
}

/// Source of per-parameter derivative matrices.
pub trait DerivativeProvider<T>: Sync {
    fn parameter_count(&self) -> usize;
    fn derivatives(&self, k: usize) -> Result<ParamDerivatives<T>>;
}

impl<T: Scalar> DerivativeProvider<T> for [ParamDerivatives<T>] {
    fn parameter_count(&self) -> usize {
        self.len()
    }

    fn derivatives(&self, k: usize) -> Result<ParamDerivatives<T>> {
        self.get(k).cloned().ok_or(Error::ParameterOutOfRange {
            index: k,
            count: self.len(),
        })
    }
}

impl<T: Scalar> DerivativeProvider<T> for Vec<ParamDerivatives<T>> {
    fn parameter_count(&self) -> usize {
        self.len()
    }

    fn derivatives(&self, k: usize) -> Result<ParamDerivatives<T>> {
        self.as_slice().derivatives(k)
    }
}

/// `(∂λ/∂p_k, ∂φ/∂p_k)` for one mode and one parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeDerivative<T> {
    pub dlambda: T,
    pub dphi: Vec<T>,
}

impl<T: Scalar> ModeDerivative<T> {
    /// Residual of the differentiated eigen-equation,
    /// `‖(K−λM)dφ + (∂K − dλ M − λ∂M)φ‖`.
    pub fn eigen_residual(
        &self,
        k: &SymSparseMatrix<T>,
        m: &SymSparseMatrix<T>,
        pair: &EigenPair<T>,
        pd: &ParamDerivatives<T>,
    ) -> Result<T> {
        let kd = k.matvec(&self.dphi)?;
        let md = m.matvec(&self.dphi)?;
        let mphi = m.matvec(&pair.phi)?;
        let mut r: Vec<T> = (0..kd.len())
            .map(|i| kd[i] - pair.lambda * md[i] - self.dlambda * mphi[i])
            .collect();
        pd.dk.add_apply(T::one(), &pair.phi, &mut r);
        pd.dm.add_apply(-pair.lambda, &pair.phi, &mut r);
        Ok(dot(&r, &r).sqrt())
    }

    /// `2φᵀM dφ + φᵀ∂Mφ`, zero for an exact derivative.
    pub fn normalization_defect(
        &self,
        m: &SymSparseMatrix<T>,
        pair: &EigenPair<T>,
        pd: &ParamDerivatives<T>,
    ) -> T {
        T::of(2.0) * m.bilinear(&pair.phi, &self.dphi) + pd.dm.quad(&pair.phi)
    }
}

/// `∂λ/∂p_k = φᵀ(∂K − λ∂M)φ` for an `M`-normalized `φ`.
pub fn eigenvalue_derivative<T: Scalar>(pair: &EigenPair<T>, pd: &ParamDerivatives<T>) -> T {
    pd.shifted_quad(pair.lambda, &pair.phi)
}

fn shifted<T: Scalar>(
    k: &SymSparseMatrix<T>,
    m: &SymSparseMatrix<T>,
    lambda: T,
) -> Result<SymSparseMatrix<T>> {
    if k.order() != m.order() {
        return Err(Error::DimensionMismatch {
            expected: k.order(),
            actual: m.order(),
        });
    }
    SymSparseMatrix::linear_combination(T::one(), k, -lambda, m)
}

fn singular_as_mode_error<T: Scalar>(pair: &EigenPair<T>) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::ZeroPivot { .. } => Error::SingularModeSystem {
            mode: pair.index,
            lambda: pair.lambda.to_f64_lossy(),
        },
        other => other,
    }
}

/// Factorized Nelson matrix `Ā`: `K − λM` with row and column `j` cleared
/// and the diagonal set to `K_jj`, where `j` is the largest-magnitude entry
/// of `φ`.
#[derive(Debug)]
pub struct NelsonSystem<T> {
    pivot: usize,
    factorization: LdltFactorization<T>,
    m_phi: Vec<T>,
    solves: AtomicUsize,
}

impl<T: Scalar> NelsonSystem<T> {
    pub fn new(
        k: &SymSparseMatrix<T>,
        m: &SymSparseMatrix<T>,
        pair: &EigenPair<T>,
    ) -> Result<Self> {
        if pair.phi.iter().all(|&v| v == T::zero()) {
            return Err(Error::ZeroVector);
        }
        let pivot = largest_entry(&pair.phi);
        let pinned = shifted(k, m, pair.lambda)?.pinned(pivot, k.get(pivot, pivot))?;
        let factorization =
            LdltFactorization::factorize(&pinned).map_err(singular_as_mode_error(pair))?;
        Ok(Self {
            pivot,
            factorization,
            m_phi: m.matvec(&pair.phi)?,
            solves: AtomicUsize::new(0),
        })
    }

    pub fn pivot(&self) -> usize {
        self.pivot
    }

    pub fn m_phi(&self) -> &[T] {
        &self.m_phi
    }

    /// Solves `Ā η = f̄` where `f̄` is `f` with entry `j` zeroed.
    pub fn solve(&self, f: &[T]) -> Result<Vec<T>> {
        let mut rhs = f.to_vec();
        if rhs.len() != self.factorization.order() {
            return Err(Error::DimensionMismatch {
                expected: self.factorization.order(),
                actual: rhs.len(),
            });
        }
        rhs[self.pivot] = T::zero();
        self.solves.fetch_add(1, Ordering::Relaxed);
        self.factorization.solve(&rhs)
    }

    /// Number of solves performed so far.
    pub fn solves(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }

    /// `dφ = η + cφ` with `c = −φᵀMη − ½φᵀ∂Mφ`.
    pub fn eigvec_derivative(
        &self,
        pair: &EigenPair<T>,
        pd: &ParamDerivatives<T>,
        dlambda: T,
    ) -> Result<Vec<T>> {
        let n = pair.phi.len();
        let mut f: Vec<T> = self.m_phi.iter().map(|&v| dlambda * v).collect();
        if f.len() != n {
            return Err(Error::DimensionMismatch {
                expected: f.len(),
                actual: n,
            });
        }
        pd.dk.add_apply(-T::one(), &pair.phi, &mut f);
        pd.dm.add_apply(pair.lambda, &pair.phi, &mut f);
        let mut eta = self.solve(&f)?;
        let c = -dot(&self.m_phi, &eta) - T::of(0.5) * pd.dm.quad(&pair.phi);
        for (e, &p) in eta.iter_mut().zip(&pair.phi) {
            *e += c * p;
        }
        Ok(eta)
    }
}

/// Factorized bordered matrix `[[K − λM, Mφ], [φᵀM, 0]]`.
///
/// The ordering eliminates `K − λM` first (fill-reducing), then the border,
/// and the Nelson index last, so no elimination step meets the singular
/// direction of `K − λM` before the border has regularized it.
#[derive(Debug)]
pub struct BorderedSystem<T> {
    order: usize,
    factorization: LdltFactorization<T>,
    solves: AtomicUsize,
}

impl<T: Scalar> BorderedSystem<T> {
    pub fn new(
        k: &SymSparseMatrix<T>,
        m: &SymSparseMatrix<T>,
        pair: &EigenPair<T>,
    ) -> Result<Self> {
        if pair.phi.iter().all(|&v| v == T::zero()) {
            return Err(Error::ZeroVector);
        }
        let a = shifted(k, m, pair.lambda)?;
        let n = a.order();
        let m_phi = m.matvec(&pair.phi)?;
        let bordered = a.bordered(&m_phi, T::zero())?;
        let last = largest_entry(&pair.phi);
        let mut perm: Vec<usize> = ordering::minimum_degree(&a.adjacency())
            .into_iter()
            .filter(|&i| i != last)
            .collect();
        perm.push(n);
        perm.push(last);
        let factorization = LdltFactorization::factorize_with_ordering(&bordered, perm)
            .map_err(singular_as_mode_error(pair))?;
        Ok(Self {
            order: n,
            factorization,
            solves: AtomicUsize::new(0),
        })
    }

    /// Solves for `(x, s)` with right-hand side `(top, bottom)`.
    pub fn solve(&self, top: &[T], bottom: T) -> Result<(Vec<T>, T)> {
        if top.len() != self.order {
            return Err(Error::DimensionMismatch {
                expected: self.order,
                actual: top.len(),
            });
        }
        let mut rhs = top.to_vec();
        rhs.push(bottom);
        self.solves.fetch_add(1, Ordering::Relaxed);
        let mut x = self.factorization.solve(&rhs)?;
        let s = x.pop().expect("bordered solution has order + 1 entries");
        Ok((x, s))
    }

    pub fn solves(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }

    /// Both derivatives from one bordered solve.
    pub fn mode_derivative(
        &self,
        pair: &EigenPair<T>,
        pd: &ParamDerivatives<T>,
    ) -> Result<ModeDerivative<T>> {
        let mut top = vec![T::zero(); self.order];
        pd.dk.add_apply(-T::one(), &pair.phi, &mut top);
        pd.dm.add_apply(pair.lambda, &pair.phi, &mut top);
        let bottom = -T::of(0.5) * pd.dm.quad(&pair.phi);
        let (dphi, neg_dlambda) = self.solve(&top, bottom)?;
        Ok(ModeDerivative {
            dlambda: -neg_dlambda,
            dphi,
        })
    }
}

/// Nelson's eigenvector derivative for a single parameter.
pub fn nelson_eigvec_derivative<T: Scalar>(
    k: &SymSparseMatrix<T>,
    m: &SymSparseMatrix<T>,
    pair: &EigenPair<T>,
    pd: &ParamDerivatives<T>,
    dlambda: T,
) -> Result<Vec<T>> {
    NelsonSystem::new(k, m, pair)?.eigvec_derivative(pair, pd, dlambda)
}

/// Eigenvalue and eigenvector derivatives from the bordered system.
pub fn algebraic_eigvec_derivative<T: Scalar>(
    k: &SymSparseMatrix<T>,
    m: &SymSparseMatrix<T>,
    pair: &EigenPair<T>,
    pd: &ParamDerivatives<T>,
) -> Result<ModeDerivative<T>> {
    BorderedSystem::new(k, m, pair)?.mode_derivative(pair, pd)
}
