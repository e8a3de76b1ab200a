//! Generalized symmetric eigenproblem `K φ = λ M φ`.
//!
//! [`solve_modes`] runs shift-invert Lanczos on `(K − μM)⁻¹ M` with full
//! reorthogonalization in the `M` inner product. The `LDLᵀ` factors of
//! `K − μM` are handed back with the modes so they can serve as the SQMR
//! preconditioner later on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{axpy, dot, max_abs, norm2, Scalar};
use crate::sparse::{LdltFactorization, SymSparseMatrix};

/// Relative separation below which two requested eigenvalues count as repeated.
pub const REPEATED_TOLERANCE: f64 = 1e-6;

/// Required `‖Kφ − λMφ‖ / ‖Kφ‖` for an accepted mode.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

const START_SEED: u64 = 0x6d6f_6461_6c5f_7365;

/// An `M`-normalized eigenpair.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair<T> {
    /// Zero-based mode number in ascending eigenvalue order.
    pub index: usize,
    /// rad²/s²
    pub lambda: T,
    pub phi: Vec<T>,
}

impl<T: Scalar> EigenPair<T> {
    /// `‖Kφ − λMφ‖ / ‖Kφ‖`
    pub fn residual(&self, k: &SymSparseMatrix<T>, m: &SymSparseMatrix<T>) -> Result<T> {
        let kp = k.matvec(&self.phi)?;
        let mp = m.matvec(&self.phi)?;
        let r: Vec<T> = kp
            .iter()
            .zip(&mp)
            .map(|(&a, &b)| a - self.lambda * b)
            .collect();
        Ok(norm2(&r) / norm2(&kp).max(T::min_positive_value()))
    }
}

/// `LDLᵀ` factors of `K − μM`.
#[derive(Debug, Clone)]
pub struct ShiftedFactorization<T> {
    pub mu: T,
    pub factorization: LdltFactorization<T>,
}

impl<T: Scalar> ShiftedFactorization<T> {
    pub fn new(k: &SymSparseMatrix<T>, m: &SymSparseMatrix<T>, mu: T) -> Result<Self> {
        let shifted = if mu == T::zero() {
            k.clone()
        } else {
            SymSparseMatrix::linear_combination(T::one(), k, -mu, m)?
        };
        let factorization = LdltFactorization::factorize(&shifted).map_err(|e| match e {
            Error::ZeroPivot { index } => Error::ShiftCollision {
                mu: mu.to_f64_lossy(),
                reason: format!("zero pivot at position {index}"),
            },
            other => other,
        })?;
        Ok(Self { mu, factorization })
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        self.factorization.solve(b)
    }
}

/// Scales `phi` to unit `M`-norm and makes its largest-magnitude entry
/// positive (ties go to the smallest index).
pub fn m_normalize<T: Scalar>(phi: &[T], m: &SymSparseMatrix<T>) -> Result<Vec<T>> {
    let mphi = m.matvec(phi)?;
    let nrm2 = dot(phi, &mphi);
    if !(nrm2 > T::zero()) {
        return Err(Error::NonPositiveNorm(nrm2.to_f64_lossy()));
    }
    let mut s = T::one() / nrm2.sqrt();
    if phi[largest_entry(phi)] < T::zero() {
        s = -s;
    }
    Ok(phi.iter().map(|&v| v * s).collect())
}

/// Index of the largest `|x_i|`, smallest index on ties.
pub fn largest_entry<T: Scalar>(x: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in x.iter().enumerate() {
        if v.abs() > x[best].abs() {
            best = i;
        }
    }
    best
}

/// The `n_modes` smallest eigenpairs above the shift `mu`, ascending, with the
/// `K − μM` factorization used to find them.
pub fn solve_modes<T: Scalar>(
    k: &SymSparseMatrix<T>,
    m: &SymSparseMatrix<T>,
    n_modes: usize,
    mu: T,
) -> Result<(Vec<EigenPair<T>>, ShiftedFactorization<T>)> {
    let n = k.order();
    if m.order() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: m.order(),
        });
    }
    if n_modes == 0 || n_modes > n {
        return Err(Error::InvalidArgument(format!(
            "n_modes must be in 1..={n}, got {n_modes}"
        )));
    }
    let shifted = ShiftedFactorization::new(k, m, mu)?;
    let pairs = lanczos(k, m, &shifted, n_modes)?;
    check_distinct(&pairs)?;
    Ok((pairs, shifted))
}

fn check_distinct<T: Scalar>(pairs: &[EigenPair<T>]) -> Result<()> {
    for w in pairs.windows(2) {
        let (a, b) = (w[0].lambda, w[1].lambda);
        if (b - a).abs() <= T::of(REPEATED_TOLERANCE) * a.abs().max(b.abs()) {
            return Err(Error::RepeatedEigenvalue {
                mode: w[0].index,
                next: w[1].index,
                first: a.to_f64_lossy(),
                second: b.to_f64_lossy(),
                tolerance: REPEATED_TOLERANCE,
            });
        }
    }
    Ok(())
}

fn lanczos<T: Scalar>(
    k: &SymSparseMatrix<T>,
    m: &SymSparseMatrix<T>,
    shifted: &ShiftedFactorization<T>,
    nev: usize,
) -> Result<Vec<EigenPair<T>>> {
    let n = k.order();
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut basis: Vec<Vec<T>> = Vec::new();
    let mut m_basis: Vec<Vec<T>> = Vec::new();
    let mut alpha: Vec<T> = Vec::new();
    let mut beta: Vec<T> = Vec::new();
    let ritz_tol = T::of(1e-13).max(T::epsilon() * T::of(100.0));
    let breakdown = T::epsilon() * T::of(n as f64).sqrt();

    let mut q = match fresh_direction(m, &basis, &m_basis, &mut rng) {
        Some(q) => q,
        None => return Err(Error::EigenNoConvergence("no start vector".into())),
    };
    let mut mq = m.matvec(&q)?;
    let mut w = vec![T::zero(); n];
    let mut mw = vec![T::zero(); n];
    let mut converged: Option<(Vec<T>, Vec<Vec<T>>)> = None;

    while basis.len() < n {
        basis.push(q.clone());
        m_basis.push(mq.clone());
        let j = basis.len() - 1;

        shifted.factorization.solve_into(&mq, &mut w);
        let a = dot(&mq, &w);
        alpha.push(a);
        for _ in 0..2 {
            for (qi, mqi) in basis.iter().zip(&m_basis) {
                let c = dot(mqi, &w);
                axpy(-c, qi, &mut w);
            }
        }
        m.matvec_into(&w, &mut mw);
        let b2 = dot(&w, &mw);
        let b = if b2 > T::zero() { b2.sqrt() } else { T::zero() };

        let steps = j + 1;
        let invariant = b <= breakdown * a.abs().max(T::min_positive_value());
        // An invariant Krylov space cannot reveal multiplicities, so it is
        // never accepted as converged until the whole space is spanned.
        if steps >= nev && (steps == n || (!invariant && steps.is_multiple_of(4))) {
            let (theta, s) = tridiagonal_eigen(&alpha, &beta)?;
            let mut order: Vec<usize> = (0..steps).collect();
            order.sort_by(|&x, &y| theta[y].partial_cmp(&theta[x]).unwrap());
            let done = order[..nev].iter().all(|&c| {
                let est = (b * s[c][steps - 1]).abs();
                theta[c] > T::zero() && est <= ritz_tol * theta[c].abs()
            });
            if done || steps == n {
                let vals = order[..nev].iter().map(|&c| theta[c]).collect();
                let vecs = order[..nev].iter().map(|&c| s[c].clone()).collect();
                converged = Some((vals, vecs));
                break;
            }
        }

        if invariant {
            match fresh_direction(m, &basis, &m_basis, &mut rng) {
                Some(fresh) => {
                    beta.push(T::zero());
                    mq = m.matvec(&fresh)?;
                    q = fresh;
                }
                None => break,
            }
        } else {
            beta.push(b);
            let inv = T::one() / b;
            q = w.iter().map(|&v| v * inv).collect();
            mq = mw.iter().map(|&v| v * inv).collect();
        }
    }

    let (theta, coeffs) = match converged {
        Some(c) => c,
        None => {
            let (theta, s) = tridiagonal_eigen(&alpha, &beta[..alpha.len() - 1])?;
            let mut order: Vec<usize> = (0..theta.len()).collect();
            order.sort_by(|&x, &y| theta[y].partial_cmp(&theta[x]).unwrap());
            if order.len() < nev {
                return Err(Error::EigenNoConvergence(format!(
                    "Krylov space exhausted after {} of {nev} modes",
                    order.len()
                )));
            }
            (
                order[..nev].iter().map(|&c| theta[c]).collect(),
                order[..nev].iter().map(|&c| s[c].clone()).collect(),
            )
        }
    };

    let mut pairs = Vec::with_capacity(nev);
    for (idx, (th, s)) in theta.into_iter().zip(coeffs).enumerate() {
        if !(th > T::zero()) {
            return Err(Error::EigenNoConvergence(format!(
                "mode {idx} lies below the shift {}",
                shifted.mu
            )));
        }
        let mut phi = vec![T::zero(); n];
        for (qi, &c) in basis.iter().zip(&s) {
            axpy(c, qi, &mut phi);
        }
        // One inverse-iteration polish: resolves components pinned by large
        // diagonal penalties, which the Krylov combination carries only to
        // round-off relative to the whole vector.
        let mphi = m.matvec(&phi)?;
        shifted.factorization.solve_into(&mphi, &mut phi);
        let phi = m_normalize(&phi, m)?;
        let kphi = k.matvec(&phi)?;
        let mphi = m.matvec(&phi)?;
        let lambda = dot(&phi, &kphi) / dot(&phi, &mphi);
        let pair = EigenPair {
            index: idx,
            lambda,
            phi,
        };
        let res = pair.residual(k, m)?;
        if !(res <= T::of(RESIDUAL_TOLERANCE).max(T::epsilon().sqrt() * T::of(10.0))) {
            return Err(Error::EigenNoConvergence(format!(
                "mode {idx} residual {res:.3e} above tolerance"
            )));
        }
        pairs.push(pair);
    }
    Ok(pairs)
}

/// A random unit-`M`-norm vector orthogonal to the current basis, or `None`
/// when the basis already spans the space numerically.
fn fresh_direction<T: Scalar>(
    m: &SymSparseMatrix<T>,
    basis: &[Vec<T>],
    m_basis: &[Vec<T>],
    rng: &mut ChaCha8Rng,
) -> Option<Vec<T>> {
    let n = m.order();
    for _ in 0..4 {
        let mut v: Vec<T> = (0..n).map(|_| T::of(rng.gen_range(-1.0..1.0))).collect();
        let before = max_abs(&v);
        for _ in 0..2 {
            for (qi, mqi) in basis.iter().zip(m_basis) {
                let c = dot(mqi, &v);
                axpy(-c, qi, &mut v);
            }
        }
        if max_abs(&v) <= T::of(1e-8) * before {
            continue;
        }
        let mv = m.matvec(&v).ok()?;
        let nrm = dot(&v, &mv);
        if nrm > T::zero() {
            let s = T::one() / nrm.sqrt();
            return Some(v.iter().map(|&x| x * s).collect());
        }
    }
    None
}

/// Eigen-decomposition of the symmetric tridiagonal matrix with diagonal
/// `diag` and off-diagonal `off` (`off.len() == diag.len() - 1`) by implicit
/// QL. Returns eigenvalues and, for each, its eigenvector.
pub fn tridiagonal_eigen<T: Scalar>(diag: &[T], off: &[T]) -> Result<(Vec<T>, Vec<Vec<T>>)> {
    let n = diag.len();
    if n == 0 || off.len() + 1 != n {
        return Err(Error::DimensionMismatch {
            expected: n.saturating_sub(1),
            actual: off.len(),
        });
    }
    let mut d = diag.to_vec();
    let mut e: Vec<T> = off
        .iter()
        .copied()
        .chain(std::iter::once(T::zero()))
        .collect();
    // z[row][col], eigenvectors in columns
    let mut z = vec![vec![T::zero(); n]; n];
    for (i, row) in z.iter_mut().enumerate() {
        row[i] = T::one();
    }
    let two = T::of(2.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::EigenNoConvergence(
                    "tridiagonal QL exceeded 60 sweeps".into(),
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + if g >= T::zero() { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in z.iter_mut() {
                    let f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    let vectors = (0..n)
        .map(|c| z.iter().map(|row| row[c]).collect())
        .collect();
    Ok((d, vectors))
}
