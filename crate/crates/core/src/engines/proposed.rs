//! Single-solve engine built on the rank-one corrected operator
//! `G = K − λM + MφφᵀM`, solved by SQMR preconditioned with the eigensolver's
//! `K − μM` factors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sqmr::{sqmr_solve, SqmrConfig, SqmrOutcome};
use super::{Engine, SensitivityProblem, SensitivityReport, Stopwatch};
use crate::eigen::{EigenPair, ShiftedFactorization};
use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};
use crate::sparse::SymSparseMatrix;

/// `G x = (K − λM)x + Mφ(φᵀMx)`, never assembled.
#[derive(Debug, Clone)]
pub struct GOperator<'a, T> {
    k: &'a SymSparseMatrix<T>,
    m: &'a SymSparseMatrix<T>,
    lambda: T,
    m_phi: Vec<T>,
}

impl<'a, T: Scalar> GOperator<'a, T> {
    pub fn new(
        k: &'a SymSparseMatrix<T>,
        m: &'a SymSparseMatrix<T>,
        pair: &EigenPair<T>,
    ) -> Result<Self> {
        Ok(Self {
            k,
            m,
            lambda: pair.lambda,
            m_phi: m.matvec(&pair.phi)?,
        })
    }

    pub fn order(&self) -> usize {
        self.k.order()
    }

    pub fn m_phi(&self) -> &[T] {
        &self.m_phi
    }

    pub fn apply_into(&self, x: &[T], out: &mut [T]) {
        self.k.matvec_into(x, out);
        let mut mx = vec![T::zero(); x.len()];
        self.m.matvec_into(x, &mut mx);
        let s = dot(&self.m_phi, x);
        for i in 0..out.len() {
            out[i] += s * self.m_phi[i] - self.lambda * mx[i];
        }
    }

    pub fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.order() {
            return Err(Error::DimensionMismatch {
                expected: self.order(),
                actual: x.len(),
            });
        }
        let mut out = vec![T::zero(); x.len()];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    /// Solves `G u = rhs` by SQMR preconditioned with `shifted`.
    pub fn solve(
        &self,
        shifted: &ShiftedFactorization<T>,
        rhs: &[T],
        cfg: &SqmrConfig<T>,
    ) -> Result<SqmrOutcome<T>> {
        if rhs.len() != self.order() || shifted.factorization.order() != self.order() {
            return Err(Error::DimensionMismatch {
                expected: self.order(),
                actual: rhs.len(),
            });
        }
        sqmr_solve(
            |x, out| self.apply_into(x, out),
            |r, out| shifted.factorization.solve_into(r, out),
            rhs,
            cfg,
        )
    }
}

/// Solution of `G y = ∂𝓕/∂φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PmState<T> {
    pub y: Vec<T>,
    pub iterations: usize,
    pub relative_residual: T,
}

/// One SQMR solve, then per parameter
/// `∂𝓕/∂p_k + β ∂𝓕/∂λ + yᵀ(−∂K + β M + λ∂M)φ − ½(yᵀMφ)(φᵀ∂Mφ)` with
/// `β = ∂λ/∂p_k`.
pub fn pm_sensitivity<T: Scalar>(
    problem: &SensitivityProblem<'_, T>,
    cfg: &SqmrConfig<T>,
) -> Result<SensitivityReport<T>> {
    problem.validate()?;
    let clock = Stopwatch::start();
    let g = GOperator::new(problem.k, problem.m, problem.pair)?;
    let setup_time = clock.elapsed();
    let dfdphi = problem.dfdphi()?;
    let dfdlambda = problem.dfdlambda()?;
    let out = g.solve(problem.shifted, &dfdphi, cfg)?;
    let state = PmState {
        y: out.solution,
        iterations: out.iterations,
        relative_residual: out.relative_residual,
    };
    let (lambda, phi) = (problem.pair.lambda, &problem.pair.phi);
    let y = &state.y;
    let y_m_phi = dot(y, g.m_phi());
    let half = T::of(0.5);
    let values = problem.per_parameter(|_, pd| {
        let beta = pd.shifted_quad(lambda, phi);
        let alpha = -pd.dk.bilinear(y, phi) + beta * y_m_phi + lambda * pd.dm.bilinear(y, phi)
            - half * y_m_phi * pd.dm.quad(phi);
        Ok(beta * dfdlambda + alpha)
    })?;
    Ok(SensitivityReport {
        engine: Engine::Proposed,
        values,
        linear_solves: 1,
        factorizations: 0,
        krylov_iterations: Some(state.iterations),
        setup_time,
        total_time: clock.elapsed(),
    })
}

/// Outcome of a nonsingularity probe of `G`.
#[derive(Debug, Clone, PartialEq)]
pub struct GDiagnostic<T> {
    pub relative_residual: T,
    pub iterations: usize,
    /// `min_{j≠i} |λⱼ − λᵢ|` over the supplied neighbouring eigenvalues.
    pub spectral_gap: Option<T>,
}

/// Solves `G x = b` for a fixed pseudo-random `b` and checks the residual.
/// Failure to converge is reported as a suspected near-singularity.
pub fn assert_g_nonsingular<T: Scalar>(
    problem: &SensitivityProblem<'_, T>,
    other_eigenvalues: &[T],
    cfg: &SqmrConfig<T>,
) -> Result<GDiagnostic<T>> {
    problem.validate()?;
    let g = GOperator::new(problem.k, problem.m, problem.pair)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x0067_6170);
    let b: Vec<T> = (0..g.order())
        .map(|_| T::of(rng.gen_range(-1.0..1.0)))
        .collect();
    let lambda = problem.pair.lambda;
    let spectral_gap = other_eigenvalues
        .iter()
        .map(|&l| (l - lambda).abs())
        .fold(None, |acc: Option<T>, d| Some(acc.map_or(d, |a| a.min(d))));
    let near_singular = |detail: String| {
        Error::InvalidArgument(format!(
            "G suspected near-singular for mode {}: {detail}",
            problem.pair.index
        ))
    };
    let out = g
        .solve(problem.shifted, &b, cfg)
        .map_err(|e| near_singular(e.to_string()))?;
    if !(out.relative_residual <= cfg.tolerance) {
        return Err(near_singular(format!(
            "relative residual {:.3e}",
            out.relative_residual
        )));
    }
    Ok(GDiagnostic {
        relative_residual: out.relative_residual,
        iterations: out.iterations,
        spectral_gap,
    })
}
