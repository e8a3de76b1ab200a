//! Adjoint-mode engines: one solve for `(v, α)`, then a cheap accumulation
//! over parameters.

use super::{Engine, SensitivityProblem, SensitivityReport, Stopwatch};
use crate::error::Result;
use crate::modal::{BorderedSystem, NelsonSystem};
use crate::scalar::{dot, Scalar};

/// Adjoint vector `v` and multiplier `α`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointState<T> {
    pub v: Vec<T>,
    pub alpha: T,
}

impl<T: Scalar> AdjointState<T> {
    /// Nelson-style adjoint: `α = −φᵀ∂𝓕/∂φ`, particular solution from the
    /// pinned matrix, then the `φ` component fixed by `φᵀMv = ∂𝓕/∂λ`.
    pub fn nelson(system: &NelsonSystem<T>, phi: &[T], dfdphi: &[T], dfdlambda: T) -> Result<Self> {
        let alpha = -dot(phi, dfdphi);
        let f: Vec<T> = dfdphi
            .iter()
            .zip(system.m_phi())
            .map(|(&g, &mp)| -(g + alpha * mp))
            .collect();
        let mut v = system.solve(&f)?;
        let c = dfdlambda - dot(system.m_phi(), &v);
        for (vi, &p) in v.iter_mut().zip(phi) {
            *vi += c * p;
        }
        Ok(Self { v, alpha })
    }

    /// Bordered adjoint: `[[K−λM, Mφ], [φᵀM, 0]] (v, α) = (−∂𝓕/∂φ, ∂𝓕/∂λ)`.
    pub fn bordered(system: &BorderedSystem<T>, dfdphi: &[T], dfdlambda: T) -> Result<Self> {
        let top: Vec<T> = dfdphi.iter().map(|&g| -g).collect();
        let (v, alpha) = system.solve(&top, dfdlambda)?;
        Ok(Self { v, alpha })
    }
}

fn accumulate<T: Scalar>(
    problem: &SensitivityProblem<'_, T>,
    state: &AdjointState<T>,
) -> Result<Vec<T>> {
    let (lambda, phi) = (problem.pair.lambda, &problem.pair.phi);
    let half_alpha = T::of(0.5) * state.alpha;
    problem.per_parameter(|_, pd| {
        Ok(pd.shifted_bilinear(lambda, &state.v, phi) + half_alpha * pd.dm.quad(phi))
    })
}

/// One Nelson-pinned adjoint solve.
pub fn adjoint_nelson<T: Scalar>(
    problem: &SensitivityProblem<'_, T>,
) -> Result<SensitivityReport<T>> {
    problem.validate()?;
    let clock = Stopwatch::start();
    let system = NelsonSystem::new(problem.k, problem.m, problem.pair)?;
    let setup_time = clock.elapsed();
    let state = AdjointState::nelson(
        &system,
        &problem.pair.phi,
        &problem.dfdphi()?,
        problem.dfdlambda()?,
    )?;
    let values = accumulate(problem, &state)?;
    Ok(SensitivityReport {
        engine: Engine::AdjointNelson,
        values,
        linear_solves: system.solves(),
        factorizations: 1,
        krylov_iterations: None,
        setup_time,
        total_time: clock.elapsed(),
    })
}

/// One bordered adjoint solve.
pub fn adjoint_algebraic<T: Scalar>(
    problem: &SensitivityProblem<'_, T>,
) -> Result<SensitivityReport<T>> {
    problem.validate()?;
    let clock = Stopwatch::start();
    let system = BorderedSystem::new(problem.k, problem.m, problem.pair)?;
    let setup_time = clock.elapsed();
    let state = AdjointState::bordered(&system, &problem.dfdphi()?, problem.dfdlambda()?)?;
    let values = accumulate(problem, &state)?;
    Ok(SensitivityReport {
        engine: Engine::AdjointAlgebraic,
        values,
        linear_solves: system.solves(),
        factorizations: 1,
        krylov_iterations: None,
        setup_time,
        total_time: clock.elapsed(),
    })
}
