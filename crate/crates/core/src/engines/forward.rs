//! Forward-mode engines: one eigenvector derivative per parameter, then the
//! chain rule.

use super::{Engine, SensitivityProblem, SensitivityReport, Stopwatch};
use crate::error::Result;
use crate::modal::{eigenvalue_derivative, BorderedSystem, NelsonSystem};
use crate::scalar::{dot, Scalar};

/// Nelson's method per parameter; `q` solves against one factorized `Ā`.
pub fn forward_nelson<T: Scalar>(
    problem: &SensitivityProblem<'_, T>,
) -> Result<SensitivityReport<T>> {
    problem.validate()?;
    let clock = Stopwatch::start();
    let system = NelsonSystem::new(problem.k, problem.m, problem.pair)?;
    let setup_time = clock.elapsed();
    let dfdphi = problem.dfdphi()?;
    let dfdlambda = problem.dfdlambda()?;
    let pair = problem.pair;
    let values = problem.per_parameter(|_, pd| {
        let dl = eigenvalue_derivative(pair, pd);
        let dphi = system.eigvec_derivative(pair, pd, dl)?;
        Ok(dfdlambda * dl + dot(&dfdphi, &dphi))
    })?;
    Ok(SensitivityReport {
        engine: Engine::ForwardNelson,
        values,
        linear_solves: system.solves(),
        factorizations: 1,
        krylov_iterations: None,
        setup_time,
        total_time: clock.elapsed(),
    })
}

/// Bordered algebraic system per parameter; `q` solves against one
/// factorized bordered matrix.
pub fn forward_algebraic<T: Scalar>(
    problem: &SensitivityProblem<'_, T>,
) -> Result<SensitivityReport<T>> {
    problem.validate()?;
    let clock = Stopwatch::start();
    let system = BorderedSystem::new(problem.k, problem.m, problem.pair)?;
    let setup_time = clock.elapsed();
    let dfdphi = problem.dfdphi()?;
    let dfdlambda = problem.dfdlambda()?;
    let pair = problem.pair;
    let values = problem.per_parameter(|_, pd| {
        let d = system.mode_derivative(pair, pd)?;
        Ok(dfdlambda * d.dlambda + dot(&dfdphi, &d.dphi))
    })?;
    Ok(SensitivityReport {
        engine: Engine::ForwardAlgebraic,
        values,
        linear_solves: system.solves(),
        factorizations: 1,
        krylov_iterations: None,
        setup_time,
        total_time: clock.elapsed(),
    })
}
