//! End-to-end computation of `d𝓕/dp` over every design parameter.
//!
//! Each engine returns a [`SensitivityReport`] carrying the sensitivity
//! vector plus instrumentation: how many large linear solves and
//! factorizations it performed, and how long it took.

mod adjoint;
mod forward;
mod proposed;
mod sqmr;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;

pub use adjoint::{adjoint_algebraic, adjoint_nelson, AdjointState};
pub use forward::{forward_algebraic, forward_nelson};
pub use proposed::{assert_g_nonsingular, pm_sensitivity, GDiagnostic, GOperator, PmState};
pub use sqmr::{sqmr_solve, SqmrConfig, SqmrOutcome};

use crate::characteristic::Characteristic;
use crate::eigen::{EigenPair, ShiftedFactorization};
use crate::error::{Error, Result};
use crate::modal::{DerivativeProvider, ParamDerivatives};
use crate::scalar::Scalar;
use crate::sparse::SymSparseMatrix;

/// Everything an engine needs for one mode and one characteristic.
#[derive(Clone, Copy)]
pub struct SensitivityProblem<'a, T: Scalar> {
    pub k: &'a SymSparseMatrix<T>,
    pub m: &'a SymSparseMatrix<T>,
    pub pair: &'a EigenPair<T>,
    /// Factors of `K − μM` left over from the eigensolve.
    pub shifted: &'a ShiftedFactorization<T>,
    pub derivatives: &'a dyn DerivativeProvider<T>,
    pub characteristic: &'a dyn Characteristic<T>,
    /// Current design point `p`.
    pub design: &'a [T],
}

impl<'a, T: Scalar> SensitivityProblem<'a, T> {
    pub fn parameter_count(&self) -> usize {
        self.derivatives.parameter_count()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.k.order();
        for actual in [
            self.m.order(),
            self.pair.phi.len(),
            self.shifted.factorization.order(),
        ] {
            if actual != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual,
                });
            }
        }
        Ok(())
    }

    fn dfdphi(&self) -> Result<Vec<T>> {
        self.characteristic
            .partial_phi(self.design, self.pair.lambda, &self.pair.phi)
    }

    fn dfdlambda(&self) -> Result<T> {
        self.characteristic
            .partial_lambda(self.design, self.pair.lambda, &self.pair.phi)
    }

    fn dfdp(&self, k: usize) -> Result<T> {
        self.characteristic
            .partial_p(self.design, k, self.pair.lambda, &self.pair.phi)
    }

    /// Runs `term(k, derivatives_k)` for every parameter in parallel and
    /// collects the results in parameter order.
    fn per_parameter<F>(&self, term: F) -> Result<Vec<T>>
    where
        F: Fn(usize, &ParamDerivatives<T>) -> Result<T> + Sync,
    {
        (0..self.parameter_count())
            .into_par_iter()
            .map(|k| {
                let pd = self.derivatives.derivatives(k)?;
                Ok(self.dfdp(k)? + term(k, &pd)?)
            })
            .collect()
    }
}

/// Selects one of the five sensitivity methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Engine {
    ForwardNelson,
    ForwardAlgebraic,
    AdjointNelson,
    AdjointAlgebraic,
    Proposed,
}

impl Engine {
    pub const ALL: [Engine; 5] = [
        Engine::ForwardNelson,
        Engine::ForwardAlgebraic,
        Engine::AdjointNelson,
        Engine::AdjointAlgebraic,
        Engine::Proposed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Engine::ForwardNelson => "fn",
            Engine::ForwardAlgebraic => "fa",
            Engine::AdjointNelson => "adne",
            Engine::AdjointAlgebraic => "adam",
            Engine::Proposed => "pm",
        }
    }

    /// Whether the number of large solves grows with the parameter count.
    pub fn is_forward(self) -> bool {
        matches!(self, Engine::ForwardNelson | Engine::ForwardAlgebraic)
    }

    pub fn run<T: Scalar>(
        self,
        problem: &SensitivityProblem<'_, T>,
        sqmr: &SqmrConfig<T>,
    ) -> Result<SensitivityReport<T>> {
        match self {
            Engine::ForwardNelson => forward_nelson(problem),
            Engine::ForwardAlgebraic => forward_algebraic(problem),
            Engine::AdjointNelson => adjoint_nelson(problem),
            Engine::AdjointAlgebraic => adjoint_algebraic(problem),
            Engine::Proposed => pm_sensitivity(problem, sqmr),
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Engine::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown engine {s:?} (expected one of fn, fa, adne, adam, pm)"
                ))
            })
    }
}

/// Sensitivity vector and instrumentation from one engine run.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport<T> {
    pub engine: Engine,
    /// `d𝓕/dp_k` for every parameter `k`.
    pub values: Vec<T>,
    /// Large linear solves (direct or Krylov) against an `N`-sized operator.
    pub linear_solves: usize,
    /// Sparse factorizations performed inside the engine.
    pub factorizations: usize,
    /// SQMR iterations, for the engine that uses them.
    pub krylov_iterations: Option<usize>,
    /// Time spent building and factorizing the engine's own matrix.
    pub setup_time: Duration,
    pub total_time: Duration,
}

impl<T: Scalar> SensitivityReport<T> {
    /// Signed entry of largest magnitude and its index. Entries within a
    /// relative `1e-6` of the maximum count as tied (mirror-symmetric
    /// elements) and the smallest index wins, so engines report the same
    /// index despite round-off.
    pub fn linf(&self) -> Option<(T, usize)> {
        let max = self.values.iter().fold(None, |m: Option<T>, v| {
            Some(m.map_or(v.abs(), |m| m.max(v.abs())))
        })?;
        let floor = max * (T::one() - T::of(1e-6));
        let i = self.values.iter().position(|v| v.abs() >= floor)?;
        Some((self.values[i], i))
    }
}

struct Stopwatch(Instant);

impl Stopwatch {
    fn start() -> Self {
        Self(Instant::now())
    }

    fn elapsed(&self) -> Duration {
        self.0.elapsed()
    }
}

#[cfg(test)]
mod tests;
