//! Preconditioned symmetric quasi-minimal residual (SQMR) iteration for
//! symmetric, possibly indefinite systems.

use crate::error::{Error, Result};
use crate::scalar::{axpy, dot, norm2, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct SqmrConfig<T> {
    /// Relative tolerance `ε`, applied to both the true residual and the
    /// iterate change.
    pub tolerance: T,
    pub max_iterations: usize,
    /// Starting guess `u₀`; zero when `None`.
    pub initial_guess: Option<Vec<T>>,
}

impl<T: Scalar> Default for SqmrConfig<T> {
    fn default() -> Self {
        Self {
            tolerance: T::of(1e-5),
            max_iterations: 500,
            initial_guess: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqmrOutcome<T> {
    pub solution: Vec<T>,
    pub iterations: usize,
    /// `‖b − Gu‖ / ‖b‖` at exit.
    pub relative_residual: T,
}

/// Solves `G u = rhs` with `apply(x, out)` computing `out = G x` and
/// `precondition(r, out)` computing `out = P⁻¹ r`.
///
/// Converges when the true relative residual is at most `ε` and either the
/// last update is small relative to `u` or the quasi-residual estimate has
/// dropped by `ε`.
pub fn sqmr_solve<T, A, P>(
    apply: A,
    precondition: P,
    rhs: &[T],
    cfg: &SqmrConfig<T>,
) -> Result<SqmrOutcome<T>>
where
    T: Scalar,
    A: Fn(&[T], &mut [T]),
    P: Fn(&[T], &mut [T]),
{
    let n = rhs.len();
    let b_norm = norm2(rhs);
    if b_norm == T::zero() {
        return Ok(SqmrOutcome {
            solution: vec![T::zero(); n],
            iterations: 0,
            relative_residual: T::zero(),
        });
    }
    let eps = cfg.tolerance;
    let mut u = match &cfg.initial_guess {
        Some(g) if g.len() != n => {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: g.len(),
            })
        }
        Some(g) => g.clone(),
        None => vec![T::zero(); n],
    };

    let mut t = vec![T::zero(); n];
    let mut r = rhs.to_vec();
    if cfg.initial_guess.is_some() {
        apply(&u, &mut t);
        axpy(-T::one(), &t, &mut r);
    }
    let true_residual = |u: &[T], scratch: &mut [T]| {
        apply(u, scratch);
        let s: T = scratch
            .iter()
            .zip(rhs)
            .map(|(&g, &b)| (b - g) * (b - g))
            .sum();
        s.sqrt() / b_norm
    };
    let initial = norm2(&r) / b_norm;
    if initial <= eps {
        return Ok(SqmrOutcome {
            solution: u,
            iterations: 0,
            relative_residual: initial,
        });
    }

    precondition(&r, &mut t);
    let mut tau = norm2(&t);
    let tau0 = tau;
    let mut q = t.clone();
    let mut theta_prev = T::zero();
    let mut d = vec![T::zero(); n];
    let mut rho = dot(&r, &q);
    let mut scratch = vec![T::zero(); n];
    let mut residual = initial;

    for iteration in 1..=cfg.max_iterations {
        apply(&q, &mut t);
        let sigma = dot(&q, &t);
        if sigma == T::zero() || !sigma.is_finite() {
            return Err(Error::SqmrBreakdown {
                kind: "sigma",
                iteration,
                residual: residual.to_f64_lossy(),
            });
        }
        let alpha = rho / sigma;
        axpy(-alpha, &t, &mut r);

        precondition(&r, &mut t);
        let theta = norm2(&t) / tau;
        let c = T::one() / (T::one() + theta * theta).sqrt();
        tau = tau * theta * c;
        let c2 = c * c;
        let keep = c2 * theta_prev * theta_prev;
        for (di, &qi) in d.iter_mut().zip(&q) {
            *di = keep * *di + c2 * alpha * qi;
        }
        axpy(T::one(), &d, &mut u);
        theta_prev = theta;

        let small_step = norm2(&d) <= eps * norm2(&u);
        if small_step || tau <= eps * tau0 {
            residual = true_residual(&u, &mut scratch);
            if residual <= eps {
                return Ok(SqmrOutcome {
                    solution: u,
                    iterations: iteration,
                    relative_residual: residual,
                });
            }
        }

        let rho_next = dot(&r, &t);
        if rho == T::zero() || !rho_next.is_finite() {
            return Err(Error::SqmrBreakdown {
                kind: "rho",
                iteration,
                residual: residual.to_f64_lossy(),
            });
        }
        let beta = rho_next / rho;
        for (qi, &ti) in q.iter_mut().zip(&t) {
            *qi = ti + beta * *qi;
        }
        rho = rho_next;
    }
    Err(Error::SqmrNoConvergence {
        iterations: cfg.max_iterations,
        residual: true_residual(&u, &mut scratch).to_f64_lossy(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SymSparseMatrix;
    use proptest::prelude::*;

    fn identity(x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }

    #[test]
    fn identity_system_in_one_step() {
        let b = [1.0, -2.0, 3.0];
        let out = sqmr_solve(identity, identity, &b, &SqmrConfig::default()).unwrap();
        assert_eq!(out.iterations, 1);
        for (u, b) in out.solution.iter().zip(&b) {
            assert!((u - b).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let out = sqmr_solve(identity, identity, &[0.0; 4], &SqmrConfig::default()).unwrap();
        assert_eq!(out.iterations, 0);
        assert!(out.solution.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn exhausted_budget_is_an_error() {
        let a = SymSparseMatrix::from_diagonal(&[1.0, 10.0, 100.0, 1000.0]).unwrap();
        let cfg = SqmrConfig {
            max_iterations: 1,
            ..SqmrConfig::default()
        };
        let res = sqmr_solve(|x, o| a.matvec_into(x, o), identity, &[1.0; 4], &cfg);
        assert!(matches!(res, Err(Error::SqmrNoConvergence { .. })));
    }

    #[test]
    fn initial_guess_at_the_solution_exits_immediately() {
        let a = SymSparseMatrix::from_diagonal(&[2.0, 4.0]).unwrap();
        let cfg = SqmrConfig {
            initial_guess: Some(vec![0.5, 0.25]),
            ..SqmrConfig::default()
        };
        let out = sqmr_solve(|x, o| a.matvec_into(x, o), identity, &[1.0, 1.0], &cfg).unwrap();
        assert_eq!(out.iterations, 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn recovers_manufactured_solution(n in 5usize..60, seed in 0u64..1000, shift in 0.0f64..0.5) {
            use rand::{Rng, SeedableRng};
            let a = crate::sparse::ldlt_tests::random_spd(n, seed);
            // indefinite operator: subtract a fraction of the mean diagonal
            let mean = a.diagonal().iter().sum::<f64>() / n as f64;
            let g = SymSparseMatrix::linear_combination(
                1.0, &a, -shift * mean, &SymSparseMatrix::identity(n).unwrap()
            ).unwrap();
            let f = crate::sparse::LdltFactorization::factorize(&g);
            prop_assume!(f.is_ok());
            let diag = a.diagonal();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed + 1);
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b = g.matvec(&w).unwrap();
            let cfg = SqmrConfig { tolerance: 1e-10, max_iterations: 10 * n, initial_guess: None };
            let out = sqmr_solve(
                |x, o| g.matvec_into(x, o),
                |r, o| for i in 0..n { o[i] = r[i] / diag[i] },
                &b,
                &cfg,
            );
            let out = match out {
                Ok(o) => o,
                Err(Error::SqmrBreakdown { .. }) => return Ok(()),
                Err(e) => panic!("{e}"),
            };
            prop_assert!(out.relative_residual <= 1e-10);
        }
    }
}
