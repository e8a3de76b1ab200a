use super::*;
use crate::characteristic::{Mac, Mf, Mse};
use crate::eigen::solve_modes;
use crate::sparse::LocalBlock;
use proptest::prelude::*;

struct Fixture {
    k: SymSparseMatrix<f64>,
    m: SymSparseMatrix<f64>,
    pairs: Vec<EigenPair<f64>>,
    shifted: ShiftedFactorization<f64>,
    derivs: Vec<ParamDerivatives<f64>>,
    design: Vec<f64>,
}

impl Fixture {
    fn new(
        k: SymSparseMatrix<f64>,
        m: SymSparseMatrix<f64>,
        derivs: Vec<ParamDerivatives<f64>>,
        modes: usize,
    ) -> Self {
        let (pairs, shifted) = solve_modes(&k, &m, modes, 0.0).unwrap();
        let design = vec![1.0; derivs.len()];
        Self {
            k,
            m,
            pairs,
            shifted,
            derivs,
            design,
        }
    }

    fn problem<'a>(
        &'a self,
        mode: usize,
        ch: &'a dyn Characteristic<f64>,
    ) -> SensitivityProblem<'a, f64> {
        SensitivityProblem {
            k: &self.k,
            m: &self.m,
            pair: &self.pairs[mode],
            shifted: &self.shifted,
            derivatives: &self.derivs,
            characteristic: ch,
            design: &self.design,
        }
    }
}

/// Two-spring chain with the ground spring `k₁` and the coupling spring
/// `k₂` as parameters.
fn chain() -> Fixture {
    let k = SymSparseMatrix::assemble(2, [(0, 0, 2.0), (0, 1, -1.0), (1, 1, 1.0)]).unwrap();
    let m = SymSparseMatrix::identity(2).unwrap();
    let zero = LocalBlock::zero();
    let derivs = vec![
        ParamDerivatives {
            k: 0,
            dk: LocalBlock::new(vec![0], vec![1.0]).unwrap(),
            dm: zero.clone(),
        },
        ParamDerivatives {
            k: 1,
            dk: LocalBlock::new(vec![0, 1], vec![1.0, -1.0, -1.0, 1.0]).unwrap(),
            dm: zero,
        },
    ];
    Fixture::new(k, m, derivs, 2)
}

fn sqmr() -> SqmrConfig<f64> {
    SqmrConfig {
        tolerance: 1e-12,
        ..SqmrConfig::default()
    }
}

#[test]
fn every_engine_reproduces_the_chain_mf_value() {
    let fx = chain();
    let p = fx.problem(0, &Mf);
    for engine in Engine::ALL {
        let r = engine.run(&p, &sqmr()).unwrap();
        assert!(
            (r.values[0] + 1.894427).abs() < 1e-6,
            "{engine}: {}",
            r.values[0]
        );
    }
}

#[test]
fn solve_counts_follow_the_method() {
    let fx = chain();
    let p = fx.problem(0, &Mf);
    for engine in Engine::ALL {
        let r = engine.run(&p, &sqmr()).unwrap();
        let expected = if engine.is_forward() { 2 } else { 1 };
        assert_eq!(r.linear_solves, expected, "{engine}");
        assert_eq!(r.factorizations, usize::from(engine != Engine::Proposed));
    }
}

struct LambdaOnly;

impl Characteristic<f64> for LambdaOnly {
    fn name(&self) -> &str {
        "lambda"
    }
    fn value(&self, _: &[f64], lambda: f64, _: &[f64]) -> crate::Result<f64> {
        Ok(lambda * lambda)
    }
    fn partial_p(&self, _: &[f64], _: usize, _: f64, _: &[f64]) -> crate::Result<f64> {
        Ok(0.0)
    }
    fn partial_lambda(&self, _: &[f64], lambda: f64, _: &[f64]) -> crate::Result<f64> {
        Ok(2.0 * lambda)
    }
    fn partial_phi(&self, _: &[f64], _: f64, phi: &[f64]) -> crate::Result<Vec<f64>> {
        Ok(vec![0.0; phi.len()])
    }
}

#[test]
fn eigenvalue_only_characteristic_collapses_to_the_chain_rule() {
    let fx = chain();
    let p = fx.problem(1, &LambdaOnly);
    let pair = &fx.pairs[1];
    for engine in Engine::ALL {
        let r = engine.run(&p, &sqmr()).unwrap();
        for (k, pd) in fx.derivs.iter().enumerate() {
            let want = 2.0 * pair.lambda * crate::modal::eigenvalue_derivative(pair, pd);
            assert!((r.values[k] - want).abs() < 1e-12, "{engine}");
        }
    }
    let pm = pm_sensitivity(&p, &sqmr()).unwrap();
    assert_eq!(pm.krylov_iterations, Some(0));
}

#[test]
fn no_dependence_gives_zero() {
    let mut fx = chain();
    for d in &mut fx.derivs {
        d.dk = LocalBlock::zero();
    }
    let mac = Mac::new(vec![1.0, 0.2]).unwrap();
    let p = fx.problem(0, &mac);
    for engine in Engine::ALL {
        let r = engine.run(&p, &sqmr()).unwrap();
        assert!(r.values.iter().all(|v| v.abs() < 1e-14), "{engine}");
    }
}

#[test]
fn adjoint_state_identities() {
    let fx = chain();
    let mac = Mac::new(vec![1.0, 0.0]).unwrap();
    let p = fx.problem(0, &mac);
    let pair = p.pair;
    let dfdphi = p.dfdphi().unwrap();
    let dfdl = p.dfdlambda().unwrap();
    let ne = crate::modal::NelsonSystem::new(p.k, p.m, pair).unwrap();
    let bo = crate::modal::BorderedSystem::new(p.k, p.m, pair).unwrap();
    for state in [
        AdjointState::nelson(&ne, &pair.phi, &dfdphi, dfdl).unwrap(),
        AdjointState::bordered(&bo, &dfdphi, dfdl).unwrap(),
    ] {
        assert!((state.alpha + crate::scalar::dot(&pair.phi, &dfdphi)).abs() < 1e-10);
        assert!((p.m.bilinear(&pair.phi, &state.v) - dfdl).abs() < 1e-8);
        let kv = p.k.matvec(&state.v).unwrap();
        let mv = p.m.matvec(&state.v).unwrap();
        let mphi = p.m.matvec(&pair.phi).unwrap();
        for i in 0..2 {
            let r = kv[i] - pair.lambda * mv[i] + dfdphi[i] + state.alpha * mphi[i];
            assert!(r.abs() < 1e-8);
        }
    }
}

#[test]
fn pm_matches_dense_g_solve_on_the_chain() {
    let fx = chain();
    let pair = &fx.pairs[0];
    let g = GOperator::new(&fx.k, &fx.m, pair).unwrap();
    let rhs = Characteristic::<f64>::partial_phi(&Mf, &[], pair.lambda, &pair.phi).unwrap();
    let out = g.solve(&fx.shifted, &rhs, &SqmrConfig::default()).unwrap();
    let (a, b, c) = {
        let col0 = g.apply(&[1.0, 0.0]).unwrap();
        let col1 = g.apply(&[0.0, 1.0]).unwrap();
        (col0[0], col0[1], col1[1])
    };
    let det = a * c - b * b;
    assert!(det.abs() > 1e-3);
    let dense = [
        (c * rhs[0] - b * rhs[1]) / det,
        (a * rhs[1] - b * rhs[0]) / det,
    ];
    for i in 0..2 {
        assert!((out.solution[i] - dense[i]).abs() < 1e-6);
    }
}

#[test]
fn g_diagnostic_on_diagonal_problem() {
    let k = SymSparseMatrix::from_diagonal(&[1.0, 4.0]).unwrap();
    let m = SymSparseMatrix::identity(2).unwrap();
    let fx = Fixture::new(k, m, vec![], 2);
    let p = fx.problem(0, &Mf);
    let g = GOperator::new(&fx.k, &fx.m, p.pair).unwrap();
    let mut phi_g_phi = [[0.0; 2]; 2];
    for i in 0..2 {
        let gphi = g.apply(&fx.pairs[i].phi).unwrap();
        for j in 0..2 {
            phi_g_phi[j][i] = crate::scalar::dot(&fx.pairs[j].phi, &gphi);
        }
    }
    assert_eq!(phi_g_phi, [[1.0, 0.0], [0.0, 3.0]]);
    let diag = assert_g_nonsingular(&p, &[4.0], &SqmrConfig::default()).unwrap();
    assert_eq!(diag.spectral_gap, Some(3.0));
}

#[test]
fn g_diagnostic_flags_repeated_eigenvalues() {
    let i = SymSparseMatrix::<f64>::identity(3).unwrap();
    let pair = EigenPair {
        index: 0,
        lambda: 1.0,
        phi: vec![1.0, 0.0, 0.0],
    };
    let shifted = ShiftedFactorization::new(&i, &i, 0.0).unwrap();
    let derivs: Vec<ParamDerivatives<f64>> = vec![];
    let p = SensitivityProblem {
        k: &i,
        m: &i,
        pair: &pair,
        shifted: &shifted,
        derivatives: &derivs,
        characteristic: &Mf,
        design: &[],
    };
    assert!(assert_g_nonsingular(&p, &[1.0, 1.0], &SqmrConfig::default()).is_err());
}

#[test]
fn engine_names_round_trip() {
    for e in Engine::ALL {
        assert_eq!(e.name().parse::<Engine>().unwrap(), e);
    }
    assert!("nelson".parse::<Engine>().is_err());
}

/// Random banded SPD stiffness, diagonal-dominant mass, local parameters.
fn random_fixture(n: usize, q: usize, seed: u64) -> Fixture {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let k = crate::sparse::ldlt_tests::random_spd(n, seed);
    let mut mt = Vec::new();
    for i in 0..n {
        mt.push((i, i, rng.gen_range(1.0..2.0)));
        if i + 1 < n {
            mt.push((i, i + 1, rng.gen_range(-0.2..0.2)));
        }
    }
    let m = SymSparseMatrix::assemble(n, mt).unwrap();
    let derivs = (0..q)
        .map(|k| {
            let a = rng.gen_range(0..n - 1);
            let s: f64 = rng.gen_range(0.2..1.0);
            let t: f64 = rng.gen_range(0.05..0.3);
            ParamDerivatives {
                k,
                dk: LocalBlock::new(vec![a, a + 1], vec![s, -s, -s, s]).unwrap(),
                dm: LocalBlock::new(vec![a, a + 1], vec![2.0 * t, t, t, 2.0 * t]).unwrap(),
            }
        })
        .collect();
    Fixture::new(k, m, derivs, 3)
}

fn relative_linf(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn five_engines_agree(n in 8usize..60, q in 1usize..12, seed in 0u64..5000, mode in 0usize..3) {
        let fx = random_fixture(n, q, seed);
        prop_assume!(fx.pairs.windows(2).all(|w| w[1].lambda - w[0].lambda > 1e-3 * w[1].lambda));
        let mut reference = vec![1.0; n];
        reference[0] = -0.5;
        let mac = Mac::new(reference).unwrap();
        let mse = Mse::new(0, fx.derivs[0].dk.clone());
        let chars: [&dyn Characteristic<f64>; 3] = [&mac, &mse, &Mf];
        for ch in chars {
            let p = fx.problem(mode, ch);
            let base = forward_nelson(&p).unwrap().values;
            for engine in Engine::ALL {
                let r = engine.run(&p, &sqmr()).unwrap();
                let tol = if engine == Engine::Proposed { 1e-6 } else { 1e-8 };
                prop_assert!(relative_linf(&r.values, &base) <= tol, "{} {}", engine, ch.name());
            }
        }
    }
}
