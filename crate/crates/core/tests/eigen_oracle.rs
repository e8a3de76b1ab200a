mod common;

use common::*;
use modal_sens_core::eigen::{solve_modes, ShiftedFactorization};
use modal_sens_core::fe::{DesignVector, Material, PlateModel};

fn compare(
    k: &modal_sens_core::SymSparseMatrix64,
    m: &modal_sens_core::SymSparseMatrix64,
    modes: usize,
) {
    let (kd, md) = (to_dense(k), to_dense(m));
    let (lambdas, vectors) = dense_modes(&kd, &md);
    let (pairs, _) = solve_modes(k, m, modes, 0.0).unwrap();
    for pair in &pairs {
        let i = pair.index;
        let (want, oracle) = refine(&kd, &md, lambdas[i], &vectors.columns(i, 1).into_owned());
        assert!(
            (pair.lambda - want).abs() <= 1e-8 * want.abs(),
            "mode {i}: {} vs {want}",
            pair.lambda
        );
        let oracle: Vec<f64> = oracle.iter().copied().collect();
        let phi = aligned(&pair.phi, &oracle, m);
        assert!(relative_linf(&phi, &oracle) <= 1e-6, "mode {i} shape");
        assert!(pair.residual(k, m).unwrap() <= 1e-8);
    }
    for a in &pairs {
        for b in &pairs {
            let want = if a.index == b.index { 1.0 } else { 0.0 };
            assert!((m.bilinear(&a.phi, &b.phi) - want).abs() <= 1e-8);
        }
    }
}

#[test]
fn random_dense_problems_match_cholesky_reduction() {
    for (case, n) in [6usize, 40, 120].into_iter().enumerate() {
        let mut rng = seeded(case as u64);
        let k = to_sparse(&random_spd(n, &mut rng, 1.0, 1000.0));
        let m = to_sparse(&random_spd(n, &mut rng, 0.5, 2.0));
        compare(&k, &m, n.min(8));
    }
}

#[test]
fn plate_modes_match_dense_solution() {
    for (nx, ny) in [(4, 2), (10, 6), (15, 10)] {
        let model = PlateModel::build(nx, ny, Material::steel()).unwrap();
        assert!(model.num_dofs() <= 500);
        let (k, m) = model
            .assemble(&DesignVector::ones(model.num_elements()))
            .unwrap();
        compare(&k, &m, 6);
    }
}

#[test]
fn shifted_factors_solve_the_shifted_system() {
    let model = PlateModel::build(8, 4, Material::steel()).unwrap();
    let (k, m) = model
        .assemble(&DesignVector::ones(model.num_elements()))
        .unwrap();
    let (pairs, shifted) = solve_modes(&k, &m, 2, 0.0).unwrap();
    let x = shifted.solve(&pairs[1].phi).unwrap();
    let kx = k.matvec(&x).unwrap();
    assert!(relative_linf(&kx, &pairs[1].phi) < 1e-8);
    let mu = 0.5 * (pairs[0].lambda + pairs[1].lambda);
    let (near, _) = solve_modes(&k, &m, 1, mu).unwrap();
    assert!((near[0].lambda - pairs[1].lambda).abs() <= 1e-8 * pairs[1].lambda);
    assert!(ShiftedFactorization::new(&k, &m, mu).is_ok());
}
