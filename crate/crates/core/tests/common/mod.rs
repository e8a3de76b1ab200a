#![allow(dead_code)]

use modal_sens_core::characteristic::Characteristic;
use modal_sens_core::eigen::{solve_modes, EigenPair, ShiftedFactorization};
use modal_sens_core::engines::SensitivityProblem;
use modal_sens_core::modal::ParamDerivatives;
use modal_sens_core::sparse::{LocalBlock, SymSparseMatrix};
use modal_sens_core::Result;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Fixture {
    pub k: SymSparseMatrix<f64>,
    pub m: SymSparseMatrix<f64>,
    pub pairs: Vec<EigenPair<f64>>,
    pub shifted: ShiftedFactorization<f64>,
    pub derivs: Vec<ParamDerivatives<f64>>,
    pub design: Vec<f64>,
}

impl Fixture {
    pub fn new(
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

    pub fn problem<'a>(
        &'a self,
        mode: usize,
        characteristic: &'a dyn Characteristic<f64>,
    ) -> SensitivityProblem<'a, f64> {
        SensitivityProblem {
            k: &self.k,
            m: &self.m,
            pair: &self.pairs[mode],
            shifted: &self.shifted,
            derivatives: &self.derivs,
            characteristic,
            design: &self.design,
        }
    }
}

/// Two unit masses on springs `k₁` (to ground) and `k₂` (between them), both
/// equal to one.
pub fn chain() -> Fixture {
    let k = SymSparseMatrix::assemble(2, [(0, 0, 2.0), (0, 1, -1.0), (1, 1, 1.0)]).unwrap();
    let m = SymSparseMatrix::identity(2).unwrap();
    let derivs = vec![
        ParamDerivatives {
            k: 0,
            dk: LocalBlock::new(vec![0], vec![1.0]).unwrap(),
            dm: LocalBlock::zero(),
        },
        ParamDerivatives {
            k: 1,
            dk: LocalBlock::new(vec![0, 1], vec![1.0, -1.0, -1.0, 1.0]).unwrap(),
            dm: LocalBlock::zero(),
        },
    ];
    Fixture::new(k, m, derivs, 2)
}

/// `𝓕 = λ`, so every engine returns `dλ/dp`.
pub struct Eigenvalue;

impl Characteristic<f64> for Eigenvalue {
    fn name(&self) -> &str {
        "eigenvalue"
    }
    fn value(&self, _: &[f64], lambda: f64, _: &[f64]) -> Result<f64> {
        Ok(lambda)
    }
    fn partial_p(&self, _: &[f64], _: usize, _: f64, _: &[f64]) -> Result<f64> {
        Ok(0.0)
    }
    fn partial_lambda(&self, _: &[f64], _: f64, _: &[f64]) -> Result<f64> {
        Ok(1.0)
    }
    fn partial_phi(&self, _: &[f64], _: f64, phi: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![0.0; phi.len()])
    }
}

/// Dense symmetric positive definite matrix with a controlled spectrum.
pub fn random_spd(n: usize, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let q = a.qr().q();
    let d = DVector::from_fn(n, |_, _| rng.gen_range(lo..hi));
    &q * DMatrix::from_diagonal(&d) * q.transpose()
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn to_sparse(a: &DMatrix<f64>) -> SymSparseMatrix<f64> {
    let n = a.nrows();
    let mut triplets = Vec::new();
    for i in 0..n {
        for j in i..n {
            if a[(i, j)] != 0.0 {
                triplets.push((i, j, a[(i, j)]));
            }
        }
    }
    SymSparseMatrix::assemble(n, triplets).unwrap()
}

pub fn to_dense(a: &SymSparseMatrix<f64>) -> DMatrix<f64> {
    let n = a.order();
    DMatrix::from_row_slice(n, n, &a.to_dense())
}

/// All eigenpairs of `Kφ = λMφ` by Cholesky reduction, ascending and
/// `M`-normalized. Columns of the returned matrix are the modes.
pub fn dense_modes(k: &DMatrix<f64>, m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let l = m.clone().cholesky().expect("M positive definite").l();
    let l_inv = l.clone().try_inverse().unwrap();
    let c = &l_inv * k * l_inv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..k.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let lambdas = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let y = DMatrix::from_fn(k.nrows(), k.nrows(), |r, c| eig.eigenvectors[(r, order[c])]);
    (lambdas, l_inv.transpose() * y)
}

/// `v` flipped so that its `M`-inner product with `reference` is positive.
pub fn aligned(v: &[f64], reference: &[f64], m: &SymSparseMatrix<f64>) -> Vec<f64> {
    if m.bilinear(reference, v) < 0.0 {
        v.iter().map(|x| -x).collect()
    } else {
        v.to_vec()
    }
}

pub fn linf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub fn relative_linf(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    linf(&diff) / linf(b).max(f64::MIN_POSITIVE)
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Sharpens an approximate eigenpair by inverse iteration on the full pencil
/// with a dense LU of `K − σM`, `σ = lambda`, and returns the Rayleigh
/// quotient with the `M`-normalized vector.
pub fn refine(
    k: &DMatrix<f64>,
    m: &DMatrix<f64>,
    lambda: f64,
    v: &DMatrix<f64>,
) -> (f64, DVector<f64>) {
    let lu = (k - m * lambda).lu();
    let mut x = DVector::from_iterator(v.nrows(), v.iter().copied());
    for _ in 0..4 {
        x = lu
            .solve(&(m * &x))
            .expect("shift is not an exact eigenvalue");
        let norm = (x.transpose() * m * &x)[(0, 0)].sqrt();
        x /= norm;
    }
    ((x.transpose() * k * &x)[(0, 0)], x)
}
