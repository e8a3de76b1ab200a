//! Central-difference oracle and the comparison metrics.

use rayon::prelude::*;

use crate::characteristic::Characteristic;
use crate::eigen::{solve_modes, EigenPair};
use crate::error::{Error, Result};
use crate::fe::PlateModel;
use crate::scalar::Scalar;
use crate::sparse::SymSparseMatrix;

/// A structure whose `K` and `M` can be re-assembled at any design point.
pub trait ParametricModel<T: Scalar>: Sync {
    fn parameter_count(&self) -> usize;
    fn assemble(&self, p: &[T]) -> Result<(SymSparseMatrix<T>, SymSparseMatrix<T>)>;
}

impl<T: Scalar> ParametricModel<T> for PlateModel<T> {
    fn parameter_count(&self) -> usize {
        self.num_elements()
    }

    /// Densities slightly above 1 are accepted so that central differences
    /// can straddle the default design.
    fn assemble(&self, p: &[T]) -> Result<(SymSparseMatrix<T>, SymSparseMatrix<T>)> {
        self.assemble_with_densities(p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdConfig<T> {
    /// Relative step; the absolute step is `h · max(1, |p_k|)`.
    pub step: T,
}

impl<T: Scalar> Default for FdConfig<T> {
    fn default() -> Self {
        Self { step: T::of(1e-6) }
    }
}

/// Solves for the mode nearest `target` among the lowest `mode + 2` modes
/// and aligns its sign with `baseline` in the `M` inner product.
fn tracked_mode<T: Scalar>(
    k: &SymSparseMatrix<T>,
    m: &SymSparseMatrix<T>,
    baseline: &EigenPair<T>,
    parameter: usize,
) -> Result<EigenPair<T>> {
    let want = (baseline.index + 2).min(k.order());
    let (pairs, _) = solve_modes(k, m, want, T::zero())?;
    let nearest = pairs
        .iter()
        .enumerate()
        .min_by(|a, b| {
            let da = (a.1.lambda - baseline.lambda).abs();
            let db = (b.1.lambda - baseline.lambda).abs();
            da.partial_cmp(&db).unwrap()
        })
        .map(|(i, _)| i)
        .ok_or(Error::ZeroVector)?;
    if nearest != baseline.index {
        return Err(Error::ModeCrossing {
            parameter,
            expected: baseline.index,
            found: nearest,
        });
    }
    let mut pair = pairs.into_iter().nth(nearest).expect("index in range");
    if m.bilinear(&baseline.phi, &pair.phi) < T::zero() {
        pair.phi.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(pair)
}

/// Central-difference `d𝓕/dp` for mode `mode_index` (zero-based), re-solving
/// the eigenproblem at `p_k ± h` for every parameter.
pub fn fd_sensitivity<T: Scalar>(
    model: &dyn ParametricModel<T>,
    design: &[T],
    characteristic: &dyn Characteristic<T>,
    mode_index: usize,
    cfg: &FdConfig<T>,
) -> Result<Vec<T>> {
    if !(cfg.step > T::zero()) {
        return Err(Error::InvalidArgument(
            "finite-difference step must be positive".into(),
        ));
    }
    let q = model.parameter_count();
    if design.len() != q {
        return Err(Error::DimensionMismatch {
            expected: q,
            actual: design.len(),
        });
    }
    let (k0, m0) = model.assemble(design)?;
    let (pairs, _) = solve_modes(&k0, &m0, mode_index + 1, T::zero())?;
    let baseline = &pairs[mode_index];

    (0..q)
        .into_par_iter()
        .map(|k| {
            let h = cfg.step * design[k].abs().max(T::one());
            let eval = |sign: T| -> Result<T> {
                let mut p = design.to_vec();
                p[k] += sign * h;
                let (kk, mm) = model.assemble(&p)?;
                let pair = tracked_mode(&kk, &mm, baseline, k)?;
                characteristic.value(&p, pair.lambda, &pair.phi)
            };
            let plus = eval(T::one())?;
            let minus = eval(-T::one())?;
            Ok((plus - minus) / (T::of(2.0) * h))
        })
        .collect()
}

/// `|s_p − s_n| / |s_n| × 100`
pub fn relative_error<T: Scalar>(s_p: T, s_n: T) -> Result<T> {
    if s_n == T::zero() {
        return Err(Error::ZeroReference);
    }
    Ok((s_p - s_n).abs() / s_n.abs() * T::of(100.0))
}

/// `T_A / T_B`
pub fn efficiency_ratio<T: Scalar>(t_a: T, t_b: T) -> Result<T> {
    if !(t_b > T::zero()) {
        return Err(Error::NonPositiveTime(t_b.to_f64_lossy()));
    }
    Ok(t_a / t_b)
}
