//! Scalar characteristics `𝓕(p, λ, φ)` of one eigenmode and their partials.
//!
//! Engines only ever see the [`Characteristic`] trait, so new characteristics
//! plug in without touching them.

use crate::error::{Error, Result};
use crate::fe::PlateModel;
use crate::scalar::{dot, Scalar};
use crate::sparse::LocalBlock;

/// A differentiable scalar function of the design `p` and one eigenpair.
pub trait Characteristic<T: Scalar>: Sync {
    fn name(&self) -> &str;
    fn value(&self, p: &[T], lambda: T, phi: &[T]) -> Result<T>;
    /// `∂𝓕/∂p_k` with `λ` and `φ` held fixed.
    fn partial_p(&self, p: &[T], k: usize, lambda: T, phi: &[T]) -> Result<T>;
    fn partial_lambda(&self, p: &[T], lambda: T, phi: &[T]) -> Result<T>;
    fn partial_phi(&self, p: &[T], lambda: T, phi: &[T]) -> Result<Vec<T>>;
}

fn nonzero<T: Scalar>(x: &[T]) -> Result<T> {
    let s = dot(x, x);
    if s > T::zero() {
        Ok(s)
    } else {
        Err(Error::ZeroVector)
    }
}

/// `(φⱼᵀφᵢ)² / ((φⱼᵀφⱼ)(φᵢᵀφᵢ))`
pub fn mac_value<T: Scalar>(phi_j: &[T], phi_i: &[T]) -> Result<T> {
    if phi_j.len() != phi_i.len() {
        return Err(Error::DimensionMismatch {
            expected: phi_j.len(),
            actual: phi_i.len(),
        });
    }
    let a = nonzero(phi_j)?;
    let b = nonzero(phi_i)?;
    let c = dot(phi_j, phi_i);
    Ok(c * c / (a * b))
}

/// Modal assurance criterion against a fixed reference shape `φⱼ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mac<T> {
    reference: Vec<T>,
}

impl<T: Scalar> Mac<T> {
    pub fn new(reference: Vec<T>) -> Result<Self> {
        nonzero(&reference)?;
        Ok(Self { reference })
    }

    pub fn reference(&self) -> &[T] {
        &self.reference
    }
}

impl<T: Scalar> Characteristic<T> for Mac<T> {
    fn name(&self) -> &str {
        "mac"
    }

    fn value(&self, _p: &[T], _lambda: T, phi: &[T]) -> Result<T> {
        mac_value(&self.reference, phi)
    }

    fn partial_p(&self, _p: &[T], _k: usize, _lambda: T, _phi: &[T]) -> Result<T> {
        Ok(T::zero())
    }

    fn partial_lambda(&self, _p: &[T], _lambda: T, _phi: &[T]) -> Result<T> {
        Ok(T::zero())
    }

    fn partial_phi(&self, _p: &[T], _lambda: T, phi: &[T]) -> Result<Vec<T>> {
        if phi.len() != self.reference.len() {
            return Err(Error::DimensionMismatch {
                expected: self.reference.len(),
                actual: phi.len(),
            });
        }
        let a = nonzero(&self.reference)?;
        let b = nonzero(phi)?;
        let c = dot(&self.reference, phi);
        let two = T::of(2.0);
        let s_ref = two * c / (a * b);
        let s_phi = two * c * c / (a * b * b);
        Ok(self
            .reference
            .iter()
            .zip(phi)
            .map(|(&r, &x)| s_ref * r - s_phi * x)
            .collect())
    }
}

/// Element modal strain energy `½ φᵀK_rφ` with `K_r = p_r³ K_er`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mse<T> {
    element: usize,
    unit_stiffness: LocalBlock<T>,
}

impl<T: Scalar> Mse<T> {
    /// `unit_stiffness` is the element stiffness at unit density, scattered
    /// to global DOFs.
    pub fn new(element: usize, unit_stiffness: LocalBlock<T>) -> Self {
        Self {
            element,
            unit_stiffness,
        }
    }

    pub fn for_plate(model: &PlateModel<T>, element: usize) -> Result<Self> {
        Ok(Self::new(element, model.element_stiffness_block(element)?))
    }

    pub fn element(&self) -> usize {
        self.element
    }

    fn density(&self, p: &[T]) -> Result<T> {
        p.get(self.element)
            .copied()
            .ok_or(Error::ParameterOutOfRange {
                index: self.element,
                count: p.len(),
            })
    }
}

impl<T: Scalar> Characteristic<T> for Mse<T> {
    fn name(&self) -> &str {
        "mse"
    }

    fn value(&self, p: &[T], _lambda: T, phi: &[T]) -> Result<T> {
        let r = self.density(p)?;
        Ok(T::of(0.5) * r * r * r * self.unit_stiffness.quad(phi))
    }

    fn partial_p(&self, p: &[T], k: usize, _lambda: T, phi: &[T]) -> Result<T> {
        if k >= p.len() {
            return Err(Error::ParameterOutOfRange {
                index: k,
                count: p.len(),
            });
        }
        if k != self.element {
            return Ok(T::zero());
        }
        let r = self.density(p)?;
        Ok(T::of(1.5) * r * r * self.unit_stiffness.quad(phi))
    }

    fn partial_lambda(&self, _p: &[T], _lambda: T, _phi: &[T]) -> Result<T> {
        Ok(T::zero())
    }

    fn partial_phi(&self, p: &[T], _lambda: T, phi: &[T]) -> Result<Vec<T>> {
        let r = self.density(p)?;
        let mut g = vec![T::zero(); phi.len()];
        self.unit_stiffness.add_apply(r * r * r, phi, &mut g);
        Ok(g)
    }
}

/// Modal flexibility `φᵀφ / λ`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Mf;

fn positive<T: Scalar>(lambda: T) -> Result<T> {
    if lambda > T::zero() {
        Ok(lambda)
    } else {
        Err(Error::NonPositiveEigenvalue(lambda.to_f64_lossy()))
    }
}

impl<T: Scalar> Characteristic<T> for Mf {
    fn name(&self) -> &str {
        "mf"
    }

    fn value(&self, _p: &[T], lambda: T, phi: &[T]) -> Result<T> {
        Ok(dot(phi, phi) / positive(lambda)?)
    }

    fn partial_p(&self, _p: &[T], _k: usize, _lambda: T, _phi: &[T]) -> Result<T> {
        Ok(T::zero())
    }

    fn partial_lambda(&self, _p: &[T], lambda: T, phi: &[T]) -> Result<T> {
        let l = positive(lambda)?;
        Ok(-dot(phi, phi) / (l * l))
    }

    fn partial_phi(&self, _p: &[T], lambda: T, phi: &[T]) -> Result<Vec<T>> {
        let s = T::of(2.0) / positive(lambda)?;
        Ok(phi.iter().map(|&v| s * v).collect())
    }
}
