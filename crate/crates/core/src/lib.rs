//! Sensitivities of eigenmode-derived structural dynamic characteristics
//! (modal assurance criterion, element modal strain energy, modal
//! flexibility) with respect to many design parameters.
//!
//! Five interchangeable engines compute `d𝓕/dp`:
//!
//! | name   | method                                                     | large solves |
//! |--------|------------------------------------------------------------|--------------|
//! | `fn`   | forward mode, Nelson's particular + homogeneous solution   | `q`          |
//! | `fa`   | forward mode, bordered algebraic system                    | `q`          |
//! | `adne` | adjoint mode, Nelson-style adjoint solve                   | 1            |
//! | `adam` | adjoint mode, bordered algebraic adjoint solve             | 1            |
//! | `pm`   | one SQMR solve with the rank-one corrected operator `G`,   | 1            |
//! |        | preconditioned by the eigensolver's `K − μM` factors       |              |
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix the scalar to `f64`, which is what the CLI and
//! benchmarks use.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod characteristic;
pub mod eigen;
pub mod engines;
pub mod error;
pub mod fe;
pub mod modal;
pub mod scalar;
pub mod sparse;
pub mod study;
pub mod verification;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type SymSparseMatrix64 = sparse::SymSparseMatrix<f64>;
pub type SymSparseMatrix32 = sparse::SymSparseMatrix<f32>;
pub type LdltFactorization64 = sparse::LdltFactorization<f64>;
pub type EigenPair64 = eigen::EigenPair<f64>;
pub type EigenPair32 = eigen::EigenPair<f32>;
pub type ShiftedFactorization64 = eigen::ShiftedFactorization<f64>;
pub type Material64 = fe::Material<f64>;
pub type PlateModel64 = fe::PlateModel<f64>;
pub type DesignVector64 = fe::DesignVector<f64>;
pub type ParamDerivatives64 = modal::ParamDerivatives<f64>;
pub type SensitivityProblem64<'a> = engines::SensitivityProblem<'a, f64>;
pub type SensitivityReport64 = engines::SensitivityReport<f64>;
pub type SqmrConfig64 = engines::SqmrConfig<f64>;
pub type PlateStudy64 = study::PlateStudy<f64>;
