//! Plate benchmark setup: assemble, solve modes, pick the characteristic and
//! hand engines a ready [`SensitivityProblem`].

use std::time::{Duration, Instant};

use crate::characteristic::{mac_value, Characteristic, Mac, Mf, Mse};
use crate::eigen::{largest_entry, solve_modes, EigenPair, ShiftedFactorization};
use crate::engines::{Engine, SensitivityProblem, SensitivityReport, SqmrConfig};
use crate::error::{Error, Result};
use crate::fe::{DesignVector, PlateModel};
use crate::scalar::Scalar;
use crate::sparse::SymSparseMatrix;

/// Extra modes searched when choosing a MAC reference automatically.
pub const REFERENCE_SEARCH: usize = 12;

/// Smallest MAC an automatic reference must have with the studied mode.
pub const REFERENCE_MIN_MAC: f64 = 1e-8;

/// Where the MAC reference shape `φⱼ` comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceSpec<T> {
    /// Lowest baseline mode `j ≠ i` whose MAC with mode `i` is not zero by
    /// symmetry.
    Auto,
    /// Baseline mode `j` (zero-based).
    Mode(usize),
    Vector(Vec<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CharacteristicSpec<T> {
    Mac(ReferenceSpec<T>),
    /// Element `r`; `None` picks the element with the largest strain energy.
    Mse(Option<usize>),
    Mf,
}

impl<T> CharacteristicSpec<T> {
    pub fn name(&self) -> &'static str {
        match self {
            CharacteristicSpec::Mac(_) => "mac",
            CharacteristicSpec::Mse(_) => "mse",
            CharacteristicSpec::Mf => "mf",
        }
    }
}

/// An assembled plate with its modes and a chosen characteristic.
pub struct PlateStudy<T: Scalar> {
    pub model: PlateModel<T>,
    pub design: DesignVector<T>,
    pub k: SymSparseMatrix<T>,
    pub m: SymSparseMatrix<T>,
    pub pairs: Vec<EigenPair<T>>,
    pub shifted: ShiftedFactorization<T>,
    /// Zero-based mode under study.
    pub mode: usize,
    pub characteristic: Box<dyn Characteristic<T>>,
    /// MAC reference mode, when taken from the baseline structure.
    pub reference_mode: Option<usize>,
    /// MSE element actually used.
    pub mse_element: Option<usize>,
    pub eigen_time: Duration,
}

impl<T: Scalar> PlateStudy<T> {
    pub fn new(
        model: PlateModel<T>,
        design: DesignVector<T>,
        mode: usize,
        spec: &CharacteristicSpec<T>,
    ) -> Result<Self> {
        let (k, m) = model.assemble(&design)?;
        let n = k.order();
        let wanted = match spec {
            CharacteristicSpec::Mac(ReferenceSpec::Auto) => mode + 1 + REFERENCE_SEARCH,
            CharacteristicSpec::Mac(ReferenceSpec::Mode(j)) => mode.max(*j) + 1,
            _ => mode + 1,
        };
        if mode >= n {
            return Err(Error::InvalidArgument(format!(
                "mode {} exceeds the {n} available",
                mode + 1
            )));
        }
        let clock = Instant::now();
        let (pairs, shifted) = solve_modes(&k, &m, wanted.min(n), T::zero())?;
        let eigen_time = clock.elapsed();
        let phi = &pairs[mode].phi;

        let mut reference_mode = None;
        let mut mse_element = None;
        let characteristic: Box<dyn Characteristic<T>> = match spec {
            CharacteristicSpec::Mf => Box::new(Mf),
            CharacteristicSpec::Mse(element) => {
                let r = match element {
                    Some(r) => *r,
                    None => {
                        let energies = (0..model.num_elements())
                            .map(|e| Ok(model.element_stiffness_block(e)?.quad(phi)))
                            .collect::<Result<Vec<T>>>()?;
                        largest_entry(&energies)
                    }
                };
                mse_element = Some(r);
                Box::new(Mse::for_plate(&model, r)?)
            }
            CharacteristicSpec::Mac(ReferenceSpec::Vector(v)) => {
                if v.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        actual: v.len(),
                    });
                }
                Box::new(Mac::new(v.clone())?)
            }
            CharacteristicSpec::Mac(ReferenceSpec::Mode(j)) => {
                reference_mode = Some(*j);
                Box::new(Mac::new(pairs[*j].phi.clone())?)
            }
            CharacteristicSpec::Mac(ReferenceSpec::Auto) => {
                let j = (0..pairs.len())
                    .filter(|&j| j != mode)
                    .find(|&j| {
                        mac_value(&pairs[j].phi, phi)
                            .map(|v| v > T::of(REFERENCE_MIN_MAC))
                            .unwrap_or(false)
                    })
                    .ok_or_else(|| {
                        Error::InvalidArgument(format!(
                            "no baseline mode among the lowest {} correlates with mode {}; \
                             supply a reference explicitly",
                            pairs.len(),
                            mode + 1
                        ))
                    })?;
                reference_mode = Some(j);
                Box::new(Mac::new(pairs[j].phi.clone())?)
            }
        };

        Ok(Self {
            model,
            design,
            k,
            m,
            pairs,
            shifted,
            mode,
            characteristic,
            reference_mode,
            mse_element,
            eigen_time,
        })
    }

    /// Unit-density plate of `nx × ny` steel elements.
    pub fn steel_plate(
        nx: usize,
        ny: usize,
        mode: usize,
        spec: &CharacteristicSpec<T>,
    ) -> Result<Self> {
        let model = PlateModel::build(nx, ny, crate::fe::Material::steel())?;
        let design = DesignVector::ones(model.num_elements());
        Self::new(model, design, mode, spec)
    }

    pub fn pair(&self) -> &EigenPair<T> {
        &self.pairs[self.mode]
    }

    pub fn num_dofs(&self) -> usize {
        self.k.order()
    }

    pub fn parameter_count(&self) -> usize {
        self.model.num_elements()
    }

    pub fn with_problem<R>(&self, f: impl FnOnce(&SensitivityProblem<'_, T>) -> R) -> R {
        let derivatives = self.model.derivatives(&self.design);
        let problem = SensitivityProblem {
            k: &self.k,
            m: &self.m,
            pair: self.pair(),
            shifted: &self.shifted,
            derivatives: &derivatives,
            characteristic: self.characteristic.as_ref(),
            design: self.design.as_slice(),
        };
        f(&problem)
    }

    pub fn run(&self, engine: Engine, sqmr: &SqmrConfig<T>) -> Result<SensitivityReport<T>> {
        self.with_problem(|p| engine.run(p, sqmr))
    }
}
