//! Clamped rectangular plate in plane stress with per-element pseudo-densities.
//!
//! The mesh is a regular grid of unit-square bilinear quadrilaterals with two
//! displacement DOFs per node. Element matrices are identical across the
//! mesh; the global matrices follow the SIMP-style interpolation
//!
//! ```text
//! K(ρ) = Σ ρₑ³ Kₑ + penalty·I_clamped,    M(ρ) = Σ ρₑ Mₑ
//! ```
//!
//! The four corner nodes are clamped by a constant diagonal penalty, so the
//! system keeps all `2 (nx+1)(ny+1)` DOFs and `K` stays positive definite.

use crate::error::{Error, Result};
use crate::modal::{DerivativeProvider, ParamDerivatives};
use crate::scalar::Scalar;
use crate::sparse::{LocalBlock, SymSparseMatrix};

/// Multiplier on the largest unit-density stiffness diagonal used for the
/// clamped-DOF penalty.
pub const PENALTY_FACTOR: f64 = 1e8;

pub const DOFS_PER_NODE: usize = 2;
pub const DOFS_PER_ELEMENT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material<T> {
    /// Pa
    pub youngs_modulus: T,
    pub poisson_ratio: T,
    /// kg/m³
    pub density: T,
    /// m
    pub thickness: T,
}

impl<T: Scalar> Material<T> {
    /// Structural steel, unit thickness.
    pub fn steel() -> Self {
        Self {
            youngs_modulus: T::of(2e11),
            poisson_ratio: T::of(0.3),
            density: T::of(7.8e3),
            thickness: T::one(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.youngs_modulus > T::zero()
            && self.poisson_ratio >= T::zero()
            && self.poisson_ratio < T::of(0.5)
            && self.density > T::zero()
            && self.thickness > T::zero();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!(
                "material constants out of range: E={}, nu={}, rho={}, t={}",
                self.youngs_modulus, self.poisson_ratio, self.density, self.thickness
            )))
        }
    }
}

/// 8×8 element stiffness and consistent mass, DOF order
/// `(u0, v0, u1, v1, u2, v2, u3, v3)` with nodes counter-clockwise from the
/// lower-left corner.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementMatrices<T> {
    pub ke: [[T; DOFS_PER_ELEMENT]; DOFS_PER_ELEMENT],
    pub me: [[T; DOFS_PER_ELEMENT]; DOFS_PER_ELEMENT],
}

impl<T: Scalar> ElementMatrices<T> {
    /// Bilinear plane-stress rectangle of size `width × height`, integrated
    /// with 2×2 Gauss points.
    pub fn plane_stress_rectangle(material: &Material<T>, width: T, height: T) -> Self {
        let e = material.youngs_modulus;
        let nu = material.poisson_ratio;
        let t = material.thickness;
        let one = T::one();
        let half = T::of(0.5);
        let c = e / (one - nu * nu);
        let d = [
            [c, c * nu, T::zero()],
            [c * nu, c, T::zero()],
            [T::zero(), T::zero(), c * (one - nu) * half],
        ];
        let xi_n = [-one, one, one, -one];
        let eta_n = [-one, -one, one, one];
        let g = one / T::of(3.0).sqrt();
        let det_j = width * height / T::of(4.0);
        let quarter = T::of(0.25);

        let mut ke = [[T::zero(); 8]; 8];
        let mut me = [[T::zero(); 8]; 8];
        for &xi in &[-g, g] {
            for &eta in &[-g, g] {
                let mut n = [T::zero(); 4];
                let mut dx = [T::zero(); 4];
                let mut dy = [T::zero(); 4];
                for a in 0..4 {
                    n[a] = quarter * (one + xi_n[a] * xi) * (one + eta_n[a] * eta);
                    dx[a] = quarter * xi_n[a] * (one + eta_n[a] * eta) * T::of(2.0) / width;
                    dy[a] = quarter * eta_n[a] * (one + xi_n[a] * xi) * T::of(2.0) / height;
                }
                let mut b = [[T::zero(); 8]; 3];
                for a in 0..4 {
                    b[0][2 * a] = dx[a];
                    b[1][2 * a + 1] = dy[a];
                    b[2][2 * a] = dy[a];
                    b[2][2 * a + 1] = dx[a];
                }
                let w = det_j * t;
                for i in 0..8 {
                    for j in 0..8 {
                        let mut s = T::zero();
                        for p in 0..3 {
                            for q in 0..3 {
                                s += b[p][i] * d[p][q] * b[q][j];
                            }
                        }
                        ke[i][j] += s * w;
                    }
                }
                for a in 0..4 {
                    for bb in 0..4 {
                        let m = material.density * n[a] * n[bb] * w;
                        me[2 * a][2 * bb] += m;
                        me[2 * a + 1][2 * bb + 1] += m;
                    }
                }
            }
        }
        Self { ke, me }
    }

    fn flat(block: &[[T; 8]; 8], scale: T) -> Vec<T> {
        block.iter().flatten().map(|&v| v * scale).collect()
    }
}

/// Regular grid plate with clamped corners.
#[derive(Debug, Clone)]
pub struct PlateModel<T> {
    nx: usize,
    ny: usize,
    coords: Vec<[T; 2]>,
    elements: Vec<[usize; 4]>,
    clamped: Vec<usize>,
    material: Material<T>,
    element: ElementMatrices<T>,
    penalty: T,
}

impl<T: Scalar> PlateModel<T> {
    /// Builds an `nx × ny` grid of 1 m × 1 m elements with the four corner
    /// nodes clamped.
    pub fn build(nx: usize, ny: usize, material: Material<T>) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidModel(format!(
                "element counts must be positive, got {nx} x {ny}"
            )));
        }
        material.validate()?;
        let node = |ix: usize, iy: usize| iy * (nx + 1) + ix;
        let coords = (0..=ny)
            .flat_map(|iy| (0..=nx).map(move |ix| [T::of_usize(ix), T::of_usize(iy)]))
            .collect();
        let elements = (0..ny)
            .flat_map(|iy| {
                (0..nx).map(move |ix| {
                    [
                        node(ix, iy),
                        node(ix + 1, iy),
                        node(ix + 1, iy + 1),
                        node(ix, iy + 1),
                    ]
                })
            })
            .collect();
        let clamped = vec![node(0, 0), node(nx, 0), node(nx, ny), node(0, ny)];
        let element = ElementMatrices::plane_stress_rectangle(&material, T::one(), T::one());

        let mut model = Self {
            nx,
            ny,
            coords,
            elements,
            clamped,
            material,
            element,
            penalty: T::zero(),
        };
        let mut diag = vec![T::zero(); model.num_dofs()];
        for e in 0..model.num_elements() {
            for (a, &g) in model.element_dofs(e).iter().enumerate() {
                diag[g] += model.element.ke[a][a];
            }
        }
        let max_diag = diag.iter().fold(T::zero(), |m, &v| m.max(v));
        model.penalty = T::of(PENALTY_FACTOR) * max_diag;
        Ok(model)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn num_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn num_dofs(&self) -> usize {
        DOFS_PER_NODE * self.num_nodes()
    }

    /// Number of design parameters `q` (one density per element).
    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn coords(&self) -> &[[T; 2]] {
        &self.coords
    }

    pub fn elements(&self) -> &[[usize; 4]] {
        &self.elements
    }

    pub fn clamped_nodes(&self) -> &[usize] {
        &self.clamped
    }

    pub fn clamped_dofs(&self) -> Vec<usize> {
        self.clamped
            .iter()
            .flat_map(|&n| [DOFS_PER_NODE * n, DOFS_PER_NODE * n + 1])
            .collect()
    }

    pub fn material(&self) -> &Material<T> {
        &self.material
    }

    /// Reference element matrices (unit density).
    pub fn element_matrices(&self) -> &ElementMatrices<T> {
        &self.element
    }

    pub fn penalty(&self) -> T {
        self.penalty
    }

    pub fn element_dofs(&self, e: usize) -> [usize; DOFS_PER_ELEMENT] {
        let nodes = self.elements[e];
        let mut dofs = [0; DOFS_PER_ELEMENT];
        for (a, &n) in nodes.iter().enumerate() {
            dofs[2 * a] = DOFS_PER_NODE * n;
            dofs[2 * a + 1] = DOFS_PER_NODE * n + 1;
        }
        dofs
    }

    /// `K` and `M` at the given design.
    pub fn assemble(
        &self,
        design: &DesignVector<T>,
    ) -> Result<(SymSparseMatrix<T>, SymSparseMatrix<T>)> {
        self.check_len(design.len())?;
        self.assemble_with_densities(design.as_slice())
    }

    /// Assembly for any positive densities, including probes slightly above 1
    /// used by finite differencing.
    pub fn assemble_with_densities(
        &self,
        densities: &[T],
    ) -> Result<(SymSparseMatrix<T>, SymSparseMatrix<T>)> {
        self.check_len(densities.len())?;
        if let Some((e, &v)) = densities
            .iter()
            .enumerate()
            .find(|(_, &v)| !(v > T::zero()) || !v.is_finite())
        {
            return Err(Error::DensityOutOfRange {
                element: e,
                value: v.to_f64_lossy(),
            });
        }
        let n = self.num_dofs();
        let per = DOFS_PER_ELEMENT * (DOFS_PER_ELEMENT + 1) / 2;
        let mut kt = Vec::with_capacity(self.num_elements() * per + 8);
        let mut mt = Vec::with_capacity(self.num_elements() * per);
        for (e, &rho) in densities.iter().enumerate() {
            let dofs = self.element_dofs(e);
            let ks = rho * rho * rho;
            for a in 0..DOFS_PER_ELEMENT {
                for b in a..DOFS_PER_ELEMENT {
                    kt.push((dofs[a], dofs[b], ks * self.element.ke[a][b]));
                    mt.push((dofs[a], dofs[b], rho * self.element.me[a][b]));
                }
            }
        }
        for g in self.clamped_dofs() {
            kt.push((g, g, self.penalty));
        }
        Ok((
            SymSparseMatrix::assemble(n, kt)?,
            SymSparseMatrix::assemble(n, mt)?,
        ))
    }

    /// Unit-density stiffness of element `e` on its footprint.
    pub fn element_stiffness_block(&self, e: usize) -> Result<LocalBlock<T>> {
        self.check_index(e)?;
        LocalBlock::new(
            self.element_dofs(e).to_vec(),
            ElementMatrices::flat(&self.element.ke, T::one()),
        )
    }

    /// `∂K/∂ρₖ = 3ρₖ² Kₑₖ` on the element footprint.
    pub fn stiffness_derivative_block(&self, design: &[T], k: usize) -> Result<LocalBlock<T>> {
        self.check_index(k)?;
        self.check_len(design.len())?;
        let s = T::of(3.0) * design[k] * design[k];
        LocalBlock::new(
            self.element_dofs(k).to_vec(),
            ElementMatrices::flat(&self.element.ke, s),
        )
    }

    /// `∂M/∂ρₖ = Mₑₖ` on the element footprint.
    pub fn mass_derivative_block(&self, k: usize) -> Result<LocalBlock<T>> {
        self.check_index(k)?;
        LocalBlock::new(
            self.element_dofs(k).to_vec(),
            ElementMatrices::flat(&self.element.me, T::one()),
        )
    }

    /// `∂K/∂ρₖ` scattered to a global matrix.
    pub fn stiffness_derivative(
        &self,
        design: &DesignVector<T>,
        k: usize,
    ) -> Result<SymSparseMatrix<T>> {
        self.stiffness_derivative_block(design.as_slice(), k)?
            .to_sparse(self.num_dofs())
    }

    /// `∂M/∂ρₖ` scattered to a global matrix.
    pub fn mass_derivative(&self, k: usize) -> Result<SymSparseMatrix<T>> {
        self.mass_derivative_block(k)?.to_sparse(self.num_dofs())
    }

    /// Derivative provider over all element densities at `design`.
    pub fn derivatives<'a>(&'a self, design: &'a DesignVector<T>) -> PlateDerivatives<'a, T> {
        PlateDerivatives {
            model: self,
            design,
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.num_elements() {
            return Err(Error::DimensionMismatch {
                expected: self.num_elements(),
                actual: len,
            });
        }
        Ok(())
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k >= self.num_elements() {
            return Err(Error::ParameterOutOfRange {
                index: k,
                count: self.num_elements(),
            });
        }
        Ok(())
    }
}

/// Per-element pseudo-densities, each in `(0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignVector<T> {
    densities: Vec<T>,
}

impl<T: Scalar> DesignVector<T> {
    pub fn new(densities: Vec<T>) -> Result<Self> {
        for (e, &v) in densities.iter().enumerate() {
            if !(v > T::zero() && v <= T::one()) {
                return Err(Error::DensityOutOfRange {
                    element: e,
                    value: v.to_f64_lossy(),
                });
            }
        }
        Ok(Self { densities })
    }

    /// All densities equal to one.
    pub fn ones(q: usize) -> Self {
        Self {
            densities: vec![T::one(); q],
        }
    }

    pub fn len(&self) -> usize {
        self.densities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.densities.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.densities
    }

    pub fn with_density(mut self, e: usize, value: T) -> Result<Self> {
        if e >= self.densities.len() {
            return Err(Error::ParameterOutOfRange {
                index: e,
                count: self.densities.len(),
            });
        }
        self.densities[e] = value;
        Self::new(self.densities)
    }
}

/// Element-local `∂K/∂ρₖ`, `∂M/∂ρₖ` for every element of a plate.
#[derive(Debug, Clone, Copy)]
pub struct PlateDerivatives<'a, T> {
    model: &'a PlateModel<T>,
    design: &'a DesignVector<T>,
}

impl<T: Scalar> DerivativeProvider<T> for PlateDerivatives<'_, T> {
    fn parameter_count(&self) -> usize {
        self.model.num_elements()
    }

    fn derivatives(&self, k: usize) -> Result<ParamDerivatives<T>> {
        Ok(ParamDerivatives {
            k,
            dk: self
                .model
                .stiffness_derivative_block(self.design.as_slice(), k)?,
            dm: self.model.mass_derivative_block(k)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::LdltFactorization;
    use nalgebra::{DMatrix, SymmetricEigen};

    fn plate(nx: usize, ny: usize) -> PlateModel<f64> {
        PlateModel::build(nx, ny, Material::steel()).unwrap()
    }

    fn dense(block: &[[f64; 8]; 8]) -> DMatrix<f64> {
        DMatrix::from_fn(8, 8, |i, j| block[i][j])
    }

    #[test]
    fn dof_counts_match_the_benchmark_grid() {
        let grid = [
            (20, 10, 462),
            (40, 10, 902),
            (40, 30, 2542),
            (60, 50, 6222),
            (80, 70, 11502),
            (100, 80, 16362),
            (120, 100, 24442),
            (140, 120, 34122),
            (180, 140, 51042),
        ];
        for (nx, ny, dofs) in grid {
            assert_eq!(plate(nx, ny).num_dofs(), dofs, "{nx} x {ny}");
        }
    }

    #[test]
    fn smallest_mesh() {
        let p = plate(1, 1);
        assert_eq!(p.num_nodes(), 4);
        assert_eq!(p.num_dofs(), 8);
        assert_eq!(p.num_elements(), 1);
        let mut clamped = p.clamped_nodes().to_vec();
        clamped.sort();
        assert_eq!(clamped, vec![0, 1, 2, 3]);
    }

    #[test]
    fn rejects_empty_grid_and_bad_material() {
        assert!(PlateModel::build(0, 3, Material::<f64>::steel()).is_err());
        let mut m = Material::<f64>::steel();
        m.poisson_ratio = 0.5;
        assert!(PlateModel::build(2, 2, m).is_err());
    }

    #[test]
    fn elements_reference_distinct_nodes() {
        let p = plate(5, 3);
        for el in p.elements() {
            let mut s = el.to_vec();
            s.sort();
            s.dedup();
            assert_eq!(s.len(), 4);
            assert!(s.iter().all(|&n| n < p.num_nodes()));
        }
    }

    #[test]
    fn stiffness_has_three_rigid_modes() {
        let em = ElementMatrices::plane_stress_rectangle(&Material::<f64>::steel(), 1.0, 1.0);
        let ke = dense(&em.ke);
        assert!((&ke - ke.transpose()).amax() <= 1e-6);
        let u = DMatrix::from_column_slice(8, 1, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        assert!((&ke * &u).amax() <= 1e-9 * ke.amax());
        let eig = SymmetricEigen::new(ke.clone());
        let zero = eig
            .eigenvalues
            .iter()
            .filter(|&&v| v.abs() <= 1e-9 * ke.amax())
            .count();
        assert_eq!(zero, 3);
    }

    #[test]
    fn consistent_mass_is_spd_with_the_right_total() {
        let mat = Material::<f64>::steel();
        let em = ElementMatrices::plane_stress_rectangle(&mat, 1.0, 1.0);
        let me = dense(&em.me);
        assert!(SymmetricEigen::new(me.clone())
            .eigenvalues
            .iter()
            .all(|&v| v > 0.0));
        let ux = DMatrix::from_column_slice(8, 1, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let uy = DMatrix::from_column_slice(8, 1, &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        let total = mat.density * mat.thickness * 1.0;
        assert!(((ux.transpose() * &me * &ux)[0] - total).abs() <= 1e-9 * total);
        assert!(((uy.transpose() * &me * &uy)[0] - total).abs() <= 1e-9 * total);
    }

    #[test]
    fn halving_a_density_scales_its_contribution() {
        let p = plate(3, 2);
        let ones = DesignVector::ones(6);
        let half = DesignVector::ones(6).with_density(4, 0.5).unwrap();
        let (k1, m1) = p.assemble(&ones).unwrap();
        let (k2, m2) = p.assemble(&half).unwrap();
        let dk = SymSparseMatrix::linear_combination(1.0, &k1, -1.0, &k2).unwrap();
        let dm = SymSparseMatrix::linear_combination(1.0, &m1, -1.0, &m2).unwrap();
        let ke = p
            .element_stiffness_block(4)
            .unwrap()
            .to_sparse(p.num_dofs())
            .unwrap();
        let me = p.mass_derivative(4).unwrap();
        let ek = SymSparseMatrix::linear_combination(1.0, &dk, -(1.0 - 0.125), &ke).unwrap();
        let em = SymSparseMatrix::linear_combination(1.0, &dm, -0.5, &me).unwrap();
        assert!(ek.frobenius_norm() <= 1e-12 * ke.frobenius_norm());
        assert!(em.frobenius_norm() <= 1e-12 * me.frobenius_norm());
    }

    #[test]
    fn unit_density_collapses_to_plain_assembly() {
        let p = plate(2, 2);
        let (k, _) = p.assemble(&DesignVector::ones(4)).unwrap();
        let mut plain = SymSparseMatrix::assemble(
            p.num_dofs(),
            p.clamped_dofs().into_iter().map(|g| (g, g, p.penalty())),
        )
        .unwrap();
        for e in 0..4 {
            let ke = p
                .element_stiffness_block(e)
                .unwrap()
                .to_sparse(p.num_dofs())
                .unwrap();
            plain = SymSparseMatrix::linear_combination(1.0, &plain, 1.0, &ke).unwrap();
        }
        let diff = SymSparseMatrix::linear_combination(1.0, &k, -1.0, &plain).unwrap();
        assert!(diff.frobenius_norm() <= 1e-12 * k.frobenius_norm());
    }

    #[test]
    fn global_matrices_are_positive_definite() {
        let p = plate(6, 3);
        let (k, m) = p.assemble(&DesignVector::ones(18)).unwrap();
        let fk = LdltFactorization::factorize(&k).unwrap();
        let fm = LdltFactorization::factorize(&m).unwrap();
        assert_eq!(fk.negative_pivots(), 0);
        assert_eq!(fm.negative_pivots(), 0);
    }

    #[test]
    fn derivative_scaling_and_locality() {
        let p = plate(3, 2);
        let d = DesignVector::ones(6).with_density(2, 0.5).unwrap();
        let dk = p.stiffness_derivative(&d, 2).unwrap();
        let ke = p
            .element_stiffness_block(2)
            .unwrap()
            .to_sparse(p.num_dofs())
            .unwrap();
        let diff = SymSparseMatrix::linear_combination(1.0, &dk, -0.75, &ke).unwrap();
        assert!(diff.frobenius_norm() <= 1e-12 * ke.frobenius_norm());
        let foot = p.element_dofs(2);
        for (i, j, v) in dk.upper_entries() {
            if v != 0.0 {
                assert!(foot.contains(&i) && foot.contains(&j));
            }
        }
        assert!(p.stiffness_derivative(&d, 6).is_err());
    }

    #[test]
    fn mass_derivatives_sum_to_the_mass_matrix() {
        let p = plate(3, 2);
        let (_, m) = p.assemble(&DesignVector::ones(6)).unwrap();
        let mut sum = p.mass_derivative(0).unwrap();
        for k in 1..6 {
            sum =
                SymSparseMatrix::linear_combination(1.0, &sum, 1.0, &p.mass_derivative(k).unwrap())
                    .unwrap();
        }
        let diff = SymSparseMatrix::linear_combination(1.0, &sum, -1.0, &m).unwrap();
        assert!(diff.frobenius_norm() <= 1e-12 * m.frobenius_norm());
    }

    #[test]
    fn matrix_derivatives_match_central_differences() {
        let p = plate(4, 3);
        let base: Vec<f64> = (0..12).map(|e| 0.55 + 0.03 * e as f64).collect();
        let h = 1e-6;
        for k in [0, 5, 11] {
            let mut up = base.clone();
            let mut dn = base.clone();
            up[k] += h;
            dn[k] -= h;
            let (kp, mp) = p.assemble_with_densities(&up).unwrap();
            let (km, mm) = p.assemble_with_densities(&dn).unwrap();
            let fd_k = SymSparseMatrix::linear_combination(0.5 / h, &kp, -0.5 / h, &km).unwrap();
            let fd_m = SymSparseMatrix::linear_combination(0.5 / h, &mp, -0.5 / h, &mm).unwrap();
            let dk = p
                .stiffness_derivative_block(&base, k)
                .unwrap()
                .to_sparse(p.num_dofs())
                .unwrap();
            let dm = p.mass_derivative(k).unwrap();
            let ek = SymSparseMatrix::linear_combination(1.0, &fd_k, -1.0, &dk).unwrap();
            let em = SymSparseMatrix::linear_combination(1.0, &fd_m, -1.0, &dm).unwrap();
            // Clamped diagonals carry the constant penalty, whose ulp swamps a
            // 1e-6 perturbation; check them against that rounding bound.
            let clamped = p.clamped_dofs();
            let mut free_err = 0.0;
            for (i, j, v) in ek.upper_entries() {
                if i == j && clamped.contains(&i) {
                    assert!(v.abs() <= 4.0 * p.penalty() * f64::EPSILON / h);
                } else {
                    free_err += 2.0 * v * v;
                }
            }
            assert!(free_err.sqrt() <= 1e-6 * dk.frobenius_norm());
            assert!(em.frobenius_norm() <= 1e-6 * dm.frobenius_norm());
        }
    }

    #[test]
    fn design_vector_bounds() {
        assert!(DesignVector::new(vec![1.0, 0.3]).is_ok());
        assert!(DesignVector::new(vec![0.0]).is_err());
        assert!(DesignVector::new(vec![1.2]).is_err());
        let p = plate(2, 1);
        assert!(p.assemble(&DesignVector::ones(3)).is_err());
    }
}
