//! Small dense linear algebra on top of `nalgebra`: parameter vectors,
//! symmetric PSD matrices and the weighted norms `‖x‖²_M = xᵀMx`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense real vector of fixed dimension. Holds iterates and minimizers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ParameterVector(DVector<f64>);

impl ParameterVector {
    pub fn zeros(d: usize) -> Self {
        ParameterVector(DVector::zeros(d))
    }

    pub fn from_vec(v: Vec<f64>) -> Result<Self> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("parameter vector"));
        }
        Ok(ParameterVector(DVector::from_vec(v)))
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        Self::from_vec(v.to_vec())
    }

    /// Unit coordinate vector `e_i`.
    pub fn basis(d: usize, i: usize) -> Self {
        let mut v = DVector::zeros(d);
        v[i] = 1.0;
        ParameterVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        self.0.as_mut_slice()
    }

    pub fn as_dvector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.as_slice().to_vec()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.norm_squared()
    }

    pub fn dot(&self, other: &ParameterVector) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.0.dot(&other.0))
    }

    pub fn add(&self, other: &ParameterVector) -> Result<ParameterVector> {
        check_dim(self.dim(), other.dim())?;
        Ok(ParameterVector(&self.0 + &other.0))
    }

    pub fn sub(&self, other: &ParameterVector) -> Result<ParameterVector> {
        check_dim(self.dim(), other.dim())?;
        Ok(ParameterVector(&self.0 - &other.0))
    }

    pub fn scale(&self, c: f64) -> ParameterVector {
        ParameterVector(&self.0 * c)
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &ParameterVector) -> Result<()> {
        check_dim(self.dim(), x.dim())?;
        self.0.axpy(a, &x.0, 1.0);
        Ok(())
    }

    pub fn distance(&self, other: &ParameterVector) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }
}

impl std::ops::Index<usize> for ParameterVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for ParameterVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        ParameterVector::from_vec(v)
    }
}

impl From<ParameterVector> for Vec<f64> {
    fn from(v: ParameterVector) -> Vec<f64> {
        v.to_vec()
    }
}

/// Symmetric matrix. Symmetry is exact: constructors copy the upper triangle
/// onto the lower one.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdMatrix(DMatrix<f64>);

impl PsdMatrix {
    pub fn identity(d: usize) -> Self {
        PsdMatrix(DMatrix::identity(d, d))
    }

    pub fn scaled_identity(d: usize, c: f64) -> Self {
        PsdMatrix(DMatrix::identity(d, d) * c)
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        PsdMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn zeros(d: usize) -> Self {
        PsdMatrix(DMatrix::zeros(d, d))
    }

    /// Symmetrizes from the upper triangle.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        let mut m = m;
        m.fill_lower_triangle_with_upper_triangle();
        Ok(PsdMatrix(m))
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let d = rows.len();
        for r in rows {
            check_dim(d, r.len())?;
        }
        Self::from_matrix(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    /// `self += c · x xᵀ`
    pub fn add_outer(&mut self, c: f64, x: &[f64]) {
        let d = self.dim();
        for i in 0..d {
            for j in i..d {
                let v = c * x[i] * x[j];
                self.0[(i, j)] += v;
                if i != j {
                    self.0[(j, i)] += v;
                }
            }
        }
    }

    pub fn add_scaled_identity(&mut self, c: f64) {
        for i in 0..self.dim() {
            self.0[(i, i)] += c;
        }
    }

    pub fn scale(&self, c: f64) -> PsdMatrix {
        PsdMatrix(&self.0 * c)
    }

    pub fn mul_vec(&self, x: &ParameterVector) -> Result<ParameterVector> {
        check_dim(self.dim(), x.dim())?;
        Ok(ParameterVector(&self.0 * x.as_dvector()))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.0.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(0.0)
    }

    /// Spectral norm (largest absolute eigenvalue).
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues().iter().fold(0.0_f64, |a, &e| a.max(e.abs()))
    }

    pub fn cholesky(&self) -> Result<CholeskyFactor> {
        let chol = Cholesky::new(self.0.clone()).ok_or(Error::NotPositiveDefinite)?;
        Ok(CholeskyFactor {
            chol,
            matrix: self.0.clone(),
        })
    }
}

/// Cholesky factor `M = LLᵀ` of a positive definite matrix.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    chol: Cholesky<f64, Dyn>,
    matrix: DMatrix<f64>,
}

/// Rounds of iterative refinement applied after the triangular solves.
const REFINEMENT_STEPS: usize = 3;

impl CholeskyFactor {
    pub fn solve(&self, b: &ParameterVector) -> Result<ParameterVector> {
        check_dim(self.matrix.nrows(), b.dim())?;
        let b = b.as_dvector();
        let mut x = self.chol.solve(b);
        for _ in 0..REFINEMENT_STEPS {
            let r = b - &self.matrix * &x;
            if r.iter().all(|v| *v == 0.0) {
                break;
            }
            x += self.chol.solve(&r);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(ParameterVector(x))
    }

    /// `bᵀ M⁻¹ b = ‖L⁻¹ b‖²`
    pub fn inv_quadratic(&self, b: &ParameterVector) -> Result<f64> {
        check_dim(self.matrix.nrows(), b.dim())?;
        let z = self
            .chol
            .l()
            .solve_lower_triangular(b.as_dvector())
            .ok_or(Error::NotPositiveDefinite)?;
        Ok(z.norm_squared())
    }

    pub fn lower(&self) -> DMatrix<f64> {
        self.chol.l()
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `xᵀ M x`
pub fn m_norm_sq(x: &ParameterVector, m: &PsdMatrix) -> Result<f64> {
    check_dim(m.dim(), x.dim())?;
    Ok(x.as_dvector().dot(&(m.as_dmatrix() * x.as_dvector())))
}

/// `xᵀ M⁻¹ x` through a Cholesky solve.
pub fn inv_m_norm_sq(x: &ParameterVector, m: &PsdMatrix) -> Result<f64> {
    check_dim(m.dim(), x.dim())?;
    m.cholesky()?.inv_quadratic(x)
}

pub fn cholesky_solve(m: &PsdMatrix, b: &ParameterVector) -> Result<ParameterVector> {
    check_dim(m.dim(), b.dim())?;
    m.cholesky()?.solve(b)
}

/// Largest generalized eigenvalue of `A x = t B x` for symmetric `A` and
/// positive definite `B`.
pub fn max_generalized_eigenvalue(a: &PsdMatrix, b: &PsdMatrix) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    let l = b.cholesky()?.lower();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or(Error::NotPositiveDefinite)?;
    let c = &l_inv * a.as_dmatrix() * l_inv.transpose();
    Ok(PsdMatrix::from_matrix(c)?.lambda_max())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Draws, SeededRng};

    fn v(x: &[f64]) -> ParameterVector {
        ParameterVector::from_slice(x).unwrap()
    }

    fn random_spd(d: usize, rng: &mut SeededRng) -> PsdMatrix {
        let a = DMatrix::from_fn(d, d, |_, _| rng.standard_normal());
        let mut m = &a * a.transpose();
        for i in 0..d {
            m[(i, i)] += 0.1;
        }
        PsdMatrix::from_matrix(m).unwrap()
    }

    #[test]
    fn m_norm_examples() {
        let m3 = PsdMatrix::identity(3);
        assert_eq!(m_norm_sq(&ParameterVector::zeros(3), &m3).unwrap(), 0.0);
        assert_eq!(m_norm_sq(&ParameterVector::basis(3, 0), &m3).unwrap(), 1.0);
        let m = PsdMatrix::diagonal(&[2.0, 3.0]);
        assert_eq!(m_norm_sq(&v(&[1.0, 2.0]), &m).unwrap(), 14.0);
    }

    #[test]
    fn m_norm_dimension_mismatch() {
        let err = m_norm_sq(&v(&[1.0, 2.0]), &PsdMatrix::identity(3)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn inv_m_norm_examples() {
        let e1 = ParameterVector::basis(2, 0);
        assert_eq!(inv_m_norm_sq(&e1, &PsdMatrix::identity(2)).unwrap(), 1.0);
        let m = PsdMatrix::diagonal(&[4.0, 1.0]);
        assert!((inv_m_norm_sq(&v(&[2.0, 0.0]), &m).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inv_m_norm_rejects_singular_and_indefinite() {
        let singular = PsdMatrix::diagonal(&[1.0, 0.0]);
        let indefinite = PsdMatrix::diagonal(&[1.0, -1.0]);
        let x = v(&[1.0, 1.0]);
        for m in [singular, indefinite] {
            let err = inv_m_norm_sq(&x, &m).unwrap_err();
            assert_eq!(err.to_string(), "not positive definite");
        }
    }

    #[test]
    fn cauchy_schwarz_on_random_instances() {
        let mut rng = SeededRng::new(11, 0);
        for d in 1..8 {
            for _ in 0..50 {
                let m = random_spd(d, &mut rng);
                let x: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
                let x = v(&x);
                let lhs = inv_m_norm_sq(&x, &m).unwrap() * m_norm_sq(&x, &m).unwrap();
                let rhs = x.norm_sq().powi(2);
                assert!(lhs >= rhs * (1.0 - 1e-10), "{lhs} < {rhs}");
            }
        }
    }

    #[test]
    fn cholesky_solve_examples() {
        let b = v(&[1.5, -2.0, 7.0]);
        assert_eq!(cholesky_solve(&PsdMatrix::identity(3), &b).unwrap(), b);
        let x = cholesky_solve(&PsdMatrix::scaled_identity(2, 2.0), &v(&[4.0, 6.0])).unwrap();
        assert_eq!(x.as_slice(), &[2.0, 3.0]);
    }

    #[test]
    fn cholesky_solve_residual_random_spd() {
        let mut rng = SeededRng::new(12, 0);
        for _ in 0..100 {
            let m = random_spd(8, &mut rng);
            let b: Vec<f64> = (0..8).map(|_| rng.standard_normal()).collect();
            let b = v(&b);
            let x = cholesky_solve(&m, &b).unwrap();
            let r = m.mul_vec(&x).unwrap().sub(&b).unwrap().norm();
            assert!(r <= 1e-10 * b.norm(), "residual {r}");
        }
    }

    #[test]
    fn cholesky_solve_residual_ill_conditioned() {
        // eigenvalues spanning 1e-8..1 in a random rotation
        let mut rng = SeededRng::new(13, 0);
        let d = 6;
        let a = DMatrix::from_fn(d, d, |_, _| rng.standard_normal());
        let q = a.qr().q();
        let diag: Vec<f64> = (0..d).map(|i| 10f64.powf(-8.0 * i as f64 / (d - 1) as f64)).collect();
        let m = &q * DMatrix::from_diagonal(&DVector::from_vec(diag)) * q.transpose();
        let m = PsdMatrix::from_matrix(m).unwrap();
        let b = v(&[1.0, -1.0, 0.5, 2.0, 0.0, 3.0]);
        let x = cholesky_solve(&m, &b).unwrap();
        let r = m.mul_vec(&x).unwrap().sub(&b).unwrap().norm();
        // normwise backward residual; a plain ‖b‖ scale sits below the
        // rounding floor of evaluating Mx − b at this conditioning
        let scale = m.spectral_norm() * x.norm() + b.norm();
        assert!(r <= 1e-10 * scale, "residual {r} vs scale {scale}");
    }

    #[test]
    fn symmetry_is_exact() {
        let m = PsdMatrix::from_rows(&[&[1.0, 2.0], &[2.000001, 5.0]]).unwrap();
        assert_eq!(m.get(0, 1), m.get(1, 0));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(ParameterVector::from_vec(vec![1.0, f64::NAN]).is_err());
        assert!(ParameterVector::from_vec(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn generalized_eigenvalue_diagonal() {
        let a = PsdMatrix::diagonal(&[2.0, 9.0]);
        let b = PsdMatrix::diagonal(&[1.0, 3.0]);
        assert!((max_generalized_eigenvalue(&a, &b).unwrap() - 3.0).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn m_norm_nonnegative_for_psd(
                entries in proptest::collection::vec(-10.0f64..10.0, 16),
                x in proptest::collection::vec(-100.0f64..100.0, 4),
            ) {
                let a = DMatrix::from_vec(4, 4, entries);
                let m = PsdMatrix::from_matrix(&a * a.transpose()).unwrap();
                let x = ParameterVector::from_vec(x).unwrap();
                let tol = 1e-12 * x.norm_sq() * m.spectral_norm().max(1.0);
                prop_assert!(m_norm_sq(&x, &m).unwrap() >= -tol);
            }
        }
    }
}
