//! Error metrics and the local quadratic model of the MSE.
//!
//! For the residual `e = d - y(z)` with holomorphic `y`, the error Jacobian
//! is `D_z e = -J` where `J = ∂y/∂z`. Linearizing around the current point
//! gives
//!
//! ```text
//! ‖e + D_z e · x‖² = xᴴ M x + bᴴ x + xᴴ b + c
//! M = Jᴴ J,   b = -Jᴴ e,   c = eᴴ e
//! ```
//!
//! `M` is the mixed Wirtinger Hessian of the MSE and `b = (∂J/∂z*)ᵀ` its
//! gradient. `c` does not affect the minimizer and is kept for diagnostics.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{dot_h_unchecked, norm2, norm2_sqr, CMatrix, ComplexVector, HermitianMatrix};

/// `eᴴ e`.
pub fn mse(e: &[Complex64]) -> f64 {
    norm2_sqr(e)
}

/// Residual power over reference power, in dB.
pub fn nmse_db(d: &[Complex64], e: &[Complex64]) -> Result<f64> {
    if d.len() != e.len() {
        return Err(Error::dim("nmse_db", d.len(), e.len()));
    }
    let reference = norm2_sqr(d);
    if reference <= 0.0 {
        return Err(Error::Usage("NMSE reference signal has zero energy".into()));
    }
    Ok(10.0 * (norm2_sqr(e) / reference).log10())
}

/// `e = d - y`.
pub fn residual(d: &[Complex64], y: &[Complex64]) -> Result<ComplexVector> {
    if d.len() != y.len() {
        return Err(Error::dim("residual", d.len(), y.len()));
    }
    Ok(ComplexVector::from_vec_unchecked(
        d.iter().zip(y).map(|(a, b)| a - b).collect(),
    ))
}

#[derive(Debug, Clone)]
pub struct QuadraticModel {
    /// Mixed Hessian `Jᴴ J`.
    pub m: HermitianMatrix,
    /// Gradient `(D_z e)ᴴ e`.
    pub b: ComplexVector,
    /// Residual energy at the expansion point.
    pub c_const: f64,
}

impl QuadraticModel {
    pub fn new(m: HermitianMatrix, b: ComplexVector, c_const: f64) -> Result<Self> {
        if m.dim() != b.len() {
            return Err(Error::dim("QuadraticModel::new", m.dim(), b.len()));
        }
        Ok(QuadraticModel { m, b, c_const })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// `f(x) = xᴴ M x + bᴴ x + xᴴ b`, the constant excluded.
    pub fn value(&self, x: &[Complex64]) -> Result<f64> {
        quadratic_value(&self.m, &self.b, x)
    }
}

pub fn quadratic_value(m: &HermitianMatrix, b: &[Complex64], x: &[Complex64]) -> Result<f64> {
    if x.len() != b.len() {
        return Err(Error::dim("quadratic_value", b.len(), x.len()));
    }
    let mx = m.matvec(x)?;
    Ok(dot_h_unchecked(x, &mx).re + 2.0 * dot_h_unchecked(b, x).re)
}

/// Builds `(M, b, c)` from the model Jacobian `∂y/∂z` (N×K) and residual.
pub fn build_quadratic(jac_y: &CMatrix, e: &[Complex64]) -> Result<QuadraticModel> {
    if jac_y.rows() != e.len() {
        return Err(Error::dim("build_quadratic", jac_y.rows(), e.len()));
    }
    let m = jac_y.gram();
    let mut b = jac_y.adjoint_matvec(e)?;
    for v in b.iter_mut() {
        *v = -*v;
    }
    Ok(QuadraticModel {
        m,
        b,
        c_const: mse(e),
    })
}

/// Wirtinger gradient alone, for first-order methods.
pub fn gradient(jac_y: &CMatrix, e: &[Complex64]) -> Result<ComplexVector> {
    if jac_y.rows() != e.len() {
        return Err(Error::dim("gradient", jac_y.rows(), e.len()));
    }
    let mut b = jac_y.adjoint_matvec(e)?;
    for v in b.iter_mut() {
        *v = -*v;
    }
    Ok(b)
}

pub fn grad_norm(q: &QuadraticModel) -> f64 {
    norm2(&q.b)
}
