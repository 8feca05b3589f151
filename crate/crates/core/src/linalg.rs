//! Dense complex linear algebra used by the optimizers.
//!
//! Everything here works on small systems (a few hundred unknowns at most),
//! so storage is plain row-major `Vec<Complex64>` and the Hermitian
//! eigensolver is a cyclic Jacobi iteration.

use std::ops::{Deref, DerefMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Largest condition number `hermitian_solve` accepts.
pub const MAX_CONDITION: f64 = 1e14;

/// A non-empty vector of finite complex samples or parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector(Vec<Complex64>);

impl ComplexVector {
    pub fn new(data: Vec<Complex64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Usage("complex vector must be non-empty".into()));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Usage(format!("non-finite element at index {i}")));
        }
        Ok(ComplexVector(data))
    }

    pub fn zeros(len: usize) -> Self {
        ComplexVector(vec![ZERO; len])
    }

    /// Wraps data produced by arithmetic on already validated inputs.
    pub(crate) fn from_vec_unchecked(data: Vec<Complex64>) -> Self {
        ComplexVector(data)
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.0)
    }
}

impl Deref for ComplexVector {
    type Target = [Complex64];

    fn deref(&self) -> &[Complex64] {
        &self.0
    }
}

impl DerefMut for ComplexVector {
    fn deref_mut(&mut self) -> &mut [Complex64] {
        &mut self.0
    }
}

impl From<ComplexVector> for Vec<Complex64> {
    fn from(v: ComplexVector) -> Self {
        v.0
    }
}

/// Hermitian inner product `Σ conj(x[i]) y[i]`.
pub fn dot_h(x: &[Complex64], y: &[Complex64]) -> Result<Complex64> {
    if x.len() != y.len() {
        return Err(Error::dim("dot_h", x.len(), y.len()));
    }
    Ok(dot_h_unchecked(x, y))
}

#[inline]
pub(crate) fn dot_h_unchecked(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).fold(ZERO, |acc, (a, b)| acc + a.conj() * b)
}

pub fn norm2_sqr(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}

pub fn norm2(x: &[Complex64]) -> f64 {
    norm2_sqr(x).sqrt()
}

/// Dense K×K Hermitian matrix in row-major order.
///
/// Construction always symmetrizes: `A ← (A + Aᴴ)/2` with the diagonal
/// forced real, so round-off asymmetry from Gram products never reaches
/// the solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl HermitianMatrix {
    pub fn from_dense(dim: usize, mut data: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Usage("matrix dimension must be positive".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::dim(
                "HermitianMatrix::from_dense",
                dim * dim,
                data.len(),
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Usage("matrix has non-finite entries".into()));
        }
        symmetrize(dim, &mut data);
        Ok(HermitianMatrix { dim, data })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::dim("HermitianMatrix::from_rows", dim, row.len()));
            }
            data.extend_from_slice(row);
        }
        Self::from_dense(dim, data)
    }

    pub(crate) fn from_dense_unchecked(dim: usize, mut data: Vec<Complex64>) -> Self {
        symmetrize(dim, &mut data);
        HermitianMatrix { dim, data }
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianMatrix {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let dim = values.len();
        let mut m = Self::zeros(dim);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * dim + i] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    /// `A + γI`.
    pub fn add_diagonal(&self, gamma: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim {
            out.data[i * self.dim + i].re += gamma;
        }
        out
    }

    /// `a·self + b·other`, used for moving averages.
    pub fn combine(&self, a: f64, other: &HermitianMatrix, b: f64) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::dim("HermitianMatrix::combine", self.dim, other.dim));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| x * a + y * b)
            .collect();
        Ok(HermitianMatrix {
            dim: self.dim,
            data,
        })
    }

    pub fn matvec(&self, v: &[Complex64]) -> Result<ComplexVector> {
        if v.len() != self.dim {
            return Err(Error::dim("matvec", self.dim, v.len()));
        }
        let mut out = vec![ZERO; self.dim];
        self.matvec_into(v, &mut out);
        Ok(ComplexVector(out))
    }

    #[inline]
    pub(crate) fn matvec_into(&self, v: &[Complex64], out: &mut [Complex64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.dim..(i + 1) * self.dim];
            *o = row.iter().zip(v).fold(ZERO, |acc, (a, x)| acc + a * x);
        }
    }

    /// Eigendecomposition `A = U Λ Uᴴ` with ascending real eigenvalues.
    pub fn eigh(&self) -> HermitianEigen {
        jacobi_eigh(self)
    }
}

fn symmetrize(dim: usize, data: &mut [Complex64]) {
    for i in 0..dim {
        data[i * dim + i].im = 0.0;
        for j in (i + 1)..dim {
            let avg = (data[i * dim + j] + data[j * dim + i].conj()) * 0.5;
            data[i * dim + j] = avg;
            data[j * dim + i] = avg.conj();
        }
    }
}

/// Result of a Hermitian eigendecomposition.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Unitary eigenvector matrix, row-major; column `k` pairs with `values[k]`.
    pub vectors: Vec<Complex64>,
    pub dim: usize,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        (0..self.dim)
            .map(|i| self.vectors[i * self.dim + k])
            .collect()
    }

    /// Rebuilds `U Λ Uᴴ`.
    pub fn reconstruct(&self) -> HermitianMatrix {
        let n = self.dim;
        let mut data = vec![ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = ZERO;
                for k in 0..n {
                    acc +=
                        self.vectors[i * n + k] * self.values[k] * self.vectors[j * n + k].conj();
                }
                data[i * n + j] = acc;
            }
        }
        HermitianMatrix::from_dense_unchecked(n, data)
    }

    /// Applies `A⁻¹` through the spectral factors.
    pub fn solve(&self, b: &[Complex64]) -> Result<ComplexVector> {
        let n = self.dim;
        if b.len() != n {
            return Err(Error::dim("hermitian_solve", n, b.len()));
        }
        let lmin = self.values[0];
        let lmax = self.values[n - 1];
        if lmin <= 0.0 || lmax / lmin > MAX_CONDITION {
            return Err(Error::Singular {
                eigenvalue: lmin,
                max_eigenvalue: lmax,
            });
        }
        // coefficients c = Λ⁻¹ Uᴴ b
        let coef: Vec<Complex64> = (0..n)
            .map(|k| {
                let mut acc = ZERO;
                for i in 0..n {
                    acc += self.vectors[i * n + k].conj() * b[i];
                }
                acc / self.values[k]
            })
            .collect();
        let x = (0..n)
            .map(|i| {
                let row = &self.vectors[i * n..(i + 1) * n];
                row.iter().zip(&coef).fold(ZERO, |acc, (u, c)| acc + u * c)
            })
            .collect();
        Ok(ComplexVector(x))
    }
}

fn jacobi_eigh(m: &HermitianMatrix) -> HermitianEigen {
    let n = m.dim;
    let mut a = m.data.clone();
    let mut v = vec![ZERO; n * n];
    for i in 0..n {
        v[i * n + i] = ONE;
    }

    let scale = norm2(&a).max(f64::MIN_POSITIVE);
    let tol = (f64::EPSILON * scale).powi(2);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i * n + j].norm_sqr();
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let g = apq.norm();
                if g == 0.0 {
                    continue;
                }
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let tau = (aqq - app) / (2.0 * g);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let phase = apq / g;
                // U restricted to (p, q): [[c, s·e^{iφ}], [-s·e^{-iφ}, c]]
                let u_pq = phase * s;
                let u_qp = -phase.conj() * s;

                // A ← A U (columns p, q)
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * c + akq * u_qp;
                    a[k * n + q] = akp * u_pq + akq * c;
                }
                // A ← Uᴴ A (rows p, q)
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = apk * c + aqk * u_qp.conj();
                    a[q * n + k] = apk * u_pq.conj() + aqk * c;
                }
                a[p * n + q] = ZERO;
                a[q * n + p] = ZERO;
                a[p * n + p].im = 0.0;
                a[q * n + q].im = 0.0;
                // V ← V U
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = vkp * c + vkq * u_qp;
                    v[k * n + q] = vkp * u_pq + vkq * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].re.total_cmp(&a[j * n + j].re));
    let values = order.iter().map(|&k| a[k * n + k].re).collect();
    let mut vectors = vec![ZERO; n * n];
    for (new_k, &old_k) in order.iter().enumerate() {
        for i in 0..n {
            vectors[i * n + new_k] = v[i * n + old_k];
        }
    }
    HermitianEigen {
        values,
        vectors,
        dim: n,
    }
}

/// Solves `A x = b` for Hermitian positive definite `A` via eigendecomposition.
///
/// Fails with [`Error::Singular`] when the smallest eigenvalue is not
/// positive or the condition number exceeds [`MAX_CONDITION`].
pub fn hermitian_solve(a: &HermitianMatrix, b: &[Complex64]) -> Result<ComplexVector> {
    if b.len() != a.dim {
        return Err(Error::dim("hermitian_solve", a.dim, b.len()));
    }
    a.eigh().solve(b)
}

/// General dense complex matrix, row-major. Holds Jacobians (N×K).
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::dim("CMatrix::from_rows", c, row.len()));
            }
            data.extend_from_slice(row);
        }
        Ok(CMatrix {
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    /// `A v`.
    pub fn matvec(&self, v: &[Complex64]) -> Result<ComplexVector> {
        if v.len() != self.cols {
            return Err(Error::dim("CMatrix::matvec", self.cols, v.len()));
        }
        let out = (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(ZERO, |acc, (a, x)| acc + a * x)
            })
            .collect();
        Ok(ComplexVector(out))
    }

    /// `Aᴴ v`.
    pub fn adjoint_matvec(&self, v: &[Complex64]) -> Result<ComplexVector> {
        if v.len() != self.rows {
            return Err(Error::dim("CMatrix::adjoint_matvec", self.rows, v.len()));
        }
        let mut out = vec![ZERO; self.cols];
        for (i, vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * vi;
            }
        }
        Ok(ComplexVector(out))
    }

    /// Gram matrix `Aᴴ A`.
    pub fn gram(&self) -> HermitianMatrix {
        let k = self.cols;
        let mut g = vec![ZERO; k * k];
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..k {
                let ai = row[i].conj();
                if ai == ZERO {
                    continue;
                }
                let dst = &mut g[i * k..(i + 1) * k];
                // upper triangle only, mirrored by symmetrize
                for j in i..k {
                    dst[j] += ai * row[j];
                }
            }
        }
        for i in 0..k {
            for j in 0..i {
                g[i * k + j] = g[j * k + i].conj();
            }
        }
        HermitianMatrix::from_dense_unchecked(k, g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> HermitianMatrix {
        HermitianMatrix::from_dense(n, random_vec(rng, n * n)).unwrap()
    }

    fn random_pd(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> HermitianMatrix {
        let g = CMatrix {
            rows: n,
            cols: n,
            data: random_vec(rng, n * n),
        };
        g.gram().add_diagonal(shift)
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    // Gaussian elimination with partial pivoting; shares nothing with the
    // eigen route.
    fn gauss_solve(a: &HermitianMatrix, b: &[Complex64]) -> Vec<Complex64> {
        let n = a.dim();
        let mut m: Vec<Vec<Complex64>> = (0..n)
            .map(|i| {
                let mut row = a.row(i).to_vec();
                row.push(b[i]);
                row
            })
            .collect();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm()))
                .unwrap();
            m.swap(col, piv);
            for r in (col + 1)..n {
                let f = m[r][col] / m[col][col];
                for k in col..=n {
                    let v = m[col][k];
                    m[r][k] -= f * v;
                }
            }
        }
        let mut x = vec![ZERO; n];
        for i in (0..n).rev() {
            let mut acc = m[i][n];
            for k in (i + 1)..n {
                acc -= m[i][k] * x[k];
            }
            x[i] = acc / m[i][i];
        }
        x
    }

    #[test]
    fn matvec_identity_and_diag() {
        let v = vec![c(1.0, 0.0), c(0.0, 1.0), c(-2.0, 0.0)];
        assert_eq!(
            HermitianMatrix::identity(3).matvec(&v).unwrap().as_slice(),
            &v[..]
        );
        let d = HermitianMatrix::diag(&[2.0, 4.0]);
        let out = d.matvec(&[c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        assert_eq!(out.as_slice(), &[c(2.0, 0.0), c(0.0, 4.0)]);
    }

    #[test]
    fn matvec_matches_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_hermitian(&mut rng, 8);
        let v = random_vec(&mut rng, 8);
        let got = a.matvec(&v).unwrap();
        let mut want = vec![ZERO; 8];
        for i in 0..8 {
            for j in 0..8 {
                want[i] += a.get(i, j) * v[j];
            }
        }
        assert!(max_diff(&got, &want) < 1e-12);
    }

    #[test]
    fn matvec_dimension_mismatch() {
        let a = HermitianMatrix::identity(3);
        assert!(matches!(a.matvec(&[ONE; 2]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn dot_h_basics() {
        let x = [c(1.0, 0.0), c(0.0, 1.0)];
        assert_eq!(dot_h(&x, &x).unwrap(), c(2.0, 0.0));
        assert_eq!(dot_h(&[ONE, ZERO], &[ZERO, ONE]).unwrap(), ZERO);
        assert!(dot_h(&x, &x[..1]).is_err());
    }

    #[test]
    fn dot_h_conjugate_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let x = random_vec(&mut rng, 7);
            let y = random_vec(&mut rng, 7);
            let xy = dot_h(&x, &y).unwrap();
            let yx = dot_h(&y, &x).unwrap();
            assert!((xy - yx.conj()).norm() < 1e-14);
        }
    }

    #[test]
    fn construction_symmetrizes() {
        let a = HermitianMatrix::from_rows(&[
            vec![c(1.0, 0.5), c(2.0, 1.0)],
            vec![c(2.0, -3.0), c(3.0, 0.0)],
        ])
        .unwrap();
        assert_eq!(a.get(0, 0).im, 0.0);
        assert_eq!(a.get(0, 1), c(2.0, 2.0));
        assert_eq!(a.get(1, 0), c(2.0, -2.0));
    }

    #[test]
    fn matvec_is_self_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_hermitian(&mut rng, 10);
        let u = random_vec(&mut rng, 10);
        let v = random_vec(&mut rng, 10);
        let lhs = dot_h(&u, &a.matvec(&v).unwrap()).unwrap();
        let rhs = dot_h(&v, &a.matvec(&u).unwrap()).unwrap().conj();
        assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(1.0));
    }

    #[test]
    fn eigh_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [1, 2, 5, 17, 59] {
            let a = random_hermitian(&mut rng, n);
            let eig = a.eigh();
            let rec = eig.reconstruct();
            let err = norm2(
                &rec.as_slice()
                    .iter()
                    .zip(a.as_slice())
                    .map(|(x, y)| x - y)
                    .collect::<Vec<_>>(),
            );
            assert!(err <= 1e-10 * a.frobenius_norm(), "n={n} err={err}");
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
            // unitary columns
            for k in 0..n {
                let uk = eig.vector(k);
                assert!((norm2(&uk) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn solve_identity_and_diag() {
        let b = vec![c(1.0, 2.0), c(-3.0, 0.5), c(0.0, 1.0), c(4.0, 0.0)];
        let x = hermitian_solve(&HermitianMatrix::identity(4), &b).unwrap();
        assert!(max_diff(&x, &b) < 1e-15);
        let x = hermitian_solve(
            &HermitianMatrix::diag(&[2.0, 4.0]),
            &[c(2.0, 0.0), c(0.0, 8.0)],
        )
        .unwrap();
        assert!(max_diff(&x, &[c(1.0, 0.0), c(0.0, 2.0)]) < 1e-15);
    }

    #[test]
    fn solve_random_pd_residual_and_gauss_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_pd(&mut rng, 16, 0.1);
        let b = random_vec(&mut rng, 16);
        let x = hermitian_solve(&a, &b).unwrap();
        let ax = a.matvec(&x).unwrap();
        let res: Vec<_> = ax.iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(norm2(&res) / norm2(&b) < 1e-10);
        let xg = gauss_solve(&a, &b);
        assert!(max_diff(&x, &xg) / norm2(&xg) < 1e-10);
    }

    #[test]
    fn solve_inverts_matvec() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_pd(&mut rng, 12, 1.0);
        let v = random_vec(&mut rng, 12);
        let back = hermitian_solve(&a, &a.matvec(&v).unwrap()).unwrap();
        assert!(max_diff(&back, &v) <= 1e-8 * norm2(&v));
    }

    #[test]
    fn solve_rejects_singular() {
        let a = HermitianMatrix::diag(&[1.0, 0.0]);
        match hermitian_solve(&a, &[ONE, ONE]) {
            Err(Error::Singular { eigenvalue, .. }) => assert_eq!(eigenvalue, 0.0),
            other => panic!("expected singular error, got {other:?}"),
        }
        let a = HermitianMatrix::diag(&[1.0, -2.0]);
        assert!(matches!(
            hermitian_solve(&a, &[ONE, ONE]),
            Err(Error::Singular { .. })
        ));
        let a = HermitianMatrix::diag(&[1.0, 1e-15]);
        assert!(matches!(
            hermitian_solve(&a, &[ONE, ONE]),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn gram_and_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = CMatrix {
            rows: 5,
            cols: 3,
            data: random_vec(&mut rng, 15),
        };
        let g = a.gram();
        for i in 0..3 {
            for j in 0..3 {
                let want: Complex64 = (0..5).map(|r| a.get(r, i).conj() * a.get(r, j)).sum();
                assert!((g.get(i, j) - want).norm() < 1e-12);
            }
        }
        let v = random_vec(&mut rng, 5);
        let got = a.adjoint_matvec(&v).unwrap();
        for j in 0..3 {
            let want: Complex64 = (0..5).map(|r| a.get(r, j).conj() * v[r]).sum();
            assert!((got[j] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn complex_vector_validation() {
        assert!(ComplexVector::new(vec![]).is_err());
        assert!(ComplexVector::new(vec![c(f64::NAN, 0.0)]).is_err());
        assert!(ComplexVector::new(vec![ONE]).is_ok());
    }
}
