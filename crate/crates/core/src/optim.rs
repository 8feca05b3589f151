//! Parameter adapters: mixed Newton, conjugate-gradient approximation of
//! the mixed Newton step, and Adam with a linearly decaying learning rate.
//!
//! The second-order methods consume a [`QuadraticModel`] (usually smoothed
//! through [`EmaState`]) and minimize
//!
//! ```text
//! f(x) = xᴴ M x + bᴴ x + xᴴ b
//! ```
//!
//! whose minimizer `x = -M⁻¹ b` is the mixed Newton increment.

use log::warn;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    dot_h_unchecked, hermitian_solve, norm2, norm2_sqr, ComplexVector, HermitianMatrix,
};
use crate::loss::QuadraticModel;
use crate::model::ParamVector;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Residual threshold (relative to `‖b‖`) at which CG stops early.
pub const CG_RESIDUAL_TOL: f64 = 1e-14;

/// Exponential moving average of the block Hessian and gradient.
#[derive(Debug, Clone)]
pub struct EmaState {
    lambda: f64,
    acc: Option<(HermitianMatrix, ComplexVector)>,
}

impl EmaState {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Usage(format!(
                "forgetting factor must lie in [0, 1], got {lambda}"
            )));
        }
        Ok(EmaState { lambda, acc: None })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn is_initialized(&self) -> bool {
        self.acc.is_some()
    }

    /// `H ← λH + (1-λ)M`, `g ← λg + (1-λ)b`. The first call copies `(M, b)`.
    pub fn update(&mut self, m: &HermitianMatrix, b: &[Complex64]) -> Result<()> {
        if m.dim() != b.len() {
            return Err(Error::dim("ema_update", m.dim(), b.len()));
        }
        if let Some((h, _)) = &self.acc {
            if h.dim() != m.dim() {
                return Err(Error::dim("ema_update", h.dim(), m.dim()));
            }
        }
        let lambda = self.lambda;
        self.acc = Some(match self.acc.take() {
            None => (m.clone(), ComplexVector::from_vec_unchecked(b.to_vec())),
            Some((h, g)) => {
                let h = h.combine(lambda, m, 1.0 - lambda)?;
                let g = g
                    .iter()
                    .zip(b)
                    .map(|(gi, bi)| gi * lambda + bi * (1.0 - lambda))
                    .collect();
                (h, ComplexVector::from_vec_unchecked(g))
            }
        });
        Ok(())
    }

    /// Smoothed quadratic model, or `None` before the first update.
    pub fn quadratic(&self) -> Option<QuadraticModel> {
        self.acc.as_ref().map(|(h, g)| QuadraticModel {
            m: h.clone(),
            b: g.clone(),
            c_const: 0.0,
        })
    }

    pub fn hessian(&self) -> Option<&HermitianMatrix> {
        self.acc.as_ref().map(|(h, _)| h)
    }

    pub fn gradient(&self) -> Option<&ComplexVector> {
        self.acc.as_ref().map(|(_, g)| g)
    }

    /// Moves the expansion point of the smoothed quadratic by `dz`:
    /// `g ← g + (H + γI)·dz`, so that `g` stays the gradient of the
    /// regularized model at the updated parameters.
    pub fn recenter(&mut self, dz: &[Complex64], gamma: f64) -> Result<()> {
        let Some((h, g)) = self.acc.as_mut() else {
            return Ok(());
        };
        if dz.len() != g.len() {
            return Err(Error::dim("ema_recenter", g.len(), dz.len()));
        }
        let hd = h.matvec(dz)?;
        for ((gi, hi), di) in g.iter_mut().zip(hd.iter()).zip(dz) {
            *gi += hi + di * gamma;
        }
        Ok(())
    }
}

/// `M + γI`.
pub fn regularize(m: &HermitianMatrix, gamma: f64) -> Result<HermitianMatrix> {
    if !(gamma >= 0.0) {
        return Err(Error::Usage(format!(
            "regularization must be non-negative, got {gamma}"
        )));
    }
    Ok(m.add_diagonal(gamma))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OptStepReport {
    pub step_norm: f64,
    pub grad_norm: f64,
    pub inner_iters_used: usize,
    /// Solver-side work in the same units as [`crate::complexity`]:
    /// `K³` for an eigen solve, `L·K²` for CG, `K` for an Adam update.
    pub flops_charged: u64,
}

/// Mixed Newton update `z ← z - μ (M + γI)⁻¹ b`.
pub fn mnm_step(
    z: &mut ParamVector,
    q: &QuadraticModel,
    mu: f64,
    gamma: f64,
) -> Result<OptStepReport> {
    if z.len() != q.dim() {
        return Err(Error::dim("mnm_step", q.dim(), z.len()));
    }
    let a = regularize(&q.m, gamma)?;
    let mut dz = hermitian_solve(&a, &q.b)?;
    for v in dz.iter_mut() {
        *v = -*v;
    }
    z.step(mu, &dz)?;
    let k = q.dim() as u64;
    Ok(OptStepReport {
        step_norm: mu.abs() * dz.norm(),
        grad_norm: norm2(&q.b),
        inner_iters_used: 0,
        flops_charged: k * k * k,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgConfig {
    /// Inner CG iterations per parameter update.
    pub iters: usize,
    /// Outer step size.
    pub mu: f64,
    /// Diagonal loading added to the Hessian.
    pub gamma: f64,
    /// Early exit when `|pᴴ M p| ≤ breakdown_tol · ‖p‖²`.
    pub breakdown_tol: f64,
}

impl Default for CgConfig {
    fn default() -> Self {
        CgConfig {
            iters: 20,
            mu: 1.0,
            gamma: 1e-4,
            breakdown_tol: 1e-14,
        }
    }
}

impl CgConfig {
    /// Checks a training configuration. A zero `mu` passes [`cg_step`]
    /// (it is a no-op there) but is rejected here.
    pub fn validate(&self) -> Result<()> {
        self.check_solver()?;
        if !(self.mu > 0.0) {
            return Err(Error::Config(format!(
                "mu must be positive, got {}",
                self.mu
            )));
        }
        Ok(())
    }

    fn check_solver(&self) -> Result<()> {
        if self.iters == 0 {
            return Err(Error::Config("CG iterations must be at least 1".into()));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::Config(format!(
                "gamma must be non-negative, got {}",
                self.gamma
            )));
        }
        if !(self.mu >= 0.0) {
            return Err(Error::Config(format!(
                "mu must be non-negative, got {}",
                self.mu
            )));
        }
        if !(self.breakdown_tol >= 0.0) {
            return Err(Error::Config(
                "breakdown tolerance must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CgSolution {
    pub x: ComplexVector,
    pub iterations: usize,
}

/// Search directions, residuals and iterates recorded by [`cg_solve_traced`].
#[derive(Debug, Clone, Default)]
pub struct CgTrace {
    /// `p_0 .. p_{n-1}` for the `n` completed iterations.
    pub directions: Vec<Vec<Complex64>>,
    /// `r_0 .. r_n`.
    pub residuals: Vec<Vec<Complex64>>,
    /// `x_0 .. x_n`.
    pub iterates: Vec<Vec<Complex64>>,
}

/// Runs up to `iters` conjugate-gradient iterations on
/// `f(x) = xᴴ M x + bᴴ x + xᴴ b` from `x0`.
///
/// Stops early once `‖r‖ ≤ 1e-14‖b‖` or the curvature along the search
/// direction falls under `breakdown_tol · ‖p‖²`; neither is an error.
pub fn cg_solve(
    m: &HermitianMatrix,
    b: &[Complex64],
    x0: &[Complex64],
    iters: usize,
    breakdown_tol: f64,
) -> Result<CgSolution> {
    cg_run(m, b, x0, iters, breakdown_tol, None)
}

pub fn cg_solve_traced(
    m: &HermitianMatrix,
    b: &[Complex64],
    x0: &[Complex64],
    iters: usize,
    breakdown_tol: f64,
) -> Result<(CgSolution, CgTrace)> {
    let mut trace = CgTrace::default();
    let sol = cg_run(m, b, x0, iters, breakdown_tol, Some(&mut trace))?;
    Ok((sol, trace))
}

fn cg_run(
    m: &HermitianMatrix,
    b: &[Complex64],
    x0: &[Complex64],
    iters: usize,
    breakdown_tol: f64,
    mut trace: Option<&mut CgTrace>,
) -> Result<CgSolution> {
    let k = m.dim();
    if b.len() != k {
        return Err(Error::dim("cg_solve (b)", k, b.len()));
    }
    if x0.len() != k {
        return Err(Error::dim("cg_solve (x0)", k, x0.len()));
    }
    if iters == 0 {
        return Err(Error::Usage("CG needs at least one iteration".into()));
    }

    let stop = CG_RESIDUAL_TOL * norm2(b);
    let mut x = x0.to_vec();
    // r_0 = M x_0 + b, p_0 = r_0
    let mut r = vec![ZERO; k];
    m.matvec_into(&x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri += bi;
    }
    let mut p = r.clone();
    let mut xi = vec![ZERO; k];
    if let Some(t) = trace.as_deref_mut() {
        t.residuals.push(r.clone());
        t.iterates.push(x.clone());
    }

    let mut used = 0;
    while used < iters {
        if norm2(&r) <= stop {
            break;
        }
        m.matvec_into(&p, &mut xi);
        let curvature = dot_h_unchecked(&p, &xi).re;
        if curvature.abs() <= breakdown_tol * norm2_sqr(&p) {
            break;
        }
        let alpha = -dot_h_unchecked(&p, &r) / curvature;
        for j in 0..k {
            x[j] += alpha * p[j];
            r[j] += alpha * xi[j];
        }
        let beta = -dot_h_unchecked(&xi, &r) / curvature;
        if let Some(t) = trace.as_deref_mut() {
            t.directions.push(p.clone());
            t.residuals.push(r.clone());
            t.iterates.push(x.clone());
        }
        for j in 0..k {
            p[j] = r[j] + beta * p[j];
        }
        used += 1;
    }

    Ok(CgSolution {
        x: ComplexVector::from_vec_unchecked(x),
        iterations: used,
    })
}

/// One outer update `z ← z + μ x_L` where `x_L` is the CG estimate of the
/// mixed Newton increment, started from zero.
pub fn cg_step(z: &mut ParamVector, q: &QuadraticModel, cfg: &CgConfig) -> Result<OptStepReport> {
    cfg.check_solver()?;
    if z.len() != q.dim() {
        return Err(Error::dim("cg_step", q.dim(), z.len()));
    }
    let a = regularize(&q.m, cfg.gamma)?;
    let x0 = vec![ZERO; q.dim()];
    let sol = cg_solve(&a, &q.b, &x0, cfg.iters, cfg.breakdown_tol)?;
    z.step(cfg.mu, &sol.x)?;
    let k = q.dim() as u64;
    Ok(OptStepReport {
        step_norm: cfg.mu * sol.x.norm(),
        grad_norm: norm2(&q.b),
        inner_iters_used: sol.iterations,
        flops_charged: sol.iterations as u64 * k * k,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Base learning rate.
    pub mu0: f64,
    pub alpha_start: f64,
    pub alpha_end: f64,
    /// Length of the learning-rate schedule.
    pub total_steps: u64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            mu0: 1e-4,
            alpha_start: 1.0,
            alpha_end: 1e-4,
            total_steps: 1,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("Adam betas must lie in [0, 1)".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::Config("Adam eps must be positive".into()));
        }
        if self.total_steps == 0 {
            return Err(Error::Config(
                "learning-rate schedule needs at least one step".into(),
            ));
        }
        Ok(())
    }
}

/// Linearly decaying learning rate from `μ0·α_start` at `t = 0` to
/// `μ0·α_end` at `t = T-1`. Out-of-range `t` is clamped.
pub fn lr_schedule(t: u64, cfg: &AdamConfig) -> f64 {
    let total = cfg.total_steps.max(1);
    if total == 1 {
        return cfg.mu0 * cfg.alpha_start;
    }
    let last = total - 1;
    let t = if t > last {
        warn!("schedule step {t} past end {last}, clamping");
        last
    } else {
        t
    };
    if t == last {
        return cfg.mu0 * cfg.alpha_end;
    }
    let frac = t as f64 / last as f64;
    cfg.mu0 * (cfg.alpha_start - frac * (cfg.alpha_start - cfg.alpha_end))
}

/// Adam moments over the stacked real vector `[Re z; Im z]`.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    steps: u64,
}

impl AdamState {
    pub fn new(num_params: usize) -> Self {
        AdamState {
            m: vec![0.0; 2 * num_params],
            v: vec![0.0; 2 * num_params],
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }
}

/// One Adam update driven by the Wirtinger gradient `b = (∂J/∂z*)ᵀ`.
///
/// The real gradient of `J` with respect to `(Re z, Im z)` is
/// `2·(Re b, Im b)`; that is what the moments see.
pub fn adam_step(
    z: &mut ParamVector,
    b: &[Complex64],
    state: &mut AdamState,
    cfg: &AdamConfig,
    t: u64,
) -> Result<OptStepReport> {
    let k = z.len();
    if b.len() != k {
        return Err(Error::dim("adam_step", k, b.len()));
    }
    if state.m.len() != 2 * k {
        return Err(Error::dim("adam_step (state)", state.m.len() / 2, k));
    }
    let lr = lr_schedule(t, cfg);
    state.steps += 1;
    let bc1 = 1.0 - cfg.beta1.powf(state.steps as f64);
    let bc2 = 1.0 - cfg.beta2.powf(state.steps as f64);
    let mut step_sq = 0.0;
    for j in 0..2 * k {
        let (idx, imag) = if j < k { (j, false) } else { (j - k, true) };
        let g = 2.0 * if imag { b[idx].im } else { b[idx].re };
        state.m[j] = cfg.beta1 * state.m[j] + (1.0 - cfg.beta1) * g;
        state.v[j] = cfg.beta2 * state.v[j] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[j] / bc1;
        let v_hat = state.v[j] / bc2;
        let delta = lr * m_hat / (v_hat.sqrt() + cfg.eps);
        if imag {
            z[idx].im -= delta;
        } else {
            z[idx].re -= delta;
        }
        step_sq += delta * delta;
    }
    Ok(OptStepReport {
        step_norm: step_sq.sqrt(),
        grad_norm: norm2(b),
        inner_iters_used: 0,
        flops_charged: k as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMatrix;
    use crate::loss::quadratic_value;
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

    fn random_pd(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> HermitianMatrix {
        // tall Gaussian factor keeps the spectrum bounded away from zero
        let rows: Vec<_> = (0..2 * n).map(|_| random_vec(rng, n)).collect();
        let g = CMatrix::from_rows(&rows).unwrap().gram();
        let scaled: Vec<_> = g.as_slice().iter().map(|v| v / (2 * n) as f64).collect();
        HermitianMatrix::from_dense(n, scaled)
            .unwrap()
            .add_diagonal(shift)
    }

    fn quad(m: HermitianMatrix, b: Vec<Complex64>) -> QuadraticModel {
        QuadraticModel::new(m, ComplexVector::new(b).unwrap(), 0.0).unwrap()
    }

    fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        let diff: Vec<_> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        norm2(&diff) / norm2(b)
    }

    #[test]
    fn recenter_after_exact_newton_step_zeroes_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let m = random_pd(&mut rng, 9, 0.0);
        let b = random_vec(&mut rng, 9);
        let mut ema = EmaState::new(0.9).unwrap();
        ema.update(&m, &b).unwrap();
        let mut z = ParamVector::from_raw(vec![ZERO; 9], 0).unwrap();
        mnm_step(&mut z, &ema.quadratic().unwrap(), 1.0, 1e-4).unwrap();
        ema.recenter(&z, 1e-4).unwrap();
        assert!(norm2(ema.gradient().unwrap()) < 1e-10 * norm2(&b));
        assert!(ema.recenter(&[ZERO; 3], 0.0).is_err());
    }

    #[test]
    fn recenter_matches_quadratic_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let m = random_pd(&mut rng, 6, 0.0);
        let b = random_vec(&mut rng, 6);
        let dz = random_vec(&mut rng, 6);
        let mut ema = EmaState::new(0.5).unwrap();
        assert!(ema.recenter(&dz, 0.0).is_ok());
        ema.update(&m, &b).unwrap();
        ema.recenter(&dz, 0.25).unwrap();
        let md = m.add_diagonal(0.25).matvec(&dz).unwrap();
        for i in 0..6 {
            assert!((ema.gradient().unwrap()[i] - (b[i] + md[i])).norm() < 1e-12);
        }
    }

    #[test]
    fn ema_without_memory_tracks_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let mut ema = EmaState::new(0.0).unwrap();
        for _ in 0..3 {
            let m = random_pd(&mut rng, 4, 0.0);
            let b = random_vec(&mut rng, 4);
            ema.update(&m, &b).unwrap();
            assert_eq!(ema.hessian().unwrap(), &m);
            assert_eq!(ema.gradient().unwrap().as_slice(), &b[..]);
        }
    }

    #[test]
    fn ema_frozen_after_init() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let mut ema = EmaState::new(1.0).unwrap();
        let m0 = random_pd(&mut rng, 3, 0.0);
        let b0 = random_vec(&mut rng, 3);
        ema.update(&m0, &b0).unwrap();
        for _ in 0..4 {
            ema.update(&random_pd(&mut rng, 3, 0.0), &random_vec(&mut rng, 3))
                .unwrap();
        }
        assert_eq!(ema.hessian().unwrap(), &m0);
        assert_eq!(ema.gradient().unwrap().as_slice(), &b0[..]);
    }

    #[test]
    fn ema_matches_unrolled_recurrence() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let ms: Vec<_> = (0..3).map(|_| random_pd(&mut rng, 3, 0.0)).collect();
        let bs: Vec<_> = (0..3).map(|_| random_vec(&mut rng, 3)).collect();
        let mut ema = EmaState::new(0.9).unwrap();
        for (m, b) in ms.iter().zip(&bs) {
            ema.update(m, b).unwrap();
        }
        // 0.81·X₀ + 0.09·X₁ + 0.1·X₂
        let w = [0.81, 0.09, 0.1];
        let h = ema.hessian().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want: Complex64 = (0..3).map(|t| ms[t].get(i, j) * w[t]).sum();
                assert!((h.get(i, j) - want).norm() < 1e-13);
            }
            let want: Complex64 = (0..3).map(|t| bs[t][i] * w[t]).sum();
            assert!((ema.gradient().unwrap()[i] - want).norm() < 1e-13);
        }
    }

    #[test]
    fn ema_validation() {
        assert!(EmaState::new(1.5).is_err());
        let mut ema = EmaState::new(0.5).unwrap();
        assert!(ema
            .update(&HermitianMatrix::identity(2), &[ZERO; 3])
            .is_err());
        ema.update(&HermitianMatrix::identity(2), &[ZERO; 2])
            .unwrap();
        assert!(ema
            .update(&HermitianMatrix::identity(3), &[ZERO; 3])
            .is_err());
        assert!(ema.is_initialized());
    }

    #[test]
    fn regularize_shifts_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let m = random_pd(&mut rng, 6, 0.0);
        assert_eq!(regularize(&m, 0.0).unwrap(), m);
        assert_eq!(
            regularize(&HermitianMatrix::zeros(3), 1e-4).unwrap(),
            HermitianMatrix::diag(&[1e-4; 3])
        );
        let before = m.eigh().values[0];
        let after = regularize(&m, 0.25).unwrap().eigh().values[0];
        assert!((after - before - 0.25).abs() < 1e-12);
        assert!(regularize(&m, -1.0).is_err());
    }

    #[test]
    fn scalar_newton() {
        let q = quad(HermitianMatrix::diag(&[2.0]), vec![c(4.0, 0.0)]);
        let mut z = ParamVector::from_raw(vec![c(10.0, 0.0)], 0).unwrap();
        mnm_step(&mut z, &q, 1.0, 0.0).unwrap();
        assert!((z[0] - c(8.0, 0.0)).norm() < 1e-15);
        let mut z = ParamVector::from_raw(vec![c(10.0, 0.0)], 0).unwrap();
        mnm_step(&mut z, &q, 0.5, 0.0).unwrap();
        assert!((z[0] - c(9.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn mnm_propagates_singularity() {
        let q = quad(HermitianMatrix::diag(&[1.0, 0.0]), vec![ZERO, c(1.0, 0.0)]);
        let mut z = ParamVector::from_raw(vec![ZERO; 2], 0).unwrap();
        assert!(matches!(
            mnm_step(&mut z, &q, 1.0, 0.0),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn cg_identity_one_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let b = random_vec(&mut rng, 5);
        let sol = cg_solve(&HermitianMatrix::identity(5), &b, &[ZERO; 5], 1, 1e-14).unwrap();
        for (x, bi) in sol.x.iter().zip(&b) {
            assert!((x + bi).norm() < 1e-15);
        }
        assert_eq!(sol.iterations, 1);
    }

    #[test]
    fn cg_diag_two_iterations() {
        let one = c(1.0, 0.0);
        let sol = cg_solve(
            &HermitianMatrix::diag(&[1.0, 2.0]),
            &[one, one],
            &[ZERO; 2],
            2,
            1e-14,
        )
        .unwrap();
        assert!((sol.x[0] - c(-1.0, 0.0)).norm() < 1e-14);
        assert!((sol.x[1] - c(-0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn cg_full_length_matches_direct_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let m = random_pd(&mut rng, 59, 0.0).add_diagonal(1e-4);
        let b = random_vec(&mut rng, 59);
        let sol = cg_solve(&m, &b, &[ZERO; 59], 59, 1e-14).unwrap();
        let mut direct = hermitian_solve(&m, &b).unwrap();
        for v in direct.iter_mut() {
            *v = -*v;
        }
        assert!(rel_err(&sol.x, &direct) <= 1e-8);
    }

    #[test]
    fn cg_zero_rhs_exits_immediately() {
        let sol = cg_solve(
            &HermitianMatrix::identity(3),
            &[ZERO; 3],
            &[ZERO; 3],
            5,
            1e-14,
        )
        .unwrap();
        assert_eq!(sol.iterations, 0);
        assert!(sol.x.iter().all(|v| *v == ZERO));
    }

    #[test]
    fn cg_breakdown_is_early_exit() {
        // zero curvature along b
        let m = HermitianMatrix::diag(&[0.0, 1.0]);
        let sol = cg_solve(&m, &[c(1.0, 0.0), ZERO], &[ZERO; 2], 3, 1e-14).unwrap();
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn cg_first_iterate_is_scaled_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let m = random_pd(&mut rng, 10, 0.5);
        let b = random_vec(&mut rng, 10);
        let sol = cg_solve(&m, &b, &[ZERO; 10], 1, 1e-14).unwrap();
        let bb = norm2_sqr(&b);
        let bmb = dot_h_unchecked(&b, &m.matvec(&b).unwrap()).re;
        let want: Vec<_> = b.iter().map(|v| v * (-bb / bmb)).collect();
        assert!(rel_err(&sol.x, &want) < 1e-13);
    }

    #[test]
    fn cg_conjugacy_orthogonality_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for n in [8, 16, 32] {
            let m = random_pd(&mut rng, n, 1e-4);
            let b = random_vec(&mut rng, n);
            // global conjugacy decays once the residual nears round-off
            let iters = n / 2;
            let (_, tr) = cg_solve_traced(&m, &b, &vec![ZERO; n], iters, 1e-14).unwrap();
            let mnorm = |p: &[Complex64]| dot_h_unchecked(p, &m.matvec(p).unwrap()).re.sqrt();
            for i in 0..tr.directions.len() {
                let pi = &tr.directions[i];
                let mpi = m.matvec(pi).unwrap();
                for j in 0..i {
                    let pj = &tr.directions[j];
                    let v = dot_h_unchecked(pj, &mpi).norm();
                    assert!(v <= 1e-8 * mnorm(pi) * mnorm(pj), "n={n} conj({j},{i})={v}");
                }
                let r_next = &tr.residuals[i + 1];
                for j in 0..=i {
                    let pj = &tr.directions[j];
                    let v = dot_h_unchecked(r_next, pj).norm();
                    assert!(
                        v <= 1e-8 * norm2(r_next) * norm2(pj),
                        "n={n} orth({i},{j})={v}"
                    );
                }
            }
            let f: Vec<f64> = tr
                .iterates
                .iter()
                .map(|x| quadratic_value(&m, &b, x).unwrap())
                .collect();
            for w in f.windows(2) {
                assert!(w[1] <= w[0] + 1e-12 * w[0].abs());
            }
        }
    }

    #[test]
    fn cg_step_equals_mnm_at_full_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(48);
        let m = random_pd(&mut rng, 12, 0.0);
        let q = quad(m, random_vec(&mut rng, 12));
        let z0 = ParamVector::from_raw(random_vec(&mut rng, 12), 4).unwrap();
        let mut a = z0.clone();
        let mut b = z0.clone();
        mnm_step(&mut a, &q, 1.0, 1e-4).unwrap();
        let cfg = CgConfig {
            iters: 12,
            mu: 1.0,
            gamma: 1e-4,
            breakdown_tol: 1e-14,
        };
        let rep = cg_step(&mut b, &q, &cfg).unwrap();
        assert!(rel_err(&b, &a) < 1e-8);
        assert!(rep.inner_iters_used <= 12);
    }

    #[test]
    fn cg_step_single_iteration_follows_negative_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(49);
        let q = quad(random_pd(&mut rng, 6, 0.3), random_vec(&mut rng, 6));
        let z0 = ParamVector::from_raw(random_vec(&mut rng, 6), 2).unwrap();
        let mut z = z0.clone();
        let cfg = CgConfig {
            iters: 1,
            mu: 0.7,
            gamma: 1e-4,
            breakdown_tol: 1e-14,
        };
        cg_step(&mut z, &q, &cfg).unwrap();
        let dz: Vec<_> = z.iter().zip(z0.iter()).map(|(a, b)| a - b).collect();
        // dz = -s·b with s real and positive
        let s = -dot_h_unchecked(&q.b, &dz) / norm2_sqr(&q.b);
        assert!(s.re > 0.0 && s.im.abs() < 1e-12 * s.re);
        let resid: Vec<_> = dz
            .iter()
            .zip(q.b.iter())
            .map(|(d, bi)| d + bi * s.re)
            .collect();
        assert!(norm2(&resid) < 1e-12 * norm2(&dz));
    }

    #[test]
    fn cg_step_with_zero_mu_is_noop() {
        let q = quad(HermitianMatrix::identity(2), vec![c(1.0, 0.0), ZERO]);
        let mut z = ParamVector::from_raw(vec![c(1.0, 2.0), c(3.0, 4.0)], 1).unwrap();
        let cfg = CgConfig {
            mu: 0.0,
            ..CgConfig::default()
        };
        cg_step(&mut z, &q, &cfg).unwrap();
        assert_eq!(&z[..], &[c(1.0, 2.0), c(3.0, 4.0)]);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn lr_schedule_endpoints() {
        let cfg = AdamConfig {
            total_steps: 101,
            ..AdamConfig::default()
        };
        assert_eq!(lr_schedule(0, &cfg), 1e-4);
        assert_eq!(lr_schedule(100, &cfg), 1e-8);
        assert!((lr_schedule(50, &cfg) - 1e-4 * (1.0 + 1e-4) / 2.0).abs() < 1e-20);
        // clamped past the end
        assert_eq!(lr_schedule(500, &cfg), 1e-8);
    }

    #[test]
    fn adam_zero_gradient_is_noop() {
        let mut z = ParamVector::from_raw(vec![c(1.0, -1.0); 3], 1).unwrap();
        let z0 = z.clone();
        let mut st = AdamState::new(3);
        let cfg = AdamConfig {
            total_steps: 10,
            ..AdamConfig::default()
        };
        adam_step(&mut z, &[ZERO; 3], &mut st, &cfg, 0).unwrap();
        assert_eq!(z, z0);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let b = random_vec(&mut rng, 5);
        let mut z = ParamVector::from_raw(vec![ZERO; 5], 2).unwrap();
        let mut st = AdamState::new(5);
        let cfg = AdamConfig {
            total_steps: 10,
            ..AdamConfig::default()
        };
        adam_step(&mut z, &b, &mut st, &cfg, 0).unwrap();
        let lr = lr_schedule(0, &cfg);
        for (zi, bi) in z.iter().zip(&b) {
            for (d, g) in [(zi.re, bi.re), (zi.im, bi.im)] {
                assert!(d.abs() <= lr && d.abs() >= 0.9 * lr);
                assert!(d * g < 0.0);
            }
        }
    }

    // Independent Adam over separate real/imaginary arrays.
    fn reference_adam(
        z0: &[Complex64],
        grad: impl Fn(&[Complex64]) -> Vec<Complex64>,
        steps: u64,
        cfg: &AdamConfig,
    ) -> Vec<Complex64> {
        let k = z0.len();
        let mut re: Vec<f64> = z0.iter().map(|v| v.re).collect();
        let mut im: Vec<f64> = z0.iter().map(|v| v.im).collect();
        let (mut m_re, mut m_im, mut v_re, mut v_im) =
            (vec![0.0; k], vec![0.0; k], vec![0.0; k], vec![0.0; k]);
        for t in 0..steps {
            let z: Vec<_> = (0..k).map(|i| c(re[i], im[i])).collect();
            let g = grad(&z);
            let lr = cfg.mu0
                * (cfg.alpha_start
                    - (t as f64 / (cfg.total_steps - 1) as f64)
                        * (cfg.alpha_start - cfg.alpha_end));
            let n = (t + 1) as i32;
            for i in 0..k {
                let (gr, gi) = (2.0 * g[i].re, 2.0 * g[i].im);
                m_re[i] = cfg.beta1 * m_re[i] + (1.0 - cfg.beta1) * gr;
                m_im[i] = cfg.beta1 * m_im[i] + (1.0 - cfg.beta1) * gi;
                v_re[i] = cfg.beta2 * v_re[i] + (1.0 - cfg.beta2) * gr * gr;
                v_im[i] = cfg.beta2 * v_im[i] + (1.0 - cfg.beta2) * gi * gi;
                let c1 = 1.0 - cfg.beta1.powi(n);
                let c2 = 1.0 - cfg.beta2.powi(n);
                re[i] -= lr * (m_re[i] / c1) / ((v_re[i] / c2).sqrt() + cfg.eps);
                im[i] -= lr * (m_im[i] / c1) / ((v_im[i] / c2).sqrt() + cfg.eps);
            }
        }
        (0..k).map(|i| c(re[i], im[i])).collect()
    }

    #[test]
    fn adam_matches_reference_on_quadratic() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let m = random_pd(&mut rng, 4, 0.5);
        let target = random_vec(&mut rng, 4);
        // J(z) = (z - t)ᴴ M (z - t), gradient b = M (z - t)
        let grad = |z: &[Complex64]| {
            let d: Vec<_> = z.iter().zip(&target).map(|(a, b)| a - b).collect();
            m.matvec(&d).unwrap().into_inner()
        };
        let cfg = AdamConfig {
            mu0: 0.05,
            total_steps: 10,
            ..AdamConfig::default()
        };
        let z0 = random_vec(&mut rng, 4);
        let mut z = ParamVector::from_raw(z0.clone(), 2).unwrap();
        let mut st = AdamState::new(4);
        for t in 0..10 {
            let b = grad(&z);
            adam_step(&mut z, &b, &mut st, &cfg, t).unwrap();
        }
        let want = reference_adam(&z0, grad, 10, &cfg);
        for (a, b) in z.iter().zip(&want) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
