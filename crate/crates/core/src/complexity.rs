//! Per-update operation counts for the three adapters.
//!
//! The asymptotic costs are evaluated as literal polynomials with unit
//! leading constants:
//!
//! | method        | units per update        |
//! |---------------|-------------------------|
//! | mixed Newton  | `K³ + K²N + KN`         |
//! | gradient/Adam | `KN`                    |
//! | CG, L iters   | `KN + K²N + LK²`        |
//!
//! With K = 59 and N = 60 the ratios to mixed Newton come out as 0.93, 0.76,
//! 0.68, 0.59, 0.55, 0.52 for L = 50, 30, 20, 10, 5, 1 and 8.47e-3 for a
//! gradient step.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostModel {
    /// Number of complex parameters.
    pub k: u64,
    /// Block length.
    pub n: u64,
}

impl CostModel {
    pub fn new(k: u64, n: u64) -> Result<Self> {
        if k == 0 || n == 0 {
            return Err(Error::Usage(format!(
                "cost model needs positive K and N, got K={k}, N={n}"
            )));
        }
        Ok(CostModel { k, n })
    }
}

pub fn cost_mnm(c: &CostModel) -> u64 {
    let (k, n) = (c.k, c.n);
    k * k * k + k * k * n + k * n
}

pub fn cost_grad(c: &CostModel) -> u64 {
    c.k * c.n
}

pub fn cost_cg(c: &CostModel, iters: u64) -> u64 {
    let (k, n) = (c.k, c.n);
    k * n + k * k * n + iters * k * k
}

/// `cost / cost_mnm`.
pub fn relative(c: &CostModel, cost: u64) -> f64 {
    cost as f64 / cost_mnm(c) as f64
}
