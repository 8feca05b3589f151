//! Hammerstein canceller: a piecewise-linear amplitude gain table followed
//! by a non-causal FIR filter.
//!
//! The model output is
//!
//! ```text
//! y[n] = Σ_{m=-D..=D} w[m] · g(x[n-m]),   g(u) = u · Σ_k h[k] φ_k(|u|)
//! ```
//!
//! where `φ_k` are degree-1 B-splines (hat functions) on `P` uniform knots
//! over `[0, a_max]`. The output is bilinear in `(h, w)` and holomorphic in
//! the packed parameter vector `z = [h; w]`.

use std::fmt::Write as _;
use std::fs;
use std::ops::{Deref, DerefMut};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, ComplexVector};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Headroom factor applied to the peak amplitude when fitting the knot grid.
pub const AMPLITUDE_HEADROOM: f64 = 1.05;

/// Uniform-knot hat-function basis over `[0, a_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplineBasis {
    size: usize,
    a_max: f64,
}

impl SplineBasis {
    pub fn new(size: usize, a_max: f64) -> Result<Self> {
        if size < 2 {
            return Err(Error::Usage(format!(
                "basis size must be at least 2, got {size}"
            )));
        }
        if !(a_max.is_finite() && a_max > 0.0) {
            return Err(Error::Usage(format!(
                "a_max must be positive and finite, got {a_max}"
            )));
        }
        Ok(SplineBasis { size, a_max })
    }

    /// Basis whose grid covers `x` with [`AMPLITUDE_HEADROOM`].
    pub fn for_signal(size: usize, x: &[Complex64]) -> Result<Self> {
        let peak = x.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return Err(Error::Usage(
                "cannot fit amplitude grid to an all-zero signal".into(),
            ));
        }
        Self::new(size, AMPLITUDE_HEADROOM * peak)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn a_max(&self) -> f64 {
        self.a_max
    }

    fn spacing(&self) -> f64 {
        self.a_max / (self.size - 1) as f64
    }

    pub fn knots(&self) -> Vec<f64> {
        let step = self.spacing();
        let mut k: Vec<f64> = (0..self.size).map(|i| i as f64 * step).collect();
        k[self.size - 1] = self.a_max;
        k
    }

    /// The two active hats at amplitude `a`: `(i, φ_i, φ_{i+1})`.
    /// Amplitudes past `a_max` clamp to the last knot.
    #[inline]
    pub(crate) fn active(&self, a: f64) -> (usize, f64, f64) {
        let last = self.size - 2;
        if a >= self.a_max {
            return (last, 0.0, 1.0);
        }
        let s = a / self.spacing();
        let i = (s.floor() as usize).min(last);
        let t = s - i as f64;
        (i, 1.0 - t, t)
    }

    /// All `P` basis values at amplitude `a`.
    pub fn eval(&self, a: f64) -> Result<Vec<f64>> {
        if !(a >= 0.0) {
            return Err(Error::Usage(format!(
                "amplitude must be non-negative, got {a}"
            )));
        }
        let mut out = vec![0.0; self.size];
        let (i, lo, hi) = self.active(a);
        out[i] = lo;
        out[i + 1] = hi;
        Ok(out)
    }
}

/// Packed parameter vector `z = [h(0..P); w(-D..=D)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    z: Vec<Complex64>,
    basis_size: usize,
}

impl ParamVector {
    pub fn pack(h: &[Complex64], w: &[Complex64]) -> Self {
        let mut z = Vec::with_capacity(h.len() + w.len());
        z.extend_from_slice(h);
        z.extend_from_slice(w);
        ParamVector {
            z,
            basis_size: h.len(),
        }
    }

    pub fn from_raw(z: Vec<Complex64>, basis_size: usize) -> Result<Self> {
        if basis_size > z.len() {
            return Err(Error::dim("ParamVector::from_raw", basis_size, z.len()));
        }
        Ok(ParamVector { z, basis_size })
    }

    pub fn unpack(&self) -> (&[Complex64], &[Complex64]) {
        self.z.split_at(self.basis_size)
    }

    pub fn basis_size(&self) -> usize {
        self.basis_size
    }

    pub fn taps(&self) -> usize {
        self.z.len() - self.basis_size
    }

    pub fn is_finite(&self) -> bool {
        self.z.iter().all(|v| v.is_finite())
    }

    /// `z + scale · dz`.
    pub fn step(&mut self, scale: f64, dz: &[Complex64]) -> Result<()> {
        if dz.len() != self.z.len() {
            return Err(Error::dim("ParamVector::step", self.z.len(), dz.len()));
        }
        for (zi, d) in self.z.iter_mut().zip(dz) {
            *zi += d * scale;
        }
        Ok(())
    }
}

impl Deref for ParamVector {
    type Target = [Complex64];

    fn deref(&self) -> &[Complex64] {
        &self.z
    }
}

impl DerefMut for ParamVector {
    fn deref_mut(&mut self) -> &mut [Complex64] {
        &mut self.z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HammersteinModel {
    h: Vec<Complex64>,
    w: Vec<Complex64>,
    basis: SplineBasis,
}

impl HammersteinModel {
    pub fn new(h: Vec<Complex64>, w: Vec<Complex64>, basis: SplineBasis) -> Result<Self> {
        if h.len() != basis.size() {
            return Err(Error::dim(
                "HammersteinModel::new (h)",
                basis.size(),
                h.len(),
            ));
        }
        if w.len().is_multiple_of(2) {
            return Err(Error::Usage(format!(
                "FIR length must be odd (2D+1), got {}",
                w.len()
            )));
        }
        Ok(HammersteinModel { h, w, basis })
    }

    /// Identity gain table (`h = 1`) and a zero FIR. Every `h` column of the
    /// Jacobian is zero here, so the first update fits a linear filter.
    pub fn linear_start(taps: usize, basis: SplineBasis) -> Result<Self> {
        Self::new(
            vec![Complex64::new(1.0, 0.0); basis.size()],
            vec![ZERO; taps],
            basis,
        )
    }

    pub fn h(&self) -> &[Complex64] {
        &self.h
    }

    pub fn w(&self) -> &[Complex64] {
        &self.w
    }

    pub fn basis(&self) -> &SplineBasis {
        &self.basis
    }

    pub fn taps(&self) -> usize {
        self.w.len()
    }

    pub fn half_len(&self) -> usize {
        (self.w.len() - 1) / 2
    }

    pub fn num_params(&self) -> usize {
        self.h.len() + self.w.len()
    }

    pub fn params(&self) -> ParamVector {
        ParamVector::pack(&self.h, &self.w)
    }

    pub fn set_params(&mut self, z: &ParamVector) -> Result<()> {
        if z.basis_size() != self.h.len() || z.taps() != self.w.len() {
            return Err(Error::dim(
                "HammersteinModel::set_params",
                self.num_params(),
                z.len(),
            ));
        }
        let (h, w) = z.unpack();
        self.h.copy_from_slice(h);
        self.w.copy_from_slice(w);
        Ok(())
    }

    /// Static nonlinearity `g(u) = u · Σ_k h_k φ_k(|u|)`.
    #[inline]
    pub fn nonlinearity(&self, u: Complex64) -> Complex64 {
        let (i, lo, hi) = self.basis.active(u.norm());
        u * (self.h[i] * lo + self.h[i + 1] * hi)
    }

    /// Model output over the whole sequence with zero padding at the edges.
    pub fn forward(&self, x: &[Complex64]) -> Result<ComplexVector> {
        if x.len() < self.w.len() {
            return Err(Error::Usage(format!(
                "signal length {} shorter than FIR length {}",
                x.len(),
                self.w.len()
            )));
        }
        let g: Vec<Complex64> = x.iter().map(|&u| self.nonlinearity(u)).collect();
        Ok(ComplexVector::from_vec_unchecked(self.filter_range(
            &g,
            0,
            x.len(),
            0,
            x.len(),
        )))
    }

    /// Model output for samples `offset..offset+len` of `x`.
    pub fn forward_block(
        &self,
        x: &[Complex64],
        offset: usize,
        len: usize,
    ) -> Result<ComplexVector> {
        check_block(x.len(), offset, len)?;
        let d = self.half_len();
        let lo = offset.saturating_sub(d);
        let hi = (offset + len + d).min(x.len());
        let g: Vec<Complex64> = x[lo..hi].iter().map(|&u| self.nonlinearity(u)).collect();
        Ok(ComplexVector::from_vec_unchecked(self.filter_range(
            &g,
            lo,
            x.len(),
            offset,
            len,
        )))
    }

    /// FIR stage over precomputed `g`, where `g[i]` holds sample `base + i`
    /// of a sequence of length `total`.
    fn filter_range(
        &self,
        g: &[Complex64],
        base: usize,
        total: usize,
        offset: usize,
        len: usize,
    ) -> Vec<Complex64> {
        let d = self.half_len() as isize;
        let base = base as isize;
        let total = total as isize;
        (offset..offset + len)
            .map(|n| {
                let n = n as isize;
                // y[n] = Σ_m w[m] g[n-m]; valid m keeps n-m inside [0, total)
                let m_lo = (n - total + 1).max(-d);
                let m_hi = n.min(d);
                let mut acc = ZERO;
                for m in m_lo..=m_hi {
                    acc += self.w[(m + d) as usize] * g[(n - m - base) as usize];
                }
                acc
            })
            .collect()
    }

    /// Jacobian `∂y/∂z` for samples `offset..offset+len`, shape `len × K`
    /// with columns ordered `[h; w]`. The error Jacobian is its negative.
    pub fn jacobian(&self, x: &[Complex64], offset: usize, len: usize) -> Result<CMatrix> {
        check_block(x.len(), offset, len)?;
        let p = self.h.len();
        let d = self.half_len() as isize;
        let total = x.len() as isize;
        let mut jac = CMatrix::zeros(len, self.num_params());
        for r in 0..len {
            let n = (offset + r) as isize;
            let m_lo = (n - total + 1).max(-d);
            let m_hi = n.min(d);
            for m in m_lo..=m_hi {
                let u = x[(n - m) as usize];
                let (i, lo, hi) = self.basis.active(u.norm());
                let wm = self.w[(m + d) as usize];
                // ∂y/∂h_k = Σ_m w_m u φ_k(|u|)
                let wu = wm * u;
                jac.set(r, i, jac.get(r, i) + wu * lo);
                jac.set(r, i + 1, jac.get(r, i + 1) + wu * hi);
                // ∂y/∂w_m = g(u)
                let col = p + (m + d) as usize;
                jac.set(r, col, u * (self.h[i] * lo + self.h[i + 1] * hi));
            }
        }
        Ok(jac)
    }

    /// Writes the model as plain text: `P`, `M` and `a_max` on one line
    /// each, then one `re im` line per packed parameter.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.h.len());
        let _ = writeln!(s, "{}", self.w.len());
        let _ = writeln!(s, "{}", self.basis.a_max());
        for v in self.h.iter().chain(&self.w) {
            let _ = writeln!(s, "{} {}", v.re, v.im);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::Format(format!("model file truncated before {what}")))
        };
        let p: usize = parse(next("P")?, "P")?;
        let m: usize = parse(next("M")?, "M")?;
        let a_max: f64 = parse(next("a_max")?, "a_max")?;
        let mut z = Vec::with_capacity(p + m);
        for k in 0..p + m {
            let line = next("parameters")?;
            let mut parts = line.split_whitespace();
            let (Some(re), Some(im), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Format(format!(
                    "parameter line {k} must hold `re im`"
                )));
            };
            z.push(Complex64::new(parse(re, "re")?, parse(im, "im")?));
        }
        if lines.next().is_some() {
            return Err(Error::Format("trailing data after parameters".into()));
        }
        let basis = SplineBasis::new(p, a_max)?;
        let w = z.split_off(p);
        HammersteinModel::new(z, w, basis)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

fn parse<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Format(format!("cannot parse {what} from {s:?}")))
}

fn check_block(total: usize, offset: usize, len: usize) -> Result<()> {
    if len == 0 || offset + len > total {
        return Err(Error::Usage(format!(
            "block {offset}..{} outside signal of length {total}",
            offset + len
        )));
    }
    Ok(())
}
