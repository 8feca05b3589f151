//! Synthetic full-duplex testbench: OFDM transmit waveform, memoryless
//! polynomial PA, FIR leakage channel and the resulting interference
//! dataset.
//!
//! Dataset files are little-endian binary:
//!
//! ```text
//! "SICD" | version: u32 | length: u64 | x: length × (f64 re, f64 im)
//!        | d: length × (f64 re, f64 im) | UTF-8 JSON metadata until EOF
//! ```

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2_sqr, ComplexVector};
use crate::model::{HammersteinModel, SplineBasis};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub const DATASET_MAGIC: &[u8; 4] = b"SICD";
pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveformConfig {
    pub bandwidth_hz: f64,
    pub sample_rate_hz: f64,
    pub n_samples: usize,
    pub qam_order: usize,
    pub fft_size: usize,
    pub cp_len: usize,
    /// Length of the transmit channel filter; 0 leaves the raw OFDM symbols.
    pub tx_filter_taps: usize,
    pub seed: u64,
}

impl Default for WaveformConfig {
    fn default() -> Self {
        WaveformConfig {
            bandwidth_hz: 60e6,
            sample_rate_hz: 484e6,
            n_samples: 78_960,
            qam_order: 16,
            fft_size: 1024,
            cp_len: 72,
            tx_filter_taps: 1023,
            seed: 0,
        }
    }
}

impl WaveformConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz < self.sample_rate_hz) {
            return Err(Error::Config(format!(
                "bandwidth {} Hz must be positive and below the sample rate {} Hz",
                self.bandwidth_hz, self.sample_rate_hz
            )));
        }
        if self.n_samples == 0 {
            return Err(Error::Config("n_samples must be positive".into()));
        }
        if self.fft_size < 4 || self.cp_len > self.fft_size {
            return Err(Error::Config(format!(
                "invalid OFDM numerology: fft_size {}, cp_len {}",
                self.fft_size, self.cp_len
            )));
        }
        let side = qam_side(self.qam_order).ok_or_else(|| {
            Error::Config(format!(
                "QAM order {} is not a square power of two",
                self.qam_order
            ))
        })?;
        debug_assert!(side >= 2);
        if self.occupied_bins() >= self.fft_size {
            return Err(Error::Config(
                "occupied bandwidth does not fit the FFT".into(),
            ));
        }
        if self.tx_filter_taps.is_multiple_of(2) && self.tx_filter_taps != 0 {
            return Err(Error::Config("tx_filter_taps must be odd (or 0)".into()));
        }
        Ok(())
    }

    /// Number of modulated subcarriers, DC excluded.
    pub fn occupied_bins(&self) -> usize {
        (self.fft_size as f64 * self.bandwidth_hz / self.sample_rate_hz).ceil() as usize
    }

    /// Subcarrier indices above and below DC: `(positive, negative)`.
    pub fn bin_split(&self) -> (usize, usize) {
        let n = self.occupied_bins();
        (n.div_ceil(2), n / 2)
    }

    pub fn subcarrier_spacing_hz(&self) -> f64 {
        self.sample_rate_hz / self.fft_size as f64
    }
}

fn qam_side(order: usize) -> Option<usize> {
    if order < 4 || !order.is_power_of_two() {
        return None;
    }
    let side = (order as f64).sqrt().round() as usize;
    (side * side == order).then_some(side)
}

/// Unit-power QAM-OFDM baseband waveform, deterministic in `cfg.seed`.
pub fn gen_ofdm(cfg: &WaveformConfig) -> Result<ComplexVector> {
    cfg.validate()?;
    let side = qam_side(cfg.qam_order).unwrap_or(2);
    let n_fft = cfg.fft_size;
    let (pos, neg) = cfg.bin_split();
    let bins: Vec<usize> = (1..=pos).chain((1..=neg).map(|k| n_fft - k)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(n_fft);
    let level = |i: usize| (2 * i) as f64 - (side - 1) as f64;

    // extra symbols cover the filter transient at the start
    let pad = cfg.tx_filter_taps / 2;
    let target = cfg.n_samples + 2 * pad;
    let mut out = Vec::with_capacity(target + n_fft + cfg.cp_len);
    let mut symbol = vec![ZERO; n_fft];
    while out.len() < target {
        symbol.iter_mut().for_each(|v| *v = ZERO);
        for &b in &bins {
            let i = rng.random_range(0..side);
            let q = rng.random_range(0..side);
            symbol[b] = Complex64::new(level(i), level(q));
        }
        ifft.process(&mut symbol);
        out.extend_from_slice(&symbol[n_fft - cfg.cp_len..]);
        out.extend_from_slice(&symbol);
    }

    let mut x = if cfg.tx_filter_taps > 0 {
        let taps = lowpass_taps(
            cfg.tx_filter_taps,
            0.49 * cfg.bandwidth_hz / cfg.sample_rate_hz,
        );
        let filtered = convolve(&out[..target], &taps);
        filtered[2 * pad..2 * pad + cfg.n_samples].to_vec()
    } else {
        out.truncate(cfg.n_samples);
        out
    };
    normalize_power(&mut x);
    Ok(ComplexVector::from_vec_unchecked(x))
}

/// Blackman-windowed sinc with unit DC gain; `cutoff` is in cycles/sample.
fn lowpass_taps(len: usize, cutoff: f64) -> Vec<f64> {
    let mid = (len - 1) as f64 / 2.0;
    let mut taps: Vec<f64> = (0..len)
        .map(|i| {
            let t = i as f64 - mid;
            let sinc = if t == 0.0 {
                2.0 * cutoff
            } else {
                (2.0 * PI * cutoff * t).sin() / (PI * t)
            };
            let ph = 2.0 * PI * i as f64 / (len - 1).max(1) as f64;
            sinc * (0.42 - 0.5 * ph.cos() + 0.08 * (2.0 * ph).cos())
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

fn convolve(x: &[Complex64], taps: &[f64]) -> Vec<Complex64> {
    (0..x.len())
        .map(|n| {
            let kmax = n.min(taps.len() - 1);
            (0..=kmax).fold(ZERO, |acc, k| acc + x[n - k] * taps[k])
        })
        .collect()
}

fn normalize_power(x: &mut [Complex64]) {
    let p = norm2_sqr(x) / x.len() as f64;
    if p > 0.0 {
        let s = 1.0 / p.sqrt();
        x.iter_mut().for_each(|v| *v *= s);
    }
}

/// Odd-order memoryless polynomial PA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaSimModel {
    pub c1: Complex64,
    pub c3: Complex64,
    pub c5: Complex64,
    pub c7: Complex64,
    /// Rescale the PA output to unit average power in [`make_dataset`].
    pub normalize_output: bool,
}

impl Default for PaSimModel {
    fn default() -> Self {
        PaSimModel {
            c1: Complex64::new(1.0, 0.0),
            c3: Complex64::new(-0.05, 0.01),
            c5: Complex64::new(0.002, -0.001),
            c7: ZERO,
            normalize_output: true,
        }
    }
}

impl PaSimModel {
    pub fn linear() -> Self {
        PaSimModel {
            c1: Complex64::new(1.0, 0.0),
            c3: ZERO,
            c5: ZERO,
            c7: ZERO,
            normalize_output: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c1 == ZERO {
            return Err(Error::Config("PA linear gain c1 must be nonzero".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn gain(&self, amplitude_sq: f64) -> Complex64 {
        let a = amplitude_sq;
        self.c1 + self.c3 * a + self.c5 * (a * a) + self.c7 * (a * a * a)
    }
}

/// `y = c1·x + c3·x|x|² + c5·x|x|⁴ + c7·x|x|⁶`.
pub fn pa_apply(x: &[Complex64], pa: &PaSimModel) -> ComplexVector {
    ComplexVector::from_vec_unchecked(x.iter().map(|&v| v * pa.gain(v.norm_sqr())).collect())
}

/// FIR emulation of the transmit-to-receive leakage path.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakageChannel {
    taps: Vec<Complex64>,
}

pub const LEAKAGE_TAPS: usize = 51;
pub const LEAKAGE_DECAY_DB_PER_TAP: f64 = 0.5;

impl LeakageChannel {
    /// Takes arbitrary taps and scales them to unit energy.
    pub fn from_taps(mut taps: Vec<Complex64>) -> Result<Self> {
        let energy = norm2_sqr(&taps);
        if taps.is_empty() || !(energy > 0.0) || !energy.is_finite() {
            return Err(Error::Config(
                "leakage channel needs at least one nonzero finite tap".into(),
            ));
        }
        let s = 1.0 / energy.sqrt();
        taps.iter_mut().for_each(|t| *t *= s);
        Ok(LeakageChannel { taps })
    }

    /// Complex Gaussian taps with an exponential power profile.
    pub fn random(seed: u64, n_taps: usize, decay_db_per_tap: f64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let taps = (0..n_taps)
            .map(|k| {
                let amp = 10f64.powf(-decay_db_per_tap * k as f64 / 20.0) / 2f64.sqrt();
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im) * amp
            })
            .collect();
        Self::from_taps(taps)
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }
}

/// Causal convolution with zero initial state; output has the input length.
pub fn fir_filter(x: &[Complex64], ch: &LeakageChannel) -> ComplexVector {
    let taps = &ch.taps;
    let y = (0..x.len())
        .map(|n| {
            let kmax = n.min(taps.len() - 1);
            (0..=kmax).fold(ZERO, |acc, k| acc + taps[k] * x[n - k])
        })
        .collect();
    ComplexVector::from_vec_unchecked(y)
}

/// Parameters of the reference Hammerstein system used for matched data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthConfig {
    pub seed: u64,
    pub taps: usize,
    pub basis_size: usize,
}

impl TruthConfig {
    /// Compressive gain table with a small seeded perturbation, followed by
    /// a centred random leakage FIR.
    pub fn build(&self, x: &[Complex64]) -> Result<HammersteinModel> {
        let basis = SplineBasis::for_signal(self.basis_size, x)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let p = self.basis_size;
        let h = (0..p)
            .map(|k| {
                let r = k as f64 / (p - 1) as f64;
                let base = Complex64::from_polar(1.0 - 0.12 * r * r, 0.25 * r * r);
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                base + Complex64::new(re, im) * 0.01
            })
            .collect();
        let w = LeakageChannel::random(rng.random(), self.taps, LEAKAGE_DECAY_DB_PER_TAP)?.taps;
        HammersteinModel::new(h, w, basis)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalSource {
    /// PA followed by a random causal leakage FIR.
    PaChain { pa: PaSimModel, channel_seed: u64 },
    /// Output of a reference Hammerstein model.
    Hammerstein(TruthConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub waveform: WaveformConfig,
    pub source: SignalSource,
    /// Additive white noise level relative to the interference power.
    pub noise_db: Option<f64>,
    pub noise_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: ComplexVector,
    pub d: ComplexVector,
    pub meta: DatasetMeta,
}

/// Complex white Gaussian noise at `level_db` relative to the power of `d`.
pub fn add_noise(d: &mut [Complex64], level_db: f64, seed: u64) {
    let p = norm2_sqr(d) / d.len() as f64;
    let sigma = (p * 10f64.powf(level_db / 10.0) / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in d.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v += Complex64::new(re, im) * sigma;
    }
}

/// `x = gen_ofdm`, `d = fir_filter(pa_apply(x))`, plus optional noise.
pub fn make_dataset(
    wcfg: &WaveformConfig,
    pa: &PaSimModel,
    ch: &LeakageChannel,
    noise_db: Option<f64>,
    noise_seed: u64,
    channel_seed: u64,
) -> Result<Dataset> {
    pa.validate()?;
    let x = gen_ofdm(wcfg)?;
    let mut amp = pa_apply(&x, pa);
    if pa.normalize_output {
        normalize_power(&mut amp);
    }
    let mut d = fir_filter(&amp, ch);
    if let Some(db) = noise_db {
        add_noise(&mut d, db, noise_seed);
    }
    Ok(Dataset {
        x,
        d,
        meta: DatasetMeta {
            waveform: *wcfg,
            source: SignalSource::PaChain {
                pa: *pa,
                channel_seed,
            },
            noise_db,
            noise_seed,
        },
    })
}

/// Interference produced by a reference Hammerstein model in the trained family.
pub fn make_matched_dataset(
    wcfg: &WaveformConfig,
    truth: &TruthConfig,
    noise_db: Option<f64>,
    noise_seed: u64,
) -> Result<Dataset> {
    let x = gen_ofdm(wcfg)?;
    let model = truth.build(&x)?;
    let mut d = model.forward(&x)?;
    if let Some(db) = noise_db {
        add_noise(&mut d, db, noise_seed);
    }
    Ok(Dataset {
        x,
        d,
        meta: DatasetMeta {
            waveform: *wcfg,
            source: SignalSource::Hammerstein(*truth),
            noise_db,
            noise_seed,
        },
    })
}

/// Builds a dataset from its metadata alone.
pub fn generate(meta: &DatasetMeta) -> Result<Dataset> {
    match &meta.source {
        SignalSource::PaChain { pa, channel_seed } => {
            let ch = LeakageChannel::random(*channel_seed, LEAKAGE_TAPS, LEAKAGE_DECAY_DB_PER_TAP)?;
            make_dataset(
                &meta.waveform,
                pa,
                &ch,
                meta.noise_db,
                meta.noise_seed,
                *channel_seed,
            )
        }
        SignalSource::Hammerstein(truth) => {
            make_matched_dataset(&meta.waveform, truth, meta.noise_db, meta.noise_seed)
        }
    }
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let n = self.x.len();
        let meta = serde_json::to_string(&self.meta).map_err(|e| Error::Format(e.to_string()))?;
        let mut buf = Vec::with_capacity(16 + 32 * n + meta.len());
        buf.extend_from_slice(DATASET_MAGIC);
        buf.extend_from_slice(&DATASET_VERSION.to_le_bytes());
        buf.extend_from_slice(&(n as u64).to_le_bytes());
        for v in self.x.iter().chain(self.d.iter()) {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
        buf.extend_from_slice(meta.as_bytes());
        Ok(buf)
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        if buf.len() < 16 || &buf[..4] != DATASET_MAGIC {
            return Err(Error::Format("missing SICD header".into()));
        }
        let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
        if version != DATASET_VERSION {
            return Err(Error::Format(format!(
                "unsupported dataset version {version}"
            )));
        }
        let n = u64::from_le_bytes(buf[8..16].try_into().unwrap()) as usize;
        let body = n
            .checked_mul(32)
            .and_then(|b| b.checked_add(16))
            .filter(|&end| end <= buf.len())
            .ok_or_else(|| Error::Format(format!("file too short for {n} samples")))?;
        let read = |i: usize| {
            let at = 16 + 16 * i;
            let re = f64::from_le_bytes(buf[at..at + 8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[at + 8..at + 16].try_into().unwrap());
            Complex64::new(re, im)
        };
        let x = ComplexVector::new((0..n).map(read).collect())?;
        let d = ComplexVector::new((n..2 * n).map(read).collect())?;
        let meta_str = std::str::from_utf8(&buf[body..])
            .map_err(|_| Error::Format("metadata is not UTF-8".into()))?;
        let meta =
            serde_json::from_str(meta_str).map_err(|e| Error::Format(format!("metadata: {e}")))?;
        Ok(Dataset { x, d, meta })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

/// One training block.
#[derive(Debug, Clone, Copy)]
pub struct Block<'a> {
    pub x: &'a [Complex64],
    pub d: &'a [Complex64],
    pub offset: usize,
}

/// Contiguous non-overlapping blocks of `n_block` samples; a trailing
/// partial block is dropped.
pub fn block_iter(ds: &Dataset, n_block: usize) -> Result<impl Iterator<Item = Block<'_>>> {
    if n_block == 0 {
        return Err(Error::Usage("block length must be positive".into()));
    }
    if n_block > ds.len() {
        return Err(Error::Usage(format!(
            "block length {n_block} exceeds dataset length {}",
            ds.len()
        )));
    }
    let count = ds.len() / n_block;
    Ok((0..count).map(move |i| {
        let offset = i * n_block;
        Block {
            x: &ds.x[offset..offset + n_block],
            d: &ds.d[offset..offset + n_block],
            offset,
        }
    }))
}

pub fn blocks_per_epoch(len: usize, n_block: usize) -> usize {
    len.checked_div(n_block).unwrap_or(0)
}
