//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # desk-scale matched run
//! method = cg
//! cg_iters = 20
//! epochs = 50
//! source = hammerstein
//! noise_db = -60
//! ```
//!
//! Blank lines and `#` comments are ignored. Unknown keys are errors.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::optim::{AdamConfig, CgConfig};
use crate::testbench::{
    DatasetMeta, PaSimModel, SignalSource, TruthConfig, WaveformConfig, LEAKAGE_TAPS,
};

/// Training method, with the inner iteration count for CG.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Mnm,
    Cg(usize),
    Adam,
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::Mnm => "MNM".into(),
            Method::Cg(l) => format!("CG(L={l})"),
            Method::Adam => "Adam".into(),
        }
    }

    /// File-name friendly form: `mnm`, `cg20`, `adam`.
    pub fn slug(&self) -> String {
        match self {
            Method::Mnm => "mnm".into(),
            Method::Cg(l) => format!("cg{l}"),
            Method::Adam => "adam".into(),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    /// Accepts `mnm`, `adam`, `cg` (iterations taken from `cg_iters`) and
    /// `cg:L`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "mnm" => Ok(Method::Mnm),
            "adam" => Ok(Method::Adam),
            "cg" => Ok(Method::Cg(0)),
            _ => {
                let l = s
                    .strip_prefix("cg:")
                    .and_then(|l| l.trim().parse::<usize>().ok())
                    .filter(|&l| l > 0)
                    .ok_or_else(|| Error::Config(format!("unknown method '{s}'")))?;
                Ok(Method::Cg(l))
            }
        }
    }
}

/// How the smoothed gradient follows the parameters between blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientEma {
    /// `g` is moved with each step, `g ← g + (H + γI)Δz`, before the next
    /// block is blended in.
    Recentred,
    /// Block gradients are blended as computed, each at its own parameters.
    Literal,
}

/// Delay applied to the transmit samples before they reach the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputDelay {
    /// Half the model length for PA-chain data (causal leakage), zero otherwise.
    Auto,
    Samples(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    Pa,
    Hammerstein,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub method: Method,
    pub cg_iters: usize,
    pub mu: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub gradient_ema: GradientEma,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub adam_mu0: f64,
    pub adam_alpha_start: f64,
    pub adam_alpha_end: f64,

    pub taps: usize,
    pub basis_size: usize,
    pub block_len: usize,
    pub input_delay: InputDelay,
    pub epochs: usize,
    pub nmse_eval_stride: usize,
    pub target_db: f64,
    pub stop_at_target: bool,
    pub compare_methods: Vec<Method>,

    /// Existing dataset file; when set the generation keys are ignored.
    pub dataset: Option<PathBuf>,
    pub source: SourceKind,
    pub n_samples: usize,
    pub bandwidth_hz: f64,
    pub sample_rate_hz: f64,
    pub qam_order: usize,
    pub fft_size: usize,
    pub cp_len: usize,
    pub tx_filter_taps: usize,
    pub noise_db: Option<f64>,
    pub pa: PaSimModel,
    pub truth_taps: usize,
    pub truth_basis_size: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let w = WaveformConfig::default();
        ExperimentConfig {
            method: Method::Mnm,
            cg_iters: 20,
            mu: 1.0,
            gamma: 1e-4,
            lambda: 0.9,
            gradient_ema: GradientEma::Recentred,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            adam_mu0: 1e-4,
            adam_alpha_start: 1.0,
            adam_alpha_end: 1e-4,
            taps: 51,
            basis_size: 8,
            block_len: 60,
            input_delay: InputDelay::Auto,
            epochs: 5,
            nmse_eval_stride: 1,
            target_db: -40.0,
            stop_at_target: false,
            compare_methods: vec![
                Method::Mnm,
                Method::Cg(50),
                Method::Cg(30),
                Method::Cg(20),
                Method::Cg(10),
                Method::Cg(5),
                Method::Cg(1),
                Method::Adam,
            ],
            dataset: None,
            source: SourceKind::Pa,
            n_samples: 15_792,
            bandwidth_hz: w.bandwidth_hz,
            sample_rate_hz: w.sample_rate_hz,
            qam_order: w.qam_order,
            fft_size: w.fft_size,
            cp_len: w.cp_len,
            tx_filter_taps: w.tx_filter_taps,
            noise_db: Some(-60.0),
            pa: PaSimModel::default(),
            truth_taps: LEAKAGE_TAPS,
            truth_basis_size: 8,
            seed: 0,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "{key}: expected a boolean, got '{v}'"
        ))),
    }
}

/// `re,im` or a bare real number.
fn parse_complex(key: &str, v: &str) -> Result<Complex64> {
    match v.split_once(',') {
        Some((re, im)) => Ok(Complex64::new(
            parse_num(key, re.trim())?,
            parse_num(key, im.trim())?,
        )),
        None => Ok(Complex64::new(parse_num(key, v)?, 0.0)),
    }
}

fn fmt_complex(c: Complex64) -> String {
    format!("{},{}", c.re, c.im)
}

impl ExperimentConfig {
    /// Parses configuration text on top of the defaults. Relative dataset
    /// paths are resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            let (key, v) = (key.trim(), value.trim());
            match key {
                "method" => cfg.method = v.parse()?,
                "cg_iters" => cfg.cg_iters = parse_num(key, v)?,
                "mu" => cfg.mu = parse_num(key, v)?,
                "gamma" => cfg.gamma = parse_num(key, v)?,
                "lambda" => cfg.lambda = parse_num(key, v)?,
                "gradient_ema" => {
                    cfg.gradient_ema = match v {
                        "recentred" => GradientEma::Recentred,
                        "literal" => GradientEma::Literal,
                        _ => {
                            return Err(Error::Config(format!(
                                "gradient_ema: expected 'recentred' or 'literal', got '{v}'"
                            )))
                        }
                    }
                }
                "adam_beta1" => cfg.adam_beta1 = parse_num(key, v)?,
                "adam_beta2" => cfg.adam_beta2 = parse_num(key, v)?,
                "adam_eps" => cfg.adam_eps = parse_num(key, v)?,
                "adam_mu0" => cfg.adam_mu0 = parse_num(key, v)?,
                "adam_alpha_start" => cfg.adam_alpha_start = parse_num(key, v)?,
                "adam_alpha_end" => cfg.adam_alpha_end = parse_num(key, v)?,
                "taps" => cfg.taps = parse_num(key, v)?,
                "basis_size" => cfg.basis_size = parse_num(key, v)?,
                "block_len" => cfg.block_len = parse_num(key, v)?,
                "input_delay" => {
                    cfg.input_delay = if v == "auto" {
                        InputDelay::Auto
                    } else {
                        InputDelay::Samples(parse_num(key, v)?)
                    }
                }
                "epochs" => cfg.epochs = parse_num(key, v)?,
                "nmse_eval_stride" => cfg.nmse_eval_stride = parse_num(key, v)?,
                "target_db" => cfg.target_db = parse_num(key, v)?,
                "stop_at_target" => cfg.stop_at_target = parse_bool(key, v)?,
                "compare_methods" => {
                    cfg.compare_methods = v.split(',').map(str::parse).collect::<Result<_>>()?;
                }
                "dataset" => {
                    let p = PathBuf::from(v);
                    cfg.dataset = Some(match base_dir {
                        Some(dir) if p.is_relative() => dir.join(p),
                        _ => p,
                    });
                }
                "source" => {
                    cfg.source = match v {
                        "pa" => SourceKind::Pa,
                        "hammerstein" => SourceKind::Hammerstein,
                        _ => {
                            return Err(Error::Config(format!(
                                "source: expected 'pa' or 'hammerstein', got '{v}'"
                            )))
                        }
                    }
                }
                "n_samples" => cfg.n_samples = parse_num(key, v)?,
                "bandwidth_hz" => cfg.bandwidth_hz = parse_num(key, v)?,
                "sample_rate_hz" => cfg.sample_rate_hz = parse_num(key, v)?,
                "qam_order" => cfg.qam_order = parse_num(key, v)?,
                "fft_size" => cfg.fft_size = parse_num(key, v)?,
                "cp_len" => cfg.cp_len = parse_num(key, v)?,
                "tx_filter_taps" => cfg.tx_filter_taps = parse_num(key, v)?,
                "noise_db" => {
                    cfg.noise_db = if v.eq_ignore_ascii_case("none") {
                        None
                    } else {
                        Some(parse_num(key, v)?)
                    }
                }
                "pa_c1" => cfg.pa.c1 = parse_complex(key, v)?,
                "pa_c3" => cfg.pa.c3 = parse_complex(key, v)?,
                "pa_c5" => cfg.pa.c5 = parse_complex(key, v)?,
                "pa_c7" => cfg.pa.c7 = parse_complex(key, v)?,
                "pa_normalize" => cfg.pa.normalize_output = parse_bool(key, v)?,
                "truth_taps" => cfg.truth_taps = parse_num(key, v)?,
                "truth_basis_size" => cfg.truth_basis_size = parse_num(key, v)?,
                "seed" => cfg.seed = parse_num(key, v)?,
                _ => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key '{key}'",
                        lineno + 1
                    )))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text, path.parent())
    }

    /// The method with `cg` resolved to `cg_iters`.
    pub fn resolved_method(&self) -> Method {
        match self.method {
            Method::Cg(0) => Method::Cg(self.cg_iters),
            m => m,
        }
    }

    pub fn with_method(&self, method: Method) -> Self {
        ExperimentConfig {
            method,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.cg_iters == 0 {
            return bad("cg_iters must be at least 1".into());
        }
        if self.taps == 0 || self.taps.is_multiple_of(2) {
            return bad(format!("taps must be odd, got {}", self.taps));
        }
        if self.basis_size < 2 {
            return bad(format!(
                "basis_size must be at least 2, got {}",
                self.basis_size
            ));
        }
        if self.block_len == 0 || self.epochs == 0 || self.nmse_eval_stride == 0 {
            return bad("block_len, epochs and nmse_eval_stride must be positive".into());
        }
        if !(self.gamma >= 0.0) {
            return bad(format!("gamma must be non-negative, got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad(format!("lambda must lie in [0, 1], got {}", self.lambda));
        }
        if self.dataset.is_none() && self.n_samples < self.block_len {
            return bad(format!(
                "n_samples {} is shorter than one block",
                self.n_samples
            ));
        }
        if self.compare_methods.is_empty() {
            return bad("compare_methods is empty".into());
        }
        self.cg_config().validate()?;
        self.adam_config(1).validate()?;
        self.pa.validate()?;
        if self.dataset.is_none() {
            self.waveform().validate()?;
        }
        Ok(())
    }

    pub fn cg_config(&self) -> CgConfig {
        let iters = match self.resolved_method() {
            Method::Cg(l) => l,
            _ => self.cg_iters,
        };
        CgConfig {
            iters,
            mu: self.mu,
            gamma: self.gamma,
            ..CgConfig::default()
        }
    }

    pub fn adam_config(&self, total_steps: u64) -> AdamConfig {
        AdamConfig {
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
            mu0: self.adam_mu0,
            alpha_start: self.adam_alpha_start,
            alpha_end: self.adam_alpha_end,
            total_steps,
        }
    }

    pub fn waveform(&self) -> WaveformConfig {
        WaveformConfig {
            bandwidth_hz: self.bandwidth_hz,
            sample_rate_hz: self.sample_rate_hz,
            n_samples: self.n_samples,
            qam_order: self.qam_order,
            fft_size: self.fft_size,
            cp_len: self.cp_len,
            tx_filter_taps: self.tx_filter_taps,
            seed: self.seed,
        }
    }

    /// Generation recipe; every seed is derived from `seed`.
    pub fn dataset_meta(&self) -> DatasetMeta {
        let source = match self.source {
            SourceKind::Pa => SignalSource::PaChain {
                pa: self.pa,
                channel_seed: self.seed.wrapping_add(1),
            },
            SourceKind::Hammerstein => SignalSource::Hammerstein(TruthConfig {
                seed: self.seed.wrapping_add(3),
                taps: self.truth_taps,
                basis_size: self.truth_basis_size,
            }),
        };
        DatasetMeta {
            waveform: self.waveform(),
            source,
            noise_db: self.noise_db,
            noise_seed: self.seed.wrapping_add(2),
        }
    }

    /// Canonical text form; parsing it back yields an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let method = match self.method {
            Method::Mnm => "mnm".to_string(),
            Method::Adam => "adam".to_string(),
            Method::Cg(0) => "cg".to_string(),
            Method::Cg(l) => format!("cg:{l}"),
        };
        let methods: Vec<String> = self
            .compare_methods
            .iter()
            .map(|m| match m {
                Method::Cg(l) => format!("cg:{l}"),
                other => other.slug(),
            })
            .collect();
        let _ = writeln!(s, "method = {method}");
        let _ = writeln!(s, "cg_iters = {}", self.cg_iters);
        let _ = writeln!(s, "mu = {}", self.mu);
        let _ = writeln!(s, "gamma = {}", self.gamma);
        let _ = writeln!(s, "lambda = {}", self.lambda);
        let ema = match self.gradient_ema {
            GradientEma::Recentred => "recentred",
            GradientEma::Literal => "literal",
        };
        let _ = writeln!(s, "gradient_ema = {ema}");
        let _ = writeln!(s, "adam_beta1 = {}", self.adam_beta1);
        let _ = writeln!(s, "adam_beta2 = {}", self.adam_beta2);
        let _ = writeln!(s, "adam_eps = {}", self.adam_eps);
        let _ = writeln!(s, "adam_mu0 = {}", self.adam_mu0);
        let _ = writeln!(s, "adam_alpha_start = {}", self.adam_alpha_start);
        let _ = writeln!(s, "adam_alpha_end = {}", self.adam_alpha_end);
        let _ = writeln!(s, "taps = {}", self.taps);
        let _ = writeln!(s, "basis_size = {}", self.basis_size);
        let _ = writeln!(s, "block_len = {}", self.block_len);
        match self.input_delay {
            InputDelay::Auto => {
                let _ = writeln!(s, "input_delay = auto");
            }
            InputDelay::Samples(d) => {
                let _ = writeln!(s, "input_delay = {d}");
            }
        }
        let _ = writeln!(s, "epochs = {}", self.epochs);
        let _ = writeln!(s, "nmse_eval_stride = {}", self.nmse_eval_stride);
        let _ = writeln!(s, "target_db = {}", self.target_db);
        let _ = writeln!(s, "stop_at_target = {}", self.stop_at_target);
        let _ = writeln!(s, "compare_methods = {}", methods.join(","));
        if let Some(p) = &self.dataset {
            let _ = writeln!(s, "dataset = {}", p.display());
        }
        let source = match self.source {
            SourceKind::Pa => "pa",
            SourceKind::Hammerstein => "hammerstein",
        };
        let _ = writeln!(s, "source = {source}");
        let _ = writeln!(s, "n_samples = {}", self.n_samples);
        let _ = writeln!(s, "bandwidth_hz = {}", self.bandwidth_hz);
        let _ = writeln!(s, "sample_rate_hz = {}", self.sample_rate_hz);
        let _ = writeln!(s, "qam_order = {}", self.qam_order);
        let _ = writeln!(s, "fft_size = {}", self.fft_size);
        let _ = writeln!(s, "cp_len = {}", self.cp_len);
        let _ = writeln!(s, "tx_filter_taps = {}", self.tx_filter_taps);
        match self.noise_db {
            Some(db) => {
                let _ = writeln!(s, "noise_db = {db}");
            }
            None => {
                let _ = writeln!(s, "noise_db = none");
            }
        }
        let _ = writeln!(s, "pa_c1 = {}", fmt_complex(self.pa.c1));
        let _ = writeln!(s, "pa_c3 = {}", fmt_complex(self.pa.c3));
        let _ = writeln!(s, "pa_c5 = {}", fmt_complex(self.pa.c5));
        let _ = writeln!(s, "pa_c7 = {}", fmt_complex(self.pa.c7));
        let _ = writeln!(s, "pa_normalize = {}", self.pa.normalize_output);
        let _ = writeln!(s, "truth_taps = {}", self.truth_taps);
        let _ = writeln!(s, "truth_basis_size = {}", self.truth_basis_size);
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = ExperimentConfig::parse("", None).unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.taps + cfg.basis_size, 59);
        assert_eq!(cfg.n_samples, 78_960 / 5);
    }

    #[test]
    fn comments_and_whitespace() {
        let text = "# header\n\n  method = cg:30   # trailing\nepochs=7\nnoise_db = none\npa_c3 = -0.1, 0.02\n";
        let cfg = ExperimentConfig::parse(text, None).unwrap();
        assert_eq!(cfg.resolved_method(), Method::Cg(30));
        assert_eq!(cfg.epochs, 7);
        assert_eq!(cfg.noise_db, None);
        assert_eq!(cfg.pa.c3, Complex64::new(-0.1, 0.02));
    }

    #[test]
    fn plain_cg_uses_cg_iters() {
        let cfg = ExperimentConfig::parse("method = cg\ncg_iters = 12", None).unwrap();
        assert_eq!(cfg.resolved_method(), Method::Cg(12));
        assert_eq!(cfg.cg_config().iters, 12);
    }

    #[test]
    fn unknown_key_is_error() {
        let err = ExperimentConfig::parse("epoch = 5", None).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("unknown key 'epoch'")));
    }

    #[test]
    fn malformed_lines_are_errors() {
        assert!(ExperimentConfig::parse("method mnm", None).is_err());
        assert!(ExperimentConfig::parse("epochs = five", None).is_err());
        assert!(ExperimentConfig::parse("method = newton", None).is_err());
        assert!(ExperimentConfig::parse("taps = 50", None).is_err());
        assert!(ExperimentConfig::parse("mu = 0", None).is_err());
        assert!(ExperimentConfig::parse("lambda = 1.5", None).is_err());
        assert!(ExperimentConfig::parse("bandwidth_hz = 1e9", None).is_err());
        assert!(ExperimentConfig::parse("compare_methods = mnm, cg:0", None).is_err());
    }

    #[test]
    fn text_round_trip() {
        let text = "method = adam\ngradient_ema = literal\ninput_delay = 7\ncompare_methods = mnm,cg:7,adam\nseed = 42\nsource = hammerstein\nnoise_db = -55.5\n";
        let cfg = ExperimentConfig::parse(text, None).unwrap();
        let back = ExperimentConfig::parse(&cfg.to_text(), None).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn relative_dataset_path_resolves_against_config_dir() {
        let cfg =
            ExperimentConfig::parse("dataset = data.sicd", Some(Path::new("/tmp/run"))).unwrap();
        assert_eq!(
            cfg.dataset.as_deref(),
            Some(Path::new("/tmp/run/data.sicd"))
        );
    }

    #[test]
    fn derived_seeds_differ() {
        let cfg = ExperimentConfig::parse("seed = 10\nsource = hammerstein", None).unwrap();
        let meta = cfg.dataset_meta();
        assert_eq!(meta.waveform.seed, 10);
        assert_eq!(meta.noise_seed, 12);
        assert!(matches!(meta.source, SignalSource::Hammerstein(t) if t.seed == 13));
    }
}
