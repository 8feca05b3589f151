//! Experiment orchestration: training loops, learning curves and summaries.

pub mod cli;
pub mod config;

use std::fmt::Write as _;

use log::{debug, info};

pub use config::{ExperimentConfig, GradientEma, InputDelay, Method, SourceKind};

use crate::complexity::{cost_cg, cost_grad, cost_mnm, relative, CostModel};
use crate::error::{Error, Result};
use crate::loss::{build_quadratic, gradient, nmse_db, residual};
use crate::model::{HammersteinModel, SplineBasis};
use crate::optim::{adam_step, cg_step, mnm_step, AdamState, EmaState};
use crate::testbench::{blocks_per_epoch, generate, Dataset, SignalSource};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub update: u64,
    /// `update · N / L_signal`.
    pub epoch: f64,
    pub nmse_db: f64,
    pub cum_cost: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LearningCurve {
    pub points: Vec<CurvePoint>,
}

pub const CURVE_HEADER: &str = "update,epoch,nmse_db,cum_cost";

impl LearningCurve {
    pub fn push(&mut self, p: CurvePoint) {
        debug_assert!(self.points.last().is_none_or(|q| q.update < p.update));
        self.points.push(p);
    }

    pub fn last(&self) -> Option<&CurvePoint> {
        self.points.last()
    }

    /// Floats use the shortest round-trip representation.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CURVE_HEADER);
        s.push('\n');
        for p in &self.points {
            let _ = writeln!(s, "{},{},{},{}", p.update, p.epoch, p.nmse_db, p.cum_cost);
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(CURVE_HEADER) {
            return Err(Error::Format(format!(
                "curve CSV must start with '{CURVE_HEADER}'"
            )));
        }
        let bad = |i: usize| Error::Format(format!("curve CSV line {}", i + 2));
        let mut curve = LearningCurve::default();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad(i));
            }
            curve.points.push(CurvePoint {
                update: f[0].parse().map_err(|_| bad(i))?,
                epoch: f[1].parse().map_err(|_| bad(i))?,
                nmse_db: f[2].parse().map_err(|_| bad(i))?,
                cum_cost: f[3].parse().map_err(|_| bad(i))?,
            });
        }
        Ok(curve)
    }
}

/// First epoch coordinate with NMSE at or below `target_db`; `+∞` if the
/// curve never gets there.
pub fn epochs_to_target(curve: &LearningCurve, target_db: f64) -> f64 {
    curve
        .points
        .iter()
        .find(|p| p.nmse_db <= target_db)
        .map_or(f64::INFINITY, |p| p.epoch)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    pub epochs_to_target: f64,
    pub relative_complexity: f64,
    pub final_nmse_db: f64,
}

pub fn method_cost(method: Method, cm: &CostModel) -> u64 {
    match method {
        Method::Mnm => cost_mnm(cm),
        Method::Cg(l) => cost_cg(cm, l as u64),
        Method::Adam => cost_grad(cm),
    }
}

fn fmt_epochs(e: f64) -> String {
    if e.is_finite() {
        format!("{e:.2}")
    } else {
        "not reached".into()
    }
}

fn fmt_ratio(r: f64) -> String {
    if r < 0.01 {
        format!("{r:.2e}")
    } else {
        format!("{r:.2}")
    }
}

/// Aligned text table and CSV with the same rows.
pub fn summary_table(rows: &[SummaryRow], target_db: f64) -> (String, String) {
    let head = [
        "method".to_string(),
        format!("epochs to {target_db} dB"),
        "relative complexity".to_string(),
        "final NMSE, dB".to_string(),
    ];
    let body: Vec<[String; 4]> = rows
        .iter()
        .map(|r| {
            [
                r.label.clone(),
                fmt_epochs(r.epochs_to_target),
                fmt_ratio(r.relative_complexity),
                format!("{:.2}", r.final_nmse_db),
            ]
        })
        .collect();
    let mut width = head.each_ref().map(|h| h.len());
    for row in &body {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut text = String::new();
    let line = |cells: &[String; 4], text: &mut String| {
        let _ = writeln!(
            text,
            "{:<w0$}  {:>w1$}  {:>w2$}  {:>w3$}",
            cells[0],
            cells[1],
            cells[2],
            cells[3],
            w0 = width[0],
            w1 = width[1],
            w2 = width[2],
            w3 = width[3]
        );
    };
    line(&head, &mut text);
    let _ = writeln!(text, "{}", "-".repeat(width.iter().sum::<usize>() + 6));
    for row in &body {
        line(row, &mut text);
    }

    let mut csv = String::from("method,epochs_to_target,relative_complexity,final_nmse_db\n");
    for r in rows {
        let e = if r.epochs_to_target.is_finite() {
            r.epochs_to_target.to_string()
        } else {
            "inf".into()
        };
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            r.label, e, r.relative_complexity, r.final_nmse_db
        );
    }
    (text, csv)
}

/// Loads the configured dataset file or generates one from the config.
pub fn obtain_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    match &cfg.dataset {
        Some(path) => Dataset::read(path),
        None => generate(&cfg.dataset_meta()),
    }
}

/// Samples by which the interference lags the model's centre tap.
pub fn resolve_delay(cfg: &ExperimentConfig, ds: &Dataset) -> usize {
    match cfg.input_delay {
        InputDelay::Samples(d) => d,
        InputDelay::Auto => match ds.meta.source {
            SignalSource::PaChain { .. } => cfg.taps / 2,
            SignalSource::Hammerstein(_) => 0,
        },
    }
}

/// Interference advanced by `delay` samples, `d[delay..]`. Target sample
/// `n` is then modelled from `x[n-D..=n+D]`, so a causal channel of length
/// `2·delay + 1` falls inside the centred model window. The full `x` stays
/// available as look-ahead context.
pub fn align(d: &[Complex64], delay: usize) -> &[Complex64] {
    &d[delay.min(d.len())..]
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub curve: LearningCurve,
    pub summary: SummaryRow,
    pub model: HammersteinModel,
    pub updates: u64,
}

enum Adapter {
    SecondOrder { ema: EmaState },
    Adam { state: AdamState },
}

/// Trains a model on `ds` for `cfg.epochs` passes of `cfg.block_len` blocks.
///
/// NMSE over the whole sequence is recorded every `nmse_eval_stride`
/// updates and after the last one.
pub fn run_experiment(cfg: &ExperimentConfig, ds: &Dataset) -> Result<RunOutput> {
    cfg.validate()?;
    let method = cfg.resolved_method();
    let n = cfg.block_len;
    let x: &[Complex64] = &ds.x;
    let d = align(&ds.d, resolve_delay(cfg, ds));
    let len = d.len();
    let blocks = blocks_per_epoch(len, n);
    if blocks == 0 || x.len() < cfg.taps {
        return Err(Error::Config(format!(
            "{len} aligned samples do not fill one block of {n}"
        )));
    }
    let total = (blocks * cfg.epochs) as u64;

    let basis = SplineBasis::for_signal(cfg.basis_size, x)?;
    let mut model = HammersteinModel::linear_start(cfg.taps, basis)?;
    let k = model.num_params();
    let cm = CostModel::new(k as u64, n as u64)?;
    let per_update = method_cost(method, &cm);
    let cg_cfg = cfg.cg_config();
    let adam_cfg = cfg.adam_config(total);
    adam_cfg.validate()?;
    let mut adapter = match method {
        Method::Mnm | Method::Cg(_) => Adapter::SecondOrder {
            ema: EmaState::new(cfg.lambda)?,
        },
        Method::Adam => Adapter::Adam {
            state: AdamState::new(k),
        },
    };
    info!(
        "{}: {} updates over {} epochs, K = {k}",
        method.label(),
        total,
        cfg.epochs
    );

    let mut curve = LearningCurve::default();
    let mut z = model.params();
    for t in 1..=total {
        let offset = ((t - 1) as usize % blocks) * n;
        let jac = model.jacobian(x, offset, n)?;
        let y = model.forward_block(x, offset, n)?;
        let e = residual(&d[offset..offset + n], &y)?;
        match &mut adapter {
            Adapter::SecondOrder { ema } => {
                let q = build_quadratic(&jac, &e)?;
                ema.update(&q.m, &q.b)?;
                let smoothed = ema.quadratic().expect("initialized by update");
                let before = z.clone();
                if method == Method::Mnm {
                    mnm_step(&mut z, &smoothed, cfg.mu, cfg.gamma)?;
                } else {
                    cg_step(&mut z, &smoothed, &cg_cfg)?;
                }
                if cfg.gradient_ema == GradientEma::Recentred {
                    let dz: Vec<Complex64> =
                        z.iter().zip(before.iter()).map(|(a, b)| a - b).collect();
                    ema.recenter(&dz, cfg.gamma)?;
                }
            }
            Adapter::Adam { state } => {
                let b = gradient(&jac, &e)?;
                adam_step(&mut z, &b, state, &adam_cfg, t - 1)?;
            }
        }
        if !z.is_finite() {
            return Err(Error::NonFinite { update: t });
        }
        model.set_params(&z)?;

        if t % cfg.nmse_eval_stride as u64 == 0 || t == total {
            let y_full = model.forward_block(x, 0, len)?;
            let err = residual(d, &y_full)?;
            let nmse = nmse_db(d, &err)?;
            if !nmse.is_finite() {
                return Err(Error::NonFinite { update: t });
            }
            curve.push(CurvePoint {
                update: t,
                epoch: t as f64 * n as f64 / len as f64,
                nmse_db: nmse,
                cum_cost: t * per_update,
            });
            debug!("{} update {t}: {nmse:.3} dB", method.label());
            if cfg.stop_at_target && nmse <= cfg.target_db {
                break;
            }
        }
    }

    let last = curve.last().copied().expect("at least one record");
    let summary = SummaryRow {
        label: method.label(),
        epochs_to_target: epochs_to_target(&curve, cfg.target_db),
        relative_complexity: relative(&cm, per_update),
        final_nmse_db: last.nmse_db,
    };
    Ok(RunOutput {
        curve,
        summary,
        model,
        updates: last.update,
    })
}

/// Runs every method in `cfg.compare_methods` on a shared dataset, one
/// thread per method. Results come back in configuration order.
pub fn run_comparison(cfg: &ExperimentConfig, ds: &Dataset) -> Result<Vec<(Method, RunOutput)>> {
    let runs: Vec<ExperimentConfig> = cfg
        .compare_methods
        .iter()
        .map(|&m| cfg.with_method(m))
        .collect();
    let results: Vec<Result<RunOutput>> = std::thread::scope(|s| {
        let handles: Vec<_> = runs
            .iter()
            .map(|c| s.spawn(move || run_experiment(c, ds)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training thread panicked"))
            .collect()
    });
    runs.iter()
        .zip(results)
        .map(|(c, r)| r.map(|out| (c.resolved_method(), out)))
        .collect()
}
