//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O or file-format failure, 2 usage or
//! configuration error, 3 numerical abort.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::{obtain_dataset, run_comparison, run_experiment, summary_table, ExperimentConfig};
use crate::complexity::{cost_cg, cost_grad, cost_mnm, relative, CostModel};
use crate::error::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Complex-valued Hammerstein canceller training.
#[derive(Debug, Parser)]
#[command(name = "fdsic", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment configuration file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the `seed` key.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a dataset file (`dataset.sicd`).
    GenData(Common),
    /// Train one model; writes `curve.csv`, `summary.txt`, `summary.csv`, `model.txt`.
    Train(Common),
    /// Train every method in `compare_methods` on one dataset.
    Compare(Common),
    /// Print per-update cost ratios relative to the mixed Newton step.
    ComplexityTable {
        #[arg(long = "K")]
        k: u64,
        #[arg(long = "N")]
        n: u64,
        /// Comma-separated CG iteration counts.
        #[arg(long = "L", value_delimiter = ',', default_value = "1,5,10,20,30,50")]
        l: Vec<u64>,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path).map_err(|e| match e {
            Error::Io(io) => Error::Config(format!("cannot read {}: {io}", path.display())),
            other => other,
        })?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn header(cfg: &ExperimentConfig) -> String {
    format!(
        "# NMSE evaluated over the full sequence every {} update(s)\n# target {} dB, {} epoch(s), N = {}\n",
        cfg.nmse_eval_stride, cfg.target_db, cfg.epochs, cfg.block_len
    )
}

pub fn complexity_table(k: u64, n: u64, ls: &[u64]) -> Result<String> {
    let cm = CostModel::new(k, n)?;
    let mut rows = vec![("MNM".to_string(), cost_mnm(&cm))];
    rows.extend(ls.iter().map(|&l| (format!("CG(L={l})"), cost_cg(&cm, l))));
    rows.push(("gradient".to_string(), cost_grad(&cm)));
    let width = rows.iter().map(|(m, _)| m.len()).max().unwrap_or(6).max(6);
    let mut s = format!(
        "K = {k}, N = {n}\n{:<width$}  {:>12}  {:>10}\n",
        "method", "units", "ratio"
    );
    for (m, c) in rows {
        let r = relative(&cm, c);
        let ratio = if r < 0.01 {
            format!("{r:.2e}")
        } else {
            format!("{r:.2}")
        };
        s.push_str(&format!("{m:<width$}  {c:>12}  {ratio:>10}\n"));
    }
    Ok(s)
}

fn execute(cmd: Command) -> Result<String> {
    match cmd {
        Command::ComplexityTable { k, n, l } => complexity_table(k, n, &l),
        Command::GenData(common) => {
            let cfg = load_config(&common)?;
            fs::create_dir_all(&common.out)?;
            let ds = obtain_dataset(&cfg)?;
            let path = common.out.join("dataset.sicd");
            ds.write(&path)?;
            Ok(format!(
                "wrote {} samples to {}\n",
                ds.len(),
                path.display()
            ))
        }
        Command::Train(common) => {
            let cfg = load_config(&common)?;
            fs::create_dir_all(&common.out)?;
            let ds = obtain_dataset(&cfg)?;
            let out = run_experiment(&cfg, &ds)?;
            let (text, csv) = summary_table(std::slice::from_ref(&out.summary), cfg.target_db);
            write(&common.out, "curve.csv", &out.curve.to_csv())?;
            write(&common.out, "summary.txt", &(header(&cfg) + &text))?;
            write(&common.out, "summary.csv", &csv)?;
            write(&common.out, "model.txt", &out.model.to_text())?;
            Ok(text)
        }
        Command::Compare(common) => {
            let cfg = load_config(&common)?;
            fs::create_dir_all(&common.out)?;
            let ds = obtain_dataset(&cfg)?;
            let results = run_comparison(&cfg, &ds)?;
            for (m, out) in &results {
                write(
                    &common.out,
                    &format!("curve_{}.csv", m.slug()),
                    &out.curve.to_csv(),
                )?;
            }
            let rows: Vec<_> = results.iter().map(|(_, o)| o.summary.clone()).collect();
            let (text, csv) = summary_table(&rows, cfg.target_db);
            write(&common.out, "summary.txt", &(header(&cfg) + &text))?;
            write(&common.out, "summary.csv", &csv)?;
            Ok(text)
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        e if e.is_numerical() => EXIT_NUMERICAL,
        Error::Io(_) | Error::Format(_) => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

/// Parses `argv`, runs the subcommand and returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(text) => {
            print!("{text}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
