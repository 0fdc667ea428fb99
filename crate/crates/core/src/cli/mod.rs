//! Config-driven runs behind the `hydroseries` command.
//!
//! Exit status: 0 success, 2 configuration error, 3 data or contract
//! error, 4 numeric or training error.

mod compare;
mod config;
mod matrix;
mod pipeline;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use compare::{compare_series, write_correlations, CorrelationRow, MEAN_ID};
pub use config::{DataSource, RunConfig, SplitConfig, SynthSpec, Transform};
pub use matrix::{
    matrix_variants, run_matrix, summarize, MatrixKind, MatrixRow, MatrixSummaryRow, MATRIX_FILE,
    MATRIX_SUMMARY_FILE,
};
pub use pipeline::{
    evaluate_prepared, load_data, prepare, run_eval, run_train, run_train_on, Prepared, Preprocessing, RunOutcome,
    CHECKPOINT_FILE, LOSSES_FILE, METRICS_FILE, PHYSICAL_METRICS_FILE, PREPROCESS_FILE, RESOLVED_CONFIG_FILE,
};

use crate::dataset::{export, load_dataset, Manifest};
use crate::synth::generate_dataset;
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "hydroseries", version, about = "Rainfall-runoff forecasting runs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic archive directory.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// Take sizes and seed from a run config's `data.synth` block.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        catchments: usize,
        #[arg(long, default_value_t = 1460)]
        days: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Load an archive directory and report its contents.
    Ingest {
        dir: PathBuf,
        /// Fail unless every catchment, date and static attribute is present.
        #[arg(long)]
        validate: bool,
    },
    /// Train one configuration, or a sweep with `--matrix`.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, num_args = 0..=1, default_missing_value = "encodings")]
        matrix: Option<MatrixKind>,
        /// Seeds per matrix configuration; defaults to 1 for encodings and 3
        /// for transforms.
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Recompute metrics for a checkpoint.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-gauge Pearson correlation between two series files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Writes a synthetic archive; refuses a non-empty target directory.
pub fn cmd_synth(spec: &SynthSpec, out: &Path) -> Result<()> {
    if out.exists() && std::fs::read_dir(out)?.next().is_some() {
        return Err(Error::config("--out", format!("{} exists and is not empty", out.display())));
    }
    let dataset = generate_dataset(spec.n_catchments, spec.n_days, spec.seed)?;
    export(&dataset, out)
}

/// Loads an archive and returns a one-paragraph summary.
pub fn cmd_ingest(dir: &Path, validate: bool) -> Result<String> {
    let d = load_dataset(dir, &Manifest::default())?;
    let mut lines = vec![format!(
        "{} catchments, {} days ({} to {}), {} static attributes",
        d.n_catchments(),
        d.n_days(),
        d.series.start_date,
        d.series.end_date(),
        d.static_table.n_attributes()
    )];
    let mut missing_total = d.static_table.missing_count();
    for (i, name) in d.series.feature_names.iter().enumerate() {
        let m = d.series.missing_count(i);
        missing_total += m;
        lines.push(format!("  {name}: {m} missing"));
    }
    if validate {
        if d.n_catchments() == 0 || d.n_days() == 0 || d.series.feature_names.is_empty() {
            return Err(Error::Schema("archive has no catchments, days or series".into()));
        }
        lines.push(format!("valid ({missing_total} missing cells)"));
    }
    Ok(lines.join("\n"))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth {
            out,
            config,
            catchments,
            days,
            seed,
        } => {
            let spec = match config {
                Some(path) => match RunConfig::load(&path)?.data {
                    DataSource::Synth(s) => s,
                    DataSource::Path(_) => return Err(Error::config("data", "expected a `synth` block")),
                },
                None => SynthSpec {
                    n_catchments: catchments,
                    n_days: days,
                    seed,
                },
            };
            cmd_synth(&spec, &out)?;
            println!("wrote {} catchments x {} days to {}", spec.n_catchments, spec.n_days, out.display());
        }
        Command::Ingest { dir, validate } => println!("{}", cmd_ingest(&dir, validate)?),
        Command::Train {
            config,
            out,
            seed,
            matrix,
            seeds,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            match matrix {
                Some(kind) => {
                    let n = seeds.unwrap_or(if kind == MatrixKind::Transforms { 3 } else { 1 });
                    let (_, summary) = run_matrix(&cfg, kind, n, &out)?;
                    for r in summary.iter().filter(|r| r.target == "ALL") {
                        println!(
                            "tier {} static {} {}: val rmse {:.6}",
                            r.encoding_tier, r.include_static, r.transform, r.mean_val_rmse
                        );
                    }
                }
                None => {
                    let outcome = run_train(&cfg, &out)?;
                    println!(
                        "{} epochs ({} successful) -> {}",
                        outcome.history.len(),
                        outcome.history.successful_epochs(),
                        out.display()
                    );
                }
            }
        }
        Command::Eval { config, checkpoint, out } => {
            let cfg = RunConfig::load(&config)?;
            run_eval(&cfg, &checkpoint, &out)?;
            println!("wrote {}", out.join(METRICS_FILE).display());
        }
        Command::Compare { a, b, out } => {
            let rows = compare_series(&a, &b)?;
            match out {
                Some(path) => write_correlations(&rows, std::fs::File::create(path)?)?,
                None => write_correlations(&rows, std::io::stdout().lock())?,
            }
        }
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
