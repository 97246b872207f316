//! Batch experiment runner for lobster bioacoustic age/sex classification.

use carapace_cli::artifacts::OutDir;
use carapace_cli::commands;
use carapace_cli::config::RunConfig;
use carapace_cli::logging::RunLog;
use carapace_core::error::{Error, Result};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "carapace",
    version,
    about = "Lobster bioacoustics classification pipeline",
    long_about = "Batch pipeline for classifying lobster carapace-vibration recordings by \
age group and sex: synthetic dataset generation, WAV ingest, filtering and SNR \
screening, MFCC+PCA features, seven classifier families trained from scratch, \
group-aware evaluation with statistical comparisons and rank tables, OOF \
stacking, and inference-latency benchmarking. All behaviour is driven by one \
declarative TOML config (see README for the schema); every run is fully \
seeded and reproducible."
)]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Suppress per-event stderr logging.
    #[arg(long, global = true, default_value_t = false)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic dataset (WAV files + manifest).
    Synth,
    /// Ingest, filter, SNR-screen, and extract MFCC feature files.
    Features,
    /// Grid-search and fit every enabled model on the training side.
    Train,
    /// Score trained models on held-out individuals; emit metric,
    /// confusion, statistical-test, and ranking reports.
    Evaluate,
    /// Train the OOF stacking ensemble and emit the ablation table.
    Stack,
    /// Measure per-sample inference latency per model.
    Bench,
    /// Recompute the published ranking tables from shipped fixtures and
    /// verify every cell.
    ReproduceRanks {
        /// Directory holding the eight fixture CSVs (defaults to the
        /// embedded copies).
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.run.out_dir = out.clone();
    }
    if let Some(jobs) = cli.jobs {
        cfg.run.jobs = jobs;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    if let Command::ReproduceRanks { fixtures } = &cli.command {
        let out = match &cli.out {
            Some(path) => Some(OutDir::create(path)?),
            None => None,
        };
        let summary = commands::cmd_reproduce_ranks(fixtures.as_deref(), out.as_ref())?;
        for (name, table) in &summary.tables {
            println!("{}", carapace_cli::reports::ranking_text(name, table));
        }
        if !summary.mismatches.is_empty() {
            for (table, m) in &summary.mismatches {
                eprintln!(
                    "mismatch: table={table} model={} mfcc={} column={} expected={} got={}",
                    m.model, m.mfcc, m.column, m.expected, m.got
                );
            }
            return Err(Error::Data(format!(
                "{} ranking cell(s) disagree with the published tables",
                summary.mismatches.len()
            )));
        }
        println!("all four ranking tables reproduced exactly");
        return Ok(());
    }

    let cfg = load_config(&cli)?;
    if cfg.run.jobs > 0 {
        // Results are independent of thread count; this only bounds the
        // worker pool.
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.run.jobs)
            .build_global()
            .map_err(|e| Error::Validation(format!("--jobs: {e}")))?;
    }
    let out = OutDir::create(&cfg.run.out_dir)?;
    let mut log = RunLog::to_file(&out.path("run.log"), cli.quiet)?;

    match cli.command {
        Command::Synth => {
            let s = commands::cmd_synth(&cfg, &out, &mut log)?;
            println!("wrote {} WAV files + manifest under {}", s.files, cfg.run.out_dir.display());
        }
        Command::Features => {
            let s = commands::cmd_features(&cfg, &out, &mut log)?;
            println!("kept {} segments; wrote {} feature files", s.segments_kept, s.files.len());
        }
        Command::Train => {
            let s = commands::cmd_train(&cfg, &out, &mut log)?;
            println!("trained {} model artifacts", s.trained.len());
            for (task, dim, model, desc, acc) in &s.trained {
                println!("  {}/{dim} {model}: best {desc} (cv acc {:.2}%)", task.name(), acc * 100.0);
            }
        }
        Command::Evaluate => {
            let s = commands::cmd_evaluate(&cfg, &out, &mut log)?;
            for (task, ranking) in &s.rankings {
                println!();
                println!(
                    "{}",
                    carapace_cli::reports::ranking_text(&format!("task = {task}"), ranking)
                );
            }
            println!("reports written under {}/reports", cfg.run.out_dir.display());
        }
        Command::Stack => {
            let s = commands::cmd_stack(&cfg, &out, &mut log)?;
            for (task, rows) in &s.ablation {
                println!("task = {task}");
                for r in rows {
                    println!(
                        "  {:?}: accuracy {:.2}% f1 {:.2}% auc {:.2}%",
                        r.rule, r.accuracy, r.f1, r.auc_roc
                    );
                }
            }
        }
        Command::Bench => {
            let s = commands::cmd_bench(&cfg, &out, &mut log)?;
            println!(
                "{:<12} {:>6} {:>14} {:>12} {:>10}",
                "Model", "MFCC", "median(ms)", "min(ms)", "flagged"
            );
            for r in &s.rows {
                println!(
                    "{:<12} {:>6} {:>14.6} {:>12.6} {:>10}",
                    r.model,
                    r.mfcc,
                    r.report.per_sample_median_ms,
                    r.report.per_sample_min_ms,
                    r.report.resolution_flagged
                );
            }
        }
        Command::ReproduceRanks { .. } => unreachable!("handled above"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
