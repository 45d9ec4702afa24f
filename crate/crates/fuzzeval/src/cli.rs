//! Command-line interface.
//!
//! Exit status is 0 on success, 1 for invalid input (bad flags, unreadable
//! or malformed configuration) and 2 when a run fails.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fuzzeval_core::campaign::{compare_campaign, metric_event_times, CampaignConfig};
use fuzzeval_core::dedup::{BuiltinGroundTruth, DEFAULT_STACK_FRAMES};
use fuzzeval_core::stats::{aggregate_band, CrashTimeSeries, DEFAULT_CI_LEVEL};
use fuzzeval_core::Error;

use crate::report::{
    emit_clusters_csv, emit_comparison_table, emit_comparison_text, emit_dedup_csv_all, emit_svg_plot, emit_timeseries_csv,
    emit_triage_summary, PlotSeries, PlotSpec,
};
use crate::store::{read_campaign, read_json, sanitize_id, write_campaign};
use crate::triage::{triage, Strategy};
use crate::{run_campaign, HarnessError, HarnessExecutor, Result};

#[derive(Debug, Parser)]
#[command(name = "fuzzeval", version, about = "Run and statistically compare fuzzing campaigns")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a campaign and write one JSON file per trial plus a manifest.
    Run(RunArgs),
    /// Run a campaign of simulated fuzzers.
    Simulate(RunArgs),
    /// Compare fuzzer A against B with the Mann-Whitney U test at each checkpoint.
    Compare(CompareArgs),
    /// Cluster crashing inputs and check the clusters against ground truth.
    Triage(TriageArgs),
    /// Write per-trial time series and SVG plots of median/CI/min-max bands.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Campaign configuration (JSON).
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Override the number of trials per cell.
    #[arg(long, value_name = "N")]
    pub trials: Option<u32>,
    /// Override the per-trial deadline in seconds (decimal; 86400 is 24 hours).
    #[arg(long, value_name = "SECONDS")]
    pub timeout: Option<f64>,
    /// Override the number of parallel workers.
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
    /// Override the master RNG seed.
    #[arg(long, value_name = "U64")]
    pub rng_seed: Option<u64>,
    /// Override the report checkpoints, e.g. `15,30,60`.
    #[arg(long, value_name = "CSV-of-seconds", value_delimiter = ',')]
    pub checkpoints: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Dedup {
    Raw,
    Coverage,
    Stackhash,
    Groundtruth,
}

#[derive(Debug, Args)]
pub struct DedupArgs {
    /// How crashes are counted or clustered.
    #[arg(long, value_enum)]
    pub dedup: Option<Dedup>,
    /// Stack frames hashed by `--dedup stackhash`.
    #[arg(long, value_name = "N", default_value_t = DEFAULT_STACK_FRAMES)]
    pub frames: usize,
}

impl DedupArgs {
    fn strategy(&self, default: Dedup) -> Result<Strategy> {
        if self.frames == 0 {
            return Err(Error::InvalidArgument("--frames must be at least 1".into()).into());
        }
        Ok(match self.dedup.unwrap_or(default) {
            Dedup::Raw => Strategy::Raw,
            Dedup::Coverage => Strategy::Coverage,
            Dedup::Stackhash => Strategy::StackHash { frames: self.frames },
            Dedup::Groundtruth => Strategy::GroundTruth,
        })
    }
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Results directory written by `run` or `simulate`.
    pub results: PathBuf,
    /// Where to write comparison.csv and comparison.txt (default: the results directory).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub dedup: DedupArgs,
    /// Comparison times in seconds (default: the campaign's checkpoints).
    #[arg(long, value_name = "CSV-of-seconds", value_delimiter = ',')]
    pub checkpoints: Option<Vec<f64>>,
    /// Confidence level of the median intervals.
    #[arg(long, value_name = "REAL", default_value_t = DEFAULT_CI_LEVEL)]
    pub level: f64,
}

#[derive(Debug, Args)]
pub struct TriageArgs {
    /// Results directory written by `run` or `simulate`.
    pub results: PathBuf,
    /// Where to write clusters.csv, triage_summary.csv and dedup.csv (default: the results directory).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub dedup: DedupArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Results directory written by `run` or `simulate`.
    pub results: PathBuf,
    /// Where to write timeseries.csv and the plots (default: the results directory).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub dedup: DedupArgs,
    /// Confidence level of the median bands.
    #[arg(long, value_name = "REAL", default_value_t = DEFAULT_CI_LEVEL)]
    pub level: f64,
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            eprintln!("{}", one_line(&e.to_string()));
            return ExitCode::from(1);
        }
    };
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", one_line(&format!("error: {e}")));
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

// Keeps the diagnostic part of a multi-line message and drops usage hints.
fn one_line(message: &str) -> String {
    message
        .lines()
        .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more information"))
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn execute(command: &Command) -> Result<()> {
    match command {
        Command::Run(args) => run(args, false),
        Command::Simulate(args) => run(args, true),
        Command::Compare(args) => compare(args),
        Command::Triage(args) => triage_cmd(args),
        Command::Report(args) => report(args),
    }
}

/// Loads a campaign configuration and applies command-line overrides.
pub fn load_config(args: &RunArgs) -> Result<CampaignConfig> {
    let mut config: CampaignConfig = read_json(&args.config)?;
    if let Some(t) = args.trials {
        config.trials = t;
    }
    if let Some(t) = args.timeout {
        config.deadline = t;
    }
    if let Some(j) = args.jobs {
        config.workers = j;
    }
    if let Some(s) = args.rng_seed {
        config.master_rng_seed = s;
    }
    if let Some(c) = &args.checkpoints {
        config.checkpoints = c.clone();
    }
    config.validate()?;
    Ok(config)
}

fn run(args: &RunArgs, simulated: bool) -> Result<()> {
    let config = load_config(args)?;
    if simulated && !config.is_simulated() {
        return Err(Error::Config("simulate needs two simulated fuzzers; use run for real targets".into()).into());
    }
    let start = Instant::now();
    match run_campaign(&config, &HarnessExecutor::default()) {
        Ok(result) => {
            write_campaign(&args.out, &config, &result, None, start.elapsed().as_secs_f64())?;
            println!("wrote {} trials to {}", result.len(), args.out.display());
            Ok(())
        }
        Err(HarnessError::Trial { cell, source, partial }) => {
            let failure = format!("trial {cell} failed: {source}");
            write_campaign(&args.out, &config, &partial, Some(failure), start.elapsed().as_secs_f64())?;
            Err(HarnessError::Trial { cell, source, partial })
        }
        Err(e) => Err(e),
    }
}

fn write_output(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::Write {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| HarnessError::Write { path, source: e })
}

fn compare(args: &CompareArgs) -> Result<()> {
    let (manifest, result) = read_campaign(&args.results)?;
    let strategy = args.dedup.strategy(Dedup::Raw)?;
    let checkpoints = args.checkpoints.clone().unwrap_or_else(|| manifest.config.effective_checkpoints());
    let executor = HarnessExecutor::default();
    let gt = BuiltinGroundTruth { executor: &executor };
    let results = compare_campaign(
        &result,
        &manifest.fuzzer_a,
        &manifest.fuzzer_b,
        &checkpoints,
        strategy.metric(),
        Some(&gt),
        args.level,
    )?;
    let out = args.out.as_deref().unwrap_or(&args.results);
    let text = emit_comparison_text(&results, &manifest.fuzzer_a, &manifest.fuzzer_b);
    write_output(out, "comparison.csv", &emit_comparison_table(&results))?;
    write_output(out, "comparison.txt", &text)?;
    print!("{text}");
    Ok(())
}

fn triage_cmd(args: &TriageArgs) -> Result<()> {
    let (_, result) = read_campaign(&args.results)?;
    let strategy = args.dedup.strategy(Dedup::Stackhash)?;
    let executor = HarnessExecutor::default();
    let gt = BuiltinGroundTruth { executor: &executor };
    let outcomes = triage(&result, strategy, &gt)?;
    let out = args.out.as_deref().unwrap_or(&args.results);
    write_output(out, "clusters.csv", &emit_clusters_csv(&outcomes))?;
    let summary = emit_triage_summary(&outcomes);
    write_output(out, "triage_summary.csv", &summary)?;
    write_output(out, "dedup.csv", &emit_dedup_csv_all(&outcomes))?;
    for o in outcomes.iter().filter(|o| o.table.is_none()) {
        eprintln!("note: no ground truth for {}; it is absent from dedup.csv", o.target_id);
    }
    print!("{summary}");
    Ok(())
}

const COLORS: [&str; 2] = ["#1f77b4", "#d62728"];
const GRID_POINTS: u32 = 100;

fn report(args: &ReportArgs) -> Result<()> {
    let (manifest, result) = read_campaign(&args.results)?;
    let strategy = args.dedup.strategy(Dedup::Raw)?;
    let out = args.out.as_deref().unwrap_or(&args.results);
    write_output(out, "timeseries.csv", &emit_timeseries_csv(result.trials.values()))?;
    let executor = HarnessExecutor::default();
    let gt = BuiltinGroundTruth { executor: &executor };
    let deadline = manifest.config.deadline;
    let grid: Vec<f64> = (0..=GRID_POINTS).map(|i| deadline * f64::from(i) / f64::from(GRID_POINTS)).collect();
    for (target, seed) in result.cells() {
        let mut series = Vec::new();
        for (fuzzer, color) in [&manifest.fuzzer_a, &manifest.fuzzer_b].into_iter().zip(COLORS) {
            let trials = result.cell(fuzzer, &target, &seed);
            if trials.is_empty() {
                continue;
            }
            let curves = trials
                .iter()
                .map(|t| CrashTimeSeries::from_event_times(&metric_event_times(t, strategy.metric(), Some(&gt))?))
                .collect::<fuzzeval_core::Result<Vec<_>>>()?;
            series.push(PlotSeries {
                label: fuzzer.clone(),
                band: aggregate_band(&curves, &grid, args.level)?,
                color: color.to_string(),
            });
        }
        let spec = PlotSpec {
            title: format!("{target} / {seed} ({})", strategy.name()),
            x_label: "time (s)".into(),
            y_label: "crashes".into(),
            series,
            width: 720,
            height: 440,
        };
        let name = format!("plot__{}__{}.svg", sanitize_id(&target), sanitize_id(&seed));
        write_output(out, &name, &emit_svg_plot(&spec)?)?;
    }
    println!("wrote report for {} cells to {}", result.cells().len(), out.display());
    Ok(())
}
