use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gridtopo::bounds::{error_bound, gaussian_width_sq_bound, min_samples_per_node};
use gridtopo::experiments::config::apply_setting;
use gridtopo::experiments::{calibrate_and_overlay, emit_chart, load_config, read_results, run_sweep, SweepConfig};
use gridtopo::{Error, Result};

/// Grid topology and line-parameter recovery from quantized meter data.
#[derive(Parser)]
#[command(name = "gridtopo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an (s, Δ) sweep, then write results.csv, report.txt and chart.svg.
    Sweep(SweepArgs),
    /// Recalibrate and redraw from an existing results file.
    Report {
        /// results.csv written by `sweep`
        results: PathBuf,
        /// Chart path; defaults to chart.svg next to the results file.
        #[arg(long)]
        chart: Option<PathBuf>,
    },
    /// Evaluate the error bound and the sample-size estimate.
    Bound {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        c1: f64,
        #[arg(long, default_value_t = 0.0)]
        c2: f64,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// key = value file; flags given here override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, conflicts_with = "synthetic_n")]
    feeder: Option<PathBuf>,
    /// Synthetic feeder with this many non-slack nodes.
    #[arg(long)]
    synthetic_n: Option<usize>,
    /// Seed of the synthetic feeder.
    #[arg(long)]
    synthetic_seed: Option<u64>,
    /// Master seed of the sweep.
    #[arg(long)]
    seed: Option<u64>,
    /// `25,50,100` or `lo..hi/count`
    #[arg(long)]
    s_grid: Option<String>,
    /// Bin widths in percent, e.g. `1,5,10`.
    #[arg(long)]
    delta_pcts: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// Power factor in (0, 1].
    #[arg(long)]
    pf: Option<f64>,
    /// `inductive` or `capacitive`
    #[arg(long)]
    load: Option<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    emit_chart: Option<bool>,
    /// Record solve times (results then differ between runs).
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    threads: Option<usize>,
}

impl SweepArgs {
    fn into_config(self) -> Result<SweepConfig> {
        let mut config = match &self.config {
            Some(path) => load_config(path)?,
            None => SweepConfig::default(),
        };
        let mut set = |key: &str, value: Option<String>| -> Result<()> {
            match value {
                Some(v) => apply_setting(&mut config, key, &v).map_err(|e| Error::Config(format!("--{key}: {e}"))),
                None => Ok(()),
            }
        };
        let path = |p: Option<PathBuf>| p.map(|p| p.display().to_string());
        set("feeder", path(self.feeder))?;
        set("synthetic_n", self.synthetic_n.map(|v| v.to_string()))?;
        set("synthetic_seed", self.synthetic_seed.map(|v| v.to_string()))?;
        set("seed", self.seed.map(|v| v.to_string()))?;
        set("s_grid", self.s_grid)?;
        set("delta_pcts", self.delta_pcts)?;
        set("trials", self.trials.map(|v| v.to_string()))?;
        set("load", self.load)?;
        set("pf", self.pf.map(|v| v.to_string()))?;
        set("out_dir", path(self.out_dir))?;
        set("emit_chart", self.emit_chart.map(|v| v.to_string()))?;
        set("threads", self.threads.map(|v| v.to_string()))?;
        if self.timing {
            config.record_timing = true;
        }
        config.validate()?;
        Ok(config)
    }
}

fn sweep(args: SweepArgs) -> Result<()> {
    let config = args.into_config()?;
    let records = run_sweep(&config)?;
    let report = calibrate_and_overlay(&records)?;
    report.write(&config.out_dir.join("report.txt"))?;
    println!("wrote {} records to {}", records.len(), config.results_path().display());
    println!("C = {:.4}", report.c);
    if report.failed > 0 {
        eprintln!("warning: {} solves failed", report.failed);
    }
    if config.emit_chart {
        emit_chart(&report.records, &report.curves, &config.chart_path())?;
        println!("chart: {}", config.chart_path().display());
    }
    Ok(())
}

fn report(results: PathBuf, chart: Option<PathBuf>) -> Result<()> {
    let records = read_results(&results)?;
    let report = calibrate_and_overlay(&records)?;
    print!("{}", report.to_text());
    let chart = chart.unwrap_or_else(|| results.with_file_name("chart.svg"));
    emit_chart(&report.records, &report.curves, &chart)
}

fn bound(n: usize, s: usize, delta: f64, c: f64, c1: f64, c2: f64) -> Result<()> {
    println!("width_sq_bound = {:.6}", gaussian_width_sq_bound(n)?);
    println!("error_bound = {:.6e}", error_bound(c, delta, n, s)?);
    println!("min_samples_per_node = {}", min_samples_per_node(n, c1, c2)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Sweep(args) => sweep(args),
        Command::Report { results, chart } => report(results, chart),
        Command::Bound { n, s, delta, c, c1, c2 } => bound(n, s, delta, c, c1, c2),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
