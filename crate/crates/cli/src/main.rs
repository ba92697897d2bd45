//! `sift`: decompose signals, write time-frequency representations, and run
//! the synthetic benchmark.
//!
//! Exit status is 0 on success, 2 for configuration, input or format errors
//! and 3 when a numerical step fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use sift_core::bench::{decompose_blind, emit_report, emit_tfr_plotdata, run_benchmark, ExperimentConfig, Method, MethodParams, ReportFormat};
use sift_core::io::{read_signal, write_curve_csv, write_signal_csv, write_tfr_binary};
use sift_core::sst::{stft, synchrosqueeze, WindowSpec};
use sift_core::{Error, RealSignal, Result};

#[derive(Parser)]
#[command(name = "sift", version, about = "Signal decomposition with iterative filtering guided by synchrosqueezing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthetic benchmark commands.
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
    /// Split a signal into components without ground truth.
    Decompose(DecomposeArgs),
    /// Write the STFT or SST of a signal.
    Tfr(TfrArgs),
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Run an experiment described by a JSON or TOML file.
    Run(BenchArgs),
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the worker count of the configuration.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecomposeMethod {
    Sift,
    Sst,
    Bpf,
}

impl From<DecomposeMethod> for Method {
    fn from(m: DecomposeMethod) -> Self {
        match m {
            DecomposeMethod::Sift => Method::Sift,
            DecomposeMethod::Sst => Method::Sst,
            DecomposeMethod::Bpf => Method::Bpf,
        }
    }
}

#[derive(Args)]
struct DecomposeArgs {
    /// Signal as CSV (`t,x`) or binary (`.bin`).
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "sift")]
    method: DecomposeMethod,
    #[arg(long, default_value_t = WindowSpec::DEFAULT_LENGTH)]
    window_len: usize,
    /// Mask length factor: σ = ξ / f.
    #[arg(long, default_value_t = 1.4)]
    xi: f64,
    /// Penalty on squared jumps of the ridge.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Reconstruction half-band in Hz.
    #[arg(long, default_value_t = 0.1)]
    band_b: f64,
    #[arg(long, default_value_t = 8)]
    max_components: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum TfrMethod {
    Stft,
    Sst,
}

#[derive(Args)]
struct TfrArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "sst")]
    method: TfrMethod,
    #[arg(long, default_value_t = WindowSpec::DEFAULT_LENGTH)]
    window_len: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(Error::from)
}

fn bench(args: &BenchArgs) -> Result<()> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(workers) = args.workers {
        config.workers = workers;
    }
    let report = run_benchmark(&config)?;
    create_dir(&args.out)?;
    fs::write(args.out.join("config.json"), config.to_json())?;
    for (format, name) in [
        (ReportFormat::Csv, "report.csv"),
        (ReportFormat::Json, "report.json"),
        (ReportFormat::Markdown, "report.md"),
    ] {
        emit_report(&report, format, &args.out.join(name))?;
    }
    print!("{}", report.to_markdown());
    Ok(())
}

fn decompose(args: &DecomposeArgs) -> Result<()> {
    let signal: RealSignal = read_signal(&args.input)?;
    let params = MethodParams {
        window_length: args.window_len,
        xi: args.xi,
        lambda: args.lambda,
        band_b: args.band_b,
        ..MethodParams::default()
    };
    let method = Method::from(args.method);
    let result = decompose_blind(method, &signal, &params, args.max_components)?;
    create_dir(&args.out)?;
    let mut files = Vec::new();
    for (k, (component, curve)) in result.components.iter().zip(&result.curves).enumerate() {
        let imt = format!("component_{}.csv", k + 1);
        let ridge = format!("curve_{}.csv", k + 1);
        write_signal_csv(component, &args.out.join(&imt))?;
        write_curve_csv(curve, &args.out.join(&ridge))?;
        files.push(json!({ "component": imt, "curve": ridge }));
    }
    write_signal_csv(&result.residual, &args.out.join("residual.csv"))?;
    let manifest = json!({
        "input": args.input,
        "method": method.to_string(),
        "params": params,
        "max_components": args.max_components,
        "components": files,
        "diagnostics": result.diagnostics,
        "residual": "residual.csv",
    });
    fs::write(args.out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    println!("{} component(s) written to {}", result.components.len(), args.out.display());
    Ok(())
}

fn tfr(args: &TfrArgs) -> Result<()> {
    let signal: RealSignal = read_signal(&args.input)?;
    let window = WindowSpec::new(args.window_len)?;
    let config = MethodParams::default().sst;
    let grid = match args.method {
        TfrMethod::Stft => stft(&signal, &window, &config)?,
        TfrMethod::Sst => synchrosqueeze(&signal, &window, &config)?,
    };
    create_dir(&args.out)?;
    write_tfr_binary(&grid, &args.out.join("tfr.bin"))?;
    emit_tfr_plotdata(&grid, &args.out)?;
    println!("{} bins × {} frames written to {}", grid.n_bins(), grid.n_frames(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Bench { command: BenchCommand::Run(args) } => bench(args),
        Command::Decompose(args) => decompose(args),
        Command::Tfr(args) => tfr(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
