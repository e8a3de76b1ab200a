use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use modal_sens::bench::{self, init_thread_pool};
use modal_sens::config::{
    parse_engine, CharacteristicConfig, MaterialConfig, ModelConfig, OutputConfig, OutputFormat,
    ReferenceSource, RunConfig, SqmrSettings, SweepConfig,
};
use modal_sens::report::{emit, render_table, BenchReport};
use modal_sens_core::engines::{Engine, SqmrConfig};
use modal_sens_core::verification::FdConfig;

#[derive(Parser)]
#[command(
    name = "modal-sens",
    version,
    about = "Modal sensitivity benchmarks on a clamped steel plate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time the selected engines on one plate and report accuracy and cost.
    Run(RunArgs),
    /// Run every mesh of a TOML grid file.
    Sweep(SweepArgs),
    /// Check engines against central differences, parameter by parameter.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CharName {
    Mac,
    Mse,
    Mf,
}

#[derive(Args)]
struct Problem {
    #[arg(long, default_value_t = 20)]
    nx: usize,
    #[arg(long, default_value_t = 10)]
    ny: usize,
    /// One-based mode number.
    #[arg(long, default_value_t = 1)]
    mode: usize,
    #[arg(long = "char", value_enum, default_value = "mac")]
    characteristic: CharName,
    /// MAC reference: `auto` or a file of one value per DOF.
    #[arg(long, default_value = "auto")]
    ref_mode_source: String,
    /// MAC reference taken from this one-based baseline mode.
    #[arg(long, conflicts_with = "ref_mode_source")]
    ref_mode: Option<usize>,
    /// MSE element (zero-based); defaults to the most strained element.
    #[arg(long)]
    element: Option<usize>,
    /// SQMR relative tolerance.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
}

impl Problem {
    fn characteristic(&self) -> CharacteristicConfig {
        match self.characteristic {
            CharName::Mac => CharacteristicConfig::Mac {
                reference: match (self.ref_mode, self.ref_mode_source.as_str()) {
                    (Some(j), _) => ReferenceSource::Mode(j),
                    (None, "auto") => ReferenceSource::Auto,
                    (None, path) => ReferenceSource::File(path.into()),
                },
            },
            CharName::Mse => CharacteristicConfig::Mse {
                element: self.element,
            },
            CharName::Mf => CharacteristicConfig::Mf,
        }
    }

    fn model(&self) -> ModelConfig {
        ModelConfig {
            nx: self.nx,
            ny: self.ny,
            material: MaterialConfig::default(),
        }
    }

    fn sqmr(&self) -> SqmrSettings {
        SqmrSettings {
            tolerance: self.tol,
            max_iterations: self.max_iter,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    problem: Problem,
    /// Comma-separated engines: fn (alias ne), fa, adne, adam, pm.
    #[arg(long, value_delimiter = ',', default_value = "pm,adne,adam,fn")]
    engines: Vec<String>,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    /// Report file; the format follows the extension unless --format is set.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    grid: PathBuf,
    /// Also run meshes marked `enabled = false`.
    #[arg(long)]
    all: bool,
    /// Overrides the output file named in the grid.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    problem: Problem,
    #[arg(long, value_delimiter = ',', default_value = "fn,fa,adne,adam,pm")]
    engines: Vec<String>,
    /// Relative central-difference step.
    #[arg(long, default_value_t = 1e-6)]
    step: f64,
    /// Largest accepted per-parameter error, percent.
    #[arg(long, default_value_t = 0.1)]
    tolerance_pct: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

fn write_reports(reports: &[BenchReport], output: Option<&OutputConfig>) -> Result<()> {
    if let Some(out) = output {
        emit(reports, out.format()?, &out.path)?;
        eprintln!("wrote {}", out.path.display());
    }
    Ok(())
}

fn finish(reports: &[BenchReport]) -> ExitCode {
    if reports.iter().all(BenchReport::errors_finite) {
        ExitCode::SUCCESS
    } else {
        eprintln!(
            "error: some pairwise relative errors are undefined (zero reference sensitivity)"
        );
        ExitCode::FAILURE
    }
}

fn run_command(args: RunArgs) -> Result<ExitCode> {
    let output = args.out.map(|path| OutputConfig {
        path,
        format: args.format.map(Into::into),
    });
    let config = RunConfig {
        model: args.problem.model(),
        mode: args.problem.mode,
        characteristic: args.problem.characteristic(),
        engines: args.engines,
        sqmr: args.problem.sqmr(),
        reps: args.reps,
        output: output.clone(),
    };
    let report = bench::run(&config)?;
    print!("{}", render_table(&report));
    let reports = [report];
    write_reports(&reports, output.as_ref())?;
    Ok(finish(&reports))
}

fn sweep_command(args: SweepArgs) -> Result<ExitCode> {
    let grid = SweepConfig::load(&args.grid)?;
    let runs = grid.runs(args.all);
    if runs.is_empty() {
        bail!(
            "every mesh in {} is disabled; pass --all to run them",
            args.grid.display()
        );
    }
    let mut reports = Vec::with_capacity(runs.len());
    for config in &runs {
        let report = bench::run(config)?;
        println!("{}", render_table(&report));
        reports.push(report);
    }
    let output = match args.out {
        Some(path) => Some(OutputConfig { path, format: None }),
        None => grid.output.clone(),
    };
    write_reports(&reports, output.as_ref())?;
    Ok(finish(&reports))
}

fn verify_command(args: VerifyArgs) -> Result<ExitCode> {
    let engines = args
        .engines
        .iter()
        .map(|e| parse_engine(e))
        .collect::<Result<Vec<Engine>>>()?;
    let sqmr: SqmrConfig<f64> = args.problem.sqmr().into();
    let report = bench::verify(
        &args.problem.model(),
        args.problem.mode,
        &args.problem.characteristic(),
        &engines,
        &sqmr,
        &FdConfig { step: args.step },
        args.tolerance_pct,
    )?;
    println!(
        "{} DOFs, {} parameters, central differences in {:.3} s",
        report.dofs, report.q, report.fd_time_s
    );
    for c in &report.checks {
        let verdict = if c.max_rel_err_pct <= report.tolerance_pct {
            "ok"
        } else {
            "FAIL"
        };
        println!(
            "{:<6} max error {:.3e}% at parameter {} (limit {}%) {verdict}",
            c.engine.name(),
            c.max_rel_err_pct,
            c.worst_parameter,
            report.tolerance_pct
        );
    }
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = init_thread_pool().and_then(|_| match cli.command {
        Command::Run(args) => run_command(args),
        Command::Sweep(args) => sweep_command(args),
        Command::Verify(args) => verify_command(args),
    });
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
