use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use abpkit::harness::config::{MANIFOLD_PRESETS, PATCH_PRESETS};
use abpkit::harness::report::{write_text, ConvergenceStatus};
use abpkit::harness::{
    convergence_batch, emit_convergence, emit_report, run_batch, ExperimentConfig, ReportFormat, RowStatus, RunKind,
};

#[derive(Parser)]
#[command(name = "abpkit", version, about = "Numerical checks of sharp Sobolev-type inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sobolev and isoperimetric inequalities on model-manifold domains.
    CheckSobolev(RunArgs),
    /// Michael–Simon and minimal isoperimetric inequalities on patches.
    CheckMichaelSimon(RunArgs),
    /// Volume capture, coverage and normal-bundle shell experiments.
    TransportExperiment(RunArgs),
    /// Mesh refinement study against the radial solver.
    Convergence {
        #[command(flatten)]
        run: RunArgs,
        /// Refinement levels, halving the mesh width each time.
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Print the manifold and patch presets accepted in configs.
    ListPresets,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Report path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; the report does not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

struct Prepared {
    cfg: ExperimentConfig,
    out: Option<PathBuf>,
    format: ReportFormat,
}

fn prepare(args: &RunArgs) -> abpkit::Result<Prepared> {
    if let Some(t) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .map_err(|e| abpkit::Error::Config(format!("thread pool: {e}")))?;
    }
    let mut cfg = ExperimentConfig::read(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().and_then(|o| o.path.clone()));
    let format = match args.format {
        Some(FormatArg::Csv) => ReportFormat::Csv,
        Some(FormatArg::Json) => ReportFormat::Json,
        None => cfg
            .output
            .as_ref()
            .and_then(|o| o.format)
            .or_else(|| out.as_deref().and_then(ReportFormat::from_path))
            .unwrap_or(ReportFormat::Csv),
    };
    Ok(Prepared { cfg, out, format })
}

fn deliver(text: &str, out: &Option<PathBuf>) -> abpkit::Result<()> {
    match out {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_rows(args: &RunArgs, kind: RunKind) -> abpkit::Result<bool> {
    let p = prepare(args)?;
    let rows = run_batch(&p.cfg, kind);
    deliver(&emit_report(&rows, p.format)?, &p.out)?;
    let mut failed = false;
    for r in &rows {
        if r.status != RowStatus::Pass {
            let v = r.violations.first();
            eprintln!(
                "{} {}: {}",
                r.status.as_str(),
                r.case_id,
                v.map(|v| format!("{} (margin {:e}) {}", v.name, v.margin, v.detail)).unwrap_or_default()
            );
        }
        failed |= r.status == RowStatus::Fail;
    }
    Ok(!failed)
}

fn run(cli: Cli) -> abpkit::Result<bool> {
    match cli.command {
        Command::CheckSobolev(a) => run_rows(&a, RunKind::Sobolev),
        Command::CheckMichaelSimon(a) => run_rows(&a, RunKind::MichaelSimon),
        Command::TransportExperiment(a) => run_rows(&a, RunKind::Transport),
        Command::Convergence { run, levels } => {
            let p = prepare(&run)?;
            let tables = convergence_batch(&p.cfg, levels);
            deliver(&emit_convergence(&tables, p.format)?, &p.out)?;
            for t in &tables {
                eprintln!("{} {}: {}", t.status.as_str(), t.case_id, t.detail);
            }
            Ok(tables.iter().all(|t| t.status != ConvergenceStatus::Fail))
        }
        Command::ListPresets => {
            println!("manifold presets (case.manifold.preset):");
            for (name, about) in MANIFOLD_PRESETS {
                println!("  {name:<18} {about}");
            }
            println!("patch presets (case.sigma.preset):");
            for (name, about) in PATCH_PRESETS {
                println!("  {name:<18} {about}");
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
