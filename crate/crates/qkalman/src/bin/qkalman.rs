use clap::{Parser, Subcommand, ValueEnum};
use qkalman::cli_io::corpus::{bless_dir, run_dir, run_embedded, CorpusOutcome};
use qkalman::cli_io::spec::ToleranceOverrides;
use qkalman::cli_io::{
    build_system, emit_report, parse_spec, resolve_tolerances, run_pipeline, OutputFormat, PipelineError,
    ENV_TOL_ZERO,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qkalman", version, about = "Kalman decomposition of linear quantum systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose the system in a spec file and print the report.
    Decompose {
        spec: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long = "tol-rank")]
        tol_rank: Option<f64>,
        #[arg(long = "tol-zero")]
        tol_zero: Option<f64>,
        #[arg(long = "tol-eig")]
        tol_eig: Option<f64>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check physical realizability only.
    Check { spec: PathBuf },
    /// Run or regenerate the example corpus.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
}

#[derive(Subcommand)]
enum CorpusAction {
    /// Run every example and diff against its goldens.
    Run {
        /// Read specs from DIR/*.json and goldens from DIR/golden instead of
        /// the bundled corpus.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Rewrite DIR/golden from the current pipeline output.
    Bless {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn read(path: &Path) -> Result<Vec<u8>, PipelineError> {
    std::fs::read(path).map_err(|e| PipelineError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn print_outcomes(outcomes: &[CorpusOutcome]) -> i32 {
    let mut code = 0;
    for o in outcomes {
        if o.ok() {
            println!("PASS {}", o.name);
        } else {
            println!("FAIL {}: {}", o.name, o.problems.join("; "));
            code = 2;
        }
    }
    code
}

fn run(cli: Cli) -> Result<i32, PipelineError> {
    let env_zero = std::env::var(ENV_TOL_ZERO).ok();
    match cli.command {
        Command::Decompose {
            spec,
            format,
            tol_rank,
            tol_zero,
            tol_eig,
            out,
        } => {
            let bytes = read(&spec)?;
            let parsed = parse_spec(&bytes)?;
            let cli_tol = ToleranceOverrides {
                rank_tol: tol_rank,
                zero_tol: tol_zero,
                eig_tol: tol_eig,
                classify_tol: None,
            };
            let tol = resolve_tolerances(env_zero.as_deref(), &parsed.tolerances, &cli_tol)?;
            let report = run_pipeline(&parsed, &bytes, &tol)?;
            let fmt = match format {
                Format::Json => OutputFormat::Json,
                Format::Text => OutputFormat::Text,
            };
            let mut body = emit_report(&report, fmt);
            if !body.ends_with('\n') {
                body.push('\n');
            }
            match out {
                Some(p) => std::fs::write(&p, body).map_err(|e| PipelineError::Io {
                    path: p.display().to_string(),
                    message: e.to_string(),
                })?,
                None => print!("{body}"),
            }
            for c in report.checks.iter().filter(|c| !c.passed) {
                eprintln!("check failed: {}: {:.3e} > {:.1e}", c.name, c.residual, c.tol);
            }
            Ok(if report.passed { 0 } else { 2 })
        }
        Command::Check { spec } => {
            let bytes = read(&spec)?;
            let parsed = parse_spec(&bytes)?;
            let tol = resolve_tolerances(env_zero.as_deref(), &parsed.tolerances, &ToleranceOverrides::default())?;
            let built = build_system(&parsed, &tol)?;
            let r = built.realizability;
            for n in &built.notices {
                eprintln!("notice: {n}");
            }
            println!(
                "realizability ({:?}): dynamics {:.3e}, io {:.3e}, tol {:.1e}: {}",
                r.representation,
                r.dynamics_residual,
                r.io_residual,
                r.tol,
                if r.passed() { "PASS" } else { "FAIL" }
            );
            Ok(if r.passed() { 0 } else { 2 })
        }
        Command::Corpus { action } => match action {
            CorpusAction::Run { dir: None } => Ok(print_outcomes(&run_embedded(env_zero.as_deref()))),
            CorpusAction::Run { dir: Some(d) } => Ok(print_outcomes(&run_dir(&d, env_zero.as_deref())?)),
            CorpusAction::Bless { dir } => {
                for p in bless_dir(&dir, env_zero.as_deref())? {
                    println!("wrote {}", p.display());
                }
                Ok(0)
            }
        },
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
