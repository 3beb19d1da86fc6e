use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use aifx::audit::{
    explain_step, export_trace, import_trace, render_explanation, render_report, verify_replay,
    AuditTrace, Verbosity,
};
use aifx::{parse_model_spec, parse_process_spec, run_episode, Error, GenerativeProcess};

#[derive(Parser)]
#[command(
    name = "aifx",
    version,
    about = "Auditable hierarchical active inference agents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerbosityArg {
    Summary,
    Decision,
    Full,
}

impl From<VerbosityArg> for Verbosity {
    fn from(v: VerbosityArg) -> Self {
        match v {
            VerbosityArg::Summary => Verbosity::Summary,
            VerbosityArg::Decision => Verbosity::Decision,
            VerbosityArg::Full => Verbosity::Full,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check a model spec (and optionally a process spec).
    Validate {
        spec: PathBuf,
        #[arg(long)]
        process: Option<PathBuf>,
    },
    /// Run an episode, write its trace and print a summary report.
    Run {
        spec: PathBuf,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        trace: PathBuf,
        /// Ground-truth process; defaults to the agent's own level-1 model.
        #[arg(long)]
        process: Option<PathBuf>,
    },
    /// Explain the decision taken at one step of a trace.
    Explain {
        trace: PathBuf,
        #[arg(long)]
        step: usize,
        #[arg(long, value_enum, default_value = "decision")]
        verbosity: VerbosityArg,
    },
    /// Render a trace as a text report.
    Report {
        trace: PathBuf,
        #[arg(long, value_enum, default_value = "full")]
        verbosity: VerbosityArg,
    },
    /// Re-run a trace from its header and check it reproduces exactly.
    Replay { trace: PathBuf },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_input_error() { 1 } else { 2 },
            message: e.to_string(),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure {
        code: 2,
        message: format!("{}: {e}", path.display()),
    })
}

fn with_path(path: &Path) -> impl Fn(Error) -> Failure + '_ {
    move |e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    }
}

fn load_trace(path: &Path) -> Result<AuditTrace, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure {
        code: 2,
        message: format!("{}: {e}", path.display()),
    })?;
    import_trace(&bytes).map_err(with_path(path))
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Validate { spec, process } => {
            let model = parse_model_spec(&read(&spec)?).map_err(with_path(&spec))?;
            println!("{}: ok ({} levels)", spec.display(), model.levels.len());
            if let Some(path) = process {
                parse_process_spec(&read(&path)?).map_err(with_path(&path))?;
                println!("{}: ok", path.display());
            }
        }
        Command::Run {
            spec,
            steps,
            seed,
            trace,
            process,
        } => {
            let model = parse_model_spec(&read(&spec)?).map_err(with_path(&spec))?;
            let mut agent = model.build().map_err(with_path(&spec))?;
            let mut process = match process {
                Some(path) => parse_process_spec(&read(&path)?)
                    .and_then(|p| p.build())
                    .map_err(with_path(&path))?,
                None => GenerativeProcess::mirror(&agent.levels()[0])?,
            };
            let recorded = run_episode(&mut agent, &mut process, steps, seed)?;
            fs::write(&trace, export_trace(&recorded)).map_err(|e| Failure {
                code: 2,
                message: format!("{}: {e}", trace.display()),
            })?;
            print!("{}", render_report(&recorded, Verbosity::Summary));
        }
        Command::Explain {
            trace,
            step,
            verbosity,
        } => {
            let recorded = load_trace(&trace)?;
            let explanation = explain_step(&recorded, step)?;
            match Verbosity::from(verbosity) {
                Verbosity::Summary => {
                    let text = render_explanation(&explanation);
                    println!("{}", text.lines().next().unwrap_or_default());
                }
                Verbosity::Decision => print!("{}", render_explanation(&explanation)),
                Verbosity::Full => {
                    print!("{}", render_explanation(&explanation));
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&explanation).unwrap_or_default()
                    );
                }
            }
        }
        Command::Report { trace, verbosity } => {
            let recorded = load_trace(&trace)?;
            print!("{}", render_report(&recorded, verbosity.into()));
        }
        Command::Replay { trace } => {
            let recorded = load_trace(&trace)?;
            verify_replay(&recorded)?;
            println!(
                "{}: replay matches ({} events)",
                trace.display(),
                recorded.len()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
