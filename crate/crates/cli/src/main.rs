mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use config::{Flags, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "gibc-fem",
    version,
    about = "Laplace problems with vanishing or sign-changing impedance"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the structured mesh as VTK
    Mesh(Flags),
    /// Solve once and write solution.vtk and norms.json
    Solve(Flags),
    /// Mesh-refinement study with successive differences and verdict
    RefineStudy(Flags),
    /// Discrete inf-sup constants under refinement
    Infsup(Flags),
    /// Solve the reduced 1D boundary problem
    Reduce(Flags),
    /// Oscillating exponent and dispersion residuals
    Singular(Flags),
    /// Weyl-sequence diagnostic
    Weyl(Flags),
    /// Smallest eigenvalue of the weighted 1D problem
    Poincare(Flags),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Mesh(_) => "mesh",
            Command::Solve(_) => "solve",
            Command::RefineStudy(_) => "refine-study",
            Command::Infsup(_) => "infsup",
            Command::Reduce(_) => "reduce",
            Command::Singular(_) => "singular",
            Command::Weyl(_) => "weyl",
            Command::Poincare(_) => "poincare",
        }
    }

    fn flags(&self) -> &Flags {
        match self {
            Command::Mesh(f)
            | Command::Solve(f)
            | Command::RefineStudy(f)
            | Command::Infsup(f)
            | Command::Reduce(f)
            | Command::Singular(f)
            | Command::Weyl(f)
            | Command::Poincare(f) => f,
        }
    }
}

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

fn configure_threads() {
    let n = std::env::var("GIBC_FEM_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0);
    gibc_fem::parallel::set_threads(n);
}

fn summary(command: &str, status: &str, error: Option<String>, fields: Value) -> Value {
    let mut v = json!({ "command": command, "status": status, "error": error });
    if let (Some(obj), Value::Object(extra)) = (v.as_object_mut(), fields) {
        obj.extend(extra);
    }
    v
}

fn emit(cfg: &RunConfig, value: &Value) {
    if let Err(e) = commands::write_json(&cfg.out.join("summary.json"), value) {
        eprintln!("error: cannot write summary: {e}");
    }
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("JSON values serialize")
    );
}

fn run(cli: Cli) -> ExitCode {
    configure_threads();
    let name = cli.command.name();
    let cfg = match RunConfig::resolve(cli.command.flags()) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if let Err(e) = std::fs::create_dir_all(&cfg.out) {
        eprintln!("error: cannot create output directory {}: {e}", cfg.out.display());
        return ExitCode::from(EXIT_USAGE);
    }
    let result = match &cli.command {
        Command::Mesh(_) => commands::mesh(&cfg),
        Command::Solve(_) => commands::solve(&cfg),
        Command::RefineStudy(_) => commands::refine_study(&cfg),
        Command::Infsup(_) => commands::infsup(&cfg),
        Command::Reduce(_) => commands::reduce(&cfg),
        Command::Singular(_) => commands::singular(&cfg),
        Command::Weyl(_) => commands::weyl(&cfg),
        Command::Poincare(_) => commands::poincare(&cfg),
    };
    match result {
        Ok(done) => match done.failure {
            None => {
                emit(&cfg, &summary(name, "ok", None, done.summary));
                ExitCode::SUCCESS
            }
            Some(msg) => {
                eprintln!("error: {msg}");
                emit(&cfg, &summary(name, "numerical-failure", Some(msg), done.summary));
                ExitCode::from(EXIT_NUMERICAL)
            }
        },
        Err(e) if e.is_numerical() => {
            eprintln!("error: {e}");
            emit(
                &cfg,
                &summary(name, "numerical-failure", Some(e.to_string()), json!({})),
            );
            ExitCode::from(EXIT_NUMERICAL)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn main() -> ExitCode {
    match Cli::try_parse() {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            ExitCode::from(code)
        }
    }
}
