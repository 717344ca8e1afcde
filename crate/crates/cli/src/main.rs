mod commands;
mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde_json::json;
use sha2::{Digest, Sha256};

use commands::{Artifacts, Failure, Overrides};

#[derive(Parser, Debug)]
#[command(
    name = "finsler",
    version,
    about = "Large solutions of the Finsler p-Laplacian"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sampled check of the norm axioms and the H/H0 identities
    NormCheck(Common),
    /// Keller-Osserman and Osgood classification of a nonlinearity
    KoCheck(Common),
    /// Large solution on an interval
    #[command(name = "solve-1d")]
    Solve1d(Common),
    /// Radial solution on a Wulff annulus or ball
    SolveRadial(Common),
    /// Planar Dirichlet or large solution
    #[command(name = "solve-2d")]
    Solve2d(Common),
    /// Boundary blow-up rate of the planar large solution
    Asymptotics(Common),
    /// Compare two constructions of the planar large solution
    Uniqueness(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// JSON problem description
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing
    #[arg(long)]
    out: PathBuf,
    /// Seed for sampling-based verifiers
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grid spacing for planar solvers
    #[arg(long)]
    grid: Option<f64>,
    /// Largest boundary value in the k-schedule
    #[arg(long)]
    k_max: Option<f64>,
    /// Comma-separated regularization stages, e.g. 1e-2,1e-4,0
    #[arg(long, value_delimiter = ',')]
    eps_schedule: Option<Vec<f64>>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::NormCheck(_) => "norm-check",
            Command::KoCheck(_) => "ko-check",
            Command::Solve1d(_) => "solve-1d",
            Command::SolveRadial(_) => "solve-radial",
            Command::Solve2d(_) => "solve-2d",
            Command::Asymptotics(_) => "asymptotics",
            Command::Uniqueness(_) => "uniqueness",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::NormCheck(c)
            | Command::KoCheck(c)
            | Command::Solve1d(c)
            | Command::SolveRadial(c)
            | Command::Solve2d(c)
            | Command::Asymptotics(c)
            | Command::Uniqueness(c) => c,
        }
    }
}

fn parse<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, Failure> {
    serde_json::from_slice(bytes).map_err(|e| Failure::Config(format!("invalid config: {e}")))
}

fn dispatch(cmd: &Command, bytes: &[u8], o: &Overrides) -> Result<Artifacts, Failure> {
    match cmd {
        Command::NormCheck(_) => commands::norm_check(parse(bytes)?, o),
        Command::KoCheck(_) => commands::ko_check(parse(bytes)?, o),
        Command::Solve1d(_) => commands::solve_1d(parse(bytes)?, o),
        Command::SolveRadial(_) => commands::solve_radial(parse(bytes)?, o),
        Command::Solve2d(_) => commands::solve_2d(parse(bytes)?, o),
        Command::Asymptotics(_) => commands::asymptotics(parse(bytes)?, o),
        Command::Uniqueness(_) => commands::uniqueness(parse(bytes)?, o),
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> std::io::Result<()> {
    fs::write(dir.join(name), contents)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args = cli.command.common();
    let overrides = Overrides {
        seed: args.seed,
        grid: args.grid,
        k_max: args.k_max,
        eps_schedule: args.eps_schedule.clone(),
    };
    if let Err(e) = fs::create_dir_all(&args.out) {
        eprintln!("error: cannot create {}: {e}", args.out.display());
        return ExitCode::from(2);
    }

    let input = fs::read(&args.config);
    let digest = input.as_ref().ok().map(|b| hex::encode(Sha256::digest(b)));
    let result = match &input {
        Ok(bytes) => dispatch(&cli.command, bytes, &overrides),
        Err(e) => Err(Failure::Config(format!(
            "cannot read {}: {e}",
            args.config.display()
        ))),
    };

    let (status, code, error, checks, mut outputs) = match result {
        Ok(art) => {
            let mut written = Vec::new();
            for (name, contents) in &art.files {
                if let Err(e) = write(&args.out, name, contents) {
                    eprintln!("error: cannot write {name}: {e}");
                    return ExitCode::from(1);
                }
                written.push(name.clone());
            }
            let ok = art.checks.iter().all(|c| c.passed);
            let (status, code) = if ok {
                ("ok", 0u8)
            } else {
                ("checks_failed", 1)
            };
            (status, code, None, art.checks, written)
        }
        Err(Failure::Config(msg)) => ("config_error", 2, Some(msg), Vec::new(), Vec::new()),
        Err(Failure::Solver(msg)) => ("solver_error", 1, Some(msg), Vec::new(), Vec::new()),
    };
    outputs.push("manifest.json".into());
    let manifest = json!({
        "command": cli.command.name(),
        "library_version": finsler_core::VERSION,
        "config": args.config.display().to_string(),
        "input_sha256": digest,
        "overrides": overrides,
        "status": status,
        "exit_code": code,
        "error": error,
        "all_checks_passed": error.is_none() && checks.iter().all(|c| c.passed),
        "checks": checks,
        "outputs": outputs,
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    if let Err(e) = write(&args.out, "manifest.json", &text) {
        eprintln!("error: cannot write manifest: {e}");
        return ExitCode::from(1);
    }

    match &error {
        Some(msg) => eprintln!("{}: {status}: {msg}", cli.command.name()),
        None => {
            for c in &checks {
                println!(
                    "{} {} = {:e} ({})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.rule
                );
            }
            println!("{}: {status}", cli.command.name());
        }
    }
    ExitCode::from(code)
}
