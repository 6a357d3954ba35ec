use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use bcsign::cli::{cmd_base_change, cmd_gauss, cmd_reducibility, cmd_sign, CliError};
use bcsign::config::{ConfigError, ExperimentConfig, OutputFormat};

#[derive(Parser)]
#[command(name = "bcsign", version, about = "Gauss-sum signs, Hecke coefficients and base change for level-zero data")]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
    /// JSON experiment config, or a results file written by --json
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// built-in instance: u1, e3f1, e1f2, e3f2, e5f1, d1-tower
    #[arg(long, global = true)]
    case: Option<String>,
    /// write the machine-readable results here
    #[arg(long, global = true)]
    json: Option<PathBuf>,
    /// enumeration cap for brute-force sums
    #[arg(long, global = true)]
    bound: Option<u64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// seed for randomized sampling
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// override ρ(−1)
    #[arg(long, global = true, allow_hyphen_values = true)]
    rho_minus_one: Option<i8>,
    /// print the effective config and exit
    #[arg(long, global = true)]
    print_config: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// brute-force vs closed-form Gauss sums over a grid
    Gauss,
    /// ε_z with its invariance suite
    Sign,
    /// b_y, b_z oracles, Hecke eigenvalues and points of reducibility
    Reducibility,
    /// (ρ̃|μ_E, ρ̃(ϖ_E)) from (ρ, ε_z)
    BaseChange,
}

impl Cmd {
    fn name(self) -> &'static str {
        match self {
            Cmd::Gauss => "gauss",
            Cmd::Sign => "sign",
            Cmd::Reducibility => "reducibility",
            Cmd::BaseChange => "base-change",
        }
    }
}

#[derive(Serialize)]
struct Output<'a, R: Serialize> {
    schema_version: u32,
    command: &'static str,
    config: &'a ExperimentConfig,
    ok: bool,
    result: R,
}

fn load(args: &Args) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = match (&args.config, &args.case) {
        (Some(_), Some(_)) => return Err(ConfigError::Reference("give --config or --case, not both".into())),
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
            let v: serde_json::Value = serde_json::from_str(&text)?;
            match v.get("config") {
                Some(inner) if v.get("result").is_some() => ExperimentConfig::from_json(&inner.to_string())?,
                _ => ExperimentConfig::from_json(&text)?,
            }
        }
        (None, Some(name)) => ExperimentConfig::builtin(name)?,
        (None, None) => ExperimentConfig::builtin("e3f1")?,
    };
    if let Some(b) = args.bound {
        cfg.run.bound = b;
    }
    if args.threads.is_some() {
        cfg.run.threads = args.threads;
    }
    if let Some(s) = args.seed {
        cfg.run.seed = s;
    }
    if let Some(r) = args.rho_minus_one {
        cfg.character.rho_minus_one = r;
    }
    if args.json.is_some() {
        cfg.run.format = OutputFormat::Json;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit<R: Serialize>(args: &Args, cfg: &ExperimentConfig, ok: bool, text: String, result: R) -> Result<bool, CliError> {
    print!("{text}");
    if let Some(path) = &args.json {
        let out = Output { schema_version: bcsign::config::SCHEMA_VERSION, command: args.cmd.name(), config: cfg, ok, result };
        let body = serde_json::to_string_pretty(&out).expect("results serialize");
        std::fs::write(path, body + "\n").map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    }
    Ok(ok)
}

fn run(args: &Args) -> Result<bool, CliError> {
    let cfg = load(args)?;
    if args.print_config {
        println!("{}", cfg.to_json());
        return Ok(true);
    }
    match args.cmd {
        Cmd::Gauss => {
            let r = cmd_gauss(&cfg)?;
            emit(args, &cfg, r.ok, r.render(), &r)
        }
        Cmd::Sign => {
            let r = cmd_sign(&cfg)?;
            emit(args, &cfg, r.ok, r.render(), &r)
        }
        Cmd::Reducibility => {
            let r = cmd_reducibility(&cfg)?;
            emit(args, &cfg, r.ok, r.render(), &r)
        }
        Cmd::BaseChange => {
            let r = cmd_base_change(&cfg)?;
            emit(args, &cfg, r.ok, r.render(), &r)
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
