mod commands;
mod failure;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use commands::Ctx;
use failure::{Failure, Stage, EXIT_INTERNAL, EXIT_VALIDATION};
use output::{sha256_hex, OutDir, RunManifest};

#[derive(Parser)]
#[command(
    name = "sqm",
    version,
    about = "Build, analyse and simulate translation-invariant and fractal codes"
)]
struct Cli {
    /// JSON configuration for the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "sqm-out")]
    out: PathBuf,
    /// Enumeration budget for exact searches.
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Also write SVG plots of success curves.
    #[arg(long, global = true)]
    svg: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy, Debug)]
enum Command {
    /// Canonicalize a code spec and write instance matrices.
    Build,
    /// Check the CSS condition symbolically and on instances.
    Validate,
    /// n, k, d and energy barrier for a list of sizes.
    Params,
    /// Fractal words and walks for a generator polynomial.
    Fractal,
    /// Minimum expansion ratio |Hc| / |c|^nu.
    Expansion,
    /// Memory-time estimate under Glauber dynamics.
    Simulate,
    /// Memory-time sweep with scaling fits.
    Sweep,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Build => "build",
            Command::Validate => "validate",
            Command::Params => "params",
            Command::Fractal => "fractal",
            Command::Expansion => "expansion",
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
        }
    }

    fn takes_seed(self) -> bool {
        matches!(
            self,
            Command::Params | Command::Expansion | Command::Simulate | Command::Sweep
        )
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let start = Instant::now();
    if let Some(w) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| Failure::internal("workers", e.to_string()))?;
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::validation("config", "--config PATH is required"))?;
    let text = std::fs::read_to_string(path).map_err(|e| {
        Failure::validation("config", format!("cannot read {}: {e}", path.display()))
    })?;
    let mut value: serde_json::Value = serde_json::from_str(&text).stage("config")?;
    if let (Some(seed), true) = (cli.seed, cli.command.takes_seed()) {
        match value.as_object_mut() {
            Some(obj) => {
                obj.insert("seed".into(), seed.into());
            }
            None => {
                return Err(Failure::validation(
                    "config",
                    "configuration must be a JSON object",
                ))
            }
        }
    }
    let config_sha256 = sha256_hex(serde_json::to_string(&value).stage("config")?.as_bytes());
    let base_dir = path.parent().map(PathBuf::from).unwrap_or_default();
    let mut ctx = Ctx {
        base_dir,
        budget: cli.budget,
        svg: cli.svg,
        out: OutDir::create(&cli.out)?,
        seeds: Vec::new(),
        budgets: Vec::new(),
        stdout: String::new(),
    };
    let mut invalid = false;
    match cli.command {
        Command::Build => {
            let cfg = commands::parse_build_config(value.clone())?;
            commands::cmd_build(&mut ctx, &cfg)?;
        }
        Command::Validate => {
            let cfg = commands::parse_build_config(value.clone())?;
            invalid = !commands::cmd_validate(&mut ctx, &cfg)?;
        }
        Command::Params => {
            let cfg = serde_json::from_value(value.clone()).stage("config")?;
            commands::cmd_params(&mut ctx, &cfg)?;
        }
        Command::Fractal => {
            let cfg = serde_json::from_value(value.clone()).stage("config")?;
            commands::cmd_fractal(&mut ctx, &cfg)?;
        }
        Command::Expansion => {
            let cfg = serde_json::from_value(value.clone()).stage("config")?;
            commands::cmd_expansion(&mut ctx, &cfg)?;
        }
        Command::Simulate => {
            let cfg = serde_json::from_value(value.clone()).stage("config")?;
            commands::cmd_simulate(&mut ctx, &cfg)?;
        }
        Command::Sweep => {
            let cfg = serde_json::from_value(value.clone()).stage("config")?;
            commands::cmd_sweep(&mut ctx, &cfg)?;
        }
    }
    print!("{}", ctx.stdout);
    let manifest = RunManifest {
        command: cli.command.name().into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256,
        config: value,
        seeds: ctx.seeds,
        workers: cli.workers,
        budget: cli.budget,
        budgets_consumed: ctx.budgets,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        outputs: Vec::new(),
    };
    ctx.out.finish(manifest)?;
    if invalid {
        return Err(Failure::validation(
            "validate",
            "code violates the CSS condition",
        ));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match std::panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code as u8)
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(EXIT_INTERNAL as u8)
        }
    }
}
