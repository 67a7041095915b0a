use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tractdim::app::{run, Command};
use tractdim::config::RunConfig;

#[derive(Parser)]
#[command(name = "tractdim", version, about = "Transfer operators, pressure and dimension for tract model maps")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (overrides TRACTDIM_WORKERS and the config).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Sampling seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Calibrate the constants and write constants_p<p>.toml.
    Calibrate,
    /// Evaluate the model maps and E at points (eval.jsonl).
    Eval,
    /// Transfer operator sweep over w, t and l (transfer.csv).
    Transfer,
    /// Pressure estimates over t (pressure.csv, pressure.jsonl).
    Pressure,
    /// Bowen zero and l-sweep with trend report (hypdim.csv, trend.txt).
    Hypdim,
    /// Escape-time image of the model map (julia.pgm).
    JuliaRender,
    /// Box-counting dimension (boxcount.json, boxcount.csv).
    JuliaDim,
    /// Run the verification checks (verify.json).
    Verify,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd = match cli.cmd {
        Cmd::Calibrate => Command::Calibrate,
        Cmd::Eval => Command::Eval,
        Cmd::Transfer => Command::Transfer,
        Cmd::Pressure => Command::Pressure,
        Cmd::Hypdim => Command::Hypdim,
        Cmd::JuliaRender => Command::JuliaRender,
        Cmd::JuliaDim => Command::JuliaDim,
        Cmd::Verify => Command::Verify,
    };
    let outcome = RunConfig::load(cli.config.as_deref()).and_then(|mut cfg| {
        if let Some(out) = cli.out {
            cfg.out = out;
        }
        if let Some(seed) = cli.seed {
            cfg.seed = seed;
        }
        run(cmd, &cfg, cli.workers)
    });
    match outcome {
        Ok(out) => {
            for f in &out.files {
                println!("{}", f.display());
            }
            if out.success {
                ExitCode::SUCCESS
            } else {
                eprintln!("{}", serde_json::json!({"error": "checks_failed", "message": "one or more checks failed"}));
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("{}", serde_json::json!({"error": e.kind(), "message": e.to_string()}));
            ExitCode::from(if e.kind() == "config" { 2 } else { 1 })
        }
    }
}
