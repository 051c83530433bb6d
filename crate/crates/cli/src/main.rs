#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use commands::{RunError, RunOutput};
use config::Config;

const ARTIFACT_VERSION: u32 = 1;

/// SnV spin-qubit simulator and fitting toolkit.
#[derive(Parser)]
#[command(name = "snv", version)]
struct Cli {
    /// INI file layered over the built-in defaults (`defaults` for none).
    #[arg(long, global = true, env = "SNV_CONFIG")]
    config: Option<PathBuf>,
    /// Override one value: `key=value` or `section.key=value`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (overrides run.out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ground and excited eigenstates and optical transition strengths.
    Levels,
    /// Coherent population trapping scan.
    Cpt,
    /// Raman ODMR scan with a two-Lorentzian fit.
    Odmr,
    /// Raman Rabi oscillation.
    Rabi,
    /// Rabi signal versus the phase of a second pulse.
    PhaseSweep,
    /// Two-dimensional Ramsey scan with per-row fits.
    Ramsey,
    /// Hahn echo decay.
    Echo,
    /// CPMG-2 decay.
    Cpmg,
    /// Spin relaxation recovery.
    T1,
    /// Optical initialization traces and saturation fit.
    InitRate,
    /// Gate fidelity over saturation and detuning.
    FidelityMap,
    /// Fit a library model to a CSV file.
    Fit {
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        input: Option<PathBuf>,
        /// x column name(s), comma-separated.
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        y: Option<String>,
        #[arg(long)]
        sigma: Option<String>,
        /// Initial values as `name=value,...`.
        #[arg(long = "init")]
        init: Option<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Levels => "levels",
            Command::Cpt => "cpt",
            Command::Odmr => "odmr",
            Command::Rabi => "rabi",
            Command::PhaseSweep => "phase_sweep",
            Command::Ramsey => "ramsey",
            Command::Echo => "echo",
            Command::Cpmg => "cpmg",
            Command::T1 => "t1",
            Command::InitRate => "init_rate",
            Command::FidelityMap => "fidelity_map",
            Command::Fit { .. } => "fit",
        }
    }
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), RunError> {
    let io = |source| RunError::Io { path: dir.join(name).display().to_string(), source };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.persist(dir.join(name)).map_err(|e| io(e.error))?;
    Ok(())
}

fn run(cli: Cli) -> Result<String, RunError> {
    let started = chrono::Utc::now();
    let name = cli.command.name();
    let mut cfg = Config::load(cli.config.as_deref())?;
    for s in &cli.set {
        cfg.set(s, name)?;
    }
    if let Command::Fit { model, input, x, y, sigma, init } = &cli.command {
        let pairs = [
            ("model", model.clone()),
            ("input", input.as_ref().map(|p| p.display().to_string())),
            ("x", x.clone()),
            ("y", y.clone()),
            ("sigma", sigma.clone()),
            ("initial", init.clone()),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                cfg.set(&format!("fit.{k}={v}"), "fit")?;
            }
        }
    }
    if let Some(out) = &cli.out {
        cfg.set(&format!("run.out={}", out.display()), "run")?;
    }
    if let Some(n) = cli.threads {
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }

    let output: RunOutput = match &cli.command {
        Command::Levels => commands::levels(&cfg),
        Command::Cpt => commands::cpt(&cfg),
        Command::Odmr => commands::odmr(&cfg),
        Command::Rabi => commands::rabi(&cfg),
        Command::PhaseSweep => commands::phase_sweep(&cfg),
        Command::Ramsey => commands::ramsey(&cfg),
        Command::Echo => commands::echo(&cfg),
        Command::Cpmg => commands::cpmg(&cfg),
        Command::T1 => commands::t1(&cfg),
        Command::InitRate => commands::init_rate(&cfg),
        Command::FidelityMap => commands::fidelity_map(&cfg),
        Command::Fit { .. } => commands::fit(&cfg),
    }?;

    let dir = PathBuf::from(cfg.raw("run", "out"));
    std::fs::create_dir_all(&dir).map_err(|source| RunError::Io { path: dir.display().to_string(), source })?;
    let mut files = Vec::new();
    let summary_name = format!("{name}.txt");
    let canonical = cfg.canonical();
    let mut all: Vec<(&str, &str)> = output.artifacts.iter().map(|a| (a.name.as_str(), a.contents.as_str())).collect();
    all.push(("config.ini", &canonical));
    all.push((&summary_name, &output.summary));
    for (file, contents) in all {
        write_atomic(&dir, file, contents.as_bytes())?;
        files.push(serde_json::json!({
            "name": file,
            "bytes": contents.len(),
            "sha256": config::hex(&Sha256::digest(contents.as_bytes())),
        }));
    }
    let manifest = serde_json::json!({
        "artifact_version": ARTIFACT_VERSION,
        "command": name,
        "config_sha256": cfg.sha256(),
        "seed": cfg.u64("run", "seed")?,
        "started": started.to_rfc3339(),
        "finished": chrono::Utc::now().to_rfc3339(),
        "files": files,
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write_atomic(&dir, "manifest.json", text.as_bytes())?;
    Ok(output.summary)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
