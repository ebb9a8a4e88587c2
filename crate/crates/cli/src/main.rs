//! Command-line front end: run scenarios, re-check recorded traces, and
//! generate threshold key material.
//!
//! Exit code is 0 iff every enabled check passes (or the requested
//! requirement holds for `check`).

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use frostbft::harness::{self, ScenarioConfig};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "frostbft", about = "Deterministic threshold-signed block lottery simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and evaluate its enabled checks.
    Run {
        /// Path to the scenario JSON file.
        scenario_file: PathBuf,
        /// Override the scenario's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the newline-delimited trace here.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        /// Write the metrics report (JSON) here.
        #[arg(long)]
        report_out: Option<PathBuf>,
    },
    /// Re-evaluate one requirement against a recorded trace file.
    Check {
        /// Path to a trace file produced by `run --trace-out`.
        trace_file: PathBuf,
        /// Which requirement to evaluate.
        #[arg(long, value_enum)]
        requirement: Requirement,
    },
    /// Generate threshold key material and chain parameters as genesis JSON.
    Keygen {
        /// Number of participants.
        #[arg(long)]
        n: u32,
        /// Signing threshold.
        #[arg(long)]
        k: u32,
        /// Group to use: `tiny` (small prime-order subgroup) or `curve`
        /// (secp256k1).
        #[arg(long, value_enum, default_value = "tiny")]
        ciphersuite: Suite,
        /// Seed for the key ceremony.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write the genesis JSON here (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Requirement {
    R1,
    R2,
    R3,
    R4,
    R5,
}

impl Requirement {
    fn name(self) -> &'static str {
        match self {
            Requirement::R1 => "r1",
            Requirement::R2 => "r2",
            Requirement::R3 => "r3",
            Requirement::R4 => "r4",
            Requirement::R5 => "r5",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Tiny,
    Curve,
}

impl Suite {
    fn id(self) -> &'static str {
        match self {
            Suite::Tiny => "tiny-q1009",
            Suite::Curve => "secp256k1-sha256",
        }
    }
}

fn cmd_run(
    scenario_file: PathBuf,
    seed: Option<u64>,
    trace_out: Option<PathBuf>,
    report_out: Option<PathBuf>,
) -> Result<bool> {
    let text = fs::read_to_string(&scenario_file)
        .with_context(|| format!("reading {}", scenario_file.display()))?;
    let mut cfg = ScenarioConfig::from_json(&text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let out = harness::run_scenario(&cfg)?;
    if let Some(path) = trace_out {
        fs::write(&path, &out.trace_text).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = report_out {
        let json = serde_json::to_string_pretty(&out.report)?;
        fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
    }
    println!("scenario: {}", out.report.scenario);
    println!("seed: {}", out.report.seed);
    println!("events: {}", out.report.events_processed);
    println!("trace hash: {}", out.report.trace_hash);
    for (node, count) in &out.report.blocks_adopted {
        println!("node {node}: {count} blocks adopted");
    }
    for (name, pass) in &out.report.checks {
        println!("check {name}: {}", if *pass { "PASS" } else { "FAIL" });
    }
    Ok(out.report.all_checks_pass)
}

fn cmd_check(trace_file: PathBuf, requirement: Requirement) -> Result<bool> {
    let text = fs::read_to_string(&trace_file)
        .with_context(|| format!("reading {}", trace_file.display()))?;
    let (meta, records) = harness::parse_trace(&text)?;
    let pass = harness::run_check(requirement.name(), &meta, &records);
    println!(
        "check {}: {}",
        requirement.name(),
        if pass { "PASS" } else { "FAIL" }
    );
    Ok(pass)
}

fn cmd_keygen(n: u32, k: u32, suite: Suite, seed: u64, out: Option<PathBuf>) -> Result<bool> {
    if k == 0 || k > n {
        bail!("threshold k must satisfy 1 <= k <= n");
    }
    let doc = harness::keygen(n, k, suite.id(), seed)?;
    let json = serde_json::to_string_pretty(&doc)?;
    match out {
        Some(path) => {
            fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?
        }
        None => println!("{json}"),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario_file,
            seed,
            trace_out,
            report_out,
        } => cmd_run(scenario_file, seed, trace_out, report_out),
        Command::Check {
            trace_file,
            requirement,
        } => cmd_check(trace_file, requirement),
        Command::Keygen {
            n,
            k,
            ciphersuite,
            seed,
            out,
        } => cmd_keygen(n, k, ciphersuite, seed, out),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
