//! Command-line front end: campaign runs, single-fault probes, trace
//! windows, and taxonomy lookups.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use linksim::classify::{classify, ErrorKind};
use linksim::config::{CampaignConfig, Mode};
use linksim::fault::{FaultKind, FaultSpec};
use linksim::harness::{run_campaign, run_with_faults, write_outputs};
use linksim::rng::SplitMix64;
use linksim::sim::{SimParams, Simulator};
use linksim::trace::{format_record, parse_record};

#[derive(Parser)]
#[command(
    name = "linksim",
    about = "Deterministic layered-link simulator with seeded fault injection, \
             error classification, and on-the-fly recovery"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the campaign described by a config file and print its report.
    Run {
        /// Path to a key=value config file.
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a single fault of the named kind and print the resulting report.
    Inject {
        /// Fault kind name, e.g. FlipLcrcBit.
        #[arg(long)]
        kind: String,
        /// Cycle to apply the fault at.
        #[arg(long)]
        cycle: u64,
        /// Seed for fault parameters and background traffic.
        #[arg(long)]
        seed: u64,
    },
    /// Print a cycle window of a saved trace file.
    Trace {
        /// Path to a trace file written by `run`.
        #[arg(long)]
        input: PathBuf,
        /// First cycle to print.
        #[arg(long)]
        from: u64,
        /// Last cycle to print, inclusive.
        #[arg(long)]
        to: u64,
    },
    /// Print the layer and severity of an error kind.
    Classify {
        /// Error kind name, e.g. EcrcFailure.
        #[arg(long)]
        kind: String,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config } => cmd_run(&config),
        Command::Inject { kind, cycle, seed } => cmd_inject(&kind, cycle, seed),
        Command::Trace { input, from, to } => cmd_trace(&input, from, to),
        Command::Classify { kind } => cmd_classify(&kind),
    }
}

fn cmd_run(path: &PathBuf) -> ExitCode {
    let config = match CampaignConfig::load(path) {
        Ok(config) => config,
        Err(error) => {
            eprintln!("config error: {error}");
            return ExitCode::from(2);
        }
    };
    let outcome = match run_campaign(&config) {
        Ok(outcome) => outcome,
        Err(error) => {
            eprintln!("config error: {error}");
            return ExitCode::from(2);
        }
    };
    if let Err(error) = write_outputs(&config, &outcome) {
        eprintln!("output error: {error}");
        return ExitCode::from(2);
    }
    print!("{}", outcome.report.to_text());
    if let Some(mismatch) = &outcome.final_mismatch {
        eprintln!(
            "delivered stream diverges at offset {}: expected {:#04x}, observed {:#04x}",
            mismatch.offset, mismatch.golden_byte, mismatch.observed_byte
        );
        return ExitCode::from(1);
    }
    if outcome.report.passing() {
        ExitCode::SUCCESS
    } else {
        eprintln!("campaign violated its detection or delivery contract");
        ExitCode::from(1)
    }
}

fn cmd_inject(kind_name: &str, cycle: u64, seed: u64) -> ExitCode {
    let Some(kind) = FaultKind::from_name(kind_name) else {
        eprintln!("unknown fault kind {kind_name:?}; valid kinds:");
        for kind in FaultKind::ALL {
            eprintln!("  {}", kind.name());
        }
        return ExitCode::from(2);
    };
    let mut rng = SplitMix64::new(seed);
    let spec = FaultSpec {
        id: 0,
        cycle,
        kind,
        params: [rng.next_u64(), rng.next_u64()],
        seed: rng.next_u64(),
    };
    let sim = Simulator::new(SimParams::new(Mode::Proposed));
    let outcome = run_with_faults(sim, seed, cycle + 64, &[spec]);
    for event in outcome.sim.events() {
        let fault = match event.attributed_fault {
            Some(id) => id.to_string(),
            None => "-".to_string(),
        };
        println!(
            "event cycle={} kind={} layer={} severity={} fault={} detail={}",
            event.cycle, event.kind.name(), event.layer, event.severity, fault, event.detail
        );
    }
    print!("{}", outcome.report.to_text());
    if outcome.report.passing() && outcome.final_mismatch.is_none() {
        ExitCode::SUCCESS
    } else {
        eprintln!("fault was not detected, classified, and masked as expected");
        ExitCode::from(1)
    }
}

fn cmd_trace(input: &PathBuf, from: u64, to: u64) -> ExitCode {
    if from > to {
        eprintln!("empty window: --from {from} exceeds --to {to}");
        return ExitCode::from(2);
    }
    let text = match std::fs::read_to_string(input) {
        Ok(text) => text,
        Err(error) => {
            eprintln!("cannot read {}: {error}", input.display());
            return ExitCode::from(2);
        }
    };
    for line in text.lines() {
        match parse_record(line) {
            Ok(record) => {
                if record.cycle >= from && record.cycle <= to {
                    println!("{}", format_record(&record));
                }
            }
            Err(error) => {
                eprintln!("bad trace line: {error}");
                return ExitCode::from(2);
            }
        }
    }
    ExitCode::SUCCESS
}

fn cmd_classify(kind_name: &str) -> ExitCode {
    let Some(kind) = ErrorKind::from_name(kind_name) else {
        eprintln!("unknown error kind {kind_name:?}; valid kinds:");
        for kind in ErrorKind::ALL {
            eprintln!("  {}", kind.name());
        }
        return ExitCode::from(2);
    };
    let (layer, severity) = classify(kind);
    println!("kind={} layer={layer} severity={severity} bit={}", kind.name(), kind.bit());
    ExitCode::SUCCESS
}
