//! Campaign driver: builds a simulator from a configuration, generates
//! steady background traffic, schedules the disturbance campaign, runs the
//! clock past the horizon long enough for every timeout and repair to
//! settle, and collects the report, the trace, and a final end-to-end
//! comparison of delivered memory against the transmitted stream.

use std::fs::File;
use std::io::{self, BufWriter};

use crate::config::CampaignConfig;
use crate::fault::{gen_campaign, gen_campaign_of, CampaignError, FaultSpec, MIN_FAULT_GAP_CYCLES};
use crate::recovery::{Mismatch, Snapshot};
use crate::report::CampaignReport;
use crate::rng::SplitMix64;
use crate::sim::{SimParams, Simulator, MEM_BASE, STATUS_ADDR};
use crate::trace::emit_trace;

/// Submission slots repeat on this cycle stride.
pub const TRAFFIC_PERIOD: u64 = 8;
/// Bytes carried by each background write.
pub const WRITE_PAYLOAD_BYTES: usize = 64;
/// Extra submission cycles past the campaign horizon, long enough for a
/// disturbance landing at the horizon edge to still starve, expire, and
/// be flagged under live traffic.
pub const TRAFFIC_TAIL_CYCLES: u64 = 1024;
/// Settle time after submissions stop, beyond the completion timeout.
pub const DRAIN_EXTRA_CYCLES: u64 = 512;

/// Submission pattern: seven writes and three reads per ten slots.
const SLOT_IS_READ: [bool; 10] =
    [false, false, true, false, false, false, true, false, false, true];

/// Everything a finished campaign run produces.
#[derive(Debug)]
pub struct RunOutcome {
    pub report: CampaignReport,
    pub sim: Simulator,
    /// First divergence between delivered memory and the transmitted
    /// stream at the end of the run, if any survived recovery.
    pub final_mismatch: Option<Mismatch>,
}

/// Drives `sim` with pattern traffic and the given campaign until every
/// queue, timer, and repair has settled.
pub fn run_with_faults(
    mut sim: Simulator,
    seed: u64,
    horizon_cycles: u64,
    specs: &[FaultSpec],
) -> RunOutcome {
    sim.schedule_faults(specs);
    let mut traffic_rng = SplitMix64::new(seed ^ 0x7261_6666_6963_2121);
    let traffic_end = horizon_cycles + TRAFFIC_TAIL_CYCLES;
    let total = traffic_end + sim.params().completion_timeout_cycles + DRAIN_EXTRA_CYCLES;
    while sim.cycle() < total {
        let cycle = sim.cycle();
        if sim.link_up() && cycle < traffic_end && cycle % TRAFFIC_PERIOD == 0 {
            let slot = ((cycle / TRAFFIC_PERIOD) % 10) as usize;
            if SLOT_IS_READ[slot] {
                let written = sim.golden().len() as u64;
                if written == 0 {
                    let _ = sim.submit_read(STATUS_ADDR, 1);
                } else {
                    let offset = traffic_rng.next_below(written / 4) * 4;
                    let length_dw = 1 + traffic_rng.next_below(4) as u16;
                    let _ = sim.submit_read(MEM_BASE + offset, length_dw);
                }
            } else {
                let mut payload = vec![0u8; WRITE_PAYLOAD_BYTES];
                for chunk in payload.chunks_mut(8) {
                    chunk.copy_from_slice(&traffic_rng.next_u64().to_be_bytes());
                }
                let _ = sim.submit_write(payload);
            }
        }
        sim.tick();
    }
    let report = sim.build_report(seed);
    let final_snapshot = Snapshot::capture(
        sim.cycle(),
        sim.image(),
        0,
        crate::flow::FlowControl::new(0, 0),
    );
    let final_mismatch = compare_final(sim.golden(), &final_snapshot);
    RunOutcome { report, sim, final_mismatch }
}

fn compare_final(golden: &[u8], snapshot: &Snapshot) -> Option<Mismatch> {
    crate::recovery::compare_and_flag(golden, snapshot)
}

/// Runs the campaign described by `config` and writes any requested
/// output files.
pub fn run_campaign(config: &CampaignConfig) -> Result<RunOutcome, CampaignError> {
    let specs = generate_campaign(config)?;
    let sim = Simulator::new(SimParams::from_config(config));
    Ok(run_with_faults(sim, config.seed, config.horizon_cycles, &specs))
}

/// Builds the fault list for `config`, honoring a restricted kind set
/// when one is given.
pub fn generate_campaign(config: &CampaignConfig) -> Result<Vec<FaultSpec>, CampaignError> {
    match &config.kinds {
        Some(kinds) => gen_campaign_of(
            config.seed,
            config.count_per_kind,
            config.horizon_cycles,
            kinds,
            MIN_FAULT_GAP_CYCLES,
        ),
        None => gen_campaign(config.seed, config.count_per_kind, config.horizon_cycles),
    }
}

/// Writes the trace and report files named by `config`, when present.
pub fn write_outputs(config: &CampaignConfig, outcome: &RunOutcome) -> io::Result<()> {
    if let Some(path) = &config.trace_path {
        let mut out = BufWriter::new(File::create(path)?);
        emit_trace(outcome.sim.trace(), &mut out)?;
    }
    if let Some(path) = &config.report_path {
        let mut out = BufWriter::new(File::create(path)?);
        outcome.report.write_to(&mut out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::ErrorKind;
    use crate::config::Mode;
    use crate::fault::FaultKind;

    fn quick_config(seed: u64) -> CampaignConfig {
        CampaignConfig::new(seed, Mode::Proposed, 4000, 2)
    }

    #[test]
    fn fault_free_run_is_silent_and_exact() {
        let mut config = quick_config(11);
        config.count_per_kind = 0;
        config.kinds = Some(Vec::new());
        let outcome = run_campaign(&config).unwrap();
        assert!(outcome.sim.events().is_empty());
        assert!(outcome.final_mismatch.is_none());
        assert_eq!(outcome.report.corrupted_bytes_delivered, 0);
        assert_eq!(outcome.report.max_commit_delay, 7);
        assert!(outcome.report.passing());
    }

    #[test]
    fn single_kind_campaign_detects_each_fault_once() {
        let mut config = quick_config(23);
        config.kinds = Some(vec![FaultKind::FlipLcrcBit]);
        config.count_per_kind = 4;
        let outcome = run_campaign(&config).unwrap();
        let counts = outcome.report.kind(ErrorKind::BadTlp);
        assert_eq!(counts.injected, 4);
        assert_eq!(counts.detected, 4);
        assert_eq!(counts.classified_correctly, 4);
        assert!(outcome.final_mismatch.is_none());
        assert!(outcome.report.passing());
    }

    #[test]
    fn identical_seeds_give_identical_runs() {
        let config = quick_config(47);
        let a = run_campaign(&config).unwrap();
        let b = run_campaign(&config).unwrap();
        assert_eq!(a.report.to_text(), b.report.to_text());
        assert_eq!(a.sim.trace().len(), b.sim.trace().len());
        for (ra, rb) in a.sim.trace().iter().zip(b.sim.trace().iter()) {
            assert_eq!(crate::trace::format_record(ra), crate::trace::format_record(rb));
        }
    }

    #[test]
    fn full_mixed_campaign_passes_in_proposed_mode() {
        let config = quick_config(5);
        let outcome = run_campaign(&config).unwrap();
        assert!(
            outcome.report.passing(),
            "report not passing:\n{}",
            outcome.report.to_text()
        );
        assert!(outcome.final_mismatch.is_none());
        assert_eq!(outcome.report.corrupted_bytes_delivered, 0);
    }
}
