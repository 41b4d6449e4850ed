//! Whole-campaign integration checks: single-fault runs for every fault
//! kind, trace and report agreement, clean-run behavior, and repeatability.

use std::io::Write as _;

use linksim::classify::{expected_error_for, ErrorKind, Severity};
use linksim::config::{CampaignConfig, Mode};
use linksim::fault::{gen_campaign, gen_campaign_of, FaultKind};
use linksim::harness::{run_campaign, run_with_faults};
use linksim::ltssm::Ltssm;
use linksim::sim::{SimParams, Simulator};

#[test]
fn each_fault_kind_alone_is_detected_and_attributed() {
    for fault in FaultKind::ALL {
        let specs = gen_campaign_of(5, 1, 2_000, &[fault], 32).expect("campaign fits");
        assert_eq!(specs.len(), 1, "{}: one fault expected", fault.name());
        let expected = expected_error_for(fault);

        let sim = Simulator::new(SimParams::new(Mode::Proposed));
        let outcome = run_with_faults(sim, 5, 2_000, &specs);

        let attributed = outcome
            .sim
            .events()
            .iter()
            .filter(|e| e.attributed_fault == Some(specs[0].id))
            .count();
        assert!(
            attributed >= 1,
            "{}: no event attributed to the injected fault",
            fault.name()
        );
        for event in outcome.sim.events() {
            assert_eq!(
                event.kind,
                expected,
                "{}: surfaced as {} at cycle {}",
                fault.name(),
                event.kind.name(),
                event.cycle
            );
        }
        assert!(
            outcome.report.kind(expected).detected >= 1,
            "{}: report counts no {} events",
            fault.name(),
            expected.name()
        );
        assert_eq!(outcome.report.unattributed_events, 0, "{}", fault.name());
        assert_eq!(outcome.report.misclassified_events, 0, "{}", fault.name());
        assert_eq!(outcome.report.faults_unapplied, 0, "{}", fault.name());
        assert_eq!(outcome.report.corrupted_bytes_delivered, 0, "{}", fault.name());
        assert!(outcome.final_mismatch.is_none(), "{}", fault.name());
        assert!(outcome.report.passing(), "{}: report not passing", fault.name());
    }
}

#[test]
fn trace_error_lines_match_report_counts() {
    let config = CampaignConfig::new(3, Mode::Proposed, 8_000, 3);
    let outcome = run_campaign(&config).expect("campaign runs");

    for (index, record) in outcome.sim.trace().iter().enumerate() {
        assert_eq!(record.cycle, index as u64, "trace cycles must be contiguous");
        assert_eq!(record.err_flag, record.err_kind.is_some());
    }

    for kind in ErrorKind::ALL {
        let trace_lines = outcome
            .sim
            .trace()
            .iter()
            .filter(|r| r.err_kind == Some(kind))
            .count() as u64;
        assert_eq!(
            trace_lines,
            outcome.report.kind(kind).detected,
            "{}: trace shows {} error lines, report counts {}",
            kind.name(),
            trace_lines,
            outcome.report.kind(kind).detected
        );
    }
    assert_eq!(
        outcome.sim.trace().iter().filter(|r| r.err_flag).count() as u64,
        outcome.report.total_detected()
    );
}

#[test]
fn fault_free_run_delivers_everything_cleanly() {
    let sim = Simulator::new(SimParams::new(Mode::Proposed));
    let outcome = run_with_faults(sim, 21, 3_000, &[]);

    assert!(outcome.sim.events().is_empty());
    assert!(outcome.sim.records().is_empty());
    assert!(outcome.sim.dispositions().is_empty());
    assert_eq!(outcome.report.interrupts_raised, 0);
    assert_eq!(outcome.report.corrupted_bytes_delivered, 0);
    assert_eq!(outcome.sim.aer().total_events(), 0);
    assert_eq!(outcome.sim.aer().first_error_kind, None);
    assert!(outcome.final_mismatch.is_none());
    assert_eq!(outcome.sim.delivered_visible(), outcome.sim.golden());
    assert!(!outcome.sim.golden().is_empty());
    assert_eq!(outcome.report.max_commit_delay, 7);
    assert!(outcome.report.passing());

    for record in outcome.sim.trace() {
        assert!(!record.err_flag, "cycle {}: error on a fault-free run", record.cycle);
        assert!(!record.pr_recovery, "cycle {}: recovery on a fault-free run", record.cycle);
        if record.cycle >= 3 {
            assert_eq!(record.ltssm, Ltssm::L0, "cycle {}", record.cycle);
        }
    }
}

#[test]
fn identical_runs_are_identical() {
    let specs = gen_campaign(13, 1, 2_000).expect("campaign fits");
    let run = || {
        let sim = Simulator::new(SimParams::new(Mode::Proposed));
        run_with_faults(sim, 13, 2_000, &specs)
    };
    let first = run();
    let second = run();

    assert_eq!(first.sim.events(), second.sim.events());
    assert_eq!(first.sim.trace(), second.sim.trace());
    assert_eq!(first.sim.records(), second.sim.records());
    assert_eq!(first.report, second.report);
    assert_eq!(first.report.to_text(), second.report.to_text());
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("campaign.cfg");
    let mut file = std::fs::File::create(&path).expect("config file");
    writeln!(file, "# nightly soak settings").unwrap();
    writeln!(file, "seed = 99").unwrap();
    writeln!(file, "mode = baseline").unwrap();
    writeln!(file, "horizon_cycles = 12000").unwrap();
    writeln!(file, "count_per_kind = 4").unwrap();
    writeln!(file, "snapshot_interval = 2").unwrap();
    writeln!(file, "retrain_cost = 80").unwrap();
    writeln!(file, "completion_timeout_cycles = 2048").unwrap();
    writeln!(file, "replay_timeout_cycles = 128").unwrap();
    writeln!(file, "trace_path = /tmp/soak.trace").unwrap();
    writeln!(file, "kinds = DropAck, PlSymbolError").unwrap();
    drop(file);

    let config = CampaignConfig::load(&path).expect("config loads");
    assert_eq!(config.seed, 99);
    assert_eq!(config.mode, Mode::Baseline);
    assert_eq!(config.horizon_cycles, 12_000);
    assert_eq!(config.count_per_kind, 4);
    assert_eq!(config.snapshot_interval, 2);
    assert_eq!(config.retrain_cost, 80);
    assert_eq!(config.completion_timeout_cycles, 2048);
    assert_eq!(config.replay_timeout_cycles, 128);
    assert_eq!(config.trace_path.as_deref(), Some("/tmp/soak.trace"));
    assert_eq!(config.report_path, None);
    assert_eq!(
        config.kinds,
        Some(vec![FaultKind::DropAck, FaultKind::PlSymbolError])
    );
    config.validate().expect("config is valid");
}

// A baseline retrain clears the frames in flight, and the replay buffer
// then resends the pristine originals. A corruption can therefore vanish
// before any detector sees it, so this mode does not promise that every
// injected fault leaves an event. The delivered stream must still be
// intact and every fatal event must still be dispatched.
#[test]
fn baseline_mixed_campaign_keeps_stream_intact() {
    let config = CampaignConfig::new(6, Mode::Baseline, 10_000, 2);
    let outcome = run_campaign(&config).expect("campaign runs");

    assert_eq!(outcome.report.corrupted_bytes_delivered, 0);
    assert!(outcome.final_mismatch.is_none());
    assert_eq!(outcome.sim.delivered_visible(), outcome.sim.golden());
    assert_eq!(outcome.report.unattributed_events, 0);
    assert_eq!(outcome.report.misclassified_events, 0);
    assert_eq!(outcome.report.faults_unapplied, 0);

    let fatal_events = outcome
        .sim
        .events()
        .iter()
        .filter(|e| e.severity == Severity::FatalUncorrectable)
        .count() as u64;
    assert!(fatal_events > 0, "mixed campaign must include fatal kinds");
    assert_eq!(
        outcome.sim.dispositions().len() as u64,
        fatal_events,
        "every fatal event needs a disposition"
    );
    for disposition in outcome.sim.dispositions() {
        assert_eq!(disposition.link_down_cycles, config.retrain_cost);
    }
    assert!(outcome.report.link_down_cycles_total > 0);
    assert!(outcome.report.link_down_cycles_total <= fatal_events * config.retrain_cost);
}
