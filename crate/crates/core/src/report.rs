//! End-of-campaign accounting: per-kind injection/detection/recovery
//! counts, delivered-stream integrity, recovery timing, link down time,
//! and the final status registers, with a fixed-order text serialization
//! so identical runs produce identical report files.

use std::fmt::Write as _;
use std::io;

use crate::classify::{AerRegisters, ErrorKind};
use crate::config::Mode;

/// Counts for one error kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KindCounts {
    /// Faults scheduled whose expected outcome is this kind.
    pub injected: u64,
    /// Error events recorded with this kind.
    pub detected: u64,
    /// Recorded events of this kind attributed to a fault expecting it.
    pub classified_correctly: u64,
    /// Resolutions: in-layer replays for correctable kinds, corrections
    /// for non-fatal kinds, dispositions for fatal kinds.
    pub recovered: u64,
}

/// The full outcome of one campaign run.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignReport {
    pub seed: u64,
    pub mode: Mode,
    pub total_cycles: u64,
    pub per_kind: [KindCounts; ErrorKind::COUNT],
    pub corrupted_bytes_delivered: u64,
    pub recovery_latencies: Vec<u64>,
    pub flag_to_corrected: Vec<u64>,
    pub link_down_cycles_total: u64,
    pub fatal_down_cycles: Vec<u64>,
    pub aer_final: AerRegisters,
    pub interrupts_raised: u64,
    pub unattributed_events: u64,
    pub misclassified_events: u64,
    pub duplicates_suppressed: u64,
    pub faults_unapplied: u64,
    /// Largest observed gap between a byte's first transmission and its
    /// consumer visibility, in cycles.
    pub max_commit_delay: u64,
}

impl CampaignReport {
    pub fn empty(seed: u64, mode: Mode) -> CampaignReport {
        CampaignReport {
            seed,
            mode,
            total_cycles: 0,
            per_kind: [KindCounts::default(); ErrorKind::COUNT],
            corrupted_bytes_delivered: 0,
            recovery_latencies: Vec::new(),
            flag_to_corrected: Vec::new(),
            link_down_cycles_total: 0,
            fatal_down_cycles: Vec::new(),
            aer_final: AerRegisters::default(),
            interrupts_raised: 0,
            unattributed_events: 0,
            misclassified_events: 0,
            duplicates_suppressed: 0,
            faults_unapplied: 0,
            max_commit_delay: 0,
        }
    }

    pub fn kind(&self, kind: ErrorKind) -> &KindCounts {
        &self.per_kind[kind.bit() as usize]
    }

    pub fn kind_mut(&mut self, kind: ErrorKind) -> &mut KindCounts {
        &mut self.per_kind[kind.bit() as usize]
    }

    pub fn total_injected(&self) -> u64 {
        self.per_kind.iter().map(|c| c.injected).sum()
    }

    pub fn total_detected(&self) -> u64 {
        self.per_kind.iter().map(|c| c.detected).sum()
    }

    /// Whether the run upheld the campaign invariants: every fault
    /// detected and classified as expected, no stray events, and, with
    /// the link kept up, not one corrupted byte delivered.
    pub fn passing(&self) -> bool {
        let counts_ok = self.per_kind.iter().all(|c| {
            c.detected == c.injected && c.classified_correctly == c.injected
        });
        let clean = self.unattributed_events == 0
            && self.misclassified_events == 0
            && self.faults_unapplied == 0;
        let masked = self.mode != Mode::Proposed || self.corrupted_bytes_delivered == 0;
        counts_ok && clean && masked
    }

    fn list(values: &[u64]) -> String {
        if values.is_empty() {
            return "-".to_string();
        }
        let mut out = String::new();
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out
    }

    /// The report file contents. Field order is fixed.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "seed={}", self.seed);
        let _ = writeln!(out, "mode={}", self.mode);
        let _ = writeln!(out, "total_cycles={}", self.total_cycles);
        let _ = writeln!(out, "faults_injected={}", self.total_injected());
        let _ = writeln!(out, "events_detected={}", self.total_detected());
        let _ = writeln!(out, "corrupted_bytes_delivered={}", self.corrupted_bytes_delivered);
        let _ = writeln!(out, "link_down_cycles_total={}", self.link_down_cycles_total);
        let _ = writeln!(out, "interrupts_raised={}", self.interrupts_raised);
        let _ = writeln!(out, "unattributed_events={}", self.unattributed_events);
        let _ = writeln!(out, "misclassified_events={}", self.misclassified_events);
        let _ = writeln!(out, "duplicates_suppressed={}", self.duplicates_suppressed);
        let _ = writeln!(out, "faults_unapplied={}", self.faults_unapplied);
        let _ = writeln!(out, "max_commit_delay={}", self.max_commit_delay);
        for kind in ErrorKind::ALL {
            let counts = self.kind(kind);
            let (layer, severity) = crate::classify::classify(kind);
            let _ = writeln!(
                out,
                "kind={} layer={} severity={} injected={} detected={} classified_correctly={} recovered={}",
                kind, layer, severity,
                counts.injected, counts.detected, counts.classified_correctly, counts.recovered,
            );
        }
        let _ = writeln!(out, "recovery_latencies={}", Self::list(&self.recovery_latencies));
        let _ = writeln!(out, "flag_to_corrected={}", Self::list(&self.flag_to_corrected));
        let _ = writeln!(out, "fatal_down_cycles={}", Self::list(&self.fatal_down_cycles));
        let _ = writeln!(out, "aer_correctable_status={:#06x}", self.aer_final.correctable_status);
        let _ = writeln!(
            out,
            "aer_uncorrectable_status={:#06x}",
            self.aer_final.uncorrectable_status
        );
        let _ = writeln!(
            out,
            "aer_first_error={}",
            self.aer_final.first_error_kind.map_or("-", |k| k.name())
        );
        let _ = writeln!(out, "aer_counts={}", Self::list(&self.aer_final.counts));
        let _ = writeln!(out, "passing={}", u8::from(self.passing()));
        out
    }

    pub fn write_to<W: io::Write>(&self, destination: &mut W) -> io::Result<()> {
        destination.write_all(self.to_text().as_bytes())
    }
}
