//! Snapshot, compare, flag, and correct. A golden copy of everything the
//! requester sends is kept beside the image the completer actually
//! received; any divergence raises an interrupt, and one cycle after the
//! interrupt is accepted the image is rewritten from the golden copy. A
//! holdback on the flagged range keeps the consumer from ever observing
//! the corrupt bytes. Fatal errors either get the same treatment with the
//! link kept up, or, in baseline mode, take the link down for a full
//! retrain.

use thiserror::Error;

use crate::classify::{ErrorEvent, ErrorKind, Severity};
use crate::config::Mode;
use crate::flow::FlowControl;
use crate::ltssm::{ltssm_step, LinkEvent, LinkState};

/// A contiguous byte range of the delivered image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DamageSpan {
    pub offset: u64,
    pub len: u64,
}

impl DamageSpan {
    pub fn end(&self) -> u64 {
        self.offset + self.len
    }
}

/// The completer-side delivered byte stream with per-byte commit state, a
/// consumer-visible prefix, and holdbacks over flagged ranges.
///
/// The visible prefix only ever advances over committed bytes and never
/// into a held range, so corrupted or missing data stays invisible until
/// corrected.
#[derive(Debug, Clone, Default)]
pub struct DeliveredImage {
    data: Vec<u8>,
    committed: Vec<bool>,
    visible_len: u64,
    holds: Vec<DamageSpan>,
}

impl DeliveredImage {
    pub fn new() -> DeliveredImage {
        DeliveredImage::default()
    }

    fn ensure(&mut self, end: usize) {
        if self.data.len() < end {
            self.data.resize(end, 0);
            self.committed.resize(end, false);
        }
    }

    /// Stores bytes arriving from the link and marks them committed.
    pub fn commit(&mut self, offset: u64, bytes: &[u8]) {
        let start = offset as usize;
        let end = start + bytes.len();
        self.ensure(end);
        self.data[start..end].copy_from_slice(bytes);
        for flag in &mut self.committed[start..end] {
            *flag = true;
        }
    }

    pub fn is_committed(&self, offset: u64) -> bool {
        self.committed.get(offset as usize).copied().unwrap_or(false)
    }

    /// Length of the unbroken committed prefix, holds ignored.
    pub fn contiguous_committed_len(&self) -> u64 {
        let mut len = 0u64;
        for &flag in &self.committed {
            if !flag {
                break;
            }
            len += 1;
        }
        len
    }

    /// Withholds a range from the consumer until released.
    pub fn hold(&mut self, span: DamageSpan) {
        self.holds.push(span);
    }

    /// Releases every hold starting at `offset`.
    pub fn release(&mut self, offset: u64) {
        self.holds.retain(|h| h.offset != offset);
    }

    pub fn holds(&self) -> &[DamageSpan] {
        &self.holds
    }

    fn hold_limit(&self) -> u64 {
        self.holds.iter().map(|h| h.offset).min().unwrap_or(u64::MAX)
    }

    /// Moves the consumer-visible prefix as far as commit state and holds
    /// allow; returns the newly exposed range.
    pub fn advance_visible(&mut self) -> DamageSpan {
        self.advance_visible_capped(u64::MAX)
    }

    /// Like `advance_visible` but never past `cap`, letting callers keep
    /// visibility trailing behind fresh commits.
    pub fn advance_visible_capped(&mut self, cap: u64) -> DamageSpan {
        let old = self.visible_len;
        let new = self.contiguous_committed_len().min(self.hold_limit()).min(cap);
        if new > old {
            self.visible_len = new;
        }
        DamageSpan { offset: old, len: self.visible_len.saturating_sub(old) }
    }

    pub fn visible_len(&self) -> u64 {
        self.visible_len
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    /// Direct byte damage, bypassing the commit path. Test hook used to
    /// model corruption that only the comparator can notice.
    pub fn poke(&mut self, offset: u64, value: u8) {
        let at = offset as usize;
        self.ensure(at + 1);
        self.data[at] = value;
    }
}

/// A point-in-time copy of delivery progress and link bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub cycle: u64,
    pub delivered_image: Vec<u8>,
    pub next_expected_seq: u16,
    pub credit_state: FlowControl,
    pub golden_cursor: u64,
}

impl Snapshot {
    /// Captures the raw committed prefix, corrupt bytes included, so a
    /// later comparison can find them.
    pub fn capture(
        cycle: u64,
        image: &DeliveredImage,
        next_expected_seq: u16,
        credit_state: FlowControl,
    ) -> Snapshot {
        let cursor = image.contiguous_committed_len();
        Snapshot {
            cycle,
            delivered_image: image.data()[..cursor as usize].to_vec(),
            next_expected_seq,
            credit_state,
            golden_cursor: cursor,
        }
    }
}

/// First divergence between a snapshot's delivered image and the golden
/// stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mismatch {
    pub offset: u64,
    pub golden_byte: u8,
    pub observed_byte: u8,
}

/// Scans the snapshot's delivered prefix against the golden stream and
/// returns the first differing byte, if any.
pub fn compare_and_flag(golden: &[u8], snapshot: &Snapshot) -> Option<Mismatch> {
    let end = (snapshot.golden_cursor as usize)
        .min(snapshot.delivered_image.len())
        .min(golden.len());
    for offset in 0..end {
        if snapshot.delivered_image[offset] != golden[offset] {
            return Some(Mismatch {
                offset: offset as u64,
                golden_byte: golden[offset],
                observed_byte: snapshot.delivered_image[offset],
            });
        }
    }
    None
}

/// An error raised to the recovery controller. Acceptance always takes
/// exactly one cycle. `damage` is the image range the error corrupted or
/// left unfilled, when there is one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterruptEvent {
    pub event: ErrorEvent,
    pub raised_cycle: u64,
    pub accepted_cycle: u64,
    pub damage: Option<DamageSpan>,
}

impl InterruptEvent {
    pub fn new(event: ErrorEvent, raised_cycle: u64, damage: Option<DamageSpan>) -> InterruptEvent {
        InterruptEvent { event, raised_cycle, accepted_cycle: raised_cycle + 1, damage }
    }
}

/// One completed correction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveryRecord {
    pub kind: ErrorKind,
    pub attributed_fault: Option<u64>,
    pub raised_cycle: u64,
    pub corrected_at_cycle: u64,
    /// Cycles from interrupt acceptance to corrected data.
    pub latency_cycles: u64,
    /// Cycles from the error flag to corrected data.
    pub flag_to_corrected_cycles: u64,
    pub bytes_corrected: u64,
}

/// The snapshot on hand predates the corruption it is asked to repair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("snapshot from cycle {snapshot_cycle} predates corruption onset at cycle {onset_cycle}")]
pub struct SnapshotStale {
    pub snapshot_cycle: u64,
    pub onset_cycle: u64,
}

/// Rewrites the damaged range of the image from the golden stream, one
/// cycle after the interrupt was accepted. Callers only route NonFatal
/// interrupts here in baseline mode; fatal interrupts come here only when
/// the link is being kept up.
pub fn recover(
    snapshot: &Snapshot,
    interrupt: &InterruptEvent,
    golden: &[u8],
    image: &mut DeliveredImage,
) -> Result<RecoveryRecord, SnapshotStale> {
    if snapshot.cycle < interrupt.event.cycle {
        return Err(SnapshotStale {
            snapshot_cycle: snapshot.cycle,
            onset_cycle: interrupt.event.cycle,
        });
    }
    let mut bytes_corrected = 0;
    if let Some(span) = interrupt.damage {
        let start = span.offset as usize;
        let end = (span.end() as usize).min(golden.len());
        if end > start {
            image.commit(span.offset, &golden[start..end]);
            bytes_corrected = (end - start) as u64;
        }
        image.release(span.offset);
    }
    let corrected_at_cycle = interrupt.accepted_cycle + 1;
    Ok(RecoveryRecord {
        kind: interrupt.event.kind,
        attributed_fault: interrupt.event.attributed_fault,
        raised_cycle: interrupt.raised_cycle,
        corrected_at_cycle,
        latency_cycles: corrected_at_cycle - interrupt.accepted_cycle,
        flag_to_corrected_cycles: corrected_at_cycle - interrupt.raised_cycle,
        bytes_corrected,
    })
}

/// How a fatal error was resolved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FatalDisposition {
    pub kind: ErrorKind,
    pub attributed_fault: Option<u64>,
    pub cycle: u64,
    pub link_down_cycles: u64,
    pub recovered: bool,
}

/// Resolves a fatal-severity event. Kept-up handling repairs state with
/// the link still in L0 and zero down cycles; baseline handling drops the
/// link into retraining for `retrain_cost` cycles.
pub fn handle_fatal(
    event: &ErrorEvent,
    mode: Mode,
    link: LinkState,
    retrain_cost: u64,
) -> (FatalDisposition, LinkState) {
    assert_eq!(
        event.severity,
        Severity::FatalUncorrectable,
        "only fatal events reach fatal handling, got {}",
        event.kind
    );
    let disposition = |down| FatalDisposition {
        kind: event.kind,
        attributed_fault: event.attributed_fault,
        cycle: event.cycle,
        link_down_cycles: down,
        recovered: true,
    };
    match mode {
        Mode::Proposed => (disposition(0), link),
        Mode::Baseline => (disposition(retrain_cost), ltssm_step(link, LinkEvent::FatalSeen)),
    }
}
