//! Discrete-cycle simulator of a serial link between a requester and a
//! completer. Each direction runs a six-stage pipeline (transaction form,
//! link-layer framing, physical entry, physical exit, link-layer check,
//! transaction delivery); every stage moves at most one item per cycle and
//! only items enqueued on an earlier cycle, so a submission on cycle `c`
//! commits to the completer's memory on cycle `c + 6`. A scheduled
//! disturbance campaign perturbs frames, acknowledgments, credits, and
//! training; detection raises classified error events, and the recovery
//! controller repairs the delivered stream before the consumer sees it.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::classify::{
    aer_record, classify, expected_error_for, AerRegisters, ErrorEvent, ErrorKind, Severity,
};
use crate::config::{CampaignConfig, Mode};
use crate::fault::{FaultKind, FaultSpec};
use crate::flow::FlowControl;
use crate::ltssm::{ltssm_step, LinkEvent, LinkState, Ltssm};
use crate::packet::{
    frame_tlp, parse_tlp, DlFrame, Dllp, DllpKind, Tlp, TlpKind, SEQ_MODULUS, TLP_HEADER_BYTES,
};
use crate::recovery::{
    handle_fatal, recover, DamageSpan, DeliveredImage, FatalDisposition, InterruptEvent,
    RecoveryRecord, Snapshot,
};
use crate::replay::ReplayBuffer;
use crate::report::CampaignReport;
use crate::trace::TraceRecord;

/// Header credits the completer advertises at init.
pub const ADVERTISED_HDR_CREDITS: u32 = 8;
/// Data credits (in dwords) the completer advertises at init.
pub const ADVERTISED_DATA_CREDITS_DW: u32 = 256;
/// Cycles a credit-blocked frame may wait before a flow-control protocol
/// error is raised.
pub const FC_STARVATION_DEADLINE: u64 = 256;
/// Base address of the completer's memory window.
pub const MEM_BASE: u64 = 0x1000_0000;
/// Address probed by requester health reads.
pub const STATUS_ADDR: u64 = 0x100;
/// Reads inside this window are refused with a dataless completion.
pub const ABORT_BASE: u64 = 0xF000_0000;
/// Size of the refused window.
pub const ABORT_SIZE: u64 = 0x1000;
/// Bus id of the requester endpoint.
pub const REQUESTER_ID: u16 = 0x0100;
/// Cycles a non-fatal repair occupies end to end: flag, acceptance,
/// correction, re-issued submission.
pub const NONFATAL_REPAIR_CYCLES: u64 = 4;

const INJECT_RETRY_LIMIT: u32 = 5000;
const ACK_SUPPRESS_WINDOW: u64 = 128;
const FC_SUPPRESS_WINDOW: u64 = 640;
const CONSUMER_STALL_CYCLES: u64 = 24;
const OVERFLOW_BURST: usize = 9;
const STALL_RELEASE_EXTRA: u64 = 64;
const BRING_UP_DWELLS: [(Ltssm, u64); 3] =
    [(Ltssm::Detect, 1), (Ltssm::Polling, 1), (Ltssm::Config, 1)];
const RETRAIN_DWELLS: [(Ltssm, u64); 3] =
    [(Ltssm::Detect, 14), (Ltssm::Polling, 13), (Ltssm::Config, 13)];

/// Knobs the simulator takes from a campaign configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimParams {
    pub mode: Mode,
    pub snapshot_interval: u64,
    pub retrain_cost: u64,
    pub completion_timeout_cycles: u64,
    pub replay_timeout_cycles: u64,
}

impl SimParams {
    pub fn new(mode: Mode) -> SimParams {
        SimParams {
            mode,
            snapshot_interval: 1,
            retrain_cost: 40,
            completion_timeout_cycles: 1024,
            replay_timeout_cycles: 64,
        }
    }

    pub fn from_config(config: &CampaignConfig) -> SimParams {
        SimParams {
            mode: config.mode,
            snapshot_interval: config.snapshot_interval,
            retrain_cost: config.retrain_cost,
            completion_timeout_cycles: config.completion_timeout_cycles,
            replay_timeout_cycles: config.replay_timeout_cycles,
        }
    }
}

/// Why a submission was refused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SubmitError {
    #[error("link is not in L0")]
    LinkDown,
    #[error("no request tag is free")]
    NoFreeTag,
}

/// Receive-side link-layer state: the next sequence number in order and
/// whether a retransmission request is already outstanding.
#[derive(Debug, Clone)]
pub struct DlReceiver {
    pub expected_seq: u16,
    pub nak_scheduled: bool,
}

/// What the receive-side link layer decided about one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DlOutcome {
    /// In order and intact; handed to the transaction layer.
    Accept,
    /// Damaged or out of order; retransmission requested from `expected`.
    Nak { expected: u16 },
    /// Already accepted earlier; acknowledged again and dropped.
    Duplicate,
    /// Dropped silently while a retransmission request is outstanding.
    Ignored,
}

impl DlReceiver {
    pub fn new() -> DlReceiver {
        DlReceiver { expected_seq: 0, nak_scheduled: false }
    }

    /// Checks integrity and ordering of one frame. A second error while a
    /// Nak is outstanding is dropped without another event; the error kind
    /// returned alongside is what the first failure raises.
    pub fn receive(&mut self, frame: &DlFrame) -> (DlOutcome, Option<ErrorKind>) {
        if !frame.lcrc_ok() {
            if self.nak_scheduled {
                return (DlOutcome::Ignored, None);
            }
            self.nak_scheduled = true;
            return (DlOutcome::Nak { expected: self.expected_seq }, Some(ErrorKind::BadTlp));
        }
        let delta = (u32::from(frame.seq_num) + u32::from(SEQ_MODULUS)
            - u32::from(self.expected_seq))
            % u32::from(SEQ_MODULUS);
        if delta == 0 {
            self.expected_seq = (self.expected_seq + 1) % SEQ_MODULUS;
            self.nak_scheduled = false;
            (DlOutcome::Accept, None)
        } else if delta >= u32::from(SEQ_MODULUS) / 2 {
            (DlOutcome::Duplicate, None)
        } else if self.nak_scheduled {
            (DlOutcome::Ignored, None)
        } else {
            self.nak_scheduled = true;
            (DlOutcome::Nak { expected: self.expected_seq }, Some(ErrorKind::DllProtocolError))
        }
    }
}

impl Default for DlReceiver {
    fn default() -> DlReceiver {
        DlReceiver::new()
    }
}

#[derive(Debug)]
struct Stamped<T> {
    at: u64,
    item: T,
}

fn pop_ready<T>(queue: &mut VecDeque<Stamped<T>>, now: u64) -> Option<T> {
    if queue.front().map(|s| s.at < now).unwrap_or(false) {
        queue.pop_front().map(|s| s.item)
    } else {
        None
    }
}

/// Bookkeeping riding along with a frame through the pipeline.
#[derive(Debug, Clone, Default)]
struct FrameMeta {
    request_id: Option<u64>,
    injected_by: Option<u64>,
    /// Deferred checksum damage: applied only after the link-layer check
    /// passes, so only the end-to-end check can catch it.
    ecrc_flip: Option<(u64, u32)>,
    symbol_error: Option<u64>,
    credit_bypass: bool,
    read_tag: Option<u8>,
    tlp_kind: Option<TlpKind>,
    payload_bytes: u32,
    has_ecrc: bool,
    /// True once the frame is a replay-buffer resend. The receiver will
    /// discard it as a duplicate, so mutating it proves nothing.
    is_replay: bool,
}

impl FrameMeta {
    fn tainted(&self) -> bool {
        self.injected_by.is_some() || self.ecrc_flip.is_some() || self.symbol_error.is_some()
    }
}

#[derive(Debug)]
struct OutTlp {
    tlp: Tlp,
    meta: FrameMeta,
}

#[derive(Debug)]
struct FlightFrame {
    frame: DlFrame,
    meta: FrameMeta,
}

#[derive(Debug)]
struct FlightDllp {
    dllp: Dllp,
    injected_by: Option<u64>,
}

#[derive(Debug)]
enum DlItem {
    Frame(FlightFrame),
    Dllp(FlightDllp),
}

impl DlItem {
    fn wire_bytes(&self) -> Vec<u8> {
        match self {
            DlItem::Frame(f) => f.frame.wire_bytes(),
            DlItem::Dllp(d) => d.dllp.wire_bytes(),
        }
    }
}

#[derive(Debug)]
struct UpTlp {
    bytes: Vec<u8>,
    seq: u16,
    meta: FrameMeta,
}

/// One direction's pipeline plus its transmit and receive link-layer
/// state. `rx` belongs to the endpoint at the downstream end.
#[derive(Debug)]
struct Pipe {
    q_submit: VecDeque<Stamped<OutTlp>>,
    q_tl_dl: VecDeque<Stamped<OutTlp>>,
    q_dl_pl: VecDeque<Stamped<DlItem>>,
    q_wire: VecDeque<Stamped<DlItem>>,
    q_pl_dl: VecDeque<Stamped<DlItem>>,
    q_dl_tl: VecDeque<Stamped<UpTlp>>,
    next_seq: u16,
    replay: ReplayBuffer,
    /// Bookkeeping for frames the replay buffer may resend, keyed by
    /// sequence number. Entries are overwritten on wraparound.
    frame_meta: BTreeMap<u16, FrameMeta>,
    rx: DlReceiver,
}

impl Pipe {
    fn new() -> Pipe {
        Pipe {
            q_submit: VecDeque::new(),
            q_tl_dl: VecDeque::new(),
            q_dl_pl: VecDeque::new(),
            q_wire: VecDeque::new(),
            q_pl_dl: VecDeque::new(),
            q_dl_tl: VecDeque::new(),
            next_seq: 0,
            replay: ReplayBuffer::new(),
            frame_meta: BTreeMap::new(),
            rx: DlReceiver::new(),
        }
    }

    /// Drops everything between framing and the link-layer check; frames
    /// survive in the replay buffer, link-management packets do not.
    fn clear_in_flight(&mut self) {
        self.q_dl_pl.clear();
        self.q_wire.clear();
        self.q_pl_dl.clear();
    }

    /// Re-enqueues every unacknowledged frame, restoring the bookkeeping
    /// recorded when each was first framed.
    fn requeue_replay(&mut self, now: u64) {
        for frame in self.replay.replay_all() {
            let mut meta = self.frame_meta.get(&frame.seq_num).cloned().unwrap_or_default();
            meta.is_replay = true;
            self.q_dl_pl
                .push_back(Stamped { at: now, item: DlItem::Frame(FlightFrame { frame, meta }) });
        }
    }
}

#[derive(Debug, Clone)]
struct RequestInfo {
    address: u64,
    length_dw: u16,
    golden: Option<DamageSpan>,
    fault: Option<u64>,
}

#[derive(Debug)]
struct Outstanding {
    request_id: u64,
    /// Armed when the read is framed onto the link, not at submission,
    /// so queueing delay upstream of the link does not count against the
    /// completion deadline.
    timeout_at: Option<u64>,
}

#[derive(Debug)]
struct Completer {
    accepts_messages: bool,
    occupancy_hdr: i64,
    processed_hdr_total: u8,
    processed_dw_total: u16,
    withheld: Vec<(u64, OutTlp)>,
}

#[derive(Debug, Default)]
struct Injector {
    due: BTreeMap<u64, Vec<FaultSpec>>,
    retries: BTreeMap<u64, u32>,
    ack_suppress_until: u64,
    /// Replay-timer expiries before this cycle are a known consequence of
    /// a corrupted acknowledgment and are resent without a new event.
    expiry_excused_until: u64,
    fc_suppress_until: u64,
    consumer_stall_until: u64,
    overflow_window_until: u64,
    replay_armed: VecDeque<u64>,
    /// Credit-violation faults whose beyond-credit frame has not yet been
    /// caught at the receiver, oldest first.
    overflow_armed: VecDeque<u64>,
    fc_armed: VecDeque<u64>,
    stall_traps: VecDeque<u64>,
}

enum ApplyOutcome {
    Applied,
    Retry,
}

#[derive(Debug)]
struct Draft {
    kind: ErrorKind,
    seq_or_tag: u64,
    fault: Option<u64>,
    damage: Option<DamageSpan>,
    request_id: Option<u64>,
    detail: String,
}

#[derive(Debug, Clone)]
enum Reissue {
    Write { request_id: u64 },
    Read { request_id: u64 },
    Probe,
}

/// The whole simulated link: two endpoints, two pipelines, the scheduled
/// disturbances, the detectors, and the recovery controller.
#[derive(Debug)]
pub struct Simulator {
    cycle: u64,
    params: SimParams,
    link: LinkState,
    train_plan: VecDeque<(Ltssm, u64)>,
    ever_l0: bool,
    fwd: Pipe,
    rev: Pipe,
    fc: FlowControl,
    fc_blocked_since: Option<u64>,
    outstanding: BTreeMap<u8, Outstanding>,
    stale_tags: BTreeSet<u8>,
    requests: Vec<RequestInfo>,
    completer: Completer,
    injector: Injector,
    fault_kinds: BTreeMap<u64, FaultKind>,
    golden: Vec<u8>,
    image: DeliveredImage,
    latest_snapshot: Option<Snapshot>,
    delivered_this_cycle: bool,
    prev_committed: u64,
    write_spans: Vec<(DamageSpan, u64)>,
    next_unrevealed_write: usize,
    pending_drafts: VecDeque<Draft>,
    pending_interrupts: VecDeque<(InterruptEvent, Option<u64>)>,
    deferred_reissues: Vec<Reissue>,
    recorded_for_fault: BTreeMap<u64, Vec<ErrorKind>>,
    tx_capture: Option<Vec<u8>>,
    rx_capture: Option<Vec<u8>>,
    pr_flag: bool,
    trace: Vec<TraceRecord>,
    aer: AerRegisters,
    events: Vec<ErrorEvent>,
    records: Vec<RecoveryRecord>,
    dispositions: Vec<FatalDisposition>,
    injected_by_kind: [u64; ErrorKind::COUNT],
    detected_by_kind: [u64; ErrorKind::COUNT],
    classified_by_kind: [u64; ErrorKind::COUNT],
    misclassified_events: u64,
    unattributed_events: u64,
    duplicates_suppressed: u64,
    interrupts_raised: u64,
    faults_unapplied: u64,
    stale_recoveries: u64,
    corrupted_bytes_delivered: u64,
    max_commit_delay: u64,
    link_down_cycles_total: u64,
}

impl Simulator {
    pub fn new(params: SimParams) -> Simulator {
        Simulator {
            cycle: 0,
            params,
            link: LinkState::new(),
            train_plan: BRING_UP_DWELLS.into_iter().collect(),
            ever_l0: false,
            fwd: Pipe::new(),
            rev: Pipe::new(),
            fc: FlowControl::new(ADVERTISED_HDR_CREDITS, ADVERTISED_DATA_CREDITS_DW),
            fc_blocked_since: None,
            outstanding: BTreeMap::new(),
            stale_tags: BTreeSet::new(),
            requests: Vec::new(),
            completer: Completer {
                accepts_messages: false,
                occupancy_hdr: 0,
                processed_hdr_total: 0,
                processed_dw_total: 0,
                withheld: Vec::new(),
            },
            injector: Injector::default(),
            fault_kinds: BTreeMap::new(),
            golden: Vec::new(),
            image: DeliveredImage::new(),
            latest_snapshot: None,
            delivered_this_cycle: false,
            prev_committed: 0,
            write_spans: Vec::new(),
            next_unrevealed_write: 0,
            pending_drafts: VecDeque::new(),
            pending_interrupts: VecDeque::new(),
            deferred_reissues: Vec::new(),
            recorded_for_fault: BTreeMap::new(),
            tx_capture: None,
            rx_capture: None,
            pr_flag: false,
            trace: Vec::new(),
            aer: AerRegisters::default(),
            events: Vec::new(),
            records: Vec::new(),
            dispositions: Vec::new(),
            injected_by_kind: [0; ErrorKind::COUNT],
            detected_by_kind: [0; ErrorKind::COUNT],
            classified_by_kind: [0; ErrorKind::COUNT],
            misclassified_events: 0,
            unattributed_events: 0,
            duplicates_suppressed: 0,
            interrupts_raised: 0,
            faults_unapplied: 0,
            stale_recoveries: 0,
            corrupted_bytes_delivered: 0,
            max_commit_delay: 0,
            link_down_cycles_total: 0,
        }
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn params(&self) -> SimParams {
        self.params
    }

    pub fn link(&self) -> LinkState {
        self.link
    }

    pub fn link_up(&self) -> bool {
        self.link.ltssm.link_up()
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn golden(&self) -> &[u8] {
        &self.golden
    }

    pub fn image(&self) -> &DeliveredImage {
        &self.image
    }

    /// The prefix of delivered memory the consumer is allowed to read.
    pub fn delivered_visible(&self) -> &[u8] {
        &self.image.data()[..self.image.visible_len() as usize]
    }

    pub fn events(&self) -> &[ErrorEvent] {
        &self.events
    }

    pub fn records(&self) -> &[RecoveryRecord] {
        &self.records
    }

    pub fn dispositions(&self) -> &[FatalDisposition] {
        &self.dispositions
    }

    pub fn aer(&self) -> &AerRegisters {
        &self.aer
    }

    pub fn interrupts_raised(&self) -> u64 {
        self.interrupts_raised
    }

    pub fn stale_recoveries(&self) -> u64 {
        self.stale_recoveries
    }

    pub fn corrupted_bytes_delivered(&self) -> u64 {
        self.corrupted_bytes_delivered
    }

    pub fn max_commit_delay(&self) -> u64 {
        self.max_commit_delay
    }

    pub fn outstanding_reads(&self) -> usize {
        self.outstanding.len()
    }

    pub fn latest_snapshot(&self) -> Option<&Snapshot> {
        self.latest_snapshot.as_ref()
    }

    /// Test hook: damages an already delivered byte behind the link's
    /// back, the way silent receive-path corruption would.
    pub fn poke_delivered(&mut self, offset: u64, value: u8) {
        self.image.poke(offset, value);
    }

    /// Registers a campaign. Injection counts toward the expected error
    /// kind of each disturbance start here.
    pub fn schedule_faults(&mut self, specs: &[FaultSpec]) {
        for spec in specs {
            self.injector.due.entry(spec.cycle).or_default().push(spec.clone());
            self.fault_kinds.insert(spec.id, spec.kind);
            self.injected_by_kind[expected_error_for(spec.kind) as usize] += 1;
        }
    }

    fn require_link(&self) -> Result<(), SubmitError> {
        if self.link_up() {
            Ok(())
        } else {
            Err(SubmitError::LinkDown)
        }
    }

    fn alloc_tag(&self) -> Result<u8, SubmitError> {
        for tag in 0..=u8::MAX {
            if !self.outstanding.contains_key(&tag) && !self.stale_tags.contains(&tag) {
                return Ok(tag);
            }
        }
        Err(SubmitError::NoFreeTag)
    }

    fn enqueue_request(&mut self, tlp: Tlp, meta: FrameMeta) {
        self.fwd.q_submit.push_back(Stamped { at: self.cycle, item: OutTlp { tlp, meta } });
    }

    /// Submits a posted memory write carrying the next slice of the
    /// transmitted stream. Returns an error while the link is down.
    pub fn submit_write(&mut self, payload: Vec<u8>) -> Result<(), SubmitError> {
        self.require_link()?;
        assert!(!payload.is_empty() && payload.len() % 4 == 0, "payload must be whole dwords");
        let offset = self.golden.len() as u64;
        let address = MEM_BASE + offset;
        let span = DamageSpan { offset, len: payload.len() as u64 };
        self.golden.extend_from_slice(&payload);
        let request_id = self.requests.len() as u64;
        self.requests.push(RequestInfo {
            address,
            length_dw: (span.len / 4) as u16,
            golden: Some(span),
            fault: None,
        });
        self.write_spans.push((span, self.cycle));
        let tlp = Tlp::mem_write(REQUESTER_ID, address, self.golden[span.offset as usize..].to_vec(), true)
            .expect("write fields are pre-validated");
        self.enqueue_request(
            tlp,
            FrameMeta {
                request_id: Some(request_id),
                tlp_kind: Some(TlpKind::MemWr),
                payload_bytes: span.len as u32,
                has_ecrc: true,
                ..FrameMeta::default()
            },
        );
        Ok(())
    }

    /// Submits a memory read and returns its tag. The first read on a
    /// fresh link gets tag 0.
    pub fn submit_read(&mut self, address: u64, length_dw: u16) -> Result<u8, SubmitError> {
        self.submit_read_internal(address, length_dw, None)
    }

    fn submit_read_internal(
        &mut self,
        address: u64,
        length_dw: u16,
        fault: Option<u64>,
    ) -> Result<u8, SubmitError> {
        self.require_link()?;
        let tag = self.alloc_tag()?;
        let request_id = self.requests.len() as u64;
        self.requests.push(RequestInfo {
            address,
            length_dw,
            golden: None,
            fault,
        });
        self.outstanding.insert(tag, Outstanding { request_id, timeout_at: None });
        let tlp = Tlp::mem_read(REQUESTER_ID, tag, address, length_dw)
            .expect("read fields are pre-validated");
        self.enqueue_request(
            tlp,
            FrameMeta {
                request_id: Some(request_id),
                tlp_kind: Some(TlpKind::MemRd),
                read_tag: Some(tag),
                ..FrameMeta::default()
            },
        );
        Ok(tag)
    }

    /// Re-submits the write that originally produced `span`, for repairs
    /// that need the data sent again.
    fn resubmit_write(&mut self, request_id: u64) {
        let info = self.requests[request_id as usize].clone();
        let span = match info.golden {
            Some(span) => span,
            None => return,
        };
        let payload = self.golden[span.offset as usize..span.end() as usize].to_vec();
        let new_id = self.requests.len() as u64;
        self.requests.push(RequestInfo {
            address: info.address,
            length_dw: info.length_dw,
            golden: Some(span),
            fault: None,
        });
        let tlp = Tlp::mem_write(REQUESTER_ID, info.address, payload, true)
            .expect("original write was valid");
        self.enqueue_request(
            tlp,
            FrameMeta {
                request_id: Some(new_id),
                tlp_kind: Some(TlpKind::MemWr),
                payload_bytes: span.len as u32,
                has_ecrc: true,
                ..FrameMeta::default()
            },
        );
    }

    fn do_reissue(&mut self, reissue: Reissue) {
        match reissue {
            Reissue::Write { request_id } => self.resubmit_write(request_id),
            Reissue::Read { request_id } => {
                let info = self.requests[request_id as usize].clone();
                let _ = self.submit_read_internal(info.address, info.length_dw, None);
            }
            Reissue::Probe => {
                let _ = self.submit_read_internal(STATUS_ADDR, 1, None);
            }
        }
    }

    fn draft(
        &mut self,
        kind: ErrorKind,
        seq_or_tag: u64,
        fault: Option<u64>,
        damage: Option<DamageSpan>,
        request_id: Option<u64>,
        detail: &str,
    ) {
        self.pending_drafts.push_back(Draft {
            kind,
            seq_or_tag,
            fault,
            damage,
            request_id,
            detail: detail.to_string(),
        });
    }

    fn damage_for_request(&self, request_id: Option<u64>) -> Option<DamageSpan> {
        request_id.and_then(|rid| self.requests.get(rid as usize)).and_then(|r| r.golden)
    }

    fn read_mem(&self, address: u64, length_dw: u16) -> Vec<u8> {
        let len = usize::from(length_dw) * 4;
        let mut out = vec![0u8; len];
        if address >= MEM_BASE {
            let off = (address - MEM_BASE) as usize;
            let data = self.image.data();
            if off < data.len() {
                let take = len.min(data.len() - off);
                out[..take].copy_from_slice(&data[off..off + take]);
            }
        }
        out
    }

    /// Runs one cycle and returns the error event recorded during it, if
    /// any. Exactly one trace record is appended per call.
    pub fn tick(&mut self) -> Vec<ErrorEvent> {
        let now = self.cycle;
        self.phase_ltssm();
        self.phase_inject(now);
        self.phase_recovery(now);
        self.phase_timers(now);
        self.phase_stages(now);
        self.phase_compare(now);
        let emitted = self.phase_emit(now);
        self.phase_snapshot(now);
        self.trace.push(TraceRecord {
            cycle: now,
            tx_data: self.tx_capture.take(),
            rx_data: self.rx_capture.take(),
            err_flag: emitted.is_some(),
            err_kind: emitted.as_ref().map(|e| e.kind),
            pr_recovery: self.pr_flag,
            ltssm: self.link.ltssm,
        });
        self.pr_flag = false;
        if self.ever_l0 && !self.link_up() {
            self.link_down_cycles_total += 1;
        }
        self.prev_committed = self.image.contiguous_committed_len();
        self.link.cycles_in_state += 1;
        self.cycle += 1;
        emitted.into_iter().collect()
    }

    fn phase_ltssm(&mut self) {
        match self.link.ltssm {
            Ltssm::Detect | Ltssm::Polling | Ltssm::Config => {
                if let Some(&(state, dwell)) = self.train_plan.front() {
                    if self.link.ltssm == state && self.link.cycles_in_state >= dwell {
                        self.train_plan.pop_front();
                        self.link = ltssm_step(self.link, LinkEvent::TrainOk);
                        if self.link.ltssm == Ltssm::L0 {
                            self.on_link_restored();
                        }
                    }
                }
            }
            Ltssm::RecoveryRetrain => {
                if self.link.cycles_in_state >= self.params.retrain_cost {
                    self.link = ltssm_step(self.link, LinkEvent::RetrainDone);
                    self.on_link_restored();
                }
            }
            Ltssm::L0 | Ltssm::Disabled => {}
        }
    }

    fn on_link_down(&mut self) {
        self.fwd.clear_in_flight();
        self.rev.clear_in_flight();
    }

    fn on_link_restored(&mut self) {
        if !self.ever_l0 {
            self.ever_l0 = true;
            return;
        }
        let now = self.cycle;
        self.fwd.requeue_replay(now);
        self.rev.requeue_replay(now);
        self.fc.sync(self.completer.processed_hdr_total, self.completer.processed_dw_total);
        self.fwd.rx.nak_scheduled = false;
        self.rev.rx.nak_scheduled = false;
        self.fc_blocked_since = None;
        let deferred = std::mem::take(&mut self.deferred_reissues);
        for reissue in deferred {
            self.do_reissue(reissue);
        }
    }

    fn phase_inject(&mut self, now: u64) {
        let due = match self.injector.due.remove(&now) {
            Some(specs) => specs,
            None => return,
        };
        for spec in due {
            match self.apply_fault(&spec, now) {
                ApplyOutcome::Applied => {}
                ApplyOutcome::Retry => {
                    let tries = self.injector.retries.entry(spec.id).or_insert(0);
                    *tries += 1;
                    if *tries > INJECT_RETRY_LIMIT {
                        self.faults_unapplied += 1;
                    } else {
                        self.injector.due.entry(now + 1).or_default().push(spec);
                    }
                }
            }
        }
    }

    /// Acks stay suppressed past the nominal window until the resulting
    /// replay expiry has been flagged, so the diagnosis cannot be starved
    /// away by unrelated stalls.
    fn acks_suppressed(&self, now: u64) -> bool {
        now < self.injector.ack_suppress_until || !self.injector.replay_armed.is_empty()
    }

    /// Same idea for credit updates and the starvation deadline.
    fn updates_suppressed(&self, now: u64) -> bool {
        now < self.injector.fc_suppress_until || !self.injector.fc_armed.is_empty()
    }

    /// True when no earlier frame disturbance is still unresolved, so a
    /// new one lands on a clean forward path and its event is not folded
    /// into another retransmission window.
    fn frame_path_quiet(&self) -> bool {
        if self.fwd.rx.nak_scheduled {
            return false;
        }
        let tainted = |q: &VecDeque<Stamped<DlItem>>| {
            q.iter().any(|s| match &s.item {
                DlItem::Frame(f) => f.meta.tainted(),
                DlItem::Dllp(d) => d.injected_by.is_some(),
            })
        };
        !tainted(&self.fwd.q_dl_pl) && !tainted(&self.fwd.q_wire) && !tainted(&self.fwd.q_pl_dl)
    }

    fn find_fwd_frame(
        &mut self,
        pred: impl Fn(&FlightFrame) -> bool,
    ) -> Option<&mut FlightFrame> {
        self.fwd
            .q_dl_pl
            .iter_mut()
            .filter_map(|s| match &mut s.item {
                DlItem::Frame(f) => Some(f),
                DlItem::Dllp(_) => None,
            })
            .find(|f| !f.meta.tainted() && pred(f))
    }

    fn apply_fault(&mut self, spec: &FaultSpec, now: u64) -> ApplyOutcome {
        let id = spec.id;
        let p0 = spec.params[0];
        match spec.kind {
            FaultKind::FlipTlpPayloadBit => {
                if !self.frame_path_quiet() {
                    return ApplyOutcome::Retry;
                }
                match self.find_fwd_frame(|f| {
                    !f.meta.is_replay
                        && f.meta.tlp_kind == Some(TlpKind::MemWr)
                        && f.meta.payload_bytes > 0
                }) {
                    Some(ff) => {
                        let bits = u64::from(ff.meta.payload_bytes) * 8;
                        let bit = p0 % bits;
                        let byte = TLP_HEADER_BYTES + (bit / 8) as usize;
                        ff.frame.tlp_bytes[byte] ^= 1 << (bit % 8);
                        ff.meta.injected_by = Some(id);
                        ApplyOutcome::Applied
                    }
                    None => ApplyOutcome::Retry,
                }
            }
            FaultKind::FlipLcrcBit => {
                if !self.frame_path_quiet() {
                    return ApplyOutcome::Retry;
                }
                match self.find_fwd_frame(|f| !f.meta.is_replay) {
                    Some(ff) => {
                        ff.frame.lcrc ^= 1 << (p0 % 32);
                        ff.meta.injected_by = Some(id);
                        ApplyOutcome::Applied
                    }
                    None => ApplyOutcome::Retry,
                }
            }
            FaultKind::FlipSeqNum => {
                if !self.frame_path_quiet() {
                    return ApplyOutcome::Retry;
                }
                match self.find_fwd_frame(|f| !f.meta.is_replay) {
                    Some(ff) => {
                        let delta = 2 + (p0 % 14) as u16;
                        ff.frame.seq_num = (ff.frame.seq_num + delta) % SEQ_MODULUS;
                        ff.frame.lcrc = crate::packet::crc32(&DlFrame::lcrc_input(
                            ff.frame.seq_num,
                            &ff.frame.tlp_bytes,
                        ));
                        ff.meta.injected_by = Some(id);
                        ApplyOutcome::Applied
                    }
                    None => ApplyOutcome::Retry,
                }
            }
            FaultKind::FlipDllpCrcBit => {
                let target = self
                    .rev
                    .q_dl_pl
                    .iter_mut()
                    .chain(self.rev.q_wire.iter_mut())
                    .chain(self.rev.q_pl_dl.iter_mut())
                    .filter_map(|s| match &mut s.item {
                        DlItem::Dllp(d) => Some(d),
                        DlItem::Frame(_) => None,
                    })
                    .find(|d| d.injected_by.is_none() && d.dllp.kind == DllpKind::Ack);
                match target {
                    Some(fd) => {
                        fd.dllp.crc16 ^= 1 << (p0 % 16);
                        fd.injected_by = Some(id);
                        let horizon = now + self.params.replay_timeout_cycles + 24;
                        let cur = self.injector.expiry_excused_until;
                        self.injector.expiry_excused_until = cur.max(horizon);
                        ApplyOutcome::Applied
                    }
                    None => ApplyOutcome::Retry,
                }
            }
            FaultKind::DropAck => {
                let base = self.injector.ack_suppress_until.max(now);
                self.injector.ack_suppress_until = base + ACK_SUPPRESS_WINDOW;
                self.injector.replay_armed.push_back(id);
                ApplyOutcome::Applied
            }
            FaultKind::StallCompletion => {
                self.injector.stall_traps.push_back(id);
                ApplyOutcome::Applied
            }
            FaultKind::ViolateCredit => {
                if !self.link_up() {
                    return ApplyOutcome::Retry;
                }
                for _ in 0..OVERFLOW_BURST {
                    let address = MEM_BASE + self.golden.len() as u64;
                    let request_id = self.requests.len() as u64;
                    self.requests.push(RequestInfo {
                        address,
                        length_dw: 0,
                        golden: None,
                        fault: Some(id),
                    });
                    let tlp = Tlp::mem_write(REQUESTER_ID, address, Vec::new(), false)
                        .expect("zero-length write is valid");
                    self.enqueue_request(
                        tlp,
                        FrameMeta {
                            request_id: Some(request_id),
                            injected_by: Some(id),
                            credit_bypass: true,
                            tlp_kind: Some(TlpKind::MemWr),
                            ..FrameMeta::default()
                        },
                    );
                }
                self.injector.consumer_stall_until =
                    self.injector.consumer_stall_until.max(now) + CONSUMER_STALL_CYCLES;
                self.injector.overflow_armed.push_back(id);
                let window = now + CONSUMER_STALL_CYCLES + 40;
                self.injector.overflow_window_until =
                    self.injector.overflow_window_until.max(window);
                ApplyOutcome::Applied
            }
            FaultKind::MalformHeader => {
                if !self.frame_path_quiet() {
                    return ApplyOutcome::Retry;
                }
                match self.find_fwd_frame(|f| {
                    !f.meta.is_replay
                        && f.meta.tlp_kind == Some(TlpKind::MemWr)
                        && f.meta.payload_bytes > 0
                }) {
                    Some(ff) => {
                        ff.frame.tlp_bytes[0] = 0xFF;
                        ff.frame.lcrc = crate::packet::crc32(&DlFrame::lcrc_input(
                            ff.frame.seq_num,
                            &ff.frame.tlp_bytes,
                        ));
                        ff.meta.injected_by = Some(id);
                        ApplyOutcome::Applied
                    }
                    None => ApplyOutcome::Retry,
                }
            }
            FaultKind::InjectUnexpectedCompletion => {
                if !self.link_up() {
                    return ApplyOutcome::Retry;
                }
                let tag = 240 + (p0 % 16) as u8;
                if self.outstanding.contains_key(&tag) || self.stale_tags.contains(&tag) {
                    return ApplyOutcome::Retry;
                }
                let payload = spec.seed.to_be_bytes()[..4].to_vec();
                let tlp = Tlp::completion_data(REQUESTER_ID, tag, payload)
                    .expect("four-byte completion is valid");
                self.rev.q_submit.push_back(Stamped {
                    at: now,
                    item: OutTlp {
                        tlp,
                        meta: FrameMeta {
                            injected_by: Some(id),
                            tlp_kind: Some(TlpKind::CplD),
                            payload_bytes: 4,
                            ..FrameMeta::default()
                        },
                    },
                });
                ApplyOutcome::Applied
            }
            FaultKind::SendUnsupportedRequest => {
                if !self.link_up() {
                    return ApplyOutcome::Retry;
                }
                let code = (p0 % 64) & !3;
                let request_id = self.requests.len() as u64;
                self.requests.push(RequestInfo {
                    address: code,
                    length_dw: 0,
                    golden: None,
                    fault: Some(id),
                });
                let tlp = Tlp::message(REQUESTER_ID, code).expect("aligned message code");
                self.enqueue_request(
                    tlp,
                    FrameMeta {
                        request_id: Some(request_id),
                        injected_by: Some(id),
                        tlp_kind: Some(TlpKind::Msg),
                        ..FrameMeta::default()
                    },
                );
                ApplyOutcome::Applied
            }
            FaultKind::ForceCompleterAbort => {
                if !self.link_up() {
                    return ApplyOutcome::Retry;
                }
                let address = ABORT_BASE + ((p0 % ABORT_SIZE) & !3);
                match self.submit_read_internal(address, 1, Some(id)) {
                    Ok(_) => ApplyOutcome::Applied,
                    Err(_) => ApplyOutcome::Retry,
                }
            }
            FaultKind::FlipEcrcBit => {
                if !self.frame_path_quiet() {
                    return ApplyOutcome::Retry;
                }
                match self.find_fwd_frame(|f| !f.meta.is_replay && f.meta.has_ecrc) {
                    Some(ff) => {
                        ff.meta.ecrc_flip = Some((id, (p0 % 32) as u32));
                        ApplyOutcome::Applied
                    }
                    None => ApplyOutcome::Retry,
                }
            }
            FaultKind::PlSymbolError => {
                if !self.frame_path_quiet() {
                    return ApplyOutcome::Retry;
                }
                match self.find_fwd_frame(|f| !f.meta.is_replay) {
                    Some(ff) => {
                        ff.meta.symbol_error = Some(id);
                        ApplyOutcome::Applied
                    }
                    None => ApplyOutcome::Retry,
                }
            }
            FaultKind::BreakTraining => {
                if self.link.ltssm != Ltssm::L0 {
                    return ApplyOutcome::Retry;
                }
                self.draft(
                    ErrorKind::TrainingError,
                    0,
                    Some(id),
                    None,
                    None,
                    "link training broke while up",
                );
                if self.params.mode == Mode::Baseline {
                    self.link = ltssm_step(self.link, LinkEvent::TrainFail);
                    self.train_plan = RETRAIN_DWELLS.into_iter().collect();
                    self.on_link_down();
                }
                ApplyOutcome::Applied
            }
            FaultKind::SuppressReplayAck => {
                let base = self.injector.fc_suppress_until.max(now);
                self.injector.fc_suppress_until = base + FC_SUPPRESS_WINDOW;
                self.injector.fc_armed.push_back(id);
                ApplyOutcome::Applied
            }
        }
    }

    fn phase_recovery(&mut self, now: u64) {
        while let Some((front, _)) = self.pending_interrupts.front() {
            if front.accepted_cycle >= now {
                break;
            }
            let (interrupt, request_id) = self.pending_interrupts.pop_front().unwrap();
            self.execute_recovery(interrupt, request_id);
        }
    }

    fn run_recover(&mut self, interrupt: &InterruptEvent) -> bool {
        let snapshot = self.latest_snapshot.as_ref().expect("snapshot taken every cycle zero");
        match recover(snapshot, interrupt, &self.golden, &mut self.image) {
            Ok(record) => {
                self.records.push(record);
                true
            }
            Err(_) => {
                self.stale_recoveries += 1;
                false
            }
        }
    }

    fn execute_recovery(&mut self, interrupt: InterruptEvent, request_id: Option<u64>) {
        let kind = interrupt.event.kind;
        if interrupt.event.severity == Severity::FatalUncorrectable {
            if self.params.mode == Mode::Proposed {
                if interrupt.damage.is_some() {
                    self.run_recover(&interrupt);
                }
                if kind == ErrorKind::FlowControlProtocolError {
                    self.fc.sync(
                        self.completer.processed_hdr_total,
                        self.completer.processed_dw_total,
                    );
                    self.fc_blocked_since = None;
                }
                let (disposition, link) =
                    handle_fatal(&interrupt.event, Mode::Proposed, self.link, self.params.retrain_cost);
                self.link = link;
                self.dispositions.push(disposition);
                self.pr_flag = true;
            } else {
                let was_retraining = self.link.ltssm == Ltssm::RecoveryRetrain;
                let (disposition, link) =
                    handle_fatal(&interrupt.event, Mode::Baseline, self.link, self.params.retrain_cost);
                let entering_retrain =
                    link.ltssm == Ltssm::RecoveryRetrain && !was_retraining;
                self.link = link;
                self.dispositions.push(disposition);
                if entering_retrain {
                    self.on_link_down();
                }
                if interrupt.damage.is_some() {
                    if let Some(rid) = request_id {
                        self.deferred_reissues.push(Reissue::Write { request_id: rid });
                    }
                }
            }
        } else {
            if !self.run_recover(&interrupt) {
                return;
            }
            self.pr_flag = true;
            let reissue = match kind {
                ErrorKind::CompletionTimeout => request_id.map(|rid| Reissue::Read { request_id: rid }),
                ErrorKind::EcrcFailure => request_id.map(|rid| Reissue::Write { request_id: rid }),
                _ => Some(Reissue::Probe),
            };
            if let Some(reissue) = reissue {
                if self.link_up() {
                    self.do_reissue(reissue);
                } else {
                    self.deferred_reissues.push(reissue);
                }
            }
        }
    }

    fn phase_timers(&mut self, now: u64) {
        if !self.link_up() {
            for out in self.outstanding.values_mut() {
                if let Some(t) = &mut out.timeout_at {
                    *t += 1;
                }
            }
            for withheld in &mut self.completer.withheld {
                withheld.0 += 1;
            }
            return;
        }

        let timer = self.fwd.replay.tick_timer();
        if timer >= self.params.replay_timeout_cycles && !self.fwd.replay.is_empty() {
            let oldest = self.fwd.replay.oldest_seq().unwrap_or(0);
            if self.injector.replay_armed.is_empty() {
                let excused = now < self.injector.ack_suppress_until
                    || now < self.injector.expiry_excused_until;
                if !excused {
                    self.draft(
                        ErrorKind::ReplayTimeout,
                        u64::from(oldest),
                        None,
                        None,
                        None,
                        "no acknowledgment before the replay deadline",
                    );
                }
                // Inside a window already flagged, the resend below is the
                // whole response.
            } else {
                while let Some(fault) = self.injector.replay_armed.pop_front() {
                    self.draft(
                        ErrorKind::ReplayTimeout,
                        u64::from(oldest),
                        Some(fault),
                        None,
                        None,
                        "no acknowledgment before the replay deadline",
                    );
                }
                // Diagnosed; acknowledgments may flow again.
                self.injector.ack_suppress_until = now;
            }
            self.fwd.requeue_replay(now);
        }
        let timer = self.rev.replay.tick_timer();
        if timer >= self.params.replay_timeout_cycles && !self.rev.replay.is_empty() {
            let oldest = self.rev.replay.oldest_seq().unwrap_or(0);
            self.draft(
                ErrorKind::ReplayTimeout,
                u64::from(oldest),
                None,
                None,
                None,
                "no acknowledgment of completions before the replay deadline",
            );
            self.rev.requeue_replay(now);
        }

        let expired: Vec<u8> = self
            .outstanding
            .iter()
            .filter(|(_, out)| out.timeout_at.map(|t| t <= now).unwrap_or(false))
            .map(|(&tag, _)| tag)
            .collect();
        for tag in expired {
            let out = self.outstanding.remove(&tag).unwrap();
            self.stale_tags.insert(tag);
            let fault = self.requests[out.request_id as usize].fault;
            self.draft(
                ErrorKind::CompletionTimeout,
                u64::from(tag),
                fault,
                None,
                Some(out.request_id),
                "read completion overdue",
            );
        }

        let mut i = 0;
        while i < self.completer.withheld.len() {
            if self.completer.withheld[i].0 <= now {
                let (_, out) = self.completer.withheld.remove(i);
                self.rev.q_submit.push_back(Stamped { at: now, item: out });
            } else {
                i += 1;
            }
        }

        let blocked = match self.fwd.q_tl_dl.front() {
            Some(stamped) if stamped.at < now => {
                let dw = (stamped.item.meta.payload_bytes / 4) as u16;
                !stamped.item.meta.credit_bypass && !self.fc.can_send(dw)
            }
            _ => false,
        };
        if blocked {
            match self.fc_blocked_since {
                None => self.fc_blocked_since = Some(now),
                Some(since) if now - since >= FC_STARVATION_DEADLINE => {
                    if self.injector.fc_armed.is_empty() {
                        if since < self.injector.fc_suppress_until {
                            // The outage was already flagged; keep the
                            // transmitter alive by re-applying the last
                            // credit resync.
                            self.fc.sync(
                                self.completer.processed_hdr_total,
                                self.completer.processed_dw_total,
                            );
                            self.fc_blocked_since = None;
                        } else {
                            self.draft(
                                ErrorKind::FlowControlProtocolError,
                                0,
                                None,
                                None,
                                None,
                                "credit-starved frame exceeded the wait deadline",
                            );
                            self.fc_blocked_since = Some(now);
                        }
                    } else {
                        while let Some(fault) = self.injector.fc_armed.pop_front() {
                            self.draft(
                                ErrorKind::FlowControlProtocolError,
                                0,
                                Some(fault),
                                None,
                                None,
                                "credit-starved frame exceeded the wait deadline",
                            );
                        }
                        // Diagnosed; credit updates may flow again.
                        self.injector.fc_suppress_until = now;
                        self.fc_blocked_since = Some(now);
                    }
                }
                Some(_) => {}
            }
        } else {
            self.fc_blocked_since = None;
        }
    }

    fn phase_stages(&mut self, now: u64) {
        if !self.link_up() {
            return;
        }
        self.stage_fwd_tl_rx(now);
        self.stage_fwd_dl_rx(now);
        self.stage_fwd_pl_rx(now);
        self.stage_fwd_pl_tx(now);
        self.stage_fwd_dl_tx(now);
        self.stage_fwd_tl_tx(now);
        self.stage_rev_tl_rx(now);
        self.stage_rev_dl_rx(now);
        self.stage_rev_pl_rx(now);
        self.stage_rev_pl_tx(now);
        self.stage_rev_dl_tx(now);
        self.stage_rev_tl_tx(now);
    }

    fn emit_fwd_dllp(&mut self, now: u64, dllp: Dllp) {
        self.fwd
            .q_dl_pl
            .push_back(Stamped { at: now, item: DlItem::Dllp(FlightDllp { dllp, injected_by: None }) });
    }

    fn emit_rev_dllp(&mut self, now: u64, dllp: Dllp) {
        self.rev
            .q_dl_pl
            .push_back(Stamped { at: now, item: DlItem::Dllp(FlightDllp { dllp, injected_by: None }) });
    }

    fn stage_fwd_tl_rx(&mut self, now: u64) {
        if now < self.injector.consumer_stall_until {
            return;
        }
        let up = match pop_ready(&mut self.fwd.q_dl_tl, now) {
            Some(up) => up,
            None => return,
        };
        self.completer.occupancy_hdr -= 1;
        let payload_dw = (up.meta.payload_bytes / 4) as u16;
        match parse_tlp(&up.bytes) {
            Err(_) => {
                let damage = self.damage_for_request(up.meta.request_id);
                self.draft(
                    ErrorKind::MalformedTlp,
                    u64::from(up.seq),
                    up.meta.injected_by,
                    damage,
                    up.meta.request_id,
                    "transaction failed to parse",
                );
            }
            Ok(tlp) => {
                if tlp.ecrc_present && !tlp.ecrc_ok() {
                    let damage = self.damage_for_request(up.meta.request_id);
                    let fault = up.meta.ecrc_flip.map(|(fid, _)| fid);
                    self.draft(
                        ErrorKind::EcrcFailure,
                        u64::from(up.seq),
                        fault,
                        damage,
                        up.meta.request_id,
                        "end-to-end checksum mismatch",
                    );
                } else if tlp.kind == TlpKind::Msg && !self.completer.accepts_messages {
                    self.draft(
                        ErrorKind::UnsupportedRequest,
                        u64::from(tlp.tag),
                        up.meta.injected_by,
                        None,
                        up.meta.request_id,
                        "message type not handled by this endpoint",
                    );
                } else {
                    match tlp.kind {
                        TlpKind::MemWr => {
                            if !tlp.payload.is_empty() && tlp.address >= MEM_BASE {
                                let offset = tlp.address - MEM_BASE;
                                self.image.commit(offset, &tlp.payload);
                                self.delivered_this_cycle = true;
                            }
                        }
                        TlpKind::MemRd => {
                            let in_abort_window = tlp.address >= ABORT_BASE
                                && tlp.address < ABORT_BASE + ABORT_SIZE;
                            if in_abort_window {
                                let cpl = Tlp::completion_status(tlp.requester_id, tlp.tag);
                                self.rev.q_submit.push_back(Stamped {
                                    at: now,
                                    item: OutTlp { tlp: cpl, meta: FrameMeta::default() },
                                });
                            } else {
                                let data = self.read_mem(tlp.address, tlp.length_dw);
                                let cpl =
                                    Tlp::completion_data(tlp.requester_id, tlp.tag, data)
                                        .expect("completion data is whole dwords");
                                let out = OutTlp {
                                    tlp: cpl,
                                    meta: FrameMeta {
                                        tlp_kind: Some(TlpKind::CplD),
                                        payload_bytes: u32::from(tlp.length_dw) * 4,
                                        ..FrameMeta::default()
                                    },
                                };
                                if let Some(fid) = self.injector.stall_traps.pop_front() {
                                    if let Some(rid) = up.meta.request_id {
                                        self.requests[rid as usize].fault = Some(fid);
                                    }
                                    let release_at = now
                                        + self.params.completion_timeout_cycles
                                        + STALL_RELEASE_EXTRA;
                                    self.completer.withheld.push((release_at, out));
                                } else {
                                    self.rev.q_submit.push_back(Stamped { at: now, item: out });
                                }
                            }
                        }
                        _ => {}
                    }
                }
            }
        }
        if !up.meta.credit_bypass {
            self.completer.processed_hdr_total =
                self.completer.processed_hdr_total.wrapping_add(1);
            self.completer.processed_dw_total =
                self.completer.processed_dw_total.wrapping_add(payload_dw);
        }
        if !self.updates_suppressed(now) {
            let update = Dllp::fc_update(
                self.completer.processed_hdr_total,
                self.completer.processed_dw_total,
            );
            self.emit_rev_dllp(now, update);
        }
    }

    fn stage_fwd_dl_rx(&mut self, now: u64) {
        let item = match pop_ready(&mut self.fwd.q_pl_dl, now) {
            Some(item) => item,
            None => return,
        };
        match item {
            DlItem::Dllp(fd) => {
                if !fd.dllp.crc_ok() {
                    self.draft(
                        ErrorKind::BadDllp,
                        u64::from(fd.dllp.seq_num),
                        fd.injected_by,
                        None,
                        None,
                        "link-management packet failed its checksum",
                    );
                    return;
                }
                match fd.dllp.kind {
                    DllpKind::Ack => {
                        self.rev.replay.ack(fd.dllp.seq_num);
                    }
                    DllpKind::Nak => {
                        let expected = fd.dllp.seq_num;
                        self.rev.replay.ack((expected + SEQ_MODULUS - 1) % SEQ_MODULUS);
                        self.rev.requeue_replay(now);
                    }
                    DllpKind::FcUpdate => {}
                }
            }
            DlItem::Frame(mut ff) => {
                let (outcome, err) = self.fwd.rx.receive(&ff.frame);
                match outcome {
                    DlOutcome::Accept => {
                        let seq = ff.frame.seq_num;
                        if let Some((_, bit)) = ff.meta.ecrc_flip {
                            let len = ff.frame.tlp_bytes.len();
                            let byte = len - 4 + (bit / 8) as usize;
                            ff.frame.tlp_bytes[byte] ^= 1 << (bit % 8);
                        }
                        let full =
                            self.completer.occupancy_hdr >= i64::from(ADVERTISED_HDR_CREDITS);
                        let armed_violation =
                            ff.meta.credit_bypass && !self.injector.overflow_armed.is_empty();
                        if armed_violation {
                            let fault = self.injector.overflow_armed.pop_front();
                            self.draft(
                                ErrorKind::ReceiverOverflow,
                                u64::from(seq),
                                fault,
                                None,
                                None,
                                "receive buffer beyond advertised credits",
                            );
                        } else if full && now >= self.injector.overflow_window_until {
                            let damage = self.damage_for_request(ff.meta.request_id);
                            let request_id = ff.meta.request_id;
                            self.draft(
                                ErrorKind::ReceiverOverflow,
                                u64::from(seq),
                                None,
                                damage,
                                request_id,
                                "receive buffer beyond advertised credits",
                            );
                            // A discarded credit-respecting frame still
                            // counts as disposed, or the ledger would leak
                            // one header per drop.
                            if !ff.meta.credit_bypass {
                                self.completer.processed_hdr_total =
                                    self.completer.processed_hdr_total.wrapping_add(1);
                                self.completer.processed_dw_total = self
                                    .completer
                                    .processed_dw_total
                                    .wrapping_add((ff.meta.payload_bytes / 4) as u16);
                            }
                        } else {
                            self.admit_fwd_frame(now, ff);
                        }
                        if !self.acks_suppressed(now) {
                            let ack = Dllp::ack(seq);
                            self.emit_rev_dllp(now, ack);
                        }
                    }
                    DlOutcome::Nak { expected } => {
                        self.emit_rev_dllp(now, Dllp::nak(expected));
                        if let Some(kind) = err {
                            self.draft(
                                kind,
                                u64::from(ff.frame.seq_num),
                                ff.meta.injected_by,
                                None,
                                None,
                                match kind {
                                    ErrorKind::BadTlp => "frame failed its link checksum",
                                    _ => "sequence number out of order",
                                },
                            );
                        }
                    }
                    DlOutcome::Duplicate => {
                        if !self.acks_suppressed(now) {
                            let last = (self.fwd.rx.expected_seq + SEQ_MODULUS - 1) % SEQ_MODULUS;
                            self.emit_rev_dllp(now, Dllp::ack(last));
                        }
                    }
                    DlOutcome::Ignored => {}
                }
            }
        }
    }

    fn admit_fwd_frame(&mut self, now: u64, ff: FlightFrame) {
        self.completer.occupancy_hdr += 1;
        self.fwd.q_dl_tl.push_back(Stamped {
            at: now,
            item: UpTlp { bytes: ff.frame.tlp_bytes, seq: ff.frame.seq_num, meta: ff.meta },
        });
    }

    fn stage_fwd_pl_rx(&mut self, now: u64) {
        let item = match pop_ready(&mut self.fwd.q_wire, now) {
            Some(item) => item,
            None => return,
        };
        self.rx_capture = Some(item.wire_bytes());
        if let DlItem::Frame(ff) = &item {
            if let Some(fid) = ff.meta.symbol_error {
                self.draft(
                    ErrorKind::RxError,
                    u64::from(ff.frame.seq_num),
                    Some(fid),
                    None,
                    None,
                    "symbol decode failed at the receiver",
                );
                if !self.fwd.rx.nak_scheduled {
                    self.fwd.rx.nak_scheduled = true;
                    let expected = self.fwd.rx.expected_seq;
                    self.emit_rev_dllp(now, Dllp::nak(expected));
                }
                return;
            }
        }
        self.fwd.q_pl_dl.push_back(Stamped { at: now, item });
    }

    fn stage_fwd_pl_tx(&mut self, now: u64) {
        let item = match pop_ready(&mut self.fwd.q_dl_pl, now) {
            Some(item) => item,
            None => return,
        };
        self.tx_capture = Some(item.wire_bytes());
        self.fwd.q_wire.push_back(Stamped { at: now, item });
    }

    fn stage_fwd_dl_tx(&mut self, now: u64) {
        let ready = matches!(self.fwd.q_tl_dl.front(), Some(s) if s.at < now);
        if !ready || self.fwd.replay.is_full() {
            return;
        }
        let (dw, bypass) = {
            let front = &self.fwd.q_tl_dl.front().unwrap().item;
            ((front.meta.payload_bytes / 4) as u16, front.meta.credit_bypass)
        };
        if !bypass && !self.fc.can_send(dw) {
            return;
        }
        let out = self.fwd.q_tl_dl.pop_front().unwrap().item;
        if let Some(tag) = out.meta.read_tag {
            if let Some(entry) = self.outstanding.get_mut(&tag) {
                if entry.timeout_at.is_none() {
                    entry.timeout_at = Some(now + self.params.completion_timeout_cycles);
                }
            }
        }
        if !out.meta.credit_bypass {
            self.fc.consume(dw);
        }
        let seq = self.fwd.next_seq;
        self.fwd.next_seq = (seq + 1) % SEQ_MODULUS;
        let frame = frame_tlp(seq, &out.tlp);
        self.fwd.replay.push(frame.clone());
        self.fwd.frame_meta.insert(seq, out.meta.clone());
        self.fwd
            .q_dl_pl
            .push_back(Stamped { at: now, item: DlItem::Frame(FlightFrame { frame, meta: out.meta }) });
    }

    fn stage_fwd_tl_tx(&mut self, now: u64) {
        if let Some(out) = pop_ready(&mut self.fwd.q_submit, now) {
            self.fwd.q_tl_dl.push_back(Stamped { at: now, item: out });
        }
    }

    fn stage_rev_tl_rx(&mut self, now: u64) {
        let up = match pop_ready(&mut self.rev.q_dl_tl, now) {
            Some(up) => up,
            None => return,
        };
        match parse_tlp(&up.bytes) {
            Err(_) => {
                self.draft(
                    ErrorKind::MalformedTlp,
                    u64::from(up.seq),
                    up.meta.injected_by,
                    None,
                    None,
                    "completion failed to parse",
                );
            }
            Ok(tlp) => match tlp.kind {
                TlpKind::CplD | TlpKind::Cpl => {
                    let tag = tlp.tag;
                    if self.stale_tags.remove(&tag) {
                        // A late completion for an abandoned request.
                    } else if let Some(out) = self.outstanding.remove(&tag) {
                        if tlp.kind == TlpKind::Cpl {
                            let fault = self.requests[out.request_id as usize].fault;
                            self.draft(
                                ErrorKind::CompleterAbort,
                                u64::from(tag),
                                fault,
                                None,
                                Some(out.request_id),
                                "read refused with a dataless status",
                            );
                        }
                    } else {
                        self.draft(
                            ErrorKind::UnexpectedCompletion,
                            u64::from(tag),
                            up.meta.injected_by,
                            None,
                            None,
                            "completion matches no pending tag",
                        );
                    }
                }
                _ => {}
            },
        }
    }

    fn stage_rev_dl_rx(&mut self, now: u64) {
        let item = match pop_ready(&mut self.rev.q_pl_dl, now) {
            Some(item) => item,
            None => return,
        };
        match item {
            DlItem::Dllp(fd) => {
                if !fd.dllp.crc_ok() {
                    self.draft(
                        ErrorKind::BadDllp,
                        u64::from(fd.dllp.seq_num),
                        fd.injected_by,
                        None,
                        None,
                        "link-management packet failed its checksum",
                    );
                    return;
                }
                match fd.dllp.kind {
                    DllpKind::Ack => {
                        self.fwd.replay.ack(fd.dllp.seq_num);
                    }
                    DllpKind::Nak => {
                        let expected = fd.dllp.seq_num;
                        self.fwd.replay.ack((expected + SEQ_MODULUS - 1) % SEQ_MODULUS);
                        self.fwd.requeue_replay(now);
                    }
                    DllpKind::FcUpdate => {
                        self.fc.sync(fd.dllp.hdr_credits, fd.dllp.data_credits_dw);
                    }
                }
            }
            DlItem::Frame(ff) => {
                let (outcome, err) = self.rev.rx.receive(&ff.frame);
                match outcome {
                    DlOutcome::Accept => {
                        let seq = ff.frame.seq_num;
                        self.rev.q_dl_tl.push_back(Stamped {
                            at: now,
                            item: UpTlp {
                                bytes: ff.frame.tlp_bytes,
                                seq,
                                meta: ff.meta,
                            },
                        });
                        self.emit_fwd_dllp(now, Dllp::ack(seq));
                    }
                    DlOutcome::Nak { expected } => {
                        self.emit_fwd_dllp(now, Dllp::nak(expected));
                        if let Some(kind) = err {
                            self.draft(
                                kind,
                                u64::from(ff.frame.seq_num),
                                ff.meta.injected_by,
                                None,
                                None,
                                "completion frame rejected at the link layer",
                            );
                        }
                    }
                    DlOutcome::Duplicate => {
                        let last = (self.rev.rx.expected_seq + SEQ_MODULUS - 1) % SEQ_MODULUS;
                        self.emit_fwd_dllp(now, Dllp::ack(last));
                    }
                    DlOutcome::Ignored => {}
                }
            }
        }
    }

    fn stage_rev_pl_rx(&mut self, now: u64) {
        if let Some(item) = pop_ready(&mut self.rev.q_wire, now) {
            self.rev.q_pl_dl.push_back(Stamped { at: now, item });
        }
    }

    fn stage_rev_pl_tx(&mut self, now: u64) {
        if let Some(item) = pop_ready(&mut self.rev.q_dl_pl, now) {
            self.rev.q_wire.push_back(Stamped { at: now, item });
        }
    }

    fn stage_rev_dl_tx(&mut self, now: u64) {
        let ready = matches!(self.rev.q_tl_dl.front(), Some(s) if s.at < now);
        if !ready || self.rev.replay.is_full() {
            return;
        }
        let out = self.rev.q_tl_dl.pop_front().unwrap().item;
        let seq = self.rev.next_seq;
        self.rev.next_seq = (seq + 1) % SEQ_MODULUS;
        let frame = frame_tlp(seq, &out.tlp);
        self.rev.replay.push(frame.clone());
        self.rev.frame_meta.insert(seq, out.meta.clone());
        self.rev
            .q_dl_pl
            .push_back(Stamped { at: now, item: DlItem::Frame(FlightFrame { frame, meta: out.meta }) });
    }

    fn stage_rev_tl_tx(&mut self, now: u64) {
        if let Some(out) = pop_ready(&mut self.rev.q_submit, now) {
            self.rev.q_tl_dl.push_back(Stamped { at: now, item: out });
        }
    }

    fn held(&self, offset: u64) -> bool {
        self.image.holds().iter().any(|h| offset >= h.offset && offset < h.end())
    }

    fn phase_compare(&mut self, now: u64) {
        let start = self.image.visible_len();
        let end = self.image.contiguous_committed_len().min(self.golden.len() as u64);
        let mut offset = start;
        while offset < end {
            let observed = self.image.data()[offset as usize];
            let expected = self.golden[offset as usize];
            if observed != expected && !self.held(offset) {
                let mut len = 1;
                while offset + len < end
                    && self.image.data()[(offset + len) as usize]
                        != self.golden[(offset + len) as usize]
                {
                    len += 1;
                }
                let span = DamageSpan { offset, len };
                self.image.hold(span);
                self.draft(
                    ErrorKind::CorruptedRxTlp,
                    offset,
                    None,
                    Some(span),
                    None,
                    "delivered bytes diverge from the transmitted stream",
                );
                offset += len;
            } else {
                offset += 1;
            }
        }

        let newly = self.image.advance_visible_capped(self.prev_committed);
        let reveal_end = newly.end().min(self.golden.len() as u64);
        for off in newly.offset..reveal_end {
            if self.image.data()[off as usize] != self.golden[off as usize] {
                self.corrupted_bytes_delivered += 1;
            }
        }

        while let Some(&(span, submitted)) = self.write_spans.get(self.next_unrevealed_write) {
            if span.end() <= self.image.visible_len() {
                let delay = now.saturating_sub(submitted);
                self.max_commit_delay = self.max_commit_delay.max(delay);
                self.next_unrevealed_write += 1;
            } else {
                break;
            }
        }
    }

    fn phase_emit(&mut self, now: u64) -> Option<ErrorEvent> {
        while let Some(draft) = self.pending_drafts.pop_front() {
            let expected = draft
                .fault
                .and_then(|fid| self.fault_kinds.get(&fid).copied())
                .map(expected_error_for);
            if let Some(fid) = draft.fault {
                let seen = self.recorded_for_fault.entry(fid).or_default();
                if expected == Some(draft.kind) && seen.contains(&draft.kind) {
                    self.duplicates_suppressed += 1;
                    continue;
                }
                seen.push(draft.kind);
            }
            let event =
                ErrorEvent::new(draft.kind, now, draft.seq_or_tag, draft.fault, draft.detail);
            self.aer = aer_record(std::mem::take(&mut self.aer), &event);
            self.detected_by_kind[draft.kind as usize] += 1;
            match draft.fault {
                Some(_) => {
                    if expected == Some(draft.kind) {
                        self.classified_by_kind[draft.kind as usize] += 1;
                    } else {
                        self.misclassified_events += 1;
                    }
                }
                None => self.unattributed_events += 1,
            }
            if event.severity != Severity::Correctable {
                self.interrupts_raised += 1;
                self.pending_interrupts
                    .push_back((InterruptEvent::new(event.clone(), now, draft.damage), draft.request_id));
            }
            self.events.push(event.clone());
            return Some(event);
        }
        None
    }

    fn phase_snapshot(&mut self, now: u64) {
        if now % self.params.snapshot_interval == 0 || self.delivered_this_cycle {
            let cursor = self.image.contiguous_committed_len();
            match &mut self.latest_snapshot {
                Some(snapshot) => {
                    snapshot.cycle = now;
                    snapshot.next_expected_seq = self.fwd.rx.expected_seq;
                    snapshot.credit_state = self.fc;
                    snapshot.golden_cursor = cursor;
                    snapshot.delivered_image.clear();
                    snapshot
                        .delivered_image
                        .extend_from_slice(&self.image.data()[..cursor as usize]);
                }
                None => {
                    self.latest_snapshot = Some(Snapshot::capture(
                        now,
                        &self.image,
                        self.fwd.rx.expected_seq,
                        self.fc,
                    ));
                }
            }
        }
        self.delivered_this_cycle = false;
    }

    /// Summarizes everything the run detected, classified, and repaired.
    pub fn build_report(&self, seed: u64) -> CampaignReport {
        let mut report = CampaignReport::empty(seed, self.params.mode);
        report.total_cycles = self.cycle;
        for kind in ErrorKind::ALL {
            let i = kind as usize;
            let counts = report.kind_mut(kind);
            counts.injected = self.injected_by_kind[i];
            counts.detected = self.detected_by_kind[i];
            counts.classified_correctly = self.classified_by_kind[i];
            counts.recovered = match classify(kind).1 {
                Severity::Correctable => self.detected_by_kind[i],
                Severity::NonFatalUncorrectable => {
                    self.records.iter().filter(|r| r.kind == kind).count() as u64
                }
                Severity::FatalUncorrectable => {
                    self.dispositions.iter().filter(|d| d.kind == kind && d.recovered).count()
                        as u64
                }
            };
        }
        report.corrupted_bytes_delivered = self.corrupted_bytes_delivered;
        report.recovery_latencies = self.records.iter().map(|r| r.latency_cycles).collect();
        report.flag_to_corrected =
            self.records.iter().map(|r| r.flag_to_corrected_cycles).collect();
        report.link_down_cycles_total = self.link_down_cycles_total;
        report.fatal_down_cycles =
            self.dispositions.iter().map(|d| d.link_down_cycles).collect();
        report.aer_final = self.aer.clone();
        report.interrupts_raised = self.interrupts_raised;
        report.unattributed_events = self.unattributed_events;
        report.misclassified_events = self.misclassified_events;
        report.duplicates_suppressed = self.duplicates_suppressed;
        report.faults_unapplied = self.faults_unapplied;
        report.max_commit_delay = self.max_commit_delay;
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::format_record;

    fn proposed() -> Simulator {
        Simulator::new(SimParams::new(Mode::Proposed))
    }

    fn run_to_l0(sim: &mut Simulator) {
        while !sim.link_up() {
            sim.tick();
        }
    }

    #[test]
    fn bring_up_reaches_l0_by_cycle_3() {
        let mut sim = proposed();
        for _ in 0..6 {
            sim.tick();
        }
        let states: Vec<Ltssm> = sim.trace().iter().map(|r| r.ltssm).collect();
        assert_eq!(
            states,
            [Ltssm::Detect, Ltssm::Polling, Ltssm::Config, Ltssm::L0, Ltssm::L0, Ltssm::L0]
        );
        assert_eq!(
            format_record(&sim.trace()[5]),
            "cycle=5 tx=- rx=- err=0 kind=- pr=0 ltssm=L0"
        );
    }

    #[test]
    fn submissions_need_l0() {
        let mut sim = proposed();
        assert_eq!(sim.submit_write(vec![0; 4]), Err(SubmitError::LinkDown));
        run_to_l0(&mut sim);
        assert_eq!(sim.submit_write(vec![0; 4]), Ok(()));
    }

    #[test]
    fn first_read_gets_tag_zero_and_exhaustion_errors() {
        let mut sim = proposed();
        run_to_l0(&mut sim);
        assert_eq!(sim.submit_read(MEM_BASE, 1), Ok(0));
        for expect in 1..=255u16 {
            assert_eq!(sim.submit_read(MEM_BASE, 1), Ok(expect as u8));
        }
        assert_eq!(sim.submit_read(MEM_BASE, 1), Err(SubmitError::NoFreeTag));
    }

    #[test]
    fn write_commits_six_cycles_after_submit() {
        let mut sim = proposed();
        run_to_l0(&mut sim);
        let submit_cycle = sim.cycle();
        sim.submit_write(vec![0xAA; 8]).unwrap();
        for _ in 0..6 {
            sim.tick();
        }
        assert!(!sim.image().is_committed(0), "one cycle early");
        sim.tick();
        assert_eq!(sim.cycle(), submit_cycle + 7);
        assert!(sim.image().is_committed(0));
        assert_eq!(sim.image().contiguous_committed_len(), 8);
        assert_eq!(sim.image().visible_len(), 0, "visibility trails by one cycle");
        sim.tick();
        assert_eq!(sim.image().visible_len(), 8);
    }

    #[test]
    fn clean_run_delivers_the_golden_stream_without_events() {
        let mut sim = proposed();
        run_to_l0(&mut sim);
        for chunk in 0u8..20 {
            sim.submit_write(vec![chunk; 16]).unwrap();
            for _ in 0..8 {
                sim.tick();
            }
        }
        for _ in 0..40 {
            sim.tick();
        }
        assert!(sim.events().is_empty());
        assert_eq!(sim.delivered_visible(), sim.golden());
        assert_eq!(sim.aer().total_events(), 0);
        assert_eq!(sim.max_commit_delay(), 7);
        assert_eq!(sim.interrupts_raised(), 0);
    }

    #[test]
    fn receiver_accepts_in_order_and_naks_damage() {
        let mut rx = DlReceiver::new();
        let tlp = Tlp::mem_read(0x0100, 0, 0x1000, 1).unwrap();
        let clean = frame_tlp(0, &tlp);
        assert_eq!(rx.receive(&clean), (DlOutcome::Accept, None));

        let mut damaged = frame_tlp(1, &tlp);
        damaged.tlp_bytes[5] ^= 0x10;
        assert_eq!(
            rx.receive(&damaged),
            (DlOutcome::Nak { expected: 1 }, Some(ErrorKind::BadTlp))
        );
        // While the Nak is outstanding, followers drop silently.
        let follower = frame_tlp(2, &tlp);
        assert_eq!(rx.receive(&follower), (DlOutcome::Ignored, None));
        // The retransmission of the expected frame clears the window.
        let retry = frame_tlp(1, &tlp);
        assert_eq!(rx.receive(&retry), (DlOutcome::Accept, None));
    }

    #[test]
    fn receiver_flags_sequence_jumps_and_reacks_duplicates() {
        let mut rx = DlReceiver::new();
        let tlp = Tlp::mem_read(0x0100, 0, 0x1000, 1).unwrap();
        assert_eq!(rx.receive(&frame_tlp(0, &tlp)), (DlOutcome::Accept, None));
        assert_eq!(
            rx.receive(&frame_tlp(3, &tlp)),
            (DlOutcome::Nak { expected: 1 }, Some(ErrorKind::DllProtocolError))
        );
        let mut rx = DlReceiver::new();
        assert_eq!(rx.receive(&frame_tlp(0, &tlp)), (DlOutcome::Accept, None));
        assert_eq!(rx.receive(&frame_tlp(0, &tlp)), (DlOutcome::Duplicate, None));
    }

    fn schedule_one(sim: &mut Simulator, kind: FaultKind, cycle: u64) {
        sim.schedule_faults(&[FaultSpec { id: 1, cycle, kind, params: [5, 9], seed: 7 }]);
    }

    fn drive_writes(sim: &mut Simulator, cycles: u64) {
        let end = sim.cycle() + cycles;
        while sim.cycle() < end {
            if sim.link_up() && sim.cycle() % 8 == 0 {
                sim.submit_write(vec![(sim.cycle() % 251) as u8; 16]).unwrap();
            }
            sim.tick();
        }
        for _ in 0..16 {
            sim.tick();
        }
    }

    #[test]
    fn payload_flip_is_detected_and_masked_by_replay() {
        let mut sim = proposed();
        run_to_l0(&mut sim);
        schedule_one(&mut sim, FaultKind::FlipTlpPayloadBit, 40);
        drive_writes(&mut sim, 200);
        let kinds: Vec<ErrorKind> = sim.events().iter().map(|e| e.kind).collect();
        assert_eq!(kinds, [ErrorKind::BadTlp]);
        assert_eq!(sim.events()[0].attributed_fault, Some(1));
        assert_eq!(sim.delivered_visible(), sim.golden());
        assert_eq!(sim.corrupted_bytes_delivered(), 0);
        assert_eq!(sim.interrupts_raised(), 0);
    }

    #[test]
    fn ecrc_flip_recovers_in_one_cycle() {
        let mut sim = proposed();
        run_to_l0(&mut sim);
        schedule_one(&mut sim, FaultKind::FlipEcrcBit, 40);
        drive_writes(&mut sim, 300);
        let kinds: Vec<ErrorKind> = sim.events().iter().map(|e| e.kind).collect();
        assert_eq!(kinds, [ErrorKind::EcrcFailure]);
        assert_eq!(sim.records().len(), 1);
        let record = &sim.records()[0];
        assert_eq!(record.latency_cycles, 1);
        assert_eq!(record.flag_to_corrected_cycles, 2);
        assert!(record.bytes_corrected > 0);
        assert_eq!(sim.delivered_visible(), sim.golden());
        assert_eq!(sim.corrupted_bytes_delivered(), 0);
    }

    #[test]
    fn poked_byte_is_flagged_held_and_repaired() {
        let mut sim = proposed();
        run_to_l0(&mut sim);
        sim.submit_write(vec![0x5A; 8]).unwrap();
        for _ in 0..7 {
            sim.tick();
        }
        assert!(sim.image().is_committed(0));
        assert_eq!(sim.image().visible_len(), 0);
        sim.poke_delivered(2, 0xEE);
        let mut flagged = None;
        for _ in 0..8 {
            let events = sim.tick();
            if let Some(event) = events.first() {
                flagged = Some(event.clone());
                break;
            }
        }
        let event = flagged.expect("corruption event");
        assert_eq!(event.kind, ErrorKind::CorruptedRxTlp);
        for _ in 0..8 {
            sim.tick();
        }
        assert_eq!(sim.records().len(), 1);
        assert_eq!(sim.records()[0].latency_cycles, 1);
        assert_eq!(sim.delivered_visible(), sim.golden());
        assert_eq!(sim.corrupted_bytes_delivered(), 0);
    }

    #[test]
    fn stale_snapshot_is_refused_when_intervals_are_sparse() {
        let mut params = SimParams::new(Mode::Proposed);
        params.snapshot_interval = 8;
        let mut sim = Simulator::new(params);
        run_to_l0(&mut sim);
        // Land the commit on a cycle where the next periodic snapshot
        // comes only after the repair would run.
        while sim.cycle() % 8 != 4 {
            sim.tick();
        }
        sim.submit_write(vec![0x77; 8]).unwrap();
        for _ in 0..7 {
            sim.tick();
        }
        assert!(sim.image().is_committed(0));
        sim.poke_delivered(1, 0x00);
        for _ in 0..8 {
            sim.tick();
        }
        assert_eq!(sim.stale_recoveries(), 1);
        assert!(sim.records().is_empty());
    }

    #[test]
    fn broken_training_keeps_the_link_up_in_proposed_mode() {
        let mut sim = proposed();
        run_to_l0(&mut sim);
        schedule_one(&mut sim, FaultKind::BreakTraining, 50);
        drive_writes(&mut sim, 120);
        let kinds: Vec<ErrorKind> = sim.events().iter().map(|e| e.kind).collect();
        assert_eq!(kinds, [ErrorKind::TrainingError]);
        assert_eq!(sim.dispositions().len(), 1);
        assert_eq!(sim.dispositions()[0].link_down_cycles, 0);
        assert!(sim.trace()[3..].iter().all(|r| r.ltssm == Ltssm::L0));
    }

    #[test]
    fn broken_training_costs_forty_cycles_in_baseline_mode() {
        let mut sim = Simulator::new(SimParams::new(Mode::Baseline));
        run_to_l0(&mut sim);
        schedule_one(&mut sim, FaultKind::BreakTraining, 50);
        drive_writes(&mut sim, 160);
        assert_eq!(sim.dispositions().len(), 1);
        assert_eq!(sim.dispositions()[0].link_down_cycles, 40);
        let down: Vec<u64> = sim
            .trace()
            .iter()
            .filter(|r| r.cycle >= 4 && r.ltssm != Ltssm::L0)
            .map(|r| r.cycle)
            .collect();
        assert_eq!(down.len(), 40);
        assert_eq!(*down.first().unwrap(), 50);
        assert_eq!(*down.last().unwrap(), 89);
        assert_eq!(sim.delivered_visible(), sim.golden());
    }

    #[test]
    fn stalled_completion_times_out_and_reissues() {
        let mut sim = proposed();
        run_to_l0(&mut sim);
        schedule_one(&mut sim, FaultKind::StallCompletion, 30);
        let end = 30 + 1024 + 400;
        while sim.cycle() < end {
            if sim.link_up() && sim.cycle() % 32 == 0 && sim.cycle() >= 32 {
                let _ = sim.submit_read(MEM_BASE, 2);
            }
            sim.tick();
        }
        let kinds: Vec<ErrorKind> = sim.events().iter().map(|e| e.kind).collect();
        assert_eq!(kinds, [ErrorKind::CompletionTimeout]);
        assert_eq!(sim.events()[0].attributed_fault, Some(1));
        assert_eq!(sim.records().len(), 1);
        assert_eq!(sim.outstanding_reads(), 0, "re-issued read completed");
    }
}
