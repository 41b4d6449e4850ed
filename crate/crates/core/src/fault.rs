//! Fault campaign generation: which disturbance to apply, when, and with
//! what parameters. Campaigns are pure functions of a 64-bit seed, so a
//! campaign can be regenerated exactly from its config.

use thiserror::Error;

use crate::rng::SplitMix64;

/// First cycle at which a campaign may disturb the link, leaving bring-up
/// and early traffic undisturbed.
pub const CAMPAIGN_WARMUP_CYCLES: u64 = 64;
/// Minimum spacing between consecutive faults so each one resolves before
/// the next lands.
pub const MIN_FAULT_GAP_CYCLES: u64 = 32;

/// The fifteen ways a campaign can disturb the link, one per detectable
/// error kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FaultKind {
    FlipTlpPayloadBit,
    FlipLcrcBit,
    FlipSeqNum,
    FlipDllpCrcBit,
    DropAck,
    StallCompletion,
    ViolateCredit,
    MalformHeader,
    InjectUnexpectedCompletion,
    SendUnsupportedRequest,
    ForceCompleterAbort,
    FlipEcrcBit,
    PlSymbolError,
    BreakTraining,
    SuppressReplayAck,
}

impl FaultKind {
    pub const ALL: [FaultKind; 15] = [
        FaultKind::FlipTlpPayloadBit,
        FaultKind::FlipLcrcBit,
        FaultKind::FlipSeqNum,
        FaultKind::FlipDllpCrcBit,
        FaultKind::DropAck,
        FaultKind::StallCompletion,
        FaultKind::ViolateCredit,
        FaultKind::MalformHeader,
        FaultKind::InjectUnexpectedCompletion,
        FaultKind::SendUnsupportedRequest,
        FaultKind::ForceCompleterAbort,
        FaultKind::FlipEcrcBit,
        FaultKind::PlSymbolError,
        FaultKind::BreakTraining,
        FaultKind::SuppressReplayAck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FaultKind::FlipTlpPayloadBit => "FlipTlpPayloadBit",
            FaultKind::FlipLcrcBit => "FlipLcrcBit",
            FaultKind::FlipSeqNum => "FlipSeqNum",
            FaultKind::FlipDllpCrcBit => "FlipDllpCrcBit",
            FaultKind::DropAck => "DropAck",
            FaultKind::StallCompletion => "StallCompletion",
            FaultKind::ViolateCredit => "ViolateCredit",
            FaultKind::MalformHeader => "MalformHeader",
            FaultKind::InjectUnexpectedCompletion => "InjectUnexpectedCompletion",
            FaultKind::SendUnsupportedRequest => "SendUnsupportedRequest",
            FaultKind::ForceCompleterAbort => "ForceCompleterAbort",
            FaultKind::FlipEcrcBit => "FlipEcrcBit",
            FaultKind::PlSymbolError => "PlSymbolError",
            FaultKind::BreakTraining => "BreakTraining",
            FaultKind::SuppressReplayAck => "SuppressReplayAck",
        }
    }

    pub fn from_name(name: &str) -> Option<FaultKind> {
        FaultKind::ALL.iter().copied().find(|k| k.name() == name)
    }
}

impl std::fmt::Display for FaultKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One scheduled disturbance. `params` are kind-specific raw draws (bit
/// index, burst selector, stall length); `seed` lets the applier derive
/// further per-fault randomness reproducibly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultSpec {
    pub id: u64,
    pub cycle: u64,
    pub kind: FaultKind,
    pub params: [u64; 2],
    pub seed: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CampaignError {
    #[error(
        "horizon of {horizon} cycles cannot fit {count} faults at {min_gap}-cycle minimum spacing"
    )]
    HorizonTooSmall { horizon: u64, count: u64, min_gap: u64 },
}

/// Generates a campaign of `count_per_kind` faults of each of the fifteen
/// kinds, shuffled together, at least 32 cycles apart, all within
/// `horizon`. Identical arguments give an identical campaign.
pub fn gen_campaign(
    seed: u64,
    count_per_kind: u64,
    horizon: u64,
) -> Result<Vec<FaultSpec>, CampaignError> {
    gen_campaign_of(seed, count_per_kind, horizon, &FaultKind::ALL, MIN_FAULT_GAP_CYCLES)
}

/// Generalized form: restrict the kinds drawn and widen the base spacing.
/// `min_gap` below the default is raised to it.
pub fn gen_campaign_of(
    seed: u64,
    count_per_kind: u64,
    horizon: u64,
    kinds: &[FaultKind],
    min_gap: u64,
) -> Result<Vec<FaultSpec>, CampaignError> {
    let min_gap = min_gap.max(MIN_FAULT_GAP_CYCLES);
    let mut rng = SplitMix64::new(seed);

    let mut order: Vec<FaultKind> = Vec::with_capacity(kinds.len() * count_per_kind as usize);
    for _ in 0..count_per_kind {
        order.extend_from_slice(kinds);
    }
    for i in (1..order.len()).rev() {
        let j = rng.next_below(i as u64 + 1) as usize;
        order.swap(i, j);
    }

    let total = order.len() as u64;
    let mut specs = Vec::with_capacity(order.len());
    let mut cycle = CAMPAIGN_WARMUP_CYCLES;
    for (id, kind) in order.into_iter().enumerate() {
        if id > 0 {
            cycle += min_gap + rng.next_u64() % 8;
        }
        if cycle > horizon {
            return Err(CampaignError::HorizonTooSmall { horizon, count: total, min_gap });
        }
        let params = [rng.next_u64(), rng.next_u64()];
        let spec_seed = rng.next_u64();
        specs.push(FaultSpec { id: id as u64, cycle, kind, params, seed: spec_seed });
    }
    Ok(specs)
}
