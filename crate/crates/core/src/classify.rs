//! The error taxonomy: fifteen error kinds, each pinned to a layer and a
//! severity, plus the status registers that accumulate recorded events and
//! the oracle tying each fault kind to the one error it must produce.

use crate::fault::FaultKind;

/// Protocol layer an error is detected at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layer {
    Transaction,
    DataLink,
    Physical,
}

impl std::fmt::Display for Layer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Layer::Transaction => "TL",
            Layer::DataLink => "DL",
            Layer::Physical => "PL",
        })
    }
}

/// How much intervention an error demands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    /// The link heals it in-layer; no software sees it.
    Correctable,
    /// Data was lost or refused but the link survives; software recovers it.
    NonFatalUncorrectable,
    /// Link operation itself is compromised.
    FatalUncorrectable,
}

impl std::fmt::Display for Severity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Severity::Correctable => "Correctable",
            Severity::NonFatalUncorrectable => "NonFatalUncorrectable",
            Severity::FatalUncorrectable => "FatalUncorrectable",
        })
    }
}

/// The fifteen detectable error kinds. Declaration order is the status
/// register bit order, so `kind as u32` is the kind's bit index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum ErrorKind {
    RxError = 0,
    BadTlp = 1,
    BadDllp = 2,
    ReplayTimeout = 3,
    CorruptedRxTlp = 4,
    EcrcFailure = 5,
    UnsupportedRequest = 6,
    CompletionTimeout = 7,
    CompleterAbort = 8,
    UnexpectedCompletion = 9,
    TrainingError = 10,
    DllProtocolError = 11,
    ReceiverOverflow = 12,
    FlowControlProtocolError = 13,
    MalformedTlp = 14,
}

impl ErrorKind {
    pub const COUNT: usize = 15;

    pub const ALL: [ErrorKind; 15] = [
        ErrorKind::RxError,
        ErrorKind::BadTlp,
        ErrorKind::BadDllp,
        ErrorKind::ReplayTimeout,
        ErrorKind::CorruptedRxTlp,
        ErrorKind::EcrcFailure,
        ErrorKind::UnsupportedRequest,
        ErrorKind::CompletionTimeout,
        ErrorKind::CompleterAbort,
        ErrorKind::UnexpectedCompletion,
        ErrorKind::TrainingError,
        ErrorKind::DllProtocolError,
        ErrorKind::ReceiverOverflow,
        ErrorKind::FlowControlProtocolError,
        ErrorKind::MalformedTlp,
    ];

    /// Bit index in the status registers and row index in reports.
    pub fn bit(self) -> u32 {
        self as u32
    }

    pub fn layer(self) -> Layer {
        classify(self).0
    }

    pub fn severity(self) -> Severity {
        classify(self).1
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::RxError => "RxError",
            ErrorKind::BadTlp => "BadTlp",
            ErrorKind::BadDllp => "BadDllp",
            ErrorKind::ReplayTimeout => "ReplayTimeout",
            ErrorKind::CorruptedRxTlp => "CorruptedRxTlp",
            ErrorKind::EcrcFailure => "EcrcFailure",
            ErrorKind::UnsupportedRequest => "UnsupportedRequest",
            ErrorKind::CompletionTimeout => "CompletionTimeout",
            ErrorKind::CompleterAbort => "CompleterAbort",
            ErrorKind::UnexpectedCompletion => "UnexpectedCompletion",
            ErrorKind::TrainingError => "TrainingError",
            ErrorKind::DllProtocolError => "DllProtocolError",
            ErrorKind::ReceiverOverflow => "ReceiverOverflow",
            ErrorKind::FlowControlProtocolError => "FlowControlProtocolError",
            ErrorKind::MalformedTlp => "MalformedTlp",
        }
    }

    pub fn from_name(name: &str) -> Option<ErrorKind> {
        ErrorKind::ALL.iter().copied().find(|k| k.name() == name)
    }
}

impl std::fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// The full kind to (layer, severity) mapping. Total and pure.
pub fn classify(kind: ErrorKind) -> (Layer, Severity) {
    use ErrorKind::*;
    use Layer::*;
    use Severity::*;
    match kind {
        RxError => (Physical, Correctable),
        BadTlp => (DataLink, Correctable),
        BadDllp => (DataLink, Correctable),
        ReplayTimeout => (DataLink, Correctable),
        CorruptedRxTlp => (Transaction, NonFatalUncorrectable),
        EcrcFailure => (Transaction, NonFatalUncorrectable),
        UnsupportedRequest => (Transaction, NonFatalUncorrectable),
        CompletionTimeout => (Transaction, NonFatalUncorrectable),
        CompleterAbort => (Transaction, NonFatalUncorrectable),
        UnexpectedCompletion => (Transaction, NonFatalUncorrectable),
        TrainingError => (Physical, FatalUncorrectable),
        DllProtocolError => (DataLink, FatalUncorrectable),
        ReceiverOverflow => (Transaction, FatalUncorrectable),
        FlowControlProtocolError => (Transaction, FatalUncorrectable),
        MalformedTlp => (Transaction, FatalUncorrectable),
    }
}

/// The one error kind each fault kind must be detected and classified as.
pub fn expected_error_for(fault: FaultKind) -> ErrorKind {
    match fault {
        FaultKind::FlipTlpPayloadBit => ErrorKind::BadTlp,
        FaultKind::FlipLcrcBit => ErrorKind::BadTlp,
        FaultKind::FlipSeqNum => ErrorKind::DllProtocolError,
        FaultKind::FlipDllpCrcBit => ErrorKind::BadDllp,
        FaultKind::DropAck => ErrorKind::ReplayTimeout,
        FaultKind::StallCompletion => ErrorKind::CompletionTimeout,
        FaultKind::ViolateCredit => ErrorKind::ReceiverOverflow,
        FaultKind::MalformHeader => ErrorKind::MalformedTlp,
        FaultKind::InjectUnexpectedCompletion => ErrorKind::UnexpectedCompletion,
        FaultKind::SendUnsupportedRequest => ErrorKind::UnsupportedRequest,
        FaultKind::ForceCompleterAbort => ErrorKind::CompleterAbort,
        FaultKind::FlipEcrcBit => ErrorKind::EcrcFailure,
        FaultKind::PlSymbolError => ErrorKind::RxError,
        FaultKind::BreakTraining => ErrorKind::TrainingError,
        FaultKind::SuppressReplayAck => ErrorKind::FlowControlProtocolError,
    }
}

/// One recorded error. Layer and severity are always derived from the
/// kind, never stored independently.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorEvent {
    pub kind: ErrorKind,
    pub layer: Layer,
    pub severity: Severity,
    pub cycle: u64,
    pub seq_or_tag: u64,
    pub attributed_fault: Option<u64>,
    pub detail: String,
}

impl ErrorEvent {
    pub fn new(
        kind: ErrorKind,
        cycle: u64,
        seq_or_tag: u64,
        attributed_fault: Option<u64>,
        detail: impl Into<String>,
    ) -> ErrorEvent {
        let (layer, severity) = classify(kind);
        ErrorEvent { kind, layer, severity, cycle, seq_or_tag, attributed_fault, detail: detail.into() }
    }
}

/// Flat error status registers: one bit per kind in each severity class
/// plus per-kind counts and a first-error latch.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AerRegisters {
    pub correctable_status: u16,
    pub uncorrectable_status: u16,
    pub first_error_kind: Option<ErrorKind>,
    pub counts: [u64; ErrorKind::COUNT],
}

impl AerRegisters {
    pub fn total_events(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn count(&self, kind: ErrorKind) -> u64 {
        self.counts[kind.bit() as usize]
    }
}

/// Records an event: sets the kind's bit in the mask matching its
/// severity, bumps its count, and latches the first kind ever seen.
pub fn aer_record(mut registers: AerRegisters, event: &ErrorEvent) -> AerRegisters {
    let bit = 1u16 << event.kind.bit();
    match event.severity {
        Severity::Correctable => registers.correctable_status |= bit,
        Severity::NonFatalUncorrectable | Severity::FatalUncorrectable => {
            registers.uncorrectable_status |= bit
        }
    }
    registers.counts[event.kind.bit() as usize] += 1;
    if registers.first_error_kind.is_none() {
        registers.first_error_kind = Some(event.kind);
    }
    registers
}
