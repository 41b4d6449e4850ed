//! Wire formats for everything the link carries: transaction-layer packets
//! (TLPs), data-link frames wrapping them, and the DL's own management
//! packets (DLLPs).
//!
//! The layouts here are the bit-exact contract that trace files expose.
//! All multi-byte fields are big-endian.

use thiserror::Error;

pub use crate::crc::{crc16, crc32};

/// Header bytes preceding the payload of every serialized TLP.
pub const TLP_HEADER_BYTES: usize = 14;
/// Ceiling on `length_dw`, giving a 1024-byte maximum payload.
pub const MAX_LENGTH_DW: u16 = 256;
/// Sequence numbers wrap modulo this.
pub const SEQ_MODULUS: u16 = 4096;

/// Transaction-layer packet kinds; the discriminant is the wire opcode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum TlpKind {
    MemWr = 0x01,
    MemRd = 0x02,
    Cpl = 0x03,
    CplD = 0x04,
    Msg = 0x05,
}

impl TlpKind {
    pub fn opcode(self) -> u8 {
        self as u8
    }

    pub fn from_opcode(code: u8) -> Option<TlpKind> {
        match code {
            0x01 => Some(TlpKind::MemWr),
            0x02 => Some(TlpKind::MemRd),
            0x03 => Some(TlpKind::Cpl),
            0x04 => Some(TlpKind::CplD),
            0x05 => Some(TlpKind::Msg),
            _ => None,
        }
    }

    /// MemWr and CplD carry `4 * length_dw` payload bytes; the rest carry none.
    pub fn carries_payload(self) -> bool {
        matches!(self, TlpKind::MemWr | TlpKind::CplD)
    }
}

/// A transaction-layer packet.
///
/// Invariants (enforced by the constructors and by `parse_tlp`):
/// payload length equals `4 * length_dw` for payload-carrying kinds and is
/// empty otherwise; `address` is dword aligned; `length_dw <= 256`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tlp {
    pub kind: TlpKind,
    pub requester_id: u16,
    pub tag: u8,
    pub address: u64,
    pub length_dw: u16,
    pub payload: Vec<u8>,
    pub ecrc_present: bool,
    /// Meaningful only when `ecrc_present`; zero otherwise.
    pub ecrc: u32,
}

/// Why a `Tlp` could not be built from the given fields.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum TlpBuildError {
    #[error("payload of {got} bytes is not a whole number of dwords")]
    RaggedPayload { got: usize },
    #[error("length {length_dw} dwords exceeds the {MAX_LENGTH_DW} dword ceiling")]
    TooLong { length_dw: u16 },
    #[error("address {0:#x} is not dword aligned")]
    MisalignedAddress(u64),
}

impl Tlp {
    fn validate_common(address: u64, length_dw: u16) -> Result<(), TlpBuildError> {
        if address % 4 != 0 {
            return Err(TlpBuildError::MisalignedAddress(address));
        }
        if length_dw > MAX_LENGTH_DW {
            return Err(TlpBuildError::TooLong { length_dw });
        }
        Ok(())
    }

    /// A posted memory write carrying `payload`; `payload.len()` must be a
    /// multiple of 4 and at most 1024.
    pub fn mem_write(
        requester_id: u16,
        address: u64,
        payload: Vec<u8>,
        ecrc_present: bool,
    ) -> Result<Tlp, TlpBuildError> {
        if payload.len() % 4 != 0 {
            return Err(TlpBuildError::RaggedPayload { got: payload.len() });
        }
        let length_dw = (payload.len() / 4) as u16;
        Self::validate_common(address, length_dw)?;
        let mut tlp = Tlp {
            kind: TlpKind::MemWr,
            requester_id,
            tag: 0,
            address,
            length_dw,
            payload,
            ecrc_present,
            ecrc: 0,
        };
        tlp.seal_ecrc();
        Ok(tlp)
    }

    /// A memory read request for `length_dw` dwords.
    pub fn mem_read(
        requester_id: u16,
        tag: u8,
        address: u64,
        length_dw: u16,
    ) -> Result<Tlp, TlpBuildError> {
        Self::validate_common(address, length_dw)?;
        Ok(Tlp {
            kind: TlpKind::MemRd,
            requester_id,
            tag,
            address,
            length_dw,
            payload: Vec::new(),
            ecrc_present: false,
            ecrc: 0,
        })
    }

    /// A completion carrying read data back to the requester.
    pub fn completion_data(
        requester_id: u16,
        tag: u8,
        payload: Vec<u8>,
    ) -> Result<Tlp, TlpBuildError> {
        if payload.len() % 4 != 0 {
            return Err(TlpBuildError::RaggedPayload { got: payload.len() });
        }
        let length_dw = (payload.len() / 4) as u16;
        if length_dw > MAX_LENGTH_DW {
            return Err(TlpBuildError::TooLong { length_dw });
        }
        Ok(Tlp {
            kind: TlpKind::CplD,
            requester_id,
            tag,
            address: 0,
            length_dw,
            payload,
            ecrc_present: false,
            ecrc: 0,
        })
    }

    /// A dataless completion. The completer answers a read this way only to
    /// signal that it aborted the request.
    pub fn completion_status(requester_id: u16, tag: u8) -> Tlp {
        Tlp {
            kind: TlpKind::Cpl,
            requester_id,
            tag,
            address: 0,
            length_dw: 0,
            payload: Vec::new(),
            ecrc_present: false,
            ecrc: 0,
        }
    }

    /// A message packet; `code` rides in the address field.
    pub fn message(requester_id: u16, code: u64) -> Result<Tlp, TlpBuildError> {
        Self::validate_common(code, 0)?;
        Ok(Tlp {
            kind: TlpKind::Msg,
            requester_id,
            tag: 0,
            address: code,
            length_dw: 0,
            payload: Vec::new(),
            ecrc_present: false,
            ecrc: 0,
        })
    }

    /// Serialized length in bytes.
    pub fn wire_len(&self) -> usize {
        TLP_HEADER_BYTES + self.payload.len() + if self.ecrc_present { 4 } else { 0 }
    }

    /// Recomputes and stores the digest over header and payload.
    pub fn seal_ecrc(&mut self) {
        if self.ecrc_present {
            self.ecrc = crc32(&serialize_tlp_body(self));
        } else {
            self.ecrc = 0;
        }
    }

    /// Whether the stored digest matches the header and payload bytes.
    pub fn ecrc_ok(&self) -> bool {
        !self.ecrc_present || self.ecrc == crc32(&serialize_tlp_body(self))
    }
}

fn serialize_tlp_body(tlp: &Tlp) -> Vec<u8> {
    let mut out = Vec::with_capacity(TLP_HEADER_BYTES + tlp.payload.len());
    out.push(tlp.kind.opcode());
    out.extend_from_slice(&tlp.requester_id.to_be_bytes());
    out.push(tlp.tag);
    out.extend_from_slice(&tlp.address.to_be_bytes());
    out.extend_from_slice(&tlp.length_dw.to_be_bytes());
    out.extend_from_slice(&tlp.payload);
    out
}

/// Serializes a TLP to its wire bytes. Layout: kind opcode, requester id,
/// tag, address, length in dwords, payload, then the 4 ECRC bytes when
/// present.
pub fn serialize_tlp(tlp: &Tlp) -> Vec<u8> {
    let mut out = serialize_tlp_body(tlp);
    if tlp.ecrc_present {
        out.extend_from_slice(&tlp.ecrc.to_be_bytes());
    }
    out
}

/// Why a byte sequence is not a TLP.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("malformed TLP: {reason}")]
pub struct Malformed {
    pub reason: String,
}

fn malformed(reason: impl Into<String>) -> Malformed {
    Malformed { reason: reason.into() }
}

/// Parses wire bytes back into a TLP. Whether an ECRC trails the payload is
/// inferred from the total length. The digest value is read, not verified;
/// verification is a transaction-layer receive check.
pub fn parse_tlp(bytes: &[u8]) -> Result<Tlp, Malformed> {
    if bytes.len() < TLP_HEADER_BYTES {
        return Err(malformed(format!(
            "truncated header: {} bytes, need {TLP_HEADER_BYTES}",
            bytes.len()
        )));
    }
    let kind = TlpKind::from_opcode(bytes[0])
        .ok_or_else(|| malformed(format!("unknown kind opcode {:#04x}", bytes[0])))?;
    let requester_id = u16::from_be_bytes([bytes[1], bytes[2]]);
    let tag = bytes[3];
    let address = u64::from_be_bytes(bytes[4..12].try_into().unwrap());
    let length_dw = u16::from_be_bytes([bytes[12], bytes[13]]);
    if length_dw > MAX_LENGTH_DW {
        return Err(malformed(format!(
            "length {length_dw} dwords exceeds the {MAX_LENGTH_DW} dword ceiling"
        )));
    }
    if address % 4 != 0 {
        return Err(malformed(format!("address {address:#x} is not dword aligned")));
    }
    let payload_len = if kind.carries_payload() {
        4 * usize::from(length_dw)
    } else {
        0
    };
    let after_header = bytes.len() - TLP_HEADER_BYTES;
    let ecrc_present = match after_header.checked_sub(payload_len) {
        Some(0) => false,
        Some(4) => true,
        _ => {
            return Err(malformed(format!(
                "{after_header} bytes after header inconsistent with length_dw={length_dw} for {kind:?}"
            )))
        }
    };
    let payload = bytes[TLP_HEADER_BYTES..TLP_HEADER_BYTES + payload_len].to_vec();
    let ecrc = if ecrc_present {
        u32::from_be_bytes(bytes[bytes.len() - 4..].try_into().unwrap())
    } else {
        0
    };
    Ok(Tlp {
        kind,
        requester_id,
        tag,
        address,
        length_dw,
        payload,
        ecrc_present,
        ecrc,
    })
}

/// A data-link frame: sequence number, serialized TLP, and the LCRC over
/// both.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DlFrame {
    /// 12-bit, wraps modulo 4096.
    pub seq_num: u16,
    pub tlp_bytes: Vec<u8>,
    pub lcrc: u32,
}

impl DlFrame {
    /// LCRC input: 2-byte big-endian sequence number, then the TLP bytes.
    pub fn lcrc_input(seq_num: u16, tlp_bytes: &[u8]) -> Vec<u8> {
        let mut data = Vec::with_capacity(2 + tlp_bytes.len());
        data.extend_from_slice(&seq_num.to_be_bytes());
        data.extend_from_slice(tlp_bytes);
        data
    }

    /// Whether the stored LCRC matches the frame contents.
    pub fn lcrc_ok(&self) -> bool {
        crc32(&Self::lcrc_input(self.seq_num, &self.tlp_bytes)) == self.lcrc
    }

    /// Serialized wire form: sequence number, TLP bytes, LCRC.
    pub fn wire_bytes(&self) -> Vec<u8> {
        let mut out = Self::lcrc_input(self.seq_num, &self.tlp_bytes);
        out.extend_from_slice(&self.lcrc.to_be_bytes());
        out
    }
}

/// Frames a TLP for transmission under the given sequence number.
pub fn frame_tlp(seq_num: u16, tlp: &Tlp) -> DlFrame {
    debug_assert!(seq_num < SEQ_MODULUS);
    let tlp_bytes = serialize_tlp(tlp);
    let lcrc = crc32(&DlFrame::lcrc_input(seq_num, &tlp_bytes));
    DlFrame { seq_num, tlp_bytes, lcrc }
}

/// Data-link management packet kinds; the discriminant is the wire code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum DllpKind {
    Ack = 0x01,
    Nak = 0x02,
    FcUpdate = 0x03,
}

/// A data-link layer packet. Ack/Nak carry a sequence number; FcUpdate
/// returns freed credits. The CRC covers the serialized body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dllp {
    pub kind: DllpKind,
    pub seq_num: u16,
    pub hdr_credits: u8,
    pub data_credits_dw: u16,
    pub crc16: u16,
}

impl Dllp {
    pub fn ack(seq_num: u16) -> Dllp {
        Self::sealed(DllpKind::Ack, seq_num, 0, 0)
    }

    pub fn nak(seq_num: u16) -> Dllp {
        Self::sealed(DllpKind::Nak, seq_num, 0, 0)
    }

    pub fn fc_update(hdr_credits: u8, data_credits_dw: u16) -> Dllp {
        Self::sealed(DllpKind::FcUpdate, 0, hdr_credits, data_credits_dw)
    }

    fn sealed(kind: DllpKind, seq_num: u16, hdr_credits: u8, data_credits_dw: u16) -> Dllp {
        let mut dllp = Dllp { kind, seq_num, hdr_credits, data_credits_dw, crc16: 0 };
        dllp.crc16 = crc16(&dllp.body());
        dllp
    }

    /// Serialized body (everything the CRC covers).
    pub fn body(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4);
        out.push(self.kind as u8);
        match self.kind {
            DllpKind::Ack | DllpKind::Nak => out.extend_from_slice(&self.seq_num.to_be_bytes()),
            DllpKind::FcUpdate => {
                out.push(self.hdr_credits);
                out.extend_from_slice(&self.data_credits_dw.to_be_bytes());
            }
        }
        out
    }

    pub fn crc_ok(&self) -> bool {
        crc16(&self.body()) == self.crc16
    }

    /// Serialized wire form: body then the 2 CRC bytes.
    pub fn wire_bytes(&self) -> Vec<u8> {
        let mut out = self.body();
        out.extend_from_slice(&self.crc16.to_be_bytes());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_mem_read() -> Tlp {
        Tlp::mem_read(0x0100, 5, 0x1000, 1).unwrap()
    }

    #[test]
    fn serialize_mem_read_layout() {
        let bytes = serialize_tlp(&example_mem_read());
        assert_eq!(
            bytes,
            [0x02, 0x01, 0x00, 0x05, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x10, 0x00, 0x00, 0x01]
        );
    }

    #[test]
    fn parse_inverts_serialize() {
        let tlp = example_mem_read();
        assert_eq!(parse_tlp(&serialize_tlp(&tlp)).unwrap(), tlp);
    }

    #[test]
    fn zero_length_write_is_header_only() {
        let tlp = Tlp::mem_write(0x0100, 0x2000, Vec::new(), false).unwrap();
        let bytes = serialize_tlp(&tlp);
        assert_eq!(bytes.len(), TLP_HEADER_BYTES);
        assert_eq!(parse_tlp(&bytes).unwrap(), tlp);
    }

    #[test]
    fn unknown_kind_is_malformed() {
        let mut bytes = serialize_tlp(&example_mem_read());
        bytes[0] = 0xFF;
        let err = parse_tlp(&bytes).unwrap_err();
        assert!(err.reason.contains("unknown kind"), "{err}");
    }

    #[test]
    fn short_payload_is_malformed() {
        // A MemWr header claiming 2 dwords followed by only 4 payload bytes.
        let tlp = Tlp::mem_write(0x0100, 0x2000, vec![0xAA; 8], false).unwrap();
        let mut bytes = serialize_tlp(&tlp);
        bytes.truncate(TLP_HEADER_BYTES + 4);
        assert!(parse_tlp(&bytes).is_err());
    }

    #[test]
    fn truncated_header_is_malformed() {
        let bytes = serialize_tlp(&example_mem_read());
        assert!(parse_tlp(&bytes[..10]).is_err());
    }

    #[test]
    fn misaligned_address_is_rejected_everywhere() {
        assert_eq!(
            Tlp::mem_read(0, 0, 0x1001, 1).unwrap_err(),
            TlpBuildError::MisalignedAddress(0x1001)
        );
        let mut bytes = serialize_tlp(&example_mem_read());
        bytes[11] = 0x01; // address becomes 0x1001
        assert!(parse_tlp(&bytes).is_err());
    }

    #[test]
    fn oversized_length_is_rejected() {
        let mut bytes = serialize_tlp(&example_mem_read());
        bytes[12] = 0x01;
        bytes[13] = 0x01; // length_dw = 257
        assert!(parse_tlp(&bytes).is_err());
    }

    #[test]
    fn ecrc_round_trips_and_verifies() {
        let tlp = Tlp::mem_write(0x0100, 0x3000, vec![1, 2, 3, 4], true).unwrap();
        let parsed = parse_tlp(&serialize_tlp(&tlp)).unwrap();
        assert_eq!(parsed, tlp);
        assert!(parsed.ecrc_ok());
        let mut damaged = parsed;
        damaged.ecrc ^= 1;
        assert!(!damaged.ecrc_ok());
    }

    #[test]
    fn frame_lcrc_matches_oracle_composition() {
        let tlp = example_mem_read();
        let frame = frame_tlp(0, &tlp);
        let mut input = vec![0x00, 0x00];
        input.extend_from_slice(&serialize_tlp(&tlp));
        assert_eq!(frame.lcrc, crc32(&input));
        assert!(frame.lcrc_ok());
    }

    #[test]
    fn lcrc_covers_sequence_number() {
        let tlp = example_mem_read();
        let a = frame_tlp(7, &tlp);
        let b = frame_tlp(8, &tlp);
        assert_ne!(a.lcrc, b.lcrc);
        // Frozen from the bit-serial oracle over seq ‖ tlp bytes.
        assert_eq!(a.lcrc, 0x1D0B_922C);
        assert_eq!(b.lcrc, 0x4983_51B1);
    }

    #[test]
    fn any_single_bit_flip_breaks_lcrc() {
        let tlp = Tlp::mem_write(0x0100, 0x4000, vec![0x5A; 16], false).unwrap();
        let frame = frame_tlp(33, &tlp);
        for byte in 0..frame.tlp_bytes.len() {
            for bit in 0..8 {
                let mut hit = frame.clone();
                hit.tlp_bytes[byte] ^= 1 << bit;
                assert!(!hit.lcrc_ok(), "flip at byte {byte} bit {bit} went undetected");
            }
        }
    }

    #[test]
    fn dllp_bodies_and_crc() {
        let ack = Dllp::ack(1);
        assert_eq!(ack.body(), vec![0x01, 0x00, 0x01]);
        assert_eq!(ack.crc16, 0xC8C9); // frozen from the bit-serial oracle
        assert!(ack.crc_ok());

        let nak = Dllp::nak(0x0FFF);
        assert_eq!(nak.body(), vec![0x02, 0x0F, 0xFF]);
        assert!(nak.crc_ok());

        let fc = Dllp::fc_update(1, 16);
        assert_eq!(fc.body(), vec![0x03, 0x01, 0x00, 0x10]);
        assert!(fc.crc_ok());

        let mut bad = Dllp::ack(1);
        bad.crc16 ^= 0x0004;
        assert!(!bad.crc_ok());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_tlp() -> impl Strategy<Value = Tlp> {
            let kind = prop_oneof![
                Just(TlpKind::MemWr),
                Just(TlpKind::MemRd),
                Just(TlpKind::Cpl),
                Just(TlpKind::CplD),
                Just(TlpKind::Msg),
            ];
            (kind, any::<u16>(), any::<u8>(), 0u64..=0xFFFF_FFFF, 0u16..=64, any::<bool>())
                .prop_map(|(kind, requester_id, tag, addr_dw, length_dw, ecrc_present)| {
                    let payload = if kind.carries_payload() {
                        (0..4 * usize::from(length_dw)).map(|i| i as u8).collect()
                    } else {
                        Vec::new()
                    };
                    let mut tlp = Tlp {
                        kind,
                        requester_id,
                        tag,
                        address: addr_dw * 4,
                        length_dw,
                        payload,
                        ecrc_present,
                        ecrc: 0,
                    };
                    tlp.seal_ecrc();
                    tlp
                })
        }

        proptest! {
            #[test]
            fn round_trip(tlp in arb_tlp()) {
                let bytes = serialize_tlp(&tlp);
                prop_assert_eq!(bytes.len(), tlp.wire_len());
                prop_assert_eq!(parse_tlp(&bytes).unwrap(), tlp);
            }

            #[test]
            fn single_bit_flip_fails_lcrc(tlp in arb_tlp(), seq in 0u16..4096, pick in any::<u64>()) {
                let frame = frame_tlp(seq, &tlp);
                let total_bits = (2 + frame.tlp_bytes.len()) * 8;
                let bit = (pick % total_bits as u64) as usize;
                let mut seq_bytes = frame.seq_num.to_be_bytes();
                let mut hit = frame.clone();
                if bit < 16 {
                    seq_bytes[bit / 8] ^= 1 << (bit % 8);
                    hit.seq_num = u16::from_be_bytes(seq_bytes);
                } else {
                    let b = bit - 16;
                    hit.tlp_bytes[b / 8] ^= 1 << (b % 8);
                }
                prop_assert!(!hit.lcrc_ok());
            }
        }
    }
}
