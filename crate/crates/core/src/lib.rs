//! Cycle-level simulator of a PCIe-like serial link under fault injection.
//!
//! A requester and a completer are joined by a three-layer stack
//! (transaction, data link, physical) modeled as a six-stage pipeline that
//! moves one item per stage per cycle. A seeded injector perturbs frames,
//! acknowledgments, credits, and link training; detectors at every layer
//! classify what they see into a fixed fifteen-kind taxonomy; and a
//! recovery controller masks the damage so the delivered byte stream stays
//! identical to the transmitted one. Every run is a pure function of its
//! configuration: same seed, same trace, bit for bit.

pub mod classify;
pub mod config;
pub mod crc;
pub mod fault;
pub mod flow;
pub mod harness;
pub mod ltssm;
pub mod packet;
pub mod recovery;
pub mod replay;
pub mod report;
pub mod rng;
pub mod sim;
pub mod trace;

pub use classify::{aer_record, classify, expected_error_for, AerRegisters, ErrorEvent, ErrorKind, Layer, Severity};
pub use config::{CampaignConfig, ConfigError, Mode};
pub use fault::{gen_campaign, CampaignError, FaultKind, FaultSpec};
pub use packet::{crc16, crc32, frame_tlp, parse_tlp, serialize_tlp, DlFrame, Dllp, DllpKind, Tlp, TlpKind};
pub use report::CampaignReport;
pub use sim::Simulator;
