//! The transmit replay buffer. Every frame sent across the link stays
//! here until the far side acknowledges it; a Nak or a replay timer
//! expiry retransmits everything still held, oldest first.

use std::collections::VecDeque;

use crate::packet::{DlFrame, SEQ_MODULUS};

pub const REPLAY_BUFFER_CAPACITY: usize = 32;

/// True when `seq` is at or before `acked` in the 12-bit cyclic window.
fn acked_covers(acked: u16, seq: u16) -> bool {
    (acked.wrapping_sub(seq)) % SEQ_MODULUS < SEQ_MODULUS / 2
}

/// Unacknowledged transmitted frames in send order, plus the replay
/// timer counting cycles since the oldest entry last moved.
#[derive(Debug, Clone, Default)]
pub struct ReplayBuffer {
    entries: VecDeque<DlFrame>,
    pub replay_timer: u64,
}

impl ReplayBuffer {
    pub fn new() -> ReplayBuffer {
        ReplayBuffer::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() >= REPLAY_BUFFER_CAPACITY
    }

    /// Holds a copy of a just-transmitted frame. Callers gate on
    /// `is_full` before transmitting.
    pub fn push(&mut self, frame: DlFrame) {
        debug_assert!(!self.is_full());
        self.entries.push_back(frame);
    }

    /// Cumulative acknowledgment: drops every entry at or before `acked`
    /// and resets the timer. Returns how many entries retired.
    pub fn ack(&mut self, acked: u16) -> usize {
        let before = self.entries.len();
        while let Some(front) = self.entries.front() {
            if acked_covers(acked, front.seq_num) {
                self.entries.pop_front();
            } else {
                break;
            }
        }
        self.replay_timer = 0;
        before - self.entries.len()
    }

    /// Copies of everything unacknowledged, oldest first, for
    /// retransmission. Resets the timer.
    pub fn replay_all(&mut self) -> Vec<DlFrame> {
        self.replay_timer = 0;
        self.entries.iter().cloned().collect()
    }

    /// Advances the timer one cycle; it only runs while frames await
    /// acknowledgment. Returns the new value.
    pub fn tick_timer(&mut self) -> u64 {
        if self.entries.is_empty() {
            self.replay_timer = 0;
        } else {
            self.replay_timer += 1;
        }
        self.replay_timer
    }

    pub fn oldest_seq(&self) -> Option<u16> {
        self.entries.front().map(|f| f.seq_num)
    }
}
