//! Credit-based flow control. The receiver advertises header and data
//! credits once; the transmitter spends them per frame. FcUpdate packets
//! carry the receiver's cumulative processed totals, so the transmitter
//! resynchronizes fully from any single update even after earlier updates
//! were lost.

/// Transmit-side credit ledger. `hdr_credits` and `data_credits_dw` are
/// what remains spendable; they stay within `0..=advertised` except under
/// a deliberate credit-bypass disturbance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowControl {
    pub hdr_credits: i64,
    pub data_credits_dw: i64,
    pub advertised_hdr: u32,
    pub advertised_data_dw: u32,
    /// Cumulative headers sent, wrapping.
    pub sent_hdr_total: u8,
    /// Cumulative payload dwords sent, wrapping.
    pub sent_data_total_dw: u16,
}

impl FlowControl {
    pub fn new(advertised_hdr: u32, advertised_data_dw: u32) -> FlowControl {
        FlowControl {
            hdr_credits: i64::from(advertised_hdr),
            data_credits_dw: i64::from(advertised_data_dw),
            advertised_hdr,
            advertised_data_dw,
            sent_hdr_total: 0,
            sent_data_total_dw: 0,
        }
    }

    /// Whether a frame needing one header credit and `data_dw` data
    /// credits fits in what remains.
    pub fn can_send(&self, data_dw: u16) -> bool {
        self.hdr_credits >= 1 && self.data_credits_dw >= i64::from(data_dw)
    }

    /// Spends credits for one frame. Callers gate on `can_send` except
    /// when deliberately overdrawing.
    pub fn consume(&mut self, data_dw: u16) {
        self.hdr_credits -= 1;
        self.data_credits_dw -= i64::from(data_dw);
        self.sent_hdr_total = self.sent_hdr_total.wrapping_add(1);
        self.sent_data_total_dw = self.sent_data_total_dw.wrapping_add(data_dw);
    }

    /// Resynchronizes spendable credits from the receiver's cumulative
    /// processed totals: spendable = advertised minus what is still
    /// unprocessed on the receive side.
    pub fn sync(&mut self, processed_hdr_total: u8, processed_data_total_dw: u16) {
        let outstanding_hdr = self.sent_hdr_total.wrapping_sub(processed_hdr_total);
        let outstanding_dw = self.sent_data_total_dw.wrapping_sub(processed_data_total_dw);
        self.hdr_credits = i64::from(self.advertised_hdr) - i64::from(outstanding_hdr);
        self.data_credits_dw =
            i64::from(self.advertised_data_dw) - i64::from(outstanding_dw);
    }

    /// True while no credit has been overdrawn.
    pub fn conserved(&self) -> bool {
        self.hdr_credits >= 0
            && self.data_credits_dw >= 0
            && self.hdr_credits <= i64::from(self.advertised_hdr)
            && self.data_credits_dw <= i64::from(self.advertised_data_dw)
    }
}
