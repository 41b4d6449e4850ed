//! Integrity codes for the link: a 32-bit CRC guarding DL frames (LCRC) and
//! optional end-to-end TLP digests (ECRC), and a 16-bit CRC guarding DLLPs.
//!
//! Both generators are table driven; the tables are derived from the
//! polynomials at first use. The independent bit-serial shift-register
//! reference lives in test code only.

use std::sync::OnceLock;

/// Generator polynomial for the 32-bit code, MSB first.
pub const CRC32_POLY: u32 = 0x04C1_1DB7;
/// Generator polynomial for the 16-bit DLLP code, MSB first.
pub const CRC16_POLY: u16 = 0x100B;

fn crc32_table() -> &'static [u32; 256] {
    static TABLE: OnceLock<[u32; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        // Reflected-table form: each entry advances the register by one
        // reflected input byte.
        let poly = CRC32_POLY.reverse_bits();
        let mut table = [0u32; 256];
        for (i, slot) in table.iter_mut().enumerate() {
            let mut crc = i as u32;
            for _ in 0..8 {
                crc = if crc & 1 != 0 { (crc >> 1) ^ poly } else { crc >> 1 };
            }
            *slot = crc;
        }
        table
    })
}

/// 32-bit CRC: polynomial 0x04C11DB7, initial value all ones, input and
/// output reflected, final XOR all ones. `crc32(b"123456789")` is
/// `0xCBF4_3926`; the empty sequence maps to zero.
pub fn crc32(data: &[u8]) -> u32 {
    let table = crc32_table();
    let mut crc = 0xFFFF_FFFF_u32;
    for &b in data {
        crc = (crc >> 8) ^ table[((crc ^ u32::from(b)) & 0xFF) as usize];
    }
    crc ^ 0xFFFF_FFFF
}

fn crc16_table() -> &'static [u16; 256] {
    static TABLE: OnceLock<[u16; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [0u16; 256];
        for (i, slot) in table.iter_mut().enumerate() {
            let mut crc = (i as u16) << 8;
            for _ in 0..8 {
                crc = if crc & 0x8000 != 0 { (crc << 1) ^ CRC16_POLY } else { crc << 1 };
            }
            *slot = crc;
        }
        table
    })
}

/// 16-bit CRC: polynomial 0x100B, initial value all ones, no reflection,
/// final XOR all ones. The empty sequence maps to zero.
pub fn crc16(data: &[u8]) -> u16 {
    let table = crc16_table();
    let mut crc = 0xFFFF_u16;
    for &b in data {
        crc = (crc << 8) ^ table[(((crc >> 8) ^ u16::from(b)) & 0xFF) as usize];
    }
    crc ^ 0xFFFF
}
