//! Helpers shared by the integration test targets.

#![allow(dead_code)]

use linksim::crc::{CRC16_POLY, CRC32_POLY};

/// Bit-serial shift-register CRC-32, independent of the table-driven
/// implementation under test. Input bytes are reflected on the way in and
/// the register is reflected on the way out.
pub fn bit_serial_crc32(data: &[u8]) -> u32 {
    let mut crc = 0xFFFF_FFFF_u32;
    for &byte in data {
        let byte = byte.reverse_bits();
        for i in (0..8).rev() {
            let bit = (byte >> i) & 1;
            let top = (crc >> 31) & 1;
            crc <<= 1;
            if top ^ u32::from(bit) != 0 {
                crc ^= CRC32_POLY;
            }
        }
    }
    crc.reverse_bits() ^ 0xFFFF_FFFF
}

/// Bit-serial shift-register CRC-16, independent of the table-driven
/// implementation under test. No reflection on either side.
pub fn bit_serial_crc16(data: &[u8]) -> u16 {
    let mut crc = 0xFFFF_u16;
    for &byte in data {
        for i in (0..8).rev() {
            let bit = (byte >> i) & 1;
            let top = (crc >> 15) & 1;
            crc <<= 1;
            if top ^ u16::from(bit) != 0 {
                crc ^= CRC16_POLY;
            }
        }
    }
    crc ^ 0xFFFF
}
