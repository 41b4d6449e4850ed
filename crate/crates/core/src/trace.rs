//! Per-cycle capture of link activity in a stable line-oriented text
//! format, one record per cycle from cycle 0.

use std::fmt::Write as _;
use std::io;

use crate::classify::ErrorKind;
use crate::ltssm::Ltssm;

/// One cycle of observable link signals: bytes entering the transmit
/// physical layer, bytes leaving the receive physical layer, the error
/// flag and kind, the recovery signal, and the link state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub cycle: u64,
    pub tx_data: Option<Vec<u8>>,
    pub rx_data: Option<Vec<u8>>,
    pub err_flag: bool,
    pub err_kind: Option<ErrorKind>,
    pub pr_recovery: bool,
    pub ltssm: Ltssm,
}

impl TraceRecord {
    pub fn idle(cycle: u64, ltssm: Ltssm) -> TraceRecord {
        TraceRecord {
            cycle,
            tx_data: None,
            rx_data: None,
            err_flag: false,
            err_kind: None,
            pr_recovery: false,
            ltssm,
        }
    }
}

fn hex_or_dash(data: &Option<Vec<u8>>) -> String {
    match data {
        None => "-".to_string(),
        Some(bytes) => {
            let mut out = String::with_capacity(bytes.len() * 2);
            for byte in bytes {
                let _ = write!(out, "{byte:02x}");
            }
            out
        }
    }
}

/// The one-line form of a record. Field order and spelling are fixed;
/// hex is lowercase; absent fields print as a dash.
pub fn format_record(record: &TraceRecord) -> String {
    format!(
        "cycle={} tx={} rx={} err={} kind={} pr={} ltssm={}",
        record.cycle,
        hex_or_dash(&record.tx_data),
        hex_or_dash(&record.rx_data),
        u8::from(record.err_flag),
        record.err_kind.map_or("-", |k| k.name()),
        u8::from(record.pr_recovery),
        record.ltssm,
    )
}

/// Writes one line per record. Records must be one per cycle, strictly
/// increasing from 0.
pub fn emit_trace<W: io::Write>(records: &[TraceRecord], destination: &mut W) -> io::Result<()> {
    for (index, record) in records.iter().enumerate() {
        debug_assert_eq!(record.cycle, index as u64);
        writeln!(destination, "{}", format_record(record))?;
    }
    Ok(())
}

fn parse_bytes(field: &str) -> Result<Option<Vec<u8>>, String> {
    if field == "-" {
        return Ok(None);
    }
    if field.len() % 2 != 0 {
        return Err(format!("odd hex length in {field:?}"));
    }
    let mut bytes = Vec::with_capacity(field.len() / 2);
    for i in (0..field.len()).step_by(2) {
        let pair = &field[i..i + 2];
        bytes.push(u8::from_str_radix(pair, 16).map_err(|e| format!("bad hex {pair:?}: {e}"))?);
    }
    Ok(Some(bytes))
}

fn parse_flag(field: &str) -> Result<bool, String> {
    match field {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(format!("expected 0 or 1, got {other:?}")),
    }
}

/// Parses one line produced by `format_record`.
pub fn parse_record(line: &str) -> Result<TraceRecord, String> {
    let mut fields = [None::<&str>; 7];
    let names = ["cycle", "tx", "rx", "err", "kind", "pr", "ltssm"];
    let mut count = 0;
    for (i, token) in line.split_whitespace().enumerate() {
        if i >= names.len() {
            return Err(format!("unexpected extra token {token:?}"));
        }
        let value = token
            .strip_prefix(names[i])
            .and_then(|rest| rest.strip_prefix('='))
            .ok_or_else(|| format!("expected {}=..., got {token:?}", names[i]))?;
        fields[i] = Some(value);
        count = i + 1;
    }
    if count != names.len() {
        return Err(format!("expected {} fields, got {count}", names.len()));
    }
    let field = |i: usize| fields[i].unwrap();

    let ltssm = match field(6) {
        "Detect" => Ltssm::Detect,
        "Polling" => Ltssm::Polling,
        "Config" => Ltssm::Config,
        "L0" => Ltssm::L0,
        "RecoveryRetrain" => Ltssm::RecoveryRetrain,
        "Disabled" => Ltssm::Disabled,
        other => return Err(format!("unknown ltssm state {other:?}")),
    };
    let err_kind = match field(4) {
        "-" => None,
        name => Some(
            ErrorKind::from_name(name).ok_or_else(|| format!("unknown error kind {name:?}"))?,
        ),
    };
    Ok(TraceRecord {
        cycle: field(0).parse().map_err(|e| format!("bad cycle: {e}"))?,
        tx_data: parse_bytes(field(1))?,
        rx_data: parse_bytes(field(2))?,
        err_flag: parse_flag(field(3))?,
        err_kind,
        pr_recovery: parse_flag(field(5))?,
        ltssm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn idle_line_is_exact() {
        let record = TraceRecord::idle(5, Ltssm::L0);
        assert_eq!(format_record(&record), "cycle=5 tx=- rx=- err=0 kind=- pr=0 ltssm=L0");
    }

    #[test]
    fn busy_line_is_exact() {
        let record = TraceRecord {
            cycle: 12,
            tx_data: Some(vec![0x02, 0x01, 0x00]),
            rx_data: Some(vec![0xAB]),
            err_flag: true,
            err_kind: Some(ErrorKind::BadTlp),
            pr_recovery: true,
            ltssm: Ltssm::L0,
        };
        assert_eq!(
            format_record(&record),
            "cycle=12 tx=020100 rx=ab err=1 kind=BadTlp pr=1 ltssm=L0"
        );
    }

    #[test]
    fn emit_writes_one_line_per_record() {
        let records = vec![TraceRecord::idle(0, Ltssm::Detect), TraceRecord::idle(1, Ltssm::Polling)];
        let mut out = Vec::new();
        emit_trace(&records, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "cycle=0 tx=- rx=- err=0 kind=- pr=0 ltssm=Detect\n\
             cycle=1 tx=- rx=- err=0 kind=- pr=0 ltssm=Polling\n"
        );
    }

    #[test]
    fn parse_inverts_format() {
        let records = [
            TraceRecord::idle(0, Ltssm::Detect),
            TraceRecord {
                cycle: 1,
                tx_data: Some(vec![0xDE, 0xAD]),
                rx_data: None,
                err_flag: true,
                err_kind: Some(ErrorKind::ReplayTimeout),
                pr_recovery: false,
                ltssm: Ltssm::RecoveryRetrain,
            },
        ];
        for record in records {
            assert_eq!(parse_record(&format_record(&record)).unwrap(), record);
        }
    }

    #[test]
    fn malformed_lines_are_rejected() {
        assert!(parse_record("").is_err());
        assert!(parse_record("cycle=1 tx=- rx=-").is_err());
        assert!(parse_record("cycle=x tx=- rx=- err=0 kind=- pr=0 ltssm=L0").is_err());
        assert!(parse_record("cycle=1 tx=zz rx=- err=0 kind=- pr=0 ltssm=L0").is_err());
        assert!(parse_record("cycle=1 tx=- rx=- err=2 kind=- pr=0 ltssm=L0").is_err());
        assert!(parse_record("cycle=1 tx=- rx=- err=0 kind=Nope pr=0 ltssm=L0").is_err());
        assert!(parse_record("cycle=1 tx=- rx=- err=0 kind=- pr=0 ltssm=L9").is_err());
    }
}
