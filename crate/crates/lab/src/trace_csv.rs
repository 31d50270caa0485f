//! Per-packet trace files.
//!
//! Columns: `event_time_s,direction,kind,seq,size_bytes,queue_delay_s,decoded_delay_s,mode`.
//! Times are written as exact decimal seconds with nanosecond resolution,
//! so a trace survives a write/read cycle unchanged. Absent values are
//! empty fields.

use std::io::{Read, Write};

use fecsim_core::netsim::{Direction, SimulationTrace, TraceKind, TraceRecord};
use fecsim_core::SimTime;
use thiserror::Error;

pub const TRACE_HEADER: [&str; 8] = [
    "event_time_s",
    "direction",
    "kind",
    "seq",
    "size_bytes",
    "queue_delay_s",
    "decoded_delay_s",
    "mode",
];

#[derive(Debug, Error)]
pub enum TraceFileError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unexpected header {0:?}")]
    Header(Vec<String>),
    #[error("row {row}, column {column}: {msg}")]
    Field {
        row: usize,
        column: &'static str,
        msg: &'static str,
    },
}

/// `12.000000345`
pub fn format_time(t: SimTime) -> String {
    let ns = t.as_nanos();
    format!("{}.{:09}", ns / 1_000_000_000, ns % 1_000_000_000)
}

/// Inverse of [`format_time`]; also accepts fewer fraction digits.
pub fn parse_time(s: &str) -> Option<SimTime> {
    let (whole, frac) = s.split_once('.').unwrap_or((s, ""));
    if whole.is_empty() || frac.len() > 9 || !whole.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let secs: u64 = whole.parse().ok()?;
    let frac_ns: u64 = if frac.is_empty() { 0 } else { format!("{frac:0<9}").parse().ok()? };
    secs.checked_mul(1_000_000_000)?.checked_add(frac_ns).map(SimTime::from_nanos)
}

pub fn write_trace<W: Write>(trace: &SimulationTrace, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    let opt_time = |t: Option<SimTime>| t.map(format_time).unwrap_or_default();
    for r in &trace.records {
        w.write_record([
            format_time(r.at),
            r.direction.as_str().to_string(),
            r.kind.name(),
            r.seq.map(|s| s.to_string()).unwrap_or_default(),
            r.size.to_string(),
            opt_time(r.queue_delay),
            opt_time(r.decoded_delay),
            trace.mode.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a trace file back into records. Returns the mode column of the
/// first row (empty for an empty trace).
pub fn read_trace<R: Read>(input: R) -> Result<(Vec<TraceRecord>, String), TraceFileError> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != TRACE_HEADER {
        return Err(TraceFileError::Header(header));
    }
    let mut records = Vec::new();
    let mut mode = None;
    for (i, row) in rd.records().enumerate() {
        let row = row?;
        let field = |column: &'static str, msg: &'static str| TraceFileError::Field { row: i + 1, column, msg };
        let time = |idx: usize, column: &'static str| -> Result<Option<SimTime>, TraceFileError> {
            match &row[idx] {
                "" => Ok(None),
                s => parse_time(s).map(Some).ok_or(field(column, "bad time")),
            }
        };
        records.push(TraceRecord {
            at: time(0, "event_time_s")?.ok_or(field("event_time_s", "missing"))?,
            direction: Direction::parse(&row[1]).ok_or(field("direction", "unknown direction"))?,
            kind: TraceKind::parse(&row[2]).ok_or(field("kind", "unknown kind"))?,
            seq: match &row[3] {
                "" => None,
                s => Some(s.parse().map_err(|_| field("seq", "not an integer"))?),
            },
            size: row[4].parse().map_err(|_| field("size_bytes", "not an integer"))?,
            queue_delay: time(5, "queue_delay_s")?,
            decoded_delay: time(6, "decoded_delay_s")?,
        });
        mode.get_or_insert_with(|| row[7].to_string());
    }
    Ok((records, mode.unwrap_or_default()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_format() {
        assert_eq!(format_time(SimTime::from_nanos(12_000_000_345)), "12.000000345");
        assert_eq!(format_time(SimTime::ZERO), "0.000000000");
        assert_eq!(parse_time("0.05"), Some(SimTime::from_millis(50)));
        assert_eq!(parse_time("3"), Some(SimTime::from_nanos(3_000_000_000)));
        for bad in ["", ".5", "1.0000000001", "-1", "1e3", "1.x"] {
            assert_eq!(parse_time(bad), None, "{bad}");
        }
    }
}
