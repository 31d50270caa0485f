//! Frame-size traces for trace-driven traffic: header
//! `frame_index,kind,size_bytes`, one row per frame, kind `I` or `P`.

use std::io::Read;
use std::path::Path;

use fecsim_core::traffic::{FrameKind, TraceFrame};
use thiserror::Error;

pub const FRAME_HEADER: [&str; 3] = ["frame_index", "kind", "size_bytes"];

#[derive(Debug, Error)]
pub enum FrameTraceError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("missing or unexpected header {0:?}")]
    Header(Vec<String>),
    #[error("row {row}: {msg}")]
    Row { row: usize, msg: String },
}

pub fn read_frames<R: Read>(input: R) -> Result<Vec<TraceFrame>, FrameTraceError> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != FRAME_HEADER {
        return Err(FrameTraceError::Header(header));
    }
    let mut frames = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let row = row?;
        let err = |msg: &str| FrameTraceError::Row {
            row: i + 1,
            msg: msg.to_string(),
        };
        let frame_index: u64 = row[0].parse().map_err(|_| err("frame_index is not an integer"))?;
        if frame_index != i as u64 {
            return Err(err("frame_index out of sequence"));
        }
        let kind = match &row[1] {
            "I" => FrameKind::I,
            "P" => FrameKind::P,
            _ => return Err(err("kind must be I or P")),
        };
        let size = row[2].parse().map_err(|_| err("size_bytes is not an integer"))?;
        frames.push(TraceFrame { frame_index, kind, size });
    }
    Ok(frames)
}

pub fn read_trace_file(path: &Path) -> Result<Vec<TraceFrame>, FrameTraceError> {
    read_frames(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_frames() {
        let f = read_frames("frame_index,kind,size_bytes\n0,I,9000\n1, P ,800\n".as_bytes()).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!((f[1].kind, f[1].size), (FrameKind::P, 800));
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(matches!(read_frames("0,I,1\n".as_bytes()), Err(FrameTraceError::Header(_))));
        assert!(read_frames("frame_index,kind,size_bytes\n1,I,5\n".as_bytes()).is_err());
        assert!(read_frames("frame_index,kind,size_bytes\n0,B,5\n".as_bytes()).is_err());
        assert!(read_frames("frame_index,kind,size_bytes\n0,I,-5\n".as_bytes()).is_err());
    }
}
