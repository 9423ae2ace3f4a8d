//! Binary spectrogram record.
//!
//! Little-endian layout:
//!
//! | bytes | field                          |
//! |-------|--------------------------------|
//! | 4     | magic `LMEL`                   |
//! | 4     | format version (u32, = 1)      |
//! | 4     | rows (u32)                     |
//! | 4     | cols (u32)                     |
//! | 8     | source offset in seconds (f64) |
//! | 4·r·c | values, f32, row-major         |

use std::io::{Read, Write};

use super::LogMelFrame;
use crate::error::{Error, Result};

pub const RECORD_MAGIC: &[u8; 4] = b"LMEL";
pub const RECORD_VERSION: u32 = 1;

pub fn write_record<W: Write>(mut w: W, frame: &LogMelFrame) -> std::io::Result<()> {
    w.write_all(RECORD_MAGIC)?;
    w.write_all(&RECORD_VERSION.to_le_bytes())?;
    w.write_all(&(LogMelFrame::ROWS as u32).to_le_bytes())?;
    w.write_all(&(LogMelFrame::COLS as u32).to_le_bytes())?;
    w.write_all(&frame.source_offset.to_le_bytes())?;
    let mut buf = Vec::with_capacity(frame.values().len() * 4);
    for v in frame.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}

pub fn read_record<R: Read>(mut r: R) -> Result<LogMelFrame> {
    let mut head = [0u8; 24];
    r.read_exact(&mut head)
        .map_err(|e| Error::Format(format!("truncated record header: {e}")))?;
    if &head[..4] != RECORD_MAGIC {
        return Err(Error::Format("bad record magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(head[i..i + 4].try_into().unwrap());
    let version = word(4);
    if version != RECORD_VERSION {
        return Err(Error::Format(format!("unsupported record version {version}")));
    }
    let (rows, cols) = (word(8) as usize, word(12) as usize);
    if rows != LogMelFrame::ROWS || cols != LogMelFrame::COLS {
        return Err(Error::Format(format!("record dims {rows}x{cols}, expected 100x64")));
    }
    let offset = f64::from_le_bytes(head[16..24].try_into().unwrap());
    let mut payload = vec![0u8; rows * cols * 4];
    r.read_exact(&mut payload)
        .map_err(|e| Error::Format(format!("truncated record payload: {e}")))?;
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    LogMelFrame::from_values(values, offset)
}
