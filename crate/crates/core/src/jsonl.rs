//! Versioned JSON-lines files: a header line `{"format":…,"version":1}`
//! followed by one record per line.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
}

pub fn write_jsonl<W: Write, T: Serialize>(mut w: W, format: &str, records: &[T]) -> Result<()> {
    let io = |e| Error::Format(format!("writing {format}: {e}"));
    let header = Header {
        format: format.to_string(),
        version: FORMAT_VERSION,
    };
    writeln!(w, "{}", serde_json::to_string(&header)?).map_err(io)?;
    for r in records {
        writeln!(w, "{}", serde_json::to_string(r)?).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_jsonl<R: BufRead, T: DeserializeOwned>(r: R, format: &str) -> Result<Vec<T>> {
    let mut lines = r.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::Format(format!("empty {format} file")))?;
    let first = first.map_err(|e| Error::Format(e.to_string()))?;
    let header: Header = serde_json::from_str(&first)
        .map_err(|e| Error::Format(format!("{format} header: {e}")))?;
    if header.format != format {
        return Err(Error::Format(format!("expected a {format} file, found {}", header.format)));
    }
    if header.version != FORMAT_VERSION {
        return Err(Error::Format(format!("{format} version {} unsupported", header.version)));
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| Error::Format(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::Format(format!("{format} line {}: {e}", i + 1)))?,
        );
    }
    Ok(out)
}
