//! Per-epoch metric log: a tab-separated file with a fixed column order.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const LOG_HEADER: &str = "epoch\tlr\ttrain_loss\tval_top1\tval_map";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    /// Learning rate used throughout the epoch.
    pub lr: f64,
    pub train_loss: f64,
    pub val_top1: Option<f64>,
    pub val_map: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

/// Floats use the shortest representation that parses back exactly.
pub fn format_log_line(e: &EpochLog) -> String {
    format!(
        "{}\t{}\t{}\t{}\t{}",
        e.epoch,
        e.lr,
        e.train_loss,
        opt(e.val_top1),
        opt(e.val_map)
    )
}

pub fn parse_log(text: &str) -> Result<Vec<EpochLog>> {
    let mut lines = text.lines();
    if lines.next() != Some(LOG_HEADER) {
        return Err(Error::Format("metric log header missing".into()));
    }
    let num = |s: &str, line: usize| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::Format(format!("metric log line {line}: bad number {s:?}")))
    };
    let mut out = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 5 {
            return Err(Error::Format(format!("metric log line {}: {} columns", i + 2, f.len())));
        }
        let o = |s: &str| if s == "-" { Ok(None) } else { num(s, i + 2).map(Some) };
        out.push(EpochLog {
            epoch: f[0]
                .parse()
                .map_err(|_| Error::Format(format!("metric log line {}: bad epoch", i + 2)))?,
            lr: num(f[1], i + 2)?,
            train_loss: num(f[2], i + 2)?,
            val_top1: o(f[3])?,
            val_map: o(f[4])?,
        });
    }
    Ok(out)
}

pub(crate) struct MetricLog {
    file: File,
    path: PathBuf,
}

impl MetricLog {
    pub(crate) fn open(path: &Path, fresh: bool) -> Result<Self> {
        let io = |e| Error::io(path, e);
        let mut file = if fresh {
            File::create(path).map_err(io)?
        } else {
            OpenOptions::new().append(true).create(true).open(path).map_err(io)?
        };
        if fresh {
            writeln!(file, "{LOG_HEADER}").map_err(io)?;
        }
        Ok(MetricLog {
            file,
            path: path.to_path_buf(),
        })
    }

    pub(crate) fn append(&mut self, e: &EpochLog) -> Result<()> {
        writeln!(self.file, "{}", format_log_line(e)).map_err(|err| Error::io(&self.path, err))
    }
}
