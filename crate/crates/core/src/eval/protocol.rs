//! Benchmark fold protocols, the benchmark manifest and evaluation reports.

use std::fmt::{self, Write as _};
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mean_average_precision, per_class_ap, per_class_auc, roc_auc, top_n};
use super::{train_transfer_head, EmbeddingSequence, HeadConfig};
use crate::error::{Error, Result};
use crate::models::EMBEDDING_WIDTH;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    Esc50,
    Tut2018,
    AudiosetBalanced,
}

pub const ESC50_FOLDS: usize = 5;

impl Benchmark {
    pub const ALL: [Benchmark; 3] = [Benchmark::Esc50, Benchmark::Tut2018, Benchmark::AudiosetBalanced];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Esc50 => "esc50",
            Benchmark::Tut2018 => "tut2018",
            Benchmark::AudiosetBalanced => "audioset_balanced",
        }
    }

    pub fn multi_label(self) -> bool {
        self == Benchmark::AudiosetBalanced
    }

    /// Head dropout: 0.3 on ESC-50, 0.5 elsewhere.
    pub fn dropout(self) -> f64 {
        match self {
            Benchmark::Esc50 => 0.3,
            _ => 0.5,
        }
    }

    /// Default transfer head configuration for this benchmark.
    pub fn head_config(self) -> HeadConfig {
        HeadConfig {
            dropout: self.dropout(),
            multi_label: self.multi_label(),
            ..HeadConfig::default()
        }
    }

    /// Split tags accepted in the manifest.
    pub fn tags(self) -> &'static [&'static str] {
        match self {
            Benchmark::Esc50 => &["1", "2", "3", "4", "5"],
            Benchmark::Tut2018 => &["train", "eval"],
            Benchmark::AudiosetBalanced => &["balanced", "unbalanced", "eval"],
        }
    }

    /// Named (train tags, eval tags) cycles.
    fn cycles(self) -> Vec<(String, Vec<&'static str>, Vec<&'static str>)> {
        match self {
            Benchmark::Esc50 => {
                let tags = self.tags();
                (0..ESC50_FOLDS)
                    .map(|k| {
                        let train = tags.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, t)| *t).collect();
                        (format!("fold {}", k + 1), train, vec![tags[k]])
                    })
                    .collect()
            }
            Benchmark::Tut2018 => vec![("train/eval".into(), vec!["train"], vec!["eval"])],
            Benchmark::AudiosetBalanced => vec![("balanced/eval".into(), vec!["balanced"], vec!["eval"])],
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Benchmark {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Benchmark::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown benchmark {s:?} (esc50, tut2018, audioset_balanced)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub ap: Option<f64>,
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub top1: f64,
    pub top5: f64,
    pub map: Option<f64>,
    pub auc: Option<f64>,
    pub per_class: Vec<ClassMetrics>,
}

fn defined<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedMetric(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Top-1, Top-5, mAP and macro AUC of a score matrix.
pub fn score(scores: &[Vec<f64>], truths: &[Vec<usize>]) -> Result<Metrics> {
    let aps = per_class_ap(scores, truths)?;
    let aucs = per_class_auc(scores, truths)?;
    Ok(Metrics {
        top1: top_n(scores, truths, 1)?,
        top5: top_n(scores, truths, 5)?,
        map: defined(mean_average_precision(scores, truths))?,
        auc: defined(roc_auc(scores, truths))?,
        per_class: aps
            .into_iter()
            .zip(aucs)
            .enumerate()
            .map(|(class, (ap, auc))| ClassMetrics { class, ap, auc })
            .collect(),
    })
}

fn mean_opt(vals: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = vals.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

impl Metrics {
    /// Element-wise mean; optional entries average over the runs defining them.
    pub fn mean(runs: &[&Metrics]) -> Metrics {
        let n = runs.len() as f64;
        let classes = runs.first().map_or(0, |r| r.per_class.len());
        Metrics {
            top1: runs.iter().map(|r| r.top1).sum::<f64>() / n,
            top5: runs.iter().map(|r| r.top5).sum::<f64>() / n,
            map: mean_opt(runs.iter().map(|r| r.map)),
            auc: mean_opt(runs.iter().map(|r| r.auc)),
            per_class: (0..classes)
                .map(|c| ClassMetrics {
                    class: c,
                    ap: mean_opt(runs.iter().map(|r| r.per_class[c].ap)),
                    auc: mean_opt(runs.iter().map(|r| r.per_class[c].auc)),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub train_clips: usize,
    pub eval_clips: usize,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub benchmark: Benchmark,
    pub classes: usize,
    /// Mean over `runs`.
    pub mean: Metrics,
    pub runs: Vec<RunReport>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}

impl EvalReport {
    pub fn top1(&self) -> f64 {
        self.mean.top1
    }

    /// Fixed-order text table: one row per run, then the mean.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "benchmark {} ({} classes)", self.benchmark, self.classes);
        let _ = writeln!(s, "{:<14} {:>6} {:>6} {:>7} {:>7} {:>7} {:>7}", "run", "train", "eval", "top1", "top5", "mAP", "AUC");
        let row = |s: &mut String, name: &str, tr: String, ev: String, m: &Metrics| {
            let _ = writeln!(
                s,
                "{:<14} {:>6} {:>6} {:>7.4} {:>7.4} {:>7} {:>7}",
                name,
                tr,
                ev,
                m.top1,
                m.top5,
                fmt_opt(m.map),
                fmt_opt(m.auc)
            );
        };
        for r in &self.runs {
            row(&mut s, &r.name, r.train_clips.to_string(), r.eval_clips.to_string(), &r.metrics);
        }
        row(&mut s, "mean", String::new(), String::new(), &self.mean);
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Trains and scores one head per protocol cycle, in parallel, merging
/// results in cycle order.
pub fn run_protocol(
    benchmark: Benchmark,
    clips: &[EmbeddingSequence],
    classes: usize,
    head: &HeadConfig,
) -> Result<EvalReport> {
    let tags = benchmark.tags();
    for c in clips {
        if !tags.contains(&c.split.as_str()) {
            return Err(Error::InvalidDataset(format!(
                "{}: missing or unknown {benchmark} split tag {:?} (expected one of {tags:?})",
                c.clip_id, c.split
            )));
        }
    }
    let head = HeadConfig {
        multi_label: benchmark.multi_label(),
        ..head.clone()
    };
    let runs: Vec<RunReport> = benchmark
        .cycles()
        .into_par_iter()
        .map(|(name, train_tags, eval_tags)| {
            let pick = |t: &[&str]| -> Vec<EmbeddingSequence> {
                clips.iter().filter(|c| t.contains(&c.split.as_str())).cloned().collect()
            };
            let (train, eval) = (pick(&train_tags), pick(&eval_tags));
            if train.is_empty() || eval.is_empty() {
                return Err(Error::InvalidDataset(format!(
                    "{benchmark} {name}: {} train / {} eval clips",
                    train.len(),
                    eval.len()
                )));
            }
            let cfg = HeadConfig {
                seed: seed::derive(head.seed, &format!("protocol/{benchmark}/{name}")),
                ..head.clone()
            };
            let model = train_transfer_head(&train, classes, &cfg)?;
            let scores = model.predict(&eval)?;
            let truths: Vec<Vec<usize>> = eval.iter().map(|c| c.labels.clone()).collect();
            Ok(RunReport {
                name,
                train_clips: train.len(),
                eval_clips: eval.len(),
                metrics: score(&scores, &truths)?,
            })
        })
        .collect::<Result<_>>()?;
    let refs: Vec<&Metrics> = runs.iter().map(|r| &r.metrics).collect();
    Ok(EvalReport {
        benchmark,
        classes,
        mean: Metrics::mean(&refs),
        runs,
    })
}

/// One benchmark manifest line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchmarkEntry {
    pub path: String,
    pub labels: Vec<usize>,
    pub split: String,
}

pub const BENCHMARK_HEADER: &str = "#mm-benchmark\t1";

/// Tab-separated `path  labels(comma-separated ids)  split`, after a
/// format-version header.
pub fn read_benchmark_manifest<R: BufRead>(r: R) -> Result<Vec<BenchmarkEntry>> {
    let mut lines = r.lines();
    let head = lines.next().transpose().map_err(|e| Error::Format(e.to_string()))?;
    if head.as_deref() != Some(BENCHMARK_HEADER) {
        return Err(Error::Format(format!("benchmark manifest must start with {BENCHMARK_HEADER:?}")));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::Format(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let bad = |m: &str| Error::Format(format!("benchmark manifest line {}: {m}", i + 2));
        if f.len() != 3 {
            return Err(bad("expected path, labels and split"));
        }
        let labels = f[1]
            .split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| bad("bad label id")))
            .collect::<Result<Vec<_>>>()?;
        if f[2].is_empty() {
            return Err(bad("missing split tag"));
        }
        out.push(BenchmarkEntry {
            path: f[0].to_string(),
            labels,
            split: f[2].to_string(),
        });
    }
    Ok(out)
}

pub fn write_benchmark_manifest<W: Write>(mut w: W, entries: &[BenchmarkEntry]) -> std::io::Result<()> {
    writeln!(w, "{BENCHMARK_HEADER}")?;
    for e in entries {
        let labels: Vec<String> = e.labels.iter().map(usize::to_string).collect();
        writeln!(w, "{}\t{}\t{}", e.path, labels.join(","), e.split)?;
    }
    Ok(())
}

/// Linearly separable embedding clips: each class owns a random prototype
/// direction; clips add small noise per second. Splits follow the
/// benchmark's tags round-robin within each class.
pub fn synthetic_benchmark(
    benchmark: Benchmark,
    classes: usize,
    per_class: usize,
    seconds: usize,
    seed_root: u64,
) -> Vec<EmbeddingSequence> {
    let mut rng = seed::rng(seed_root, &format!("synthetic/{benchmark}"));
    let protos: Vec<Vec<f32>> = (0..classes)
        .map(|_| (0..EMBEDDING_WIDTH).map(|_| rng.gen_range(-1.0f32..1.0)).collect())
        .collect();
    let tags: Vec<&str> = match benchmark {
        Benchmark::AudiosetBalanced => vec!["balanced", "eval"],
        _ => benchmark.tags().to_vec(),
    };
    let mut out = Vec::new();
    for c in 0..classes {
        for i in 0..per_class {
            let mut labels = vec![c];
            if benchmark.multi_label() && i % 2 == 1 {
                labels.push((c + 1) % classes);
            }
            let vectors = (0..seconds)
                .map(|_| {
                    (0..EMBEDDING_WIDTH)
                        .map(|d| {
                            let base: f32 = labels.iter().map(|&l| protos[l][d]).sum();
                            base + rng.gen_range(-0.05f32..0.05)
                        })
                        .collect()
                })
                .collect();
            out.push(EmbeddingSequence {
                clip_id: format!("{benchmark}-c{c:03}-{i:03}"),
                labels,
                split: tags[i % tags.len()].to_string(),
                vectors,
            });
        }
    }
    out
}
