//! Command-line front end. `main` only forwards to [`run`].
//!
//! Every subcommand resolves a [`RunConfig`] (defaults, then `--config`,
//! then flags), prints its digest to stderr and returns an exit code: 0 on
//! success, 1 on runtime failure, 2 on usage errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::annotate::{
    annotate_corpus, read_annotations, read_entries, shard, synthetic_entries, vocab_stats, write_annotations,
    LabelVocabulary, SyntheticPredictor, VideoAnnotation,
};
use crate::config::RunConfig;
use crate::engine::Checkpoint;
use crate::error::{Error, Result};
use crate::eval::{
    extract_all, read_benchmark_manifest, run_protocol, train_transfer_head, EmbeddingModel, EmbeddingSequence,
    EMBEDDINGS_FORMAT,
};
use crate::frontend::{read_wav, write_record, LogMelExtractor, LogMelFrame};
use crate::jsonl::{read_jsonl, write_jsonl};
use crate::models::describe;
use crate::seed;
use crate::train::{augment, run_training, LabelIndex, Trainer, TrainingExample, VideoSet, LOG_HEADER};

#[derive(Debug, Parser)]
#[command(name = "mmaudio", version, about = "Log-Mel frontend, VGGish-family training, label aggregation and transfer evaluation")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed (overrides the config file).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 0 = available parallelism.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the 100x64 log-Mel frames of a WAV file.
    Featurize {
        #[arg(long)]
        audio: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregate predictor outputs into per-video labels.
    Annotate {
        /// Video manifest (mm-videos JSONL).
        #[arg(long, conflicts_with = "synthetic")]
        manifest: Option<PathBuf>,
        /// Generate this many synthetic videos instead of reading a manifest.
        #[arg(long)]
        synthetic: Option<usize>,
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-label counts and vocabulary utilization.
    Stats {
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        vocab: Option<PathBuf>,
    },
    /// Layer table, shapes, parameter and FLOP counts of a variant.
    Describe {
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        width_divisor: Option<usize>,
    },
    /// Train a network on annotated videos.
    Train {
        /// Annotation file (mm-annotations JSONL).
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Directory holding `<uuid>.wav` per video.
        #[arg(long)]
        audio_root: Option<PathBuf>,
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Continue from an epoch checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Extract per-second embeddings for a benchmark manifest.
    Embed {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        audio_root: Option<PathBuf>,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a transfer head on all training-split embeddings.
    Transfer {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        benchmark: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a benchmark protocol and report Top-1, Top-5, mAP and AUC.
    Evaluate {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        benchmark: Option<String>,
        /// Output prefix; writes `<prefix>.txt` and `<prefix>.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `argv` and runs the subcommand, returning the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.global.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.global.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.global.workers {
        cfg.workers = w;
    }
    let set = |slot: &mut Option<PathBuf>, v: &Option<PathBuf>| {
        if v.is_some() {
            slot.clone_from(v);
        }
    };
    match &cli.command {
        Command::Featurize { out, .. } => set(&mut cfg.paths.out, out),
        Command::Annotate {
            manifest,
            vocab,
            threshold,
            out,
            ..
        } => {
            set(&mut cfg.paths.manifest, manifest);
            set(&mut cfg.paths.vocab, vocab);
            set(&mut cfg.paths.out, out);
            if let Some(t) = threshold {
                cfg.annotate.threshold = *t;
            }
        }
        Command::Stats { vocab, .. } => set(&mut cfg.paths.vocab, vocab),
        Command::Describe { variant, width_divisor } => {
            if let Some(v) = variant {
                cfg.model.variant.clone_from(v);
            }
            if let Some(d) = width_divisor {
                cfg.model.width_divisor = *d;
            }
        }
        Command::Train {
            manifest,
            audio_root,
            variant,
            out,
            epochs,
            ..
        } => {
            set(&mut cfg.paths.manifest, manifest);
            set(&mut cfg.paths.audio_root, audio_root);
            set(&mut cfg.paths.out, out);
            if let Some(v) = variant {
                cfg.model.variant.clone_from(v);
            }
            if let Some(e) = epochs {
                cfg.train.epochs = *e;
            }
        }
        Command::Embed {
            manifest,
            audio_root,
            variant,
            out,
            ..
        } => {
            set(&mut cfg.paths.manifest, manifest);
            set(&mut cfg.paths.audio_root, audio_root);
            set(&mut cfg.paths.out, out);
            if let Some(v) = variant {
                cfg.model.variant.clone_from(v);
            }
        }
        Command::Transfer { benchmark, out, .. } | Command::Evaluate { benchmark, out, .. } => {
            set(&mut cfg.paths.out, out);
            if let Some(b) = benchmark {
                cfg.eval.benchmark = b.parse()?;
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn require<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::InvalidConfig(format!("paths.{what} is required (flag or config file)")))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?))
}

fn load_vocab(cfg: &RunConfig) -> Result<LabelVocabulary> {
    match &cfg.paths.vocab {
        Some(p) => LabelVocabulary::read(open(p)?),
        None => Ok(LabelVocabulary::standard()),
    }
}

/// Annotation seed and training seed, derived from the root seed.
fn component_seed(cfg: &RunConfig, component: &str, local: u64) -> u64 {
    seed::derive(cfg.seed, &format!("{component}/{local}"))
}

fn execute(cli: Cli) -> Result<()> {
    let cfg = resolve(&cli)?;
    eprintln!("config digest: sha256:{}", cfg.digest());
    if cfg.workers > 0 {
        // a pool may already exist when run in-process more than once
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build_global();
    }
    let mut stdout = std::io::stdout().lock();
    let io = |e| Error::io("<stdout>", e);
    match &cli.command {
        Command::Featurize { audio, .. } => {
            let out = require(&cfg.paths.out, "out")?;
            let frames = LogMelExtractor::new(cfg.frontend.clone())?.clip_frames(&read_wav(audio)?)?;
            std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
            let stem = audio.file_stem().map_or("clip".into(), |s| s.to_string_lossy().into_owned());
            for (i, f) in frames.iter().enumerate() {
                let path = out.join(format!("{stem}_{i:03}.lmel"));
                let mut w = create(&path)?;
                write_record(&mut w, f).and_then(|_| w.flush()).map_err(|e| Error::io(&path, e))?;
            }
            writeln!(stdout, "{} frames of 100x64 written to {}", frames.len(), out.display()).map_err(io)?;
        }
        Command::Annotate { synthetic, .. } => {
            let out = require(&cfg.paths.out, "out")?;
            let vocab = load_vocab(&cfg)?;
            let entries = match (synthetic, &cfg.paths.manifest) {
                (Some(n), _) => synthetic_entries(*n, component_seed(&cfg, "videos", cfg.annotate.seed)),
                (None, Some(m)) => read_entries(open(m)?)?,
                (None, None) => {
                    return Err(Error::InvalidConfig("annotate needs --manifest or --synthetic".into()))
                }
            };
            let predictor = SyntheticPredictor::new(&vocab, component_seed(&cfg, "annotate", cfg.annotate.seed));
            let run = annotate_corpus(&entries, &predictor, &vocab, cfg.annotate.threshold);
            let mut w = create(out)?;
            write_annotations(&mut w, &run.annotations)?;
            w.flush().map_err(|e| Error::io(out, e))?;
            for (uuid, why) in &run.failures {
                eprintln!("skipped {uuid}: {why}");
            }
            writeln!(stdout, "{}", run.summary()).map_err(io)?;
        }
        Command::Stats { annotations, .. } => {
            let vocab = load_vocab(&cfg)?;
            let anns = read_annotations(open(annotations)?)?;
            let stats = vocab_stats(&anns, &vocab)?;
            write!(stdout, "{}", stats.report(&vocab)).map_err(io)?;
        }
        Command::Describe { .. } => {
            write!(stdout, "{}", describe(&cfg.model.spec()?)?).map_err(io)?;
        }
        Command::Train { resume, .. } => train(&cfg, resume.as_deref(), &mut stdout)?,
        Command::Embed { checkpoint, .. } => {
            let manifest = require(&cfg.paths.manifest, "manifest")?;
            let root = require(&cfg.paths.audio_root, "audio_root")?;
            let out = require(&cfg.paths.out, "out")?;
            let model = EmbeddingModel::from_checkpoint(cfg.model.spec()?, &Checkpoint::load(checkpoint)?, cfg.frontend.clone())?;
            let entries = read_benchmark_manifest(open(manifest)?)?;
            let clips = entries
                .par_iter()
                .map(|e| Ok((e.path.clone(), e.labels.clone(), e.split.clone(), read_wav(root.join(&e.path))?)))
                .collect::<Result<Vec<_>>>()?;
            let seqs = extract_all(&model, &clips)?;
            let mut w = create(out)?;
            write_jsonl(&mut w, EMBEDDINGS_FORMAT, &seqs)?;
            w.flush().map_err(|e| Error::io(out, e))?;
            writeln!(stdout, "{} clips embedded to {}", seqs.len(), out.display()).map_err(io)?;
        }
        Command::Transfer { embeddings, .. } => {
            let out = require(&cfg.paths.out, "out")?;
            let seqs: Vec<EmbeddingSequence> = read_jsonl(open(embeddings)?, EMBEDDINGS_FORMAT)?;
            let bench = cfg.eval.benchmark;
            let eval_tags = ["eval"];
            let train_set: Vec<EmbeddingSequence> =
                seqs.into_iter().filter(|s| !eval_tags.contains(&s.split.as_str())).collect();
            let classes = class_count(&cfg, &train_set)?;
            let mut head = cfg.eval.head_config();
            head.multi_label = bench.multi_label();
            head.seed = component_seed(&cfg, "transfer", head.seed);
            let model = train_transfer_head(&train_set, classes, &head)?;
            model.to_checkpoint()?.save(out)?;
            let scores = model.predict(&train_set)?;
            let truths: Vec<Vec<usize>> = train_set.iter().map(|s| s.labels.clone()).collect();
            writeln!(
                stdout,
                "transfer head {}x{} ({} parameters), train top-1 {:.4}, saved to {}",
                model.input_width,
                classes,
                model.parameter_count(),
                crate::eval::top_n(&scores, &truths, 1)?,
                out.display()
            )
            .map_err(io)?;
        }
        Command::Evaluate { embeddings, .. } => {
            let seqs: Vec<EmbeddingSequence> = read_jsonl(open(embeddings)?, EMBEDDINGS_FORMAT)?;
            let classes = class_count(&cfg, &seqs)?;
            let mut head = cfg.eval.head_config();
            head.seed = component_seed(&cfg, "transfer", head.seed);
            let report = run_protocol(cfg.eval.benchmark, &seqs, classes, &head)?;
            let table = report.to_table();
            write!(stdout, "{table}").map_err(io)?;
            if let Some(prefix) = &cfg.paths.out {
                for (ext, body) in [("txt", table.clone()), ("json", report.to_json()? + "\n")] {
                    let path = prefix.with_extension(ext);
                    let mut w = create(&path)?;
                    w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(|e| Error::io(&path, e))?;
                }
            }
        }
    }
    Ok(())
}

fn class_count(cfg: &RunConfig, seqs: &[EmbeddingSequence]) -> Result<usize> {
    if let Some(c) = cfg.eval.classes {
        return Ok(c);
    }
    seqs.iter()
        .flat_map(|s| s.labels.iter())
        .max()
        .map(|m| m + 1)
        .ok_or_else(|| Error::InvalidDataset("no labelled clips".into()))
}

fn train(cfg: &RunConfig, resume: Option<&Path>, stdout: &mut impl Write) -> Result<()> {
    let manifest = require(&cfg.paths.manifest, "manifest")?;
    let root = require(&cfg.paths.audio_root, "audio_root")?;
    let out = require(&cfg.paths.out, "out")?;
    let spec = cfg.model.spec()?;
    let anns: Vec<VideoAnnotation> = read_annotations(open(manifest)?)?;
    let index = LabelIndex::from_annotations(&anns, spec.head_width())?;
    let extractor = LogMelExtractor::new(cfg.frontend.clone())?;
    let videos: Vec<(VideoAnnotation, Vec<LogMelFrame>)> = anns
        .par_iter()
        .map(|a| {
            let wave = read_wav(root.join(format!("{}.wav", a.uuid)))?;
            Ok((a.clone(), extractor.clip_frames(&wave)?))
        })
        .collect::<Result<_>>()?;
    let mut tcfg = cfg.train.clone();
    tcfg.seed = component_seed(cfg, "train", cfg.train.seed);
    let (mut val_videos, mut train_videos) = (Vec::new(), Vec::new());
    for v in videos {
        if shard(&v.0.uuid)? < tcfg.validation_folds {
            val_videos.push(v);
        } else {
            train_videos.push(v);
        }
    }
    let validation: Vec<TrainingExample> = val_videos
        .iter()
        .filter_map(|(a, f)| {
            augment(a, f, &index, &mut seed::rng(tcfg.seed, &format!("train/validation/{}", a.uuid))).transpose()
        })
        .collect::<Result<_>>()?;
    let data = VideoSet {
        videos: train_videos,
        index: index.clone(),
    };
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut w = create(&out.join("labels.tsv"))?;
    for c in 0..index.used() {
        writeln!(w, "{c}\t{}", index.label(c).expect("column in range")).map_err(|e| Error::io(out, e))?;
    }
    w.flush().map_err(|e| Error::io(out, e))?;
    let net = spec.realize::<f32, _>(&mut seed::rng(tcfg.seed, "train/init"))?;
    let mut trainer = match resume {
        Some(p) => Trainer::resume(net, &Checkpoint::load(p)?, tcfg, spec.name.clone())?,
        None => Trainer::new(net, tcfg, spec.name.clone())?,
    };
    writeln!(
        stdout,
        "{} training videos, {} validation examples, {} labels in use",
        data.videos.len(),
        validation.len(),
        index.used()
    )
    .map_err(|e| Error::io("<stdout>", e))?;
    let report = run_training(&mut trainer, &data, &validation, Some(out))?;
    writeln!(stdout, "{LOG_HEADER}").map_err(|e| Error::io("<stdout>", e))?;
    for e in &report.epochs {
        writeln!(stdout, "{}", crate::train::format_log_line(e)).map_err(|e| Error::io("<stdout>", e))?;
    }
    if report.skipped > 0 {
        eprintln!("{} draws skipped (clips shorter than one second)", report.skipped);
    }
    Ok(())
}
