//! Transfer-learning evaluation: embedding extraction, classifier heads,
//! ranking metrics and benchmark fold protocols.

mod embedding;
mod metrics;
mod protocol;
mod transfer;

pub use embedding::{extract_all, extract_embeddings, EmbeddingModel, EmbeddingSequence};
pub use metrics::{
    average_precision, category_auc, mean_average_precision, per_class_ap, per_class_auc, roc_auc, top_n,
};
pub use protocol::{
    read_benchmark_manifest, run_protocol, score, synthetic_benchmark, write_benchmark_manifest, Benchmark,
    BenchmarkEntry, ClassMetrics, EvalReport, Metrics, RunReport, BENCHMARK_HEADER, ESC50_FOLDS,
};
pub use transfer::{
    input_width, train_transfer_head, HeadConfig, TransferHead, TRANSFER_BATCH, TRANSFER_L2, TRANSFER_LR,
};

pub(crate) use crate::annotate::top_k;

/// JSONL format tag for embedding files.
pub const EMBEDDINGS_FORMAT: &str = "mm-embeddings";
