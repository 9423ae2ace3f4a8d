//! Acoustic representation learning from machine-generated multi-modal
//! labels: a log-Mel audio frontend, VGGish-family CNNs trained from
//! scratch, video-level label aggregation and transfer-learning evaluation.

pub mod annotate;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod eval;
pub mod jsonl;
pub mod frontend;
pub mod models;
pub mod seed;
pub mod train;

pub use error::{Error, Result};
