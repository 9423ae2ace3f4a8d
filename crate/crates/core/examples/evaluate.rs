//! Runs a benchmark protocol on synthetic separable embeddings. With a path
//! argument the embeddings are also written as an mm-embeddings file, the
//! input format of `mmaudio evaluate`.
//!
//! cargo run --release --example evaluate -- [benchmark] [embeddings.jsonl]

use std::io::Write;

use mmaudio::eval::{run_protocol, synthetic_benchmark, Benchmark, EMBEDDINGS_FORMAT};
use mmaudio::jsonl::write_jsonl;

fn main() -> mmaudio::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let benchmark: Benchmark = args.get(1).map_or(Ok(Benchmark::Esc50), |s| s.parse())?;
    let classes = 8;
    let clips = synthetic_benchmark(benchmark, classes, 10, 2, 42);
    if let Some(path) = args.get(2) {
        let mut f = std::fs::File::create(path).map_err(|e| mmaudio::Error::InvalidInput(format!("{path}: {e}")))?;
        write_jsonl(&mut f, EMBEDDINGS_FORMAT, &clips)?;
        f.flush().map_err(|e| mmaudio::Error::InvalidInput(format!("{path}: {e}")))?;
    }
    let head = benchmark.head_config();
    let report = run_protocol(benchmark, &clips, classes, &head)?;
    print!("{}", report.to_table());
    Ok(())
}
