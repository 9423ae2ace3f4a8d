//! Annotates a synthetic corpus and prints label statistics.
//!
//! cargo run --release --example annotate -- [videos] [seed]

use mmaudio::annotate::{
    annotate_corpus, synthetic_entries, vocab_stats, LabelVocabulary, SyntheticPredictor, DEFAULT_AUDIO_THRESHOLD,
};

fn main() -> mmaudio::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(500);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);

    let vocab = LabelVocabulary::standard();
    let entries = synthetic_entries(n, seed);
    let predictor = SyntheticPredictor::new(&vocab, seed);
    let run = annotate_corpus(&entries, &predictor, &vocab, DEFAULT_AUDIO_THRESHOLD);
    println!("{}", run.summary());
    for a in run.annotations.iter().take(3) {
        let names: Vec<&str> = a.labels().map(|id| vocab.get(id).unwrap().name.as_str()).collect();
        println!("{} fold {:4}: {}", a.uuid, a.fold, names.join(", "));
    }
    let audio: usize = run.annotations.iter().map(|a| a.audio_labels.len()).sum();
    println!("mean audio labels per video: {:.2}", audio as f64 / run.annotations.len() as f64);
    let report = vocab_stats(&run.annotations, &vocab)?.report(&vocab);
    for line in report.lines().take(16) {
        println!("{line}");
    }
    Ok(())
}
