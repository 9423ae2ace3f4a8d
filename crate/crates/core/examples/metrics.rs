//! Scores a small ranking with Top-n, mAP and AUC.
//!
//! cargo run --example metrics

use mmaudio::eval::{category_auc, mean_average_precision, per_class_ap, roc_auc, top_n};

fn main() -> mmaudio::Result<()> {
    let scores = vec![
        vec![0.9, 0.05, 0.05],
        vec![0.2, 0.7, 0.1],
        vec![0.6, 0.3, 0.1],
        vec![0.1, 0.3, 0.6],
        vec![0.3, 0.3, 0.4],
    ];
    let truths = vec![vec![0], vec![1], vec![1, 2], vec![2], vec![0]];
    for n in 1..=3 {
        println!("top-{n}: {:.3}", top_n(&scores, &truths, n)?);
    }
    for (c, ap) in per_class_ap(&scores, &truths)?.iter().enumerate() {
        println!("class {c}: AP {}", ap.map_or("undefined".into(), |v| format!("{v:.4}")));
    }
    println!("mAP: {:.4}", mean_average_precision(&scores, &truths)?);
    println!("macro AUC: {:.4}", roc_auc(&scores, &truths)?);

    let column = [(0.8, true), (0.6, false), (0.6, true), (0.1, false)];
    println!("AUC of a column with one tie: {:?}", category_auc(&column));
    Ok(())
}
