//! Ranking metrics over a `samples × categories` score matrix.
//!
//! Conventions: top-n ties break toward the lower category id; AP is
//! non-interpolated (mean over positives of the precision among samples
//! scoring at least as high, so a tied block counts as one threshold); AUC
//! is the Mann-Whitney statistic with ties counted as one half,
//! macro-averaged over categories that have both positives and negatives.

use super::top_k;
use crate::error::{Error, Result};

fn check(scores: &[Vec<f64>], truths: &[Vec<usize>]) -> Result<usize> {
    if scores.len() != truths.len() {
        return Err(Error::InvalidInput(format!(
            "{} score rows for {} truth rows",
            scores.len(),
            truths.len()
        )));
    }
    let k = scores.first().map_or(0, |r| r.len());
    for (i, (s, t)) in scores.iter().zip(truths).enumerate() {
        if s.len() != k {
            return Err(Error::InvalidInput(format!("score row {i} has {} entries, expected {k}", s.len())));
        }
        if let Some(&bad) = t.iter().find(|&&c| c >= k) {
            return Err(Error::InvalidInput(format!("sample {i}: label {bad} out of range {k}")));
        }
    }
    Ok(k)
}

/// Fraction of samples with at least one true label among the `n`
/// highest-scoring categories.
pub fn top_n(scores: &[Vec<f64>], truths: &[Vec<usize>], n: usize) -> Result<f64> {
    check(scores, truths)?;
    if n == 0 {
        return Err(Error::InvalidInput("top-n needs n >= 1".into()));
    }
    if scores.is_empty() {
        return Err(Error::UndefinedMetric("top-n over zero samples".into()));
    }
    let hits = scores
        .iter()
        .zip(truths)
        .filter(|(s, t)| top_k(s, n).iter().any(|c| t.contains(c)))
        .count();
    Ok(hits as f64 / scores.len() as f64)
}

/// Per-category column of (score, is_positive).
fn column(scores: &[Vec<f64>], truths: &[Vec<usize>], c: usize) -> Vec<(f64, bool)> {
    scores
        .iter()
        .zip(truths)
        .map(|(s, t)| (s[c], t.contains(&c)))
        .collect()
}

/// Non-interpolated average precision of one category, `None` without positives.
pub fn average_precision(col: &[(f64, bool)]) -> Option<f64> {
    let positives = col.iter().filter(|(_, p)| *p).count();
    if positives == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..col.len()).collect();
    order.sort_by(|&a, &b| col[b].0.total_cmp(&col[a].0));
    let (mut seen, mut hits, mut sum) = (0usize, 0usize, 0.0);
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && col[order[j + 1]].0 == col[order[i]].0 {
            j += 1;
        }
        let group_pos = order[i..=j].iter().filter(|&&o| col[o].1).count();
        seen += j - i + 1;
        hits += group_pos;
        sum += group_pos as f64 * hits as f64 / seen as f64;
        i = j + 1;
    }
    Some(sum / positives as f64)
}

/// Per-category AP (`None` for categories without positives).
pub fn per_class_ap(scores: &[Vec<f64>], truths: &[Vec<usize>]) -> Result<Vec<Option<f64>>> {
    let k = check(scores, truths)?;
    Ok((0..k).map(|c| average_precision(&column(scores, truths, c))).collect())
}

pub fn mean_average_precision(scores: &[Vec<f64>], truths: &[Vec<usize>]) -> Result<f64> {
    let aps: Vec<f64> = per_class_ap(scores, truths)?.into_iter().flatten().collect();
    if aps.is_empty() {
        return Err(Error::UndefinedMetric("mAP: no category has a positive sample".into()));
    }
    Ok(aps.iter().sum::<f64>() / aps.len() as f64)
}

/// ROC area of one category via average ranks, `None` unless it has both
/// positives and negatives.
pub fn category_auc(col: &[(f64, bool)]) -> Option<f64> {
    let pos = col.iter().filter(|(_, p)| *p).count();
    let neg = col.len() - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..col.len()).collect();
    order.sort_by(|&a, &b| col[a].0.total_cmp(&col[b].0));
    // midranks over tie groups, 1-based
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && col[order[j + 1]].0 == col[order[i]].0 {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_pos += mid * order[i..=j].iter().filter(|&&o| col[o].1).count() as f64;
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Some((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

pub fn per_class_auc(scores: &[Vec<f64>], truths: &[Vec<usize>]) -> Result<Vec<Option<f64>>> {
    let k = check(scores, truths)?;
    Ok((0..k).map(|c| category_auc(&column(scores, truths, c))).collect())
}

pub fn roc_auc(scores: &[Vec<f64>], truths: &[Vec<usize>]) -> Result<f64> {
    let aucs: Vec<f64> = per_class_auc(scores, truths)?.into_iter().flatten().collect();
    if aucs.is_empty() {
        return Err(Error::UndefinedMetric(
            "AUC: no category has both positive and negative samples".into(),
        ));
    }
    Ok(aucs.iter().sum::<f64>() / aucs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top1_hand_enumerated() {
        let scores = vec![vec![0.9, 0.1, 0.0], vec![0.2, 0.7, 0.1], vec![0.3, 0.3, 0.4]];
        let truths = vec![vec![0], vec![1], vec![0]];
        assert!((top_n(&scores, &truths, 1).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(top_n(&scores, &truths, 3).unwrap(), 1.0);
    }

    #[test]
    fn multilabel_hit_on_any_label() {
        let scores = vec![vec![0.1, 0.9, 0.5]];
        assert_eq!(top_n(&scores, &[vec![0, 1]], 1).unwrap(), 1.0);
        assert_eq!(top_n(&scores, &[vec![0, 2]], 1).unwrap(), 0.0);
    }

    #[test]
    fn ap_positives_at_rank_1_and_3() {
        let col = [(0.9, true), (0.8, false), (0.7, true), (0.1, false)];
        assert!((average_precision(&col).unwrap() - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_ranking() {
        let scores = vec![vec![0.9, 0.1], vec![0.2, 0.8], vec![0.7, 0.3]];
        let truths = vec![vec![0], vec![1], vec![0]];
        assert_eq!(mean_average_precision(&scores, &truths).unwrap(), 1.0);
        assert_eq!(roc_auc(&scores, &truths).unwrap(), 1.0);
    }

    #[test]
    fn tied_block_is_one_threshold() {
        let a = [(0.5, true), (0.5, false), (0.1, true)];
        let b = [(0.5, false), (0.5, true), (0.1, true)];
        assert_eq!(average_precision(&a), average_precision(&b));
        assert!((average_precision(&a).unwrap() - (0.5 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn all_ties_give_half() {
        let scores = vec![vec![0.3]; 6];
        let truths = vec![vec![0], vec![], vec![0], vec![], vec![], vec![0]];
        assert_eq!(roc_auc(&scores, &truths).unwrap(), 0.5);
    }

    #[test]
    fn undefined_metrics() {
        let scores = vec![vec![0.1, 0.2]];
        assert!(matches!(mean_average_precision(&scores, &[vec![]]), Err(Error::UndefinedMetric(_))));
        assert!(matches!(roc_auc(&scores, &[vec![0]]), Err(Error::UndefinedMetric(_))));
    }
}
