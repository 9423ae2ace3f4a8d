//! Brute-force metric oracles over random toy instances.

use mmaudio::seed;
use rand::Rng;

pub const SEEDS: u64 = 150;
pub const TOL: f64 = 1e-12;

pub struct Toy {
    pub scores: Vec<Vec<f64>>,
    pub truths: Vec<Vec<usize>>,
}

/// Random instance; every third seed quantizes scores to force ties.
pub fn toy(s: u64) -> Toy {
    let mut rng = seed::rng(s, "metric-oracle");
    let (n, k) = (rng.gen_range(2..9), rng.gen_range(1..7));
    let levels = if s % 3 == 0 { Some(rng.gen_range(2..4)) } else { None };
    let scores = (0..n)
        .map(|_| {
            (0..k)
                .map(|_| {
                    let v: f64 = rng.gen();
                    levels.map_or(v, |l| (v * l as f64).floor() / l as f64)
                })
                .collect()
        })
        .collect();
    let truths = (0..n)
        .map(|_| (0..k).filter(|_| rng.gen_bool(0.35)).collect())
        .collect();
    Toy { scores, truths }
}

fn is_pos(t: &Toy, i: usize, c: usize) -> bool {
    t.truths[i].contains(&c)
}

pub fn oracle_top_n(t: &Toy, n: usize) -> f64 {
    let hits = t
        .scores
        .iter()
        .zip(&t.truths)
        .filter(|(s, truth)| {
            truth.iter().any(|&c| {
                // rank of c: categories scoring higher, or tied with a lower id
                let rank = (0..s.len()).filter(|&j| s[j] > s[c] || (s[j] == s[c] && j < c)).count();
                rank < n
            })
        })
        .count();
    hits as f64 / t.scores.len() as f64
}

pub fn oracle_map(t: &Toy) -> Option<f64> {
    let k = t.scores[0].len();
    let n = t.scores.len();
    let mut aps = Vec::new();
    for c in 0..k {
        let pos: Vec<usize> = (0..n).filter(|&i| is_pos(t, i, c)).collect();
        if pos.is_empty() {
            continue;
        }
        let mut sum = 0.0;
        for &i in &pos {
            let at_least = |j: &usize| t.scores[*j][c] >= t.scores[i][c];
            let above = (0..n).filter(at_least).count();
            let pos_above = pos.iter().filter(|j| at_least(j)).count();
            sum += pos_above as f64 / above as f64;
        }
        aps.push(sum / pos.len() as f64);
    }
    (!aps.is_empty()).then(|| aps.iter().sum::<f64>() / aps.len() as f64)
}

/// Trapezoidal area under the ROC polyline through every distinct threshold.
pub fn oracle_auc(t: &Toy) -> Option<f64> {
    let k = t.scores[0].len();
    let n = t.scores.len();
    let mut aucs = Vec::new();
    for c in 0..k {
        let p = (0..n).filter(|&i| is_pos(t, i, c)).count() as f64;
        let q = n as f64 - p;
        if p == 0.0 || q == 0.0 {
            continue;
        }
        let mut thresholds: Vec<f64> = (0..n).map(|i| t.scores[i][c]).collect();
        thresholds.sort_by(|a, b| b.total_cmp(a));
        thresholds.dedup();
        let mut pts = vec![(0.0, 0.0)];
        for th in thresholds {
            let tp = (0..n).filter(|&i| t.scores[i][c] >= th && is_pos(t, i, c)).count() as f64;
            let fp = (0..n).filter(|&i| t.scores[i][c] >= th && !is_pos(t, i, c)).count() as f64;
            pts.push((fp / q, tp / p));
        }
        let area: f64 = pts.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0).sum();
        aucs.push(area);
    }
    (!aucs.is_empty()).then(|| aucs.iter().sum::<f64>() / aucs.len() as f64)
}

