//! Independent oracles and fixtures shared by the core tests and the
//! workspace acceptance suite.

#![allow(dead_code, clippy::approx_constant)]

use dashu_float::FBig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tactic_reward::dialogue::{Conversation, Turn};
use tactic_reward::tactic::{TacticId, TacticSet, NUM_TACTICS};

pub const PREC: usize = 128;

pub fn big(n: u128) -> FBig {
    FBig::from(n).with_precision(PREC).value()
}

pub fn ratio(num: u128, den: u128) -> FBig {
    big(num) / big(den)
}

pub fn to_f64(x: &FBig) -> f64 {
    x.to_f64().value()
}

/// With alpha = 1/10 the smoothed mass of tactic k is
/// `(10 c_k + 1) / (10 T + 10)`, an exact ratio of integers.
pub fn smoothed_parts(c: &[u64; NUM_TACTICS]) -> ([u128; NUM_TACTICS], u128) {
    let total: u128 = c.iter().map(|&x| x as u128).sum();
    (c.map(|x| 10 * x as u128 + 1), 10 * total + 10)
}

pub fn oracle_kl(q: &[u64; NUM_TACTICS], p: &[u64; NUM_TACTICS]) -> f64 {
    let (qn, qd) = smoothed_parts(q);
    let (pn, pd) = smoothed_parts(p);
    let mut acc = big(0);
    for k in 0..NUM_TACTICS {
        let qk = ratio(qn[k], qd);
        let log = ratio(qn[k] * pd, qd * pn[k]).ln();
        acc += qk * log;
    }
    to_f64(&acc)
}

pub fn oracle_entropy(c: &[u64; NUM_TACTICS]) -> f64 {
    let total: u128 = c.iter().map(|&x| x as u128).sum();
    if total == 0 {
        return 0.0;
    }
    let mut acc = big(0);
    for &x in c.iter().filter(|&&x| x > 0) {
        let p = ratio(x as u128, total);
        acc -= p.clone() * p.ln();
    }
    to_f64(&acc)
}

pub fn random_counts(rng: &mut ChaCha8Rng) -> [u64; NUM_TACTICS] {
    let max = [0u64, 1, 3, 10, 50, 1000][rng.random_range(0..6)];
    let mut c = [0u64; NUM_TACTICS];
    for x in c.iter_mut() {
        if rng.random_bool(0.6) {
            *x = rng.random_range(0..=max);
        }
    }
    c
}

/// (validating, elaboration, understanding, advice, self, dismissing, agg)
pub const REPORTED_JUDGE_MEANS: [(&str, [f64; 7]); 23] = [
    ("human", [1.98, 1.62, 1.47, 1.93, 1.48, 2.29, 2.90]),
    ("1.7b vanilla", [3.76, 1.55, 2.50, 1.99, 1.07, 1.17, 3.60]),
    (
        "1.7b tactic prompt",
        [4.09, 2.22, 2.93, 1.60, 1.16, 1.07, 3.90],
    ),
    (
        "1.7b tactic+history",
        [3.99, 2.10, 2.90, 1.45, 1.14, 1.04, 3.89],
    ),
    (
        "1.7b vs vanilla",
        [2.84, 1.52, 2.07, 2.30, 1.12, 1.67, 3.22],
    ),
    ("1.7b vs tactic", [3.50, 2.14, 2.60, 1.60, 1.14, 1.22, 3.71]),
    (
        "1.7b vs tactic+history",
        [3.52, 1.87, 2.49, 1.60, 1.21, 1.19, 3.64],
    ),
    (
        "1.7b psychocounsel",
        [4.47, 4.56, 3.14, 1.54, 1.08, 1.01, 4.42],
    ),
    (
        "1.7b r1-zero-div",
        [4.27, 4.78, 2.89, 1.53, 1.10, 1.01, 4.38],
    ),
    ("1.7b q+kl", [4.52, 4.84, 3.10, 1.19, 1.06, 1.01, 4.54]),
    ("1.7b q+h", [4.10, 4.00, 2.80, 2.91, 3.60, 1.04, 3.56]),
    ("1.7b q+kl+h", [4.43, 4.03, 3.50, 2.07, 1.38, 1.02, 4.25]),
    ("4b vanilla", [3.78, 1.64, 3.20, 2.01, 1.08, 1.05, 3.75]),
    (
        "4b tactic prompt",
        [3.78, 2.06, 3.47, 1.76, 1.22, 1.04, 3.88],
    ),
    (
        "4b tactic+history",
        [3.77, 1.93, 3.19, 1.69, 1.48, 1.06, 3.78],
    ),
    ("4b vs vanilla", [3.34, 1.43, 2.54, 1.95, 1.03, 1.29, 3.51]),
    ("4b vs tactic", [3.46, 1.96, 2.89, 1.75, 1.41, 1.12, 3.67]),
    (
        "4b vs tactic+history",
        [3.42, 1.93, 2.90, 1.86, 1.58, 1.17, 3.61],
    ),
    (
        "4b psychocounsel",
        [4.58, 4.85, 4.05, 1.73, 1.05, 1.01, 4.62],
    ),
    ("4b r1-zero-div", [4.35, 4.69, 3.82, 1.34, 1.07, 1.00, 4.58]),
    ("4b q+kl", [4.11, 4.86, 4.30, 1.11, 1.15, 1.00, 4.67]),
    ("4b q+h", [4.12, 3.23, 3.61, 2.70, 4.23, 1.09, 3.49]),
    ("4b q+kl+h", [4.31, 3.92, 3.74, 1.91, 2.54, 1.02, 4.08]),
];

/// Average ranks by counting, without sorting.
pub fn count_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let below = x.iter().filter(|&&w| w < v).count() as f64;
            let equal = x.iter().filter(|&&w| w == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn oracle_spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (count_ranks(x), count_ranks(y));
    let n = x.len() as f64;
    let sx: f64 = rx.iter().sum();
    let sy: f64 = ry.iter().sum();
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| a * b).sum();
    let sxx: f64 = rx.iter().map(|a| a * a).sum();
    let syy: f64 = ry.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// Kappa as mean pairwise disagreement: observed over matched pairs,
/// expected over all cross pairs.
pub fn oracle_kappa(a: &[u8], b: &[u8], quadratic: bool) -> f64 {
    let w = |x: u8, y: u8| {
        let d = (x as f64 - y as f64).abs() / 4.0;
        if quadratic {
            d * d
        } else {
            d
        }
    };
    let n = a.len() as f64;
    let observed: f64 = a.iter().zip(b).map(|(&x, &y)| w(x, y)).sum::<f64>() / n;
    let expected: f64 = a
        .iter()
        .flat_map(|&x| b.iter().map(move |&y| w(x, y)))
        .sum::<f64>()
        / (n * n);
    1.0 - observed / expected
}

/// Supporter that keeps each previous tactic with probability `p` and adds
/// each previously absent tactic with probability `fresh`.
pub fn sticky_corpus(p: f64, fresh: f64, pairs: usize, seed: u64) -> Vec<Conversation> {
    const TURNS: usize = 11;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for c in 0..pairs / (TURNS - 1) {
        let mut prev: TacticSet = TacticId::ALL
            .into_iter()
            .filter(|_| rng.random_bool(fresh))
            .collect();
        let mut turns = Vec::new();
        for _ in 0..TURNS {
            turns.push(Turn::seeker("And then?"));
            turns.push(Turn::supporter("Okay.").with_tags(vec![prev]).unwrap());
            prev = TacticId::ALL
                .into_iter()
                .filter(|&t| rng.random_bool(if prev.contains(t) { p } else { fresh }))
                .collect();
        }
        out.push(Conversation::new(format!("sim{c}"), turns));
    }
    out
}
