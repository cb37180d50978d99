//! Surface-overlap baselines between two texts.

use std::collections::{HashMap, HashSet};

/// Added to a zero n-gram match count so the geometric mean stays defined.
pub const BLEU_EPSILON: f64 = 1e-9;

/// Lowercase, drop punctuation, split on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .collect::<String>()
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

fn bigrams(tokens: &[String]) -> Vec<(&str, &str)> {
    tokens
        .windows(2)
        .map(|w| (w[0].as_str(), w[1].as_str()))
        .collect()
}

/// Jaccard similarity of the unique word-bigram sets. Two texts without any
/// bigram score 1; one empty set against a non-empty one scores 0.
pub fn bigram_overlap(a: &str, b: &str) -> f64 {
    let (ta, tb) = (tokenize(a), tokenize(b));
    let sa: HashSet<_> = bigrams(&ta).into_iter().collect();
    let sb: HashSet<_> = bigrams(&tb).into_iter().collect();
    if sa.is_empty() && sb.is_empty() {
        return 1.0;
    }
    let inter = sa.intersection(&sb).count();
    let union = sa.len() + sb.len() - inter;
    inter as f64 / union as f64
}

fn counts<T: std::hash::Hash + Eq>(items: Vec<T>) -> HashMap<T, usize> {
    let mut m = HashMap::new();
    for it in items {
        *m.entry(it).or_insert(0) += 1;
    }
    m
}

/// Clipped n-gram precision as `(matches, total)`.
fn clipped<T: std::hash::Hash + Eq>(cand: Vec<T>, reference: Vec<T>) -> (usize, usize) {
    let total = cand.len();
    let rc = counts(reference);
    let matches = counts(cand)
        .into_iter()
        .map(|(g, n)| n.min(rc.get(&g).copied().unwrap_or(0)))
        .sum();
    (matches, total)
}

fn precision((matches, total): (usize, usize)) -> f64 {
    let numerator = if matches == 0 {
        BLEU_EPSILON
    } else {
        matches as f64
    };
    numerator / total.max(1) as f64
}

/// Sentence-level BLEU with uniform weights over unigram and bigram
/// precision and the usual brevity penalty.
pub fn bleu2(candidate: &str, reference: &str) -> f64 {
    let (c, r) = (tokenize(candidate), tokenize(reference));
    if c.is_empty() {
        return 0.0;
    }
    let p1 = precision(clipped(
        c.iter().map(String::as_str).collect(),
        r.iter().map(String::as_str).collect(),
    ));
    let p2 = precision(clipped(bigrams(&c), bigrams(&r)));
    let bp = if c.len() > r.len() {
        1.0
    } else {
        (1.0 - r.len() as f64 / c.len() as f64).exp()
    };
    bp * (0.5 * p1.ln() + 0.5 * p2.ln()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn jaccard_fixture() {
        assert_eq!(bigram_overlap("the cat sat here", "the cat ran here"), 0.2);
        assert_eq!(bigram_overlap("The cat, sat!", "the cat sat"), 1.0);
        assert_eq!(bigram_overlap("hi", "yo"), 1.0);
        assert_eq!(bigram_overlap("hi", "hello there"), 0.0);
    }

    #[test]
    fn bleu_fixtures() {
        assert!(
            (bleu2("the cat sat here", "the cat ran here") - 0.49999999999999994).abs() < 1e-15
        );
        assert!(
            (bleu2("the cat sat", "the cat sat on the mat") - 0.36787944117144233).abs() < 1e-15
        );
        let s = "i am sorry that you are going through this";
        assert_eq!(bleu2(s, s), 1.0);
        assert!(bleu2("alpha beta gamma", "delta epsilon zeta") < 1e-8);
        assert_eq!(bleu2("", "anything"), 0.0);
    }

    #[test]
    fn bleu_is_not_symmetric() {
        let (a, b) = ("the cat sat", "the cat sat on the mat");
        assert_ne!(bleu2(a, b), bleu2(b, a));
    }

    proptest! {
        #[test]
        fn overlap_is_symmetric(a in "[a-c ]{0,30}", b in "[a-c ]{0,30}") {
            prop_assert_eq!(bigram_overlap(&a, &b), bigram_overlap(&b, &a));
            let v = bigram_overlap(&a, &b);
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn bleu_in_unit_interval(a in "[a-c ]{0,30}", b in "[a-c ]{0,30}") {
            let v = bleu2(&a, &b);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        }
    }
}
