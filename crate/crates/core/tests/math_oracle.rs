//! Smoothing, KL and entropy checked against exact integer arithmetic and
//! 128-bit logarithms.

mod support;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::{oracle_entropy, oracle_kl, random_counts, ratio, smoothed_parts, to_f64};
use tactic_reward::tactic::{
    entropy_breadth, kl_divergence, kl_novelty, smooth_counts, TacticCounts, TacticId,
};

#[test]
fn thousand_random_vectors_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d696e74);
    for _ in 0..1000 {
        let q = random_counts(&mut rng);
        let p = random_counts(&mut rng);
        let qd = smooth_counts(&TacticCounts::new(q), 0.1).unwrap();
        let pd = smooth_counts(&TacticCounts::new(p), 0.1).unwrap();

        let (qn, qden) = smoothed_parts(&q);
        for (k, &num) in qn.iter().enumerate() {
            let exact = to_f64(&ratio(num, qden));
            assert!((qd.probs()[k] - exact).abs() < 1e-9, "smoothing {q:?}");
        }

        let exact_kl = oracle_kl(&q, &p);
        assert!(
            (kl_divergence(&qd, &pd) - exact_kl).abs() < 1e-9,
            "kl {q:?} {p:?}"
        );
        let clipped = kl_novelty(&qd, &pd, 5.0).unwrap();
        assert!((clipped - exact_kl.min(5.0)).abs() < 1e-9);

        let h = entropy_breadth(&TacticCounts::new(q));
        assert!((h - oracle_entropy(&q)).abs() < 1e-9, "entropy {q:?}");
    }
}

#[test]
fn named_kl_fixtures() {
    let q = smooth_counts(
        &TacticCounts::from_pairs(&[(TacticId::Questioning, 1)]),
        0.1,
    )
    .unwrap();
    let p = smooth_counts(&TacticCounts::from_pairs(&[(TacticId::Advice, 2)]), 0.1).unwrap();
    assert!((kl_novelty(&q, &p, 5.0).unwrap() - 1.572081386261097).abs() < 1e-12);

    let far = smooth_counts(
        &TacticCounts::from_pairs(&[(TacticId::Advice, 10_000)]),
        0.1,
    )
    .unwrap();
    let unclipped = kl_divergence(&q, &far);
    assert!((unclipped - 9.260488813209663).abs() < 1e-9);
    assert_eq!(kl_novelty(&q, &far, 5.0).unwrap(), 5.0);
}

#[test]
fn entropy_of_two_equal_tactics_is_ln2() {
    let c = TacticCounts::from_pairs(&[(TacticId::Advice, 1), (TacticId::Validation, 1)]);
    assert!((entropy_breadth(&c) - std::f64::consts::LN_2).abs() < 1e-15);
}
