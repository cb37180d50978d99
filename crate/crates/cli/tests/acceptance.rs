//! Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
//! fails. Run with `cargo test -p tactic-reward-cli --test acceptance`.

#[path = "../../core/tests/support/mod.rs"]
mod support;

mod common;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tactic_reward::analytics::{
    aggregate_empathy, bigram_overlap, conversation_stickiness, parse_judge_score, spearman,
    stickiness, supporter_tactic_sets, weighted_kappa, EmpathyScores, Weighting,
};
use tactic_reward::dialogue::{load_corpus, Role, Turn};
use tactic_reward::http::{ClientError, CompletionClient};
use tactic_reward::reward::{
    group_advantages, minmax_normalize, score_rollout_group, ConstantQuality, Preset,
    QualityScorer, RewardConfig, RewardEngine, RolloutGroup, ScoreFailure, Stage,
    WhitespaceTokenCounter,
};
use tactic_reward::tactic::{
    entropy_breadth, kl_divergence, kl_novelty, smooth_counts, TacticCounts, TacticId, TacticSet,
};
use tactic_reward::tagging::{
    filter_emotional_support, parse_label, parse_score_tag, KeywordTagger, RemoteTagger, TurnTagger,
};

use common::*;
use support::*;

fn golden() -> String {
    fs::read_to_string(fixture("golden_request.json"))
        .unwrap()
        .trim()
        .to_string()
}

fn keyword_engine(quality: Arc<dyn QualityScorer>) -> RewardEngine {
    RewardEngine::new(Arc::new(KeywordTagger), quality, RewardConfig::default()).unwrap()
}

fn quality_stub() -> String {
    stub_server(|body| {
        let v: Value = serde_json::from_str(body).unwrap();
        if v["candidate"].as_str().unwrap().contains("third") {
            (500, "boom".into())
        } else {
            (200, r#"{"score":0.5}"#.into())
        }
    })
}

fn reported_aggregates() {
    for (name, r) in REPORTED_JUDGE_MEANS {
        let s = EmpathyScores::new(r[0], r[1], r[2], r[3], r[4], r[5]).unwrap();
        let agg = aggregate_empathy(&s).unwrap();
        assert!(
            (agg - r[6]).abs() <= 0.01 + 1e-12,
            "{name}: {agg} vs {}",
            r[6]
        );
    }
    let agg = |name: &str| {
        let r = REPORTED_JUDGE_MEANS
            .iter()
            .find(|(n, _)| *n == name)
            .unwrap()
            .1;
        aggregate_empathy(&EmpathyScores::new(r[0], r[1], r[2], r[3], r[4], r[5]).unwrap()).unwrap()
    };
    for (name, reported) in [
        ("1.7b vanilla", 3.60),
        ("1.7b psychocounsel", 4.42),
        ("1.7b q+kl", 4.54),
        ("human", 2.90),
    ] {
        assert!((agg(name) - reported).abs() <= 0.01 + 1e-12, "{name}");
    }
}

fn reward_math_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x61636365);
    for _ in 0..1000 {
        let q = random_counts(&mut rng);
        let p = random_counts(&mut rng);
        let qd = smooth_counts(&TacticCounts::new(q), 0.1).unwrap();
        let pd = smooth_counts(&TacticCounts::new(p), 0.1).unwrap();
        let (qn, qden) = smoothed_parts(&q);
        for (k, &num) in qn.iter().enumerate() {
            assert!(
                (qd.probs()[k] - to_f64(&ratio(num, qden))).abs() < 1e-9,
                "smoothing {q:?}"
            );
        }
        let exact = oracle_kl(&q, &p);
        assert!(
            (kl_novelty(&qd, &pd, 5.0).unwrap() - exact.min(5.0)).abs() < 1e-9,
            "kl {q:?} {p:?}"
        );
        assert!(
            (entropy_breadth(&TacticCounts::new(q)) - oracle_entropy(&q)).abs() < 1e-9,
            "entropy {q:?}"
        );
    }
    let q = smooth_counts(
        &TacticCounts::from_pairs(&[(TacticId::Questioning, 1)]),
        0.1,
    )
    .unwrap();
    let far = smooth_counts(
        &TacticCounts::from_pairs(&[(TacticId::Advice, 10_000)]),
        0.1,
    )
    .unwrap();
    assert!(kl_divergence(&q, &far) > 5.0);
    assert_eq!(kl_novelty(&q, &far, 5.0).unwrap(), 5.0);
}

fn pipeline_golden() {
    let body = golden();
    let in_process = keyword_engine(Arc::new(ConstantQuality(0.5)))
        .score_json(body.as_bytes())
        .unwrap();
    let v: Value = serde_json::from_str(&in_process).unwrap();
    let col = |k: &str| -> Vec<f64> {
        v["breakdowns"]
            .as_array()
            .unwrap()
            .iter()
            .map(|b| b[k].as_f64().unwrap())
            .collect()
    };
    assert_eq!(col("composed_reward"), [1.5, 0.5]);
    assert_eq!(col("advantage"), [1.0, -1.0]);

    let quality = quality_stub();
    let cli = run_stdin(
        &["score", "--tagger", "keyword", "--quality-url", &quality],
        body.as_bytes(),
    );
    assert!(cli.status.success(), "{}", stderr(&cli));
    assert_eq!(stdout(&cli), format!("{in_process}\n"));

    let server = Server::start(&["--tagger", "keyword", "--quality-url", &quality]);
    let (status, http) = post(&format!("{}/score", server.base), &body);
    assert_eq!(status, 200);
    assert_eq!(http, in_process);
    assert_eq!(server.terminate().code(), Some(0));
}

fn stickiness_simulation() {
    let mut est = Vec::new();
    for (p, seed) in [(0.27, 101), (0.50, 202)] {
        let corpus = sticky_corpus(p, 0.3, 10_000, seed);
        let e = stickiness(&corpus).unwrap().pooled_stickiness().unwrap();
        assert!((e - p).abs() <= 0.02, "p={p}: {e}");
        est.push(e);
    }
    assert!(est[1] > est[0]);
}

/// Completion client answering from the keyword rules after a random delay.
struct JitteryKeywords {
    max_delay_us: u64,
}

impl CompletionClient for JitteryKeywords {
    fn complete(&self, prompt: &str) -> Result<String, ClientError> {
        if self.max_delay_us > 0 {
            let us = rand::rng().random_range(0..self.max_delay_us);
            thread::sleep(Duration::from_micros(us));
        }
        Ok(keyword_reply(prompt))
    }
}

fn invariant_suites() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x696e76);
    let ln10 = 10f64.ln();
    for _ in 0..2000 {
        let q = random_counts(&mut rng);
        let p = random_counts(&mut rng);
        let qd = smooth_counts(&TacticCounts::new(q), 0.1).unwrap();
        let pd = smooth_counts(&TacticCounts::new(p), 0.1).unwrap();
        assert!((qd.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(qd.probs().iter().all(|&x| x > 0.0));
        let kl = kl_divergence(&qd, &pd);
        assert!(kl >= 0.0);
        assert!(kl_divergence(&qd, &qd).abs() < 1e-12);
        let clipped = kl_novelty(&qd, &pd, 5.0).unwrap();
        assert!((0.0..=5.0).contains(&clipped) && clipped == kl.min(5.0));
        let counts = TacticCounts::new(q);
        let h = entropy_breadth(&counts);
        assert!((0.0..=ln10 + 1e-12).contains(&h));
        if counts.present().len() <= 1 {
            assert_eq!(h, 0.0);
        }
    }

    for n in 2..10 {
        let c = rng.random_range(-5.0..5.0);
        assert_eq!(minmax_normalize(&vec![c; n]).unwrap(), vec![0.5; n]);
        assert_eq!(group_advantages(&vec![c; n]).unwrap(), vec![0.0; n]);
        let r: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let a = group_advantages(&r).unwrap();
        let mean = a.iter().sum::<f64>() / n as f64;
        let std = (a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!(mean.abs() < 1e-9 && (std - 1.0).abs() < 1e-9);
    }

    const SENTENCES: [&str; 10] = [
        "What happened?",
        "You should rest.",
        "I'm so sorry to hear that.",
        "It wasn't your fault.",
        "I've felt the same way.",
        "You're so strong.",
        "The sky is grey.",
        "It sounds like a lot.",
        "Your feelings are valid.",
        "[Advice] Sleep.",
    ];
    struct Hashed(f64, f64);
    impl QualityScorer for Hashed {
        fn score(&self, _: &[Turn], c: &str) -> Result<f64, ClientError> {
            let h = c
                .bytes()
                .fold(17u64, |h, b| h.wrapping_mul(31).wrapping_add(b as u64));
            Ok(self.0 * (h % 997) as f64 / 997.0 + self.1)
        }
    }
    let history = vec![
        Turn::seeker("I had a rough week."),
        Turn::supporter("You should rest. What happened?"),
        Turn::seeker("Work."),
    ];
    let score = |cands: &[String], q: &Hashed, preset: Preset| {
        let g = RolloutGroup::new(history.clone(), cands.to_vec()).unwrap();
        let cfg = RewardConfig::from_preset(preset);
        score_rollout_group(&g, &KeywordTagger, q, &cfg, &WhitespaceTokenCounter).unwrap()
    };
    for _ in 0..100 {
        let n = rng.random_range(2..7);
        let cands: Vec<String> = (0..n)
            .map(|_| {
                let k = rng.random_range(1..4);
                (0..k)
                    .map(|_| *SENTENCES.choose(&mut rng).unwrap())
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        let preset = *Preset::ALL.choose(&mut rng).unwrap();
        let base = score(&cands, &Hashed(1.0, 0.0), preset);
        let moved = score(
            &cands,
            &Hashed(rng.random_range(0.01..50.0), rng.random_range(-9.0..9.0)),
            preset,
        );
        for (x, y) in base.iter().zip(&moved) {
            assert!((x.composed_reward - y.composed_reward).abs() < 1e-9);
            assert!((x.advantage - y.advantage).abs() < 1e-9);
        }
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let shuffled: Vec<String> = perm.iter().map(|&i| cands[i].clone()).collect();
        let out = score(&shuffled, &Hashed(1.0, 0.0), preset);
        for (k, &i) in perm.iter().enumerate() {
            assert_eq!(out[k], base[i]);
        }
    }

    let serial = RemoteTagger::new(Arc::new(JitteryKeywords { max_delay_us: 0 }), 1);
    let jittery = RemoteTagger::new(Arc::new(JitteryKeywords { max_delay_us: 3000 }), 16);
    for text in [
        "I'm so sorry to hear that. What happened? You should rest.",
        "It wasn't your fault. I've felt the same way. You're so strong. Your feelings are valid.",
        "The sky is grey.",
    ] {
        let a = serial.tag_turn(text).unwrap();
        for _ in 0..3 {
            assert_eq!(jittery.tag_turn(text).unwrap(), a);
        }
        assert_eq!(KeywordTagger.tag_turn(text).unwrap(), a);
    }
}

fn analytics_oracles() {
    use TacticId::{Advice as A, Questioning as Q};
    let sets: Vec<TacticSet> = vec![
        [A].into_iter().collect(),
        [A, Q].into_iter().collect(),
        [Q].into_iter().collect(),
    ];
    assert_eq!(conversation_stickiness(&sets).value(), Some(2.0 / 3.0));
    let shipped =
        load_corpus(fs::read(fixture("sticky_tagged.jsonl")).unwrap().as_slice()).unwrap();
    assert_eq!(
        supporter_tactic_sets(&shipped.conversations[0]).unwrap(),
        sets
    );
    assert_eq!(
        stickiness(&shipped.conversations)
            .unwrap()
            .pooled_stickiness(),
        Some(2.0 / 3.0)
    );

    assert_eq!(bigram_overlap("I feel sad now", "i feel bad too"), 0.2);

    let x = [1.0, 2.0, 3.0, 4.0, 5.0];
    assert_eq!(spearman(&x, &[2.0, 4.0, 8.0, 16.0, 32.0]).unwrap(), 1.0);
    assert_eq!(spearman(&x, &[5.0, 3.0, 1.0, 0.0, -9.0]).unwrap(), -1.0);
    let (tx, ty) = (
        [1.0, 2.0, 2.0, 4.0, 4.0, 6.0],
        [1.0, 3.0, 2.0, 4.0, 6.0, 6.0],
    );
    assert!((spearman(&tx, &ty).unwrap() - oracle_spearman(&tx, &ty)).abs() < 1e-12);

    let a = [1, 2, 3, 4, 5, 3, 2, 4, 5, 1, 3, 3];
    let b = [1, 3, 3, 4, 4, 2, 2, 5, 5, 2, 3, 4];
    assert_eq!(weighted_kappa(&a, &a, Weighting::Linear).unwrap(), 1.0);
    assert_eq!(weighted_kappa(&a, &a, Weighting::Quadratic).unwrap(), 1.0);
    for (w, quad) in [(Weighting::Linear, false), (Weighting::Quadratic, true)] {
        assert!((weighted_kappa(&a, &b, w).unwrap() - oracle_kappa(&a, &b, quad)).abs() < 1e-12);
    }
}

fn determinism() {
    let corpus = fixture("corpus.jsonl");
    let tagged = fixture("corpus_tagged.jsonl");
    let sticky = fixture("sticky_tagged.jsonl");
    let requests = fixture("score_requests.jsonl");
    let runs: Vec<Vec<&str>> = vec![
        vec![
            "tag",
            "--tagger",
            "keyword",
            "--in",
            corpus.to_str().unwrap(),
        ],
        vec!["analyze", "--in", tagged.to_str().unwrap()],
        vec![
            "analyze",
            "--format",
            "tsv",
            "--in",
            tagged.to_str().unwrap(),
        ],
        vec!["analyze", "--in", sticky.to_str().unwrap()],
        vec![
            "score",
            "--quality-constant",
            "0.5",
            "--in",
            requests.to_str().unwrap(),
        ],
    ];
    for args in runs {
        let first = run(&args);
        let second = run(&args);
        assert!(first.status.success(), "{args:?}: {}", stderr(&first));
        assert!(!first.stdout.is_empty());
        assert_eq!(first.stdout, second.stdout, "{args:?}");
    }
}

struct FailOnThird;

impl QualityScorer for FailOnThird {
    fn score(&self, _: &[Turn], c: &str) -> Result<f64, ClientError> {
        if c.contains("third") {
            Err(ClientError::Status {
                status: 500,
                body: "boom".into(),
            })
        } else {
            Ok(0.5)
        }
    }
}

struct Replies(&'static str);

impl CompletionClient for Replies {
    fn complete(&self, _: &str) -> Result<String, ClientError> {
        Ok(self.0.to_string())
    }
}

fn fail_closed() {
    let one = r#"{"history":[{"role":"seeker","text":"hi"}],"candidates":["only"]}"#;
    let engine = keyword_engine(Arc::new(ConstantQuality(0.5)));
    assert!(matches!(
        engine.score_json(one.as_bytes()),
        Err(ScoreFailure::Invalid(_))
    ));
    let cli = run_stdin(&["score", "--quality-constant", "0.5"], one.as_bytes());
    assert_eq!(cli.status.code(), Some(1));
    let line: Value = serde_json::from_str(stdout(&cli).trim()).unwrap();
    assert_eq!(
        (line["line"].as_u64(), line["error"].as_str()),
        (Some(1), Some("invalid_request"))
    );
    let server = Server::start(&["--quality-constant", "0.5"]);
    assert_eq!(post(&format!("{}/score", server.base), one).0, 400);
    drop(server);

    for reply in [
        "<score>maybe</score>",
        "<score></score>",
        "1",
        "<score>2</score>",
    ] {
        assert!(parse_score_tag(reply).is_err(), "{reply}");
        let tagger = RemoteTagger::new(Arc::new(Replies(reply)), 4);
        assert!(tagger.tag_turn("You should rest.").is_err(), "{reply}");
    }
    for reply in ["<label>perhaps</label>", "yes", "<label></label>"] {
        assert!(parse_label(reply).is_err(), "{reply}");
        let (yes, bad) = (Replies("<label>yes</label>"), Replies(reply));
        let msgs = [(Role::Seeker, "I feel low.")];
        assert!(
            filter_emotional_support(&msgs, [&yes, &yes, &bad]).is_err(),
            "{reply}"
        );
    }
    for reply in [
        "<score>0</score>",
        "<score>6</score>",
        "<score>good</score>",
        "4",
    ] {
        assert!(parse_judge_score(reply).is_err(), "{reply}");
    }

    let g = RolloutGroup::new(
        vec![Turn::seeker("hi")],
        vec![
            "first reply".into(),
            "second reply".into(),
            "third reply".into(),
        ],
    )
    .unwrap();
    let cfg = RewardConfig::default();
    let err = score_rollout_group(
        &g,
        &KeywordTagger,
        &FailOnThird,
        &cfg,
        &WhitespaceTokenCounter,
    )
    .unwrap_err();
    assert_eq!((err.stage, err.candidate), (Stage::Rollout, Some(2)));
    let req = r#"{"history":[{"role":"seeker","text":"hi"}],"candidates":["first reply","second reply","third reply"]}"#;
    match keyword_engine(Arc::new(FailOnThird)).score_json(req.as_bytes()) {
        Err(f @ ScoreFailure::Scoring(_)) => assert!(!f.is_client_error()),
        other => panic!("expected a scoring failure, got {other:?}"),
    }
    let cli = run_stdin(&["score", "--quality-url", &quality_stub()], req.as_bytes());
    assert_eq!(cli.status.code(), Some(1));
    let out = stdout(&cli);
    assert!(!out.contains("breakdowns"), "{out}");
    let v: Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(
        (v["stage"].as_u64(), v["candidate"].as_u64()),
        (Some(2), Some(2))
    );
}

fn main() {
    let criteria: [(&str, fn()); 8] = [
        (
            "aggregate empathy reproduces all 23 reported judge-score rows within 0.01",
            reported_aggregates,
        ),
        (
            "smoothing, KL and entropy match the 128-bit oracle on 1000 vectors",
            reward_math_oracle,
        ),
        (
            "golden group is byte-identical in-process, via score and via POST /score",
            pipeline_golden,
        ),
        (
            "simulated stickiness tracks retention p in {0.27, 0.50}",
            stickiness_simulation,
        ),
        (
            "distribution, reward and tagger invariants hold",
            invariant_suites,
        ),
        (
            "stickiness, bigram, Spearman and kappa oracles match",
            analytics_oracles,
        ),
        ("tag, analyze and score are byte-deterministic", determinism),
        (
            "singleton groups, bad replies and partial groups fail closed",
            fail_closed,
        ),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let ok = catch_unwind(AssertUnwindSafe(check)).is_ok();
        let verdict = if ok { "PASS" } else { "FAIL" };
        println!(
            "criterion {} {name}: {verdict} ({:.2?})",
            i + 1,
            start.elapsed()
        );
        if !ok {
            failed.push(i + 1);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
