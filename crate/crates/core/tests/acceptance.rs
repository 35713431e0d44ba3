//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits non-zero if any failed.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::f64::consts::LN_2;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use common::{keyword_label, MockServer};
use cwex::agreement::{cohens_kappa, fleiss_kappa, majority_vote, AnnotationMatrix, VoteOutcome};
use cwex::fairness::{evaluate_run, exposures, nfairr};
use cwex::lexical::{binary_neutrality, tokenize, BinaryNeutrality, NeutralityScore, WordLists};
use cwex::llm::{parse_response, render_prompt, Classifier, CompletionCache, EndpointConfig, PromptMode};
use cwex::report::{CombinedReport, OutputFormat};
use cwex::utility::{ndcg_at, reciprocal_rank};
use cwex::{
    cwex as cwex_score, delta_exposure, load_labels, parse_qrels, parse_run, CWExParams, Document, EvalConfig,
    GenderLabel, LabelSet, RankedList,
};

type Outcome = Result<(), String>;
type Check = Box<dyn FnOnce() -> Option<Outcome>>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

const M: GenderLabel = GenderLabel::Male;
const F: GenderLabel = GenderLabel::Female;
const N: GenderLabel = GenderLabel::Neutral;

fn labeled_list(seq: &[GenderLabel]) -> (RankedList, LabelSet) {
    let ids: Vec<String> = (0..seq.len()).map(|i| format!("d{i}")).collect();
    let list = RankedList::from_doc_ids("q", ids.iter().cloned());
    let labels = LabelSet::from_pairs("human", ids.into_iter().zip(seq.iter().copied())).unwrap();
    (list, labels)
}

fn random_sequence(rng: &mut StdRng) -> Vec<GenderLabel> {
    let len = rng.gen_range(1..=50);
    (0..len).map(|_| [M, F, N][rng.gen_range(0..3)]).collect()
}

/// Straight transcription of the definitions, sharing no code with the crate.
fn oracle_cwex(seq: &[GenderLabel], k: usize, alpha: f64) -> f64 {
    let n = seq.len().min(k);
    let attention = |i: usize| LN_2 / ((1 + i) as f64).ln();
    let total: f64 = (1..=n).map(attention).sum();
    let mass = |g: GenderLabel| -> f64 { (1..=n).filter(|&i| seq[i - 1] == g).map(attention).sum::<f64>() / total };
    alpha * mass(N) - (1.0 - alpha) * (mass(M) - mass(F)).abs()
}

const KS: [usize; 3] = [1, 5, 10];
const ALPHAS: [f64; 5] = [0.0, 0.2, 0.5, 0.7, 1.0];

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let seq = random_sequence(&mut rng);
        let k = *KS.choose(&mut rng).unwrap();
        let alpha = *ALPHAS.choose(&mut rng).unwrap();
        let (list, labels) = labeled_list(&seq);
        let got = cwex_score(&list, &labels, CWExParams::new(alpha, k).unwrap()).map_err(|e| e.to_string())?;
        worst = worst.max((got - oracle_cwex(&seq, k, alpha)).abs());
    }
    let elapsed = started.elapsed();
    ensure!(worst <= 1e-9, "max deviation {worst:e}");
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(())
}

fn criterion_2() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2);
    for _ in 0..1000 {
        let seq = random_sequence(&mut rng);
        let (list, labels) = labeled_list(&seq);
        for k in KS {
            for alpha in ALPHAS {
                let v = cwex_score(&list, &labels, CWExParams::new(alpha, k).unwrap()).unwrap();
                ensure!(alpha - 1.0 <= v && v <= alpha, "{v} outside [{}, {alpha}]", alpha - 1.0);
            }
        }
    }
    for len in 1..=50 {
        for k in KS {
            for alpha in ALPHAS {
                let p = CWExParams::new(alpha, k).unwrap();
                let (list, labels) = labeled_list(&vec![N; len]);
                let v = cwex_score(&list, &labels, p).unwrap();
                ensure!(v == alpha, "all-neutral len {len} k {k}: {v} != {alpha}");
                for g in [M, F] {
                    let (list, labels) = labeled_list(&vec![g; len]);
                    let v = cwex_score(&list, &labels, p).unwrap();
                    ensure!(
                        v == alpha - 1.0,
                        "single-gender len {len} k {k}: {v} != {}",
                        alpha - 1.0
                    );
                }
            }
        }
    }
    Ok(())
}

fn criterion_3() -> Outcome {
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..1000 {
        let seq = random_sequence(&mut rng);
        let (list, labels) = labeled_list(&seq);
        let swapped = labels.gender_swapped();
        for k in KS {
            let e = exposures(&list, &labels, k).unwrap();
            let sum = e.male + e.female + e.neutral;
            ensure!((sum - 1.0).abs() <= 1e-9, "exposures sum to {sum}");
            let d = delta_exposure(&list, &labels, k).unwrap();
            let ds = delta_exposure(&list, &swapped, k).unwrap();
            ensure!((d - ds).abs() <= 1e-12, "delta exposure {d} vs swapped {ds}");
            for alpha in ALPHAS {
                let p = CWExParams::new(alpha, k).unwrap();
                let a = cwex_score(&list, &labels, p).unwrap();
                let b = cwex_score(&list, &swapped, p).unwrap();
                ensure!((a - b).abs() <= 1e-12, "cwex {a} vs swapped {b}");
            }
        }
    }
    Ok(())
}

fn criterion_4() -> Outcome {
    let (list, labels) = labeled_list(&[M, N, F]);
    let e = exposures(&list, &labels, 3).unwrap();
    ensure!((e.male - 0.46928).abs() <= 1e-4, "Exposure_Male {}", e.male);
    let d = delta_exposure(&list, &labels, 3).unwrap();
    ensure!((d - 0.23464).abs() <= 1e-4, "delta exposure {d}");
    let c = cwex_score(&list, &labels, CWExParams::new(0.5, 3).unwrap()).unwrap();
    ensure!((c - 0.03071).abs() <= 1e-4, "CWEx {c}");

    let ranked = RankedList::from_doc_ids("q", ["a", "b", "c"]);
    let pool: HashMap<String, NeutralityScore> = [("a", 0.0), ("b", 1.0), ("c", 1.0)]
        .into_iter()
        .map(|(d, t)| (d.to_string(), NeutralityScore::new(t).unwrap()))
        .collect();
    let v = nfairr(&ranked, &pool, 3).unwrap();
    ensure!((v - 0.69342).abs() <= 1e-4, "NFaiRR {v}");
    Ok(())
}

fn criterion_5() -> Outcome {
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..500 {
        let n = rng.gen_range(1..=30);
        let pool: HashMap<String, NeutralityScore> = (0..n)
            .map(|i| {
                let tau = if rng.gen_bool(0.3) { 1.0 } else { rng.gen::<f64>() };
                (format!("d{i}"), NeutralityScore::new(tau).unwrap())
            })
            .collect();
        let mut ids: Vec<String> = pool.keys().cloned().collect();
        ids.sort();
        ids.shuffle(&mut rng);
        let listed = rng.gen_range(1..=n);
        let list = RankedList::from_doc_ids("q", ids.iter().take(listed).cloned());
        for k in KS {
            let v = nfairr(&list, &pool, k).unwrap();
            ensure!((0.0..=1.0).contains(&v), "NFaiRR {v} out of range");
        }
        ids.sort_by(|a, b| pool[b].value().total_cmp(&pool[a].value()).then(a.cmp(b)));
        let sorted = RankedList::from_doc_ids("q", ids);
        for k in KS {
            let v = nfairr(&sorted, &pool, k).unwrap();
            ensure!(v == 1.0, "neutrality-sorted NFaiRR {v}");
        }
    }

    let lists = WordLists::default();
    let male: BTreeSet<String> = lists.male_terms().clone();
    let female: BTreeSet<String> = lists.female_terms().clone();
    let vocab: Vec<String> = [
        "river", "bank", "report", "engine", "stone", "Him", "HER", "mother", "Sir", "kings",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for _ in 0..2000 {
        let words: Vec<&str> = (0..rng.gen_range(1..12))
            .map(|_| vocab.choose(&mut rng).unwrap().as_str())
            .collect();
        let text = words.join(if rng.gen_bool(0.5) { " " } else { ", " });
        let gendered = text
            .split(|c: char| !c.is_alphanumeric())
            .map(str::to_lowercase)
            .any(|w| male.contains(&w) || female.contains(&w));
        let got = binary_neutrality(&Document::new("d", text.as_str()), &lists);
        let expected = if gendered {
            BinaryNeutrality::NonNeutral
        } else {
            BinaryNeutrality::Neutral
        };
        ensure!(got == expected, "{text:?}: {got:?}, expected {expected:?}");
    }
    ensure!(!tokenize("").iter().any(|_| true), "empty text has tokens");
    Ok(())
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn criterion_6() -> Outcome {
    let doc =
        Document::new("g", "Regular check-ups help catch health problems early.").with_title("Nurses at the clinic");
    let files = [
        (PromptMode::ZeroShot, "zero_shot.txt"),
        (PromptMode::OneShot, "one_shot.txt"),
        (PromptMode::ThreeShot, "three_shot.txt"),
        (PromptMode::CoT, "cot.txt"),
    ];
    for (mode, file) in files {
        let expected = std::fs::read_to_string(golden_dir().join(file)).map_err(|e| format!("{file}: {e}"))?;
        let got = render_prompt(mode, &doc).map_err(|e| e.to_string())?;
        if got != expected {
            let at = got
                .bytes()
                .zip(expected.bytes())
                .position(|(a, b)| a != b)
                .unwrap_or(got.len().min(expected.len()));
            return Err(format!("{mode} drifts from {file} at byte {at}"));
        }
    }
    let three = render_prompt(PromptMode::ThreeShot, &doc).unwrap();
    for demo in [
        "This helpful article dives",
        "7 reasons why men make great entrepreneurs",
        "Being a mom can be tough",
    ] {
        ensure!(three.contains(demo), "three-shot prompt lacks {demo:?}");
    }
    let one = render_prompt(PromptMode::OneShot, &doc).unwrap();
    ensure!(
        one.contains("This helpful article dives"),
        "one-shot lacks its demonstration"
    );
    ensure!(
        !one.contains("7 reasons why men"),
        "one-shot has too many demonstrations"
    );
    Ok(())
}

fn criterion_7() -> Outcome {
    use PromptMode::{CoT, ZeroShot};
    let u = GenderLabel::Unparseable;
    let cases: [(&str, PromptMode, GenderLabel); 20] = [
        ("Male", ZeroShot, M),
        ("female ", ZeroShot, F),
        ("NEUTRAL", ZeroShot, N),
        ("Neutral.", ZeroShot, N),
        ("  male\n", ZeroShot, M),
        ("Class: Female", ZeroShot, F),
        ("", ZeroShot, u),
        ("   ", ZeroShot, u),
        ("Unknown", ZeroShot, u),
        ("Male or Female", ZeroShot, u),
        ("Both", ZeroShot, u),
        ("Reasoning: mentions a mother.\nClass: Female", CoT, F),
        ("Reasoning: no gendered terms.\nClass: Neutral", CoT, N),
        ("reasoning: talks about his job\nclass: male", CoT, M),
        ("**Reasoning:** plain facts. **Class:** Neutral", CoT, N),
        ("Reasoning: first Class: Male was wrong.\nClass: Female", CoT, F),
        ("Reasoning: the text is about a king.", CoT, u),
        ("Class: ", CoT, u),
        ("Female", CoT, u),
        ("Reasoning: unclear.\nClass: Other", CoT, u),
    ];
    for (raw, mode, expected) in cases {
        let got = parse_response(raw, mode).label;
        ensure!(got == expected, "{raw:?} ({mode}) -> {got:?}, expected {expected:?}");
    }
    let cot = parse_response("Reasoning: mentions a mother.\nClass: Female", CoT);
    ensure!(
        cot.reasoning.as_deref() == Some("mentions a mother."),
        "reasoning {:?}",
        cot.reasoning
    );
    Ok(())
}

fn criterion_8() -> Outcome {
    let started = Instant::now();
    let server = MockServer::start(|passage, attempt| {
        if passage.contains("flaky") && attempt <= 2 {
            (503, "unavailable".into())
        } else {
            (200, keyword_label(passage).into())
        }
    });
    let mut config = EndpointConfig::new(&server.url, "mock");
    config.initial_backoff = Duration::from_millis(10);
    let docs: Vec<Document> = (0..30)
        .map(|i| {
            let text = match i % 4 {
                0 => format!("Item {i}: she is a woman."),
                1 => format!("Item {i}: he is a man."),
                2 => format!("Item {i}: flaky weather report."),
                _ => format!("Item {i}: the bridge opened."),
            };
            Document::new(format!("d{i:02}"), text)
        })
        .collect();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cache_path = dir.path().join("cache.tsv");

    let serial = Classifier::new(config.clone(), CompletionCache::in_memory());
    let a = serial
        .batch_classify(&docs, PromptMode::ThreeShot, 1)
        .map_err(|e| e.to_string())?;
    let parallel = Classifier::new(
        config.clone(),
        CompletionCache::open(&cache_path).map_err(|e| e.to_string())?,
    );
    let b = parallel
        .batch_classify(&docs, PromptMode::ThreeShot, 8)
        .map_err(|e| e.to_string())?;
    ensure!(
        a.is_complete() && b.is_complete(),
        "failures: {:?} {:?}",
        a.failures,
        b.failures
    );
    ensure!(a.labels == b.labels, "parallelism changed labels");
    for doc in &docs {
        let expected: GenderLabel = keyword_label(&doc.text).parse().unwrap();
        ensure!(a.labels.get(&doc.doc_id) == Some(expected), "{} mislabeled", doc.doc_id);
    }
    let flaky = docs.iter().filter(|d| d.text.contains("flaky")).count();
    // Flaky passages fail twice before succeeding; only the first batch sees the failures.
    ensure!(
        server.requests() == 2 * docs.len() + 2 * flaky,
        "expected {} requests, saw {}",
        2 * docs.len() + 2 * flaky,
        server.requests()
    );

    let before = server.requests();
    let replay = Classifier::new(config, CompletionCache::open(&cache_path).map_err(|e| e.to_string())?);
    let c = replay
        .batch_classify(&docs, PromptMode::ThreeShot, 8)
        .map_err(|e| e.to_string())?;
    ensure!(
        server.requests() == before && replay.requests_sent() == 0,
        "cache replay hit the network"
    );
    ensure!(c.labels == a.labels, "cache replay changed labels");
    ensure!(
        started.elapsed() < Duration::from_secs(10),
        "took {:?}",
        started.elapsed()
    );
    Ok(())
}

fn label_set(seq: &[GenderLabel]) -> LabelSet {
    LabelSet::from_pairs(
        "llm:x:zero-shot",
        seq.iter().enumerate().map(|(i, l)| (format!("d{i}"), *l)),
    )
    .unwrap()
}

fn criterion_9() -> Outcome {
    let k = cohens_kappa(&label_set(&[M, M, F, N]), &label_set(&[M, F, F, N])).unwrap();
    ensure!((k - 0.63636).abs() <= 1e-5, "Cohen fixture {k}");
    let k = cohens_kappa(&label_set(&[M, F, N, F]), &label_set(&[M, F, N, F])).unwrap();
    ensure!(k == 1.0, "identical Cohen {k}");

    let fixture = AnnotationMatrix {
        counts: vec![[3, 0, 0], [1, 1, 1]],
    };
    let k = fleiss_kappa(&fixture).unwrap();
    ensure!(k.abs() <= 1e-9, "Fleiss fixture {k}");
    let unanimous = AnnotationMatrix {
        counts: vec![[3, 0, 0], [0, 3, 0], [0, 0, 3]],
    };
    let k = fleiss_kappa(&unanimous).unwrap();
    ensure!(k == 1.0, "unanimous Fleiss {k}");

    let mut rng = StdRng::seed_from_u64(9);
    let draw = |rng: &mut StdRng| [M, F, N][rng.gen_range(0..3)];
    let a: Vec<GenderLabel> = (0..10_000).map(|_| draw(&mut rng)).collect();
    let b: Vec<GenderLabel> = (0..10_000).map(|_| draw(&mut rng)).collect();
    let k = cohens_kappa(&label_set(&a), &label_set(&b)).unwrap();
    ensure!(k.abs() < 0.05, "random Cohen {k}");
    let counts = (0..10_000)
        .map(|_| {
            let mut c = [0u32; 3];
            for _ in 0..3 {
                c[rng.gen_range(0..3)] += 1;
            }
            c
        })
        .collect();
    let k = fleiss_kappa(&AnnotationMatrix { counts }).unwrap();
    ensure!(k.abs() < 0.05, "random Fleiss {k}");

    ensure!(
        majority_vote(&[M, M, F]).unwrap() == VoteOutcome::Decided(M),
        "[M,M,F] not decided"
    );
    ensure!(
        majority_vote(&[M, F, N]).unwrap() == VoteOutcome::Unresolved,
        "[M,F,N] not escalated"
    );
    Ok(())
}

const UTILITY_RUN: &str = "\
q1 Q0 a 1 9 t
q1 Q0 b 2 8 t
q1 Q0 c 3 7 t
q2 Q0 d 1 9 t
q2 Q0 e 2 8 t
q2 Q0 f 3 7 t
q2 Q0 g 4 6 t
q3 Q0 h 1 9 t
q3 Q0 i 2 8 t
q4 Q0 j 1 9 t
q4 Q0 k 2 8 t
q4 Q0 l 3 7 t
q4 Q0 m 4 6 t
q4 Q0 n 5 5 t
q5 Q0 o 1 9 t
q5 Q0 p 2 8 t
";

const UTILITY_QRELS: &str = "\
q1 0 a 1
q1 0 c 1
q1 0 x 1
q2 0 f 2
q2 0 d 0
q2 0 g 1
q3 0 zz 1
q4 0 l 3
q4 0 j 1
q4 0 n 2
q4 0 yy 2
q5 0 o 0
";

/// Recomputes RR and nDCG from explicit grade vectors.
fn oracle_utility(ranked: &[u32], all_grades: &[u32], k: usize) -> (f64, f64) {
    let top = &ranked[..ranked.len().min(k)];
    let rr = top.iter().position(|&g| g > 0).map_or(0.0, |p| 1.0 / (p + 1) as f64);
    let dcg = |gs: &[u32]| -> f64 {
        gs.iter()
            .enumerate()
            .map(|(i, &g)| g as f64 / ((i + 2) as f64).log2())
            .sum()
    };
    let mut ideal: Vec<u32> = all_grades.iter().copied().filter(|&g| g > 0).collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    ideal.truncate(k);
    let idcg = dcg(&ideal);
    (rr, if idcg == 0.0 { 0.0 } else { dcg(top) / idcg })
}

fn criterion_10() -> Outcome {
    let run = parse_run(UTILITY_RUN).map_err(|e| e.to_string())?;
    let qrels = parse_qrels(UTILITY_QRELS).map_err(|e| e.to_string())?;
    let mut judged: BTreeMap<&str, BTreeMap<&str, u32>> = BTreeMap::new();
    for line in UTILITY_QRELS.lines() {
        let f: Vec<&str> = line.split_whitespace().collect();
        judged.entry(f[0]).or_default().insert(f[2], f[3].parse().unwrap());
    }
    for k in [1, 2, 3, 10] {
        for list in run.lists.values() {
            let judgments = judged.get(list.query_id.as_str()).cloned().unwrap_or_default();
            let ranked: Vec<u32> = list
                .entries
                .iter()
                .map(|e| judgments.get(e.doc_id.as_str()).copied().unwrap_or(0))
                .collect();
            let all: Vec<u32> = judgments.values().copied().collect();
            let (rr, ndcg) = oracle_utility(&ranked, &all, k);
            let got_rr = reciprocal_rank(list, &qrels, k);
            let got_ndcg = ndcg_at(list, &qrels, k);
            ensure!(
                (got_rr - rr).abs() <= 1e-9,
                "{} RR@{k}: {got_rr} vs {rr}",
                list.query_id
            );
            ensure!(
                (got_ndcg - ndcg).abs() <= 1e-9,
                "{} nDCG@{k}: {got_ndcg} vs {ndcg}",
                list.query_id
            );
        }
    }
    let list = RankedList::from_doc_ids("q", ["r1", "n", "r2"]);
    let qrels = parse_qrels("q 0 r1 1\nq 0 r2 1\nq 0 n 0\n").unwrap();
    let v = ndcg_at(&list, &qrels, 3);
    ensure!((v - 0.91972).abs() <= 1e-4, "nDCG fixture {v}");
    Ok(())
}

/// Optional: set CWEX_DATA_DIR to a directory holding `labels.tsv` (the
/// 893-document gender labels) and `runs/*` run files; `collection.tsv` is
/// used for NFaiRR when present.
fn criterion_11() -> Option<Outcome> {
    let dir = PathBuf::from(std::env::var_os("CWEX_DATA_DIR")?);
    Some((|| {
        let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()));
        let labels = load_labels(&read(&dir.join("labels.tsv"))?, "human").map_err(|e| e.to_string())?;
        let counts = labels.counts();
        let count = |l| counts.get(&l).copied().unwrap_or(0);
        let got = (labels.len(), count(N), count(F), count(M));
        ensure!(got == (893, 636, 113, 144), "label counts {got:?}");

        let lists = WordLists::default();
        let scores: Option<HashMap<String, NeutralityScore>> = match read(&dir.join("collection.tsv")) {
            Ok(text) => Some(
                cwex::load_collection(&text)
                    .map_err(|e| e.to_string())?
                    .values()
                    .map(|d| (d.doc_id.clone(), cwex::lexical::neutrality_score(d, &lists)))
                    .collect(),
            ),
            Err(_) => None,
        };
        let mut tags = BTreeSet::new();
        let entries = std::fs::read_dir(dir.join("runs")).map_err(|e| e.to_string())?;
        for entry in entries {
            let path = entry.map_err(|e| e.to_string())?.path();
            let run = parse_run(&read(&path)?).map_err(|e| e.to_string())?;
            let neutrality = scores
                .as_ref()
                .map(|s| cwex::fairness::NeutralityInput { scores: s, pools: None });
            let report = evaluate_run(&run, &labels, neutrality, &EvalConfig::default()).map_err(|e| e.to_string())?;
            let csv = CombinedReport {
                fairness: Some(&report),
                utility: None,
            }
            .render(OutputFormat::Csv, &Default::default());
            let mut header = "query_id,cwex@0.2,cwex@0.5,cwex@0.7,delta_exposure".to_string();
            if scores.is_some() {
                header.push_str(",nfairr");
            }
            ensure!(
                csv.lines().next() == Some(header.as_str()),
                "{}: header {:?}",
                path.display(),
                csv.lines().next()
            );
            tags.insert(run.tag.clone());
        }
        ensure!(tags.len() == 4, "expected four ranker tags, found {tags:?}");
        Ok(())
    })())
}

fn criterion_12() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = StdRng::seed_from_u64(12);
    let mut run = String::new();
    let mut labels = String::new();
    let mut docs = String::new();
    let words = ["she", "he", "river", "mother", "report", "king", "field"];
    for q in 0..20 {
        for r in 1..=15 {
            let id = format!("q{q}d{r}");
            run.push_str(&format!("q{q} Q0 {id} {r} {:.3} det\n", 100.0 - r as f64));
            labels.push_str(&format!(
                "{id}\t{}\n",
                ["male", "female", "neutral"][rng.gen_range(0..3)]
            ));
            let text: Vec<&str> = (0..6).map(|_| *words.choose(&mut rng).unwrap()).collect();
            docs.push_str(&format!("{id}\t{}\n", text.join(" ")));
        }
    }
    let write = |name: &str, body: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    };
    let run = write("run.txt", &run);
    let labels = write("labels.tsv", &labels);
    let docs = write("docs.tsv", &docs);
    let mut outputs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_cwex"))
            .args(["fairness", "--run"])
            .arg(&run)
            .arg("--labels")
            .arg(&labels)
            .arg("--collection")
            .arg(&docs)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(
            status.status.success(),
            "fairness failed: {}",
            String::from_utf8_lossy(&status.stderr)
        );
        outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    ensure!(outputs[0] == outputs[1], "fairness CSV differs between runs");
    ensure!(outputs[0].len() > 100, "suspiciously short output");
    Ok(())
}

fn run_guarded(f: impl FnOnce() -> Option<Outcome>) -> Option<Outcome> {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(outcome) => outcome,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Some(Err(format!("panicked: {msg}")))
        }
    }
}

fn main() -> ExitCode {
    panic::set_hook(Box::new(|_| {}));
    let criteria: Vec<(&str, Check)> = vec![
        ("CWEx oracle equivalence", Box::new(|| Some(criterion_1()))),
        ("CWEx bounds and extremes", Box::new(|| Some(criterion_2()))),
        (
            "exposure normalization and gender-swap symmetry",
            Box::new(|| Some(criterion_3())),
        ),
        ("hand-value fixtures", Box::new(|| Some(criterion_4()))),
        ("NFaiRR baseline behavior", Box::new(|| Some(criterion_5()))),
        ("prompt fidelity", Box::new(|| Some(criterion_6()))),
        ("parser robustness", Box::new(|| Some(criterion_7()))),
        ("mock-endpoint pipeline", Box::new(|| Some(criterion_8()))),
        ("agreement statistics", Box::new(|| Some(criterion_9()))),
        ("utility metrics", Box::new(|| Some(criterion_10()))),
        ("dataset parity", Box::new(criterion_11)),
        ("end-to-end determinism", Box::new(|| Some(criterion_12()))),
    ];
    let mut failed = 0;
    for (idx, (name, check)) in criteria.into_iter().enumerate() {
        let started = Instant::now();
        let outcome = run_guarded(check);
        let elapsed = started.elapsed().as_secs_f64();
        match outcome {
            Some(Ok(())) => println!("criterion {:>2} PASS {name} ({elapsed:.2}s)", idx + 1),
            Some(Err(why)) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {why}", idx + 1);
            }
            None => println!("criterion {:>2} SKIP {name}: CWEX_DATA_DIR not set", idx + 1),
        }
    }
    if failed == 0 {
        println!("acceptance: all criteria passed or skipped");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
