use std::collections::BTreeSet;

use proptest::prelude::*;
use sumread_core::corpus::{
    filter_answer_in_context, parse_retrieved, parse_squad, split_dataset, FilterOptions,
};
use sumread_core::interchange::{read_jsonl, write_jsonl};
use sumread_core::{ErrorMode, QaInstance, Source, Split};

/// Independent containment oracle: lowercase, drop ASCII punctuation,
/// drop standalone articles, then slide a window over the tokens.
fn oracle_tokens(s: &str) -> Vec<String> {
    let cleaned: String = s
        .to_lowercase()
        .chars()
        .filter(|c| !c.is_ascii_punctuation())
        .collect();
    cleaned
        .split_whitespace()
        .filter(|w| !matches!(*w, "a" | "an" | "the"))
        .map(str::to_owned)
        .collect()
}

fn oracle_contains(answer: &str, context: &str) -> bool {
    let a = oracle_tokens(answer);
    if a.is_empty() {
        return context.contains(answer);
    }
    let c = oracle_tokens(context);
    c.windows(a.len()).any(|w| w == a.as_slice())
}

const WORDS: &[&str] = &[
    "the",
    "a",
    "paris",
    "Paris,",
    "river",
    "1887",
    "an",
    "Bank",
    "of",
    "north-east",
    "x",
];

fn phrase(max: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(WORDS), 1..max).prop_map(|w| w.join(" "))
}

fn instance() -> impl Strategy<Value = QaInstance> {
    (
        0u32..10_000,
        phrase(4),
        prop::collection::vec(phrase(3), 1..3),
        phrase(12),
    )
        .prop_map(|(n, q, answers, c)| QaInstance {
            id: format!("q{n}"),
            question: q,
            answers,
            context: c,
            source: Source::Retrieved,
            split: Split::Train,
        })
}

fn dedup(mut v: Vec<QaInstance>) -> Vec<QaInstance> {
    let mut seen = BTreeSet::new();
    v.retain(|i| seen.insert(i.id.clone()));
    v
}

fn squad_json(items: &[QaInstance]) -> String {
    let paragraphs: Vec<_> = items
        .iter()
        .map(|i| {
            serde_json::json!({
                "context": i.context,
                "qas": [{
                    "id": i.id,
                    "question": i.question,
                    "answers": i.answers.iter().map(|a| serde_json::json!({"text": a, "answer_start": 0})).collect::<Vec<_>>(),
                }],
            })
        })
        .collect();
    serde_json::json!({"version": "1.1", "data": [{"title": "t", "paragraphs": paragraphs}]})
        .to_string()
}

proptest! {
    #[test]
    fn filter_is_idempotent(items in prop::collection::vec(instance(), 0..30), raw in any::<bool>()) {
        let opts = FilterOptions { normalize: !raw, ..FilterOptions::default() };
        let (once, _) = filter_answer_in_context(items, opts);
        let (twice, stats) = filter_answer_in_context(once.clone(), opts);
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(stats.dropped, 0);
    }

    #[test]
    fn filter_matches_bruteforce_oracle(items in prop::collection::vec(instance(), 0..30)) {
        let expected: Vec<_> = items.iter().filter(|i| oracle_contains(&i.answers[0], &i.context)).cloned().collect();
        let (kept, stats) = filter_answer_in_context(items.clone(), FilterOptions::default());
        prop_assert_eq!(&kept, &expected);
        prop_assert_eq!(stats.total, items.len());
        prop_assert_eq!(stats.kept + stats.dropped, stats.total);
    }

    #[test]
    fn raw_filter_is_substring(items in prop::collection::vec(instance(), 0..30)) {
        let opts = FilterOptions { normalize: false, ..FilterOptions::default() };
        let (kept, _) = filter_answer_in_context(items.clone(), opts);
        let expected: Vec<_> = items.into_iter().filter(|i| i.context.contains(&i.answers[0])).collect();
        prop_assert_eq!(kept, expected);
    }

    #[test]
    fn split_is_a_partition(n in 0usize..200, tr in 0.05f64..0.9, frac in 0.05f64..1.0, seed in any::<u64>()) {
        let va = (1.0 - tr) * frac;
        let items: Vec<QaInstance> = (0..n)
            .map(|k| QaInstance {
                id: format!("i{k:04}"), question: "q".into(), answers: vec!["a".into()], context: "a".into(),
                source: Source::Squad, split: Split::Train,
            })
            .collect();
        let set = split_dataset(items.clone(), (tr, va), seed).unwrap();
        let (a, b, c) = set.sizes();
        prop_assert_eq!(a + b + c, n);
        prop_assert_eq!(a, (tr * n as f64 + 1e-9).floor() as usize);
        let mut ids: Vec<&str> = set.train.iter().chain(&set.validation).chain(&set.test).map(|i| i.id.as_str()).collect();
        ids.sort_unstable();
        let all: Vec<&str> = items.iter().map(|i| i.id.as_str()).collect();
        prop_assert_eq!(ids, all);
        prop_assert!(set.train.iter().all(|i| i.split == Split::Train));
        prop_assert!(set.validation.iter().all(|i| i.split == Split::Validation));
        prop_assert!(set.test.iter().all(|i| i.split == Split::Test));
        prop_assert_eq!(split_dataset(items, (tr, va), seed).unwrap(), set);
    }

    #[test]
    fn squad_parse_serialize_roundtrip(items in prop::collection::vec(instance(), 1..20)) {
        let items: Vec<QaInstance> = dedup(items).into_iter().map(|mut i| { i.source = Source::Squad; i.split = Split::Validation; i }).collect();
        let parsed = parse_squad(squad_json(&items).as_bytes(), Split::Validation, ErrorMode::Strict).unwrap().items;
        prop_assert_eq!(&parsed, &items);
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &parsed).unwrap();
        let back: Vec<QaInstance> = read_jsonl(buf.as_slice(), ErrorMode::Strict).unwrap().items.into_iter().map(|(_, i)| i).collect();
        prop_assert_eq!(back, parsed);
    }

    #[test]
    fn retrieved_parse_keeps_rank_one(items in prop::collection::vec(instance(), 1..20)) {
        let items = dedup(items);
        let mut dump = String::new();
        for i in &items {
            let line = serde_json::json!({
                "id": i.id, "question": i.question, "answers": i.answers,
                "contexts": [{"text": i.context, "score": 2.0}, {"text": "decoy", "score": 1.0}],
            });
            dump.push_str(&line.to_string());
            dump.push('\n');
        }
        let parsed = parse_retrieved(dump.as_bytes(), Split::Test, ErrorMode::Strict).unwrap().items;
        prop_assert_eq!(parsed.len(), items.len());
        for (p, i) in parsed.iter().zip(&items) {
            prop_assert_eq!(&p.context, &i.context);
            prop_assert_eq!(p.split, Split::Test);
        }
    }
}

#[test]
fn micro_corpus_filter_drops_only_misses() {
    let parsed = parse_squad(
        sumread_core::bundled::MICRO_SQUAD_JSON.as_bytes(),
        Split::Validation,
        ErrorMode::Strict,
    )
    .unwrap();
    assert!(parsed.errors.is_empty());
    let (kept, stats) = filter_answer_in_context(parsed.items, FilterOptions::default());
    assert_eq!((stats.total, stats.kept), (50, 46));
    let kept_ids: BTreeSet<_> = kept.iter().map(|i| i.id.clone()).collect();
    for miss in sumread_core::synthetic::MISS_INDICES {
        assert!(!kept_ids.contains(&format!("micro-{miss:03}")));
    }
}
