//! Deterministic synthetic data: the 50-instance micro-corpus with canned
//! summarizer and reader outputs, and the separable toy preference set.
//!
//! The files under `data/` are generated from here; a test keeps them in
//! sync.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::interchange::OutputRecord;
use crate::prompting::PromptType;
use crate::toy::{TokenPair, ToyVocab};

pub const MICRO_CORPUS_SIZE: usize = 50;
pub const MICRO_SEED: u64 = 20_240_601;
pub const SEPARABLE_PAIRS: usize = 200;
pub const SEPARABLE_SEED: u64 = 7;

const FIRST: [&str; 10] = [
    "Ada", "Bruno", "Chiara", "Dmitri", "Elif", "Farid", "Greta", "Hiro", "Ines", "Jonas",
];
const LAST: [&str; 5] = ["Moreau", "Okafor", "Lindqvist", "Tanaka", "Castell"];
const CITIES: [&str; 12] = [
    "Lisbon",
    "Porto Alegre",
    "Tromso",
    "Kyoto",
    "Valparaiso",
    "Ghent",
    "Tbilisi",
    "Cork",
    "Aarhus",
    "Mombasa",
    "Quebec City",
    "Hobart",
];
const MISSING_CITIES: [&str; 4] = ["Reykjavik", "Samarkand", "Windhoek", "Ushuaia"];
const FIELDS: [&str; 8] = [
    "marine biologist",
    "glassblower",
    "cartographer",
    "railway engineer",
    "violin maker",
    "astronomer",
    "typesetter",
    "beekeeper",
];
const ORGS: [&str; 8] = [
    "Harbor Society",
    "Lantern Guild",
    "Northern Choir",
    "Tidewater Press",
    "Copper Kite Club",
    "Meridian Trust",
    "Orchard Library",
    "Salt Road Museum",
];
const FILLER: [&str; 6] = [
    "{o} moved to {c} after {y} and rarely spoke about it.",
    "Records from {c} mention {o} only briefly.",
    "In {y} a flood closed the old market in {c}.",
    "{o} corresponded with several printers in {c}.",
    "The archive in {c} was reorganised around {y}.",
    "Local newspapers described {o} as reserved.",
];

/// Indices whose stated answer is not in the context (retrieval misses).
pub const MISS_INDICES: [usize; 4] = [7, 19, 33, 46];

/// One generated micro-corpus record with its canned outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MicroRecord {
    pub id: String,
    pub title: String,
    pub question: String,
    pub answer: String,
    pub context: String,
    pub o1: String,
    pub o2: String,
    pub o3: Option<String>,
    pub reader_origin: String,
    pub reader_filtered: String,
}

fn fill(template: &str, other: &str, city: &str, year: u32) -> String {
    template
        .replace("{o}", other)
        .replace("{c}", city)
        .replace("{y}", &year.to_string())
}

/// Builds the micro-corpus records.
pub fn micro_records() -> Vec<MicroRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(MICRO_SEED);
    let names: Vec<String> = (0..MICRO_CORPUS_SIZE)
        .map(|i| format!("{} {}", FIRST[i % FIRST.len()], LAST[i / FIRST.len()]))
        .collect();
    (0..MICRO_CORPUS_SIZE)
        .map(|i| {
            let name = &names[i];
            let city = *CITIES.choose(&mut rng).expect("non-empty");
            let year: u32 = rng.random_range(1820..1960);
            let field = *FIELDS.choose(&mut rng).expect("non-empty");
            let org = *ORGS.choose(&mut rng).expect("non-empty");
            let other =
                &names[(i + 1 + rng.random_range(0..MICRO_CORPUS_SIZE - 1)) % MICRO_CORPUS_SIZE];

            let (fact, question, answer, fragment, wrong) = match i % 4 {
                0 => (
                    format!("{name} was born in {city} in {year}."),
                    format!("Where was {name} born?"),
                    city.to_owned(),
                    format!("born in {city}"),
                    CITIES
                        [(CITIES.iter().position(|c| *c == city).unwrap_or(0) + 1) % CITIES.len()]
                    .to_owned(),
                ),
                1 => (
                    format!("{name} was born in {city} in {year}."),
                    format!("In what year was {name} born?"),
                    year.to_string(),
                    format!("in {year}"),
                    (year + 3).to_string(),
                ),
                2 => (
                    format!("{name} later worked as a {field} in {city}."),
                    format!("What did {name} work as?"),
                    field.to_owned(),
                    format!("worked as a {field}"),
                    FIELDS
                        [(FIELDS.iter().position(|f| *f == field).unwrap_or(0) + 1) % FIELDS.len()]
                    .to_owned(),
                ),
                _ => (
                    format!("In {year} {name} founded the {org} in {city}."),
                    format!("What did {name} found?"),
                    format!("The {org}"),
                    format!("founded the {org}"),
                    format!(
                        "The {}",
                        ORGS[(ORGS.iter().position(|o| *o == org).unwrap_or(0) + 1) % ORGS.len()]
                    ),
                ),
            };

            let mut sentences: Vec<String> = (0..4)
                .map(|k| {
                    let c = CITIES[(i * 3 + k * 5) % CITIES.len()];
                    let t = FILLER[(i + k) % FILLER.len()];
                    fill(t, other, c, 1800 + ((i * 7 + k * 13) % 150) as u32)
                })
                .collect();
            let slot = rng.random_range(0..=sentences.len());
            sentences.insert(slot, fact.clone());
            let context = sentences.join(" ");

            let miss = MISS_INDICES.contains(&i);
            let answer = if miss {
                MISSING_CITIES[MISS_INDICES.iter().position(|m| *m == i).unwrap_or(0)].to_owned()
            } else {
                answer
            };

            let o1 = fact.clone();
            let o2 = if i % 12 == 5 {
                o1.clone()
            } else if i % 2 == 0 {
                format!("{name} is mentioned together with {other}.")
            } else {
                fact.trim_end_matches('.').to_owned()
            };
            let o3 = (i % 15 != 14).then(|| format!("{fragment}."));
            let reader_origin = if i % 5 == 3 {
                wrong.clone()
            } else {
                answer.clone()
            };
            let reader_filtered = if i % 5 == 3 || i % 7 == 2 {
                wrong
            } else {
                answer.clone()
            };

            MicroRecord {
                id: format!("micro-{i:03}"),
                title: name.clone(),
                question,
                answer,
                context,
                o1,
                o2,
                o3,
                reader_origin,
                reader_filtered,
            }
        })
        .collect()
}

#[derive(Serialize)]
struct SquadOut<'a> {
    version: &'static str,
    data: Vec<SquadArticleOut<'a>>,
}

#[derive(Serialize)]
struct SquadArticleOut<'a> {
    title: &'a str,
    paragraphs: Vec<SquadParagraphOut<'a>>,
}

#[derive(Serialize)]
struct SquadParagraphOut<'a> {
    context: &'a str,
    qas: Vec<SquadQaOut<'a>>,
}

#[derive(Serialize)]
struct SquadQaOut<'a> {
    id: &'a str,
    question: &'a str,
    answers: Vec<SquadAnswerOut<'a>>,
}

#[derive(Serialize)]
struct SquadAnswerOut<'a> {
    text: &'a str,
    answer_start: i64,
}

/// The micro-corpus as a SQuAD-v1.1-shaped document.
pub fn micro_squad_json(records: &[MicroRecord]) -> String {
    let doc = SquadOut {
        version: "1.1",
        data: records
            .iter()
            .map(|r| SquadArticleOut {
                title: &r.title,
                paragraphs: vec![SquadParagraphOut {
                    context: &r.context,
                    qas: vec![SquadQaOut {
                        id: &r.id,
                        question: &r.question,
                        answers: vec![SquadAnswerOut {
                            text: &r.answer,
                            answer_start: r
                                .context
                                .find(r.answer.as_str())
                                .map_or(-1, |p| p as i64),
                        }],
                    }],
                }],
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}

/// Canned type1/type2/type3 summaries.
pub fn micro_summaries(records: &[MicroRecord]) -> Vec<OutputRecord> {
    let mut out = Vec::new();
    for r in records {
        let rec = |kind, text: &str| OutputRecord {
            id: r.id.clone(),
            kind,
            text: text.to_owned(),
        };
        out.push(rec(PromptType::Type1, &r.o1));
        out.push(rec(PromptType::Type2, &r.o2));
        if let Some(o3) = &r.o3 {
            out.push(rec(PromptType::Type3, o3));
        }
    }
    out
}

/// Canned reader predictions over the original contexts (`filtered =
/// false`) or over the Type 1 summaries.
pub fn micro_reader_outputs(records: &[MicroRecord], filtered: bool) -> Vec<OutputRecord> {
    records
        .iter()
        .map(|r| OutputRecord {
            id: r.id.clone(),
            kind: PromptType::Reader,
            text: if filtered {
                r.reader_filtered.clone()
            } else {
                r.reader_origin.clone()
            },
        })
        .collect()
}

/// Symbolic form of a toy preference pair, as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolPair {
    pub id: String,
    pub prompt: Vec<String>,
    pub chosen: Vec<String>,
    pub rejected: Vec<String>,
}

impl SymbolPair {
    pub fn to_tokens(&self, vocab: &ToyVocab) -> crate::Result<TokenPair> {
        Ok(TokenPair {
            prompt: vocab.ids(&self.prompt)?,
            chosen: vocab.ids(&self.chosen)?,
            rejected: vocab.ids(&self.rejected)?,
        })
    }
}

/// Preference pairs whose chosen responses draw only from the lower half
/// of the content symbols and rejected ones only from the upper half.
pub fn separable_pairs(n: usize, vocab: &ToyVocab, seed: u64) -> Vec<SymbolPair> {
    let content = vocab.content_ids();
    let (good, bad) = content.split_at(content.len() / 2);
    let sym = |id: usize| vocab.symbol(id).expect("in vocab").to_owned();
    let eos = sym(vocab.eos());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let prompt = (0..4)
                .map(|_| sym(*content.choose(&mut rng).expect("content")))
                .collect();
            let len = rng.random_range(2..=4);
            let mut chosen: Vec<String> = (0..len)
                .map(|_| sym(*good.choose(&mut rng).expect("good")))
                .collect();
            let len = rng.random_range(2..=4);
            let mut rejected: Vec<String> = (0..len)
                .map(|_| sym(*bad.choose(&mut rng).expect("bad")))
                .collect();
            chosen.push(eos.clone());
            rejected.push(eos.clone());
            SymbolPair {
                id: format!("sep-{i:03}"),
                prompt,
                chosen,
                rejected,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::answer_in_context;

    #[test]
    fn micro_corpus_shape() {
        let recs = micro_records();
        assert_eq!(recs.len(), MICRO_CORPUS_SIZE);
        assert_eq!(recs, micro_records());
        for (i, r) in recs.iter().enumerate() {
            let contained = answer_in_context(&r.answer, &r.context, true);
            assert_eq!(contained, !MISS_INDICES.contains(&i), "{}", r.id);
            assert!(
                !r.question.contains(&r.answer) || r.answer.chars().all(|c| c.is_ascii_digit())
            );
        }
        // "The Org" answers only match the lowercase "the org" in normalized mode
        let founded = recs
            .iter()
            .find(|r| r.question.starts_with("What did") && r.answer.starts_with("The "))
            .unwrap();
        assert!(!answer_in_context(&founded.answer, &founded.context, false));
    }

    #[test]
    fn separable_set() {
        let v = ToyVocab::standard(16).unwrap();
        let pairs = separable_pairs(SEPARABLE_PAIRS, &v, SEPARABLE_SEED);
        assert_eq!(pairs.len(), 200);
        for p in &pairs {
            let t = p.to_tokens(&v).unwrap();
            assert_ne!(t.chosen, t.rejected);
            assert_eq!(*t.chosen.last().unwrap(), v.eos());
        }
    }
}
