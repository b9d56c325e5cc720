//! SFT and DPO dataset construction from per-instance summarizer outputs.
//!
//! The prompt side of every example is the Type 2 rendering of
//! (question, context). SFT targets and DPO "chosen" responses are the
//! Type 1 summary O1; the DPO "rejected" response is O2 or O3.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::QaInstance;
use crate::error::{Error, Result};
use crate::interchange::OutputRecord;
use crate::prompting::{render_type2, PromptType, TYPE2_TEMPLATE};

/// Summaries generated for one instance, by prompt type.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SummaryOutputs {
    pub o1: Option<String>,
    pub o2: Option<String>,
    pub o3: Option<String>,
}

/// Summarizer outputs keyed by instance id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OutputTable {
    by_id: HashMap<String, SummaryOutputs>,
}

impl OutputTable {
    /// Collects type1/2/3 records; reader records are ignored. A repeated
    /// (id, kind) is an error.
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a OutputRecord>) -> Result<Self> {
        let mut table = OutputTable::default();
        for rec in records {
            let entry = table.by_id.entry(rec.id.clone()).or_default();
            let slot = match rec.kind {
                PromptType::Type1 => &mut entry.o1,
                PromptType::Type2 => &mut entry.o2,
                PromptType::Type3 => &mut entry.o3,
                PromptType::Reader => continue,
            };
            if slot.replace(rec.text.clone()).is_some() {
                return Err(Error::arg(format!(
                    "duplicate {} output for id `{}`",
                    rec.kind, rec.id
                )));
            }
        }
        Ok(table)
    }

    pub fn insert(&mut self, id: impl Into<String>, outputs: SummaryOutputs) {
        self.by_id.insert(id.into(), outputs);
    }

    pub fn get(&self, id: &str) -> Option<&SummaryOutputs> {
        self.by_id.get(id)
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftExample {
    pub id: String,
    pub input: String,
    pub target: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DpoVariant {
    #[serde(rename = "o1_vs_o2")]
    O1VsO2,
    #[serde(rename = "o1_vs_o3")]
    O1VsO3,
}

impl fmt::Display for DpoVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DpoVariant::O1VsO2 => "o1_vs_o2",
            DpoVariant::O1VsO3 => "o1_vs_o3",
        })
    }
}

impl FromStr for DpoVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "o1_vs_o2" | "o1o2" => Ok(DpoVariant::O1VsO2),
            "o1_vs_o3" | "o1o3" => Ok(DpoVariant::O1VsO3),
            other => Err(Error::arg(format!("unknown DPO variant `{other}`"))),
        }
    }
}

/// The `pairs.jsonl` record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub id: String,
    pub x: String,
    pub chosen: String,
    pub rejected: String,
    pub variant: DpoVariant,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairBuildStats {
    pub candidates: usize,
    pub built: usize,
    pub dropped_identical: usize,
    pub dropped_missing_output: usize,
}

impl fmt::Display for PairBuildStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "candidates={} built={} dropped_identical={} dropped_missing_output={}",
            self.candidates, self.built, self.dropped_identical, self.dropped_missing_output
        )
    }
}

fn present(text: Option<&String>) -> Option<&str> {
    text.map(String::as_str).filter(|t| !t.trim().is_empty())
}

fn by_id(instances: &[QaInstance]) -> BTreeMap<&str, &QaInstance> {
    instances.iter().map(|i| (i.id.as_str(), i)).collect()
}

/// One example per instance that has a non-empty O1, ordered by id.
pub fn build_sft_dataset(
    instances: &[QaInstance],
    outputs: &OutputTable,
) -> (Vec<SftExample>, PairBuildStats) {
    let mut stats = PairBuildStats::default();
    let mut examples = Vec::new();
    for (id, inst) in by_id(instances) {
        stats.candidates += 1;
        match outputs.get(id).and_then(|o| present(o.o1.as_ref())) {
            Some(target) => {
                examples.push(SftExample {
                    id: id.to_owned(),
                    input: render_type2(&inst.question, &inst.context),
                    target: target.to_owned(),
                });
                stats.built += 1;
            }
            None => stats.dropped_missing_output += 1,
        }
    }
    (examples, stats)
}

/// One (O1, O2|O3) pair per instance, ordered by id. Byte-identical
/// chosen/rejected texts are dropped and counted.
pub fn build_dpo_dataset(
    instances: &[QaInstance],
    outputs: &OutputTable,
    variant: DpoVariant,
) -> (Vec<PreferencePair>, PairBuildStats) {
    let mut stats = PairBuildStats::default();
    let mut pairs = Vec::new();
    for (id, inst) in by_id(instances) {
        stats.candidates += 1;
        let Some(out) = outputs.get(id) else {
            stats.dropped_missing_output += 1;
            continue;
        };
        let rejected = match variant {
            DpoVariant::O1VsO2 => &out.o2,
            DpoVariant::O1VsO3 => &out.o3,
        };
        let (Some(chosen), Some(rejected)) = (present(out.o1.as_ref()), present(rejected.as_ref()))
        else {
            stats.dropped_missing_output += 1;
            continue;
        };
        if chosen == rejected {
            stats.dropped_identical += 1;
            continue;
        }
        pairs.push(PreferencePair {
            id: id.to_owned(),
            x: render_type2(&inst.question, &inst.context),
            chosen: chosen.to_owned(),
            rejected: rejected.to_owned(),
            variant,
        });
        stats.built += 1;
    }
    (pairs, stats)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DuplicateId {
    pub id: String,
    pub lines: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairIssue {
    pub line: usize,
    pub id: String,
    pub problem: String,
}

/// Findings of [`validate_pairs`]; empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub checked: usize,
    pub duplicate_ids: Vec<DuplicateId>,
    pub empty_fields: Vec<PairIssue>,
    pub identical_pairs: Vec<PairIssue>,
    pub prompt_shape: Vec<PairIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.duplicate_ids.is_empty()
            && self.empty_fields.is_empty()
            && self.identical_pairs.is_empty()
            && self.prompt_shape.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.duplicate_ids {
            let lines: Vec<String> = d.lines.iter().map(ToString::to_string).collect();
            writeln!(f, "duplicate id `{}` on lines {}", d.id, lines.join(", "))?;
        }
        for (what, list) in [
            ("empty field", &self.empty_fields),
            ("identical chosen/rejected", &self.identical_pairs),
            ("prompt shape", &self.prompt_shape),
        ] {
            for i in list {
                writeln!(f, "line {} (`{}`): {}: {}", i.line, i.id, what, i.problem)?;
            }
        }
        Ok(())
    }
}

/// Checks a rendered `x` against the Type 2 template layout.
fn type2_shape_problem(x: &str) -> Option<&'static str> {
    let header = TYPE2_TEMPLATE.lines().next().unwrap_or_default();
    if !x.starts_with(header) {
        return Some("missing Type 2 header line");
    }
    if !x.contains("\nContext: ") {
        return Some("missing Context: line");
    }
    if !x.contains("\nQuestion: ") {
        return Some("missing Question: line");
    }
    if x.contains("\nAnswer: ") {
        return Some("unexpected Answer: line");
    }
    if !x.ends_with("\nOutput:") {
        return Some("missing trailing Output: line");
    }
    None
}

/// Reports duplicate ids, empty fields, identical pairs and prompts that
/// don't follow the Type 2 layout. `pairs` carry their 1-based line numbers.
pub fn validate_pairs(pairs: &[(usize, PreferencePair)]) -> ValidationReport {
    let mut report = ValidationReport {
        checked: pairs.len(),
        ..Default::default()
    };
    let mut lines_by_id: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (line, pair) in pairs {
        lines_by_id.entry(pair.id.as_str()).or_default().push(*line);
        let issue = |problem: &str| PairIssue {
            line: *line,
            id: pair.id.clone(),
            problem: problem.to_owned(),
        };
        for (name, value) in [
            ("id", &pair.id),
            ("x", &pair.x),
            ("chosen", &pair.chosen),
            ("rejected", &pair.rejected),
        ] {
            if value.trim().is_empty() {
                report.empty_fields.push(issue(name));
            }
        }
        if !pair.chosen.is_empty() && pair.chosen == pair.rejected {
            report.identical_pairs.push(issue("chosen equals rejected"));
        }
        if let Some(problem) = type2_shape_problem(&pair.x) {
            report.prompt_shape.push(issue(problem));
        }
    }
    report.duplicate_ids = lines_by_id
        .into_iter()
        .filter(|(_, lines)| lines.len() > 1)
        .map(|(id, lines)| DuplicateId {
            id: id.to_owned(),
            lines,
        })
        .collect();
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Source, Split};

    fn inst(id: &str) -> QaInstance {
        QaInstance {
            id: id.into(),
            question: format!("what is {id}?"),
            answers: vec!["zzanswer".into()],
            context: format!("context of {id}."),
            source: Source::Squad,
            split: Split::Train,
        }
    }

    fn outs(o1: Option<&str>, o2: Option<&str>, o3: Option<&str>) -> SummaryOutputs {
        SummaryOutputs {
            o1: o1.map(Into::into),
            o2: o2.map(Into::into),
            o3: o3.map(Into::into),
        }
    }

    #[test]
    fn sft_counts_missing() {
        let xs: Vec<_> = ["e", "a", "c", "b", "d"].into_iter().map(inst).collect();
        let mut table = OutputTable::default();
        for id in ["a", "b", "d", "e"] {
            table.insert(id, outs(Some("sum"), None, None));
        }
        let (ex, stats) = build_sft_dataset(&xs, &table);
        assert_eq!(ex.len(), 4);
        assert_eq!(stats.dropped_missing_output, 1);
        assert_eq!(
            ex.iter().map(|e| e.id.as_str()).collect::<Vec<_>>(),
            ["a", "b", "d", "e"]
        );
        assert!(ex
            .iter()
            .all(|e| !e.input.contains("zzanswer") && e.input.contains("what is")));
        assert_eq!(ex[0].input, render_type2("what is a?", "context of a."));
    }

    #[test]
    fn dpo_pairs() {
        let xs = vec![inst("a"), inst("b")];
        let mut table = OutputTable::default();
        table.insert("a", outs(Some("s1"), Some("s2"), Some("s3")));
        table.insert("b", outs(Some("same"), Some("same"), Some("other")));
        let (pairs, stats) = build_dpo_dataset(&xs, &table, DpoVariant::O1VsO2);
        assert_eq!(pairs.len(), 1);
        assert_eq!(
            (pairs[0].chosen.as_str(), pairs[0].rejected.as_str()),
            ("s1", "s2")
        );
        assert_eq!(stats.dropped_identical, 1);

        let (pairs3, stats3) = build_dpo_dataset(&xs, &table, DpoVariant::O1VsO3);
        assert_eq!(stats3.built, 2);
        assert_eq!(pairs3[1].rejected, "other");
        assert_eq!(pairs3[1].variant, DpoVariant::O1VsO3);
    }

    #[test]
    fn variant_parsing() {
        assert_eq!(
            "o1_vs_o3".parse::<DpoVariant>().unwrap(),
            DpoVariant::O1VsO3
        );
        assert!("o2_vs_o3".parse::<DpoVariant>().is_err());
        assert_eq!(
            serde_json::to_string(&DpoVariant::O1VsO2).unwrap(),
            "\"o1_vs_o2\""
        );
    }

    #[test]
    fn output_table_duplicates() {
        let rec = OutputRecord {
            id: "a".into(),
            kind: PromptType::Type1,
            text: "t".into(),
        };
        assert!(OutputTable::from_records([&rec, &rec]).is_err());
        let reader = OutputRecord {
            kind: PromptType::Reader,
            ..rec.clone()
        };
        let t = OutputTable::from_records([&rec, &reader, &reader]).unwrap();
        assert_eq!(t.get("a").unwrap().o1.as_deref(), Some("t"));
    }

    fn pair(id: &str, x: &str) -> PreferencePair {
        PreferencePair {
            id: id.into(),
            x: x.into(),
            chosen: "c".into(),
            rejected: "r".into(),
            variant: DpoVariant::O1VsO2,
        }
    }

    #[test]
    fn validation() {
        let good = render_type2("q?", "c.");
        let clean = vec![(1, pair("a", &good)), (2, pair("b", &good))];
        assert!(validate_pairs(&clean).is_valid());

        let dup = vec![
            (1, pair("a", &good)),
            (2, pair("b", &good)),
            (3, pair("a", &good)),
        ];
        let r = validate_pairs(&dup);
        assert_eq!(
            r.duplicate_ids,
            vec![DuplicateId {
                id: "a".into(),
                lines: vec![1, 3]
            }]
        );

        let no_q = good.replace("\nQuestion: q?", "");
        let r = validate_pairs(&[(1, pair("a", &no_q))]);
        assert!(!r.is_valid());
        assert_eq!(r.prompt_shape[0].problem, "missing Question: line");

        let mut empty = pair("a", &good);
        empty.rejected = " ".into();
        assert_eq!(validate_pairs(&[(4, empty)]).empty_fields[0].line, 4);
    }
}
