//! EM, unigram F1, token counts, EPT, IRA and their aggregates.

mod normalize;
mod report;
mod scores;

pub use normalize::{normalize_answer, NormalizedText};
pub use report::{
    aggregate, aggregate_against, ept_ratio, retention, AggregateReport, ReportTable,
    RetentionPoint, REPORT_COLUMNS,
};
pub use scores::{
    answer_in_context, ept, exact_match, ira, score_row, token_count, unigram_f1, AnswerSelection,
    CharCounter, ScoreOptions, ScoreRow, TokenCounter, WhitespaceCounter,
};
