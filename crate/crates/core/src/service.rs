//! Request-level operations shared by the HTTP service and the CLI: a
//! [`QueryState`] goes in, a serializable response or TSV comes out.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::deql::{self, TagVocabulary};
use crate::engine::{count, evaluate, highlight_roles, Corpus, Match, QuerySpec, Region, TokenRole};
use crate::error::QueryError;
use crate::export;
use crate::model::{Dataset, LabelInventory, Signal, SignalInventory};
use crate::state::{QueryState, StateError};
use crate::stats::{self, Breakdown, Comparison};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ServiceError {
    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("cannot load dataset `{id}`: {message}")]
    Load { id: String, message: String },
}

impl ServiceError {
    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownDataset(_) => "unknown_dataset",
            ServiceError::Query(QueryError::Parse(_)) => "parse_error",
            ServiceError::Query(QueryError::Validation(_)) => "invalid_filter",
            ServiceError::State(StateError::Token(_)) => "bad_token",
            ServiceError::State(StateError::Invalid(_)) => "invalid_state",
            ServiceError::Load { .. } => "load_failed",
        }
    }

    pub fn detail(&self) -> Value {
        match self {
            ServiceError::UnknownDataset(id) => json!({ "dataset": id }),
            ServiceError::Query(QueryError::Parse(e)) => {
                json!({ "position": e.position, "message": e.message })
            }
            ServiceError::Query(QueryError::Validation(v)) => {
                json!({ "filter": v.filter, "value": v.value, "allowed": v.allowed })
            }
            ServiceError::Load { id, message } => json!({ "dataset": id, "message": message }),
            ServiceError::State(_) => Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetInfo {
    pub dataset_id: String,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub display: BTreeMap<String, String>,
    pub relations: usize,
    pub tokens: usize,
    pub sentences: usize,
    pub documents: usize,
    pub has_signals: bool,
    pub labels: LabelInventory,
    pub signals: SignalInventory,
    pub metadata_keys: Vec<String>,
}

impl DatasetInfo {
    pub fn of(ds: &Dataset) -> Self {
        DatasetInfo {
            dataset_id: ds.dataset_id.clone(),
            display: ds.display.clone(),
            relations: ds.relations.len(),
            tokens: ds.token_count(),
            sentences: ds.sentence_count(),
            documents: ds.documents.len(),
            has_signals: ds.has_signals,
            labels: ds.label_inventory.clone(),
            signals: ds.signal_inventory.clone(),
            metadata_keys: ds.metadata_keys.iter().cloned().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchView {
    pub rel_id: String,
    pub doc_id: String,
    pub disrpt_label: String,
    pub orig_label: String,
    pub direction: String,
    pub matched_token_positions: Vec<u32>,
    pub signals: Vec<Signal>,
    /// Sentence window (plus out-of-window signal tokens) with roles.
    pub tokens: Vec<TokenRole>,
}

impl MatchView {
    pub fn new(m: &Match, corpus: &Corpus) -> Self {
        let rel = &corpus.dataset().relations[m.rel_index];
        MatchView {
            rel_id: rel.rel_id.clone(),
            doc_id: rel.doc_id.clone(),
            disrpt_label: rel.disrpt_label.clone(),
            orig_label: rel.orig_label.clone(),
            direction: rel.direction.to_string(),
            matched_token_positions: m.matched_token_positions.clone(),
            signals: rel.signals.clone(),
            tokens: highlight_roles(m, corpus),
        }
    }

    /// One-line text rendering: `[1 ...]` and `[2 ...]` bracket the
    /// arguments, `*form*` marks query matches, `form{dm}` signal tokens.
    pub fn text_line(&self) -> String {
        let mut out = Vec::new();
        let mut open: Option<Region> = None;
        for t in self.tokens.iter().filter(|t| t.region != Region::Outside) {
            let arg = matches!(t.region, Region::Arg1 | Region::Arg2).then_some(t.region);
            if open != arg {
                if open.is_some() {
                    out.push("]".to_string());
                }
                match arg {
                    Some(Region::Arg1) => out.push("[1".to_string()),
                    Some(_) => out.push("[2".to_string()),
                    None => {}
                }
                open = arg;
            }
            let mut w = if t.query_match { format!("*{}*", t.form) } else { t.form.clone() };
            if !t.signals.is_empty() {
                w.push_str(&format!("{{{}}}", t.signals.join(",")));
            }
            out.push(w);
        }
        if open.is_some() {
            out.push("]".to_string());
        }
        out.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryResponse {
    pub dataset: String,
    pub total_hits: usize,
    pub offset: usize,
    pub page_size: usize,
    pub matches: Vec<MatchView>,
    /// Evaluation time only.
    pub elapsed_ms: f64,
}

/// Tag vocabulary covering every given corpus.
fn merged_vocab(corpora: &[&Corpus]) -> TagVocabulary {
    let mut v = TagVocabulary::default();
    for c in corpora {
        v.upos.extend(c.vocab().upos.iter().cloned());
        v.deprel.extend(c.vocab().deprel.iter().cloned());
    }
    v
}

/// Parses the state's query and validates its filters on `corpus`.
pub fn compile(state: &QueryState, corpus: &Corpus) -> Result<QuerySpec, ServiceError> {
    Ok(QuerySpec::compile(&state.query, state.options, state.filters.clone(), corpus)?)
}

fn analysis_spec(state: &QueryState, corpora: &[&Corpus]) -> Result<QuerySpec, ServiceError> {
    let ast = deql::parse(&state.query, &merged_vocab(corpora)).map_err(QueryError::from)?;
    let datasets: Vec<&Dataset> = corpora.iter().map(|c| c.dataset()).collect();
    state.filters.validate_against(&datasets).map_err(QueryError::from)?;
    Ok(QuerySpec::new(ast, state.options, state.analysis_filters()))
}

pub fn query(state: &QueryState, corpus: &Corpus) -> Result<QueryResponse, ServiceError> {
    let spec = compile(state, corpus)?;
    let start = Instant::now();
    let matches = evaluate(&spec, corpus);
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    let page = matches
        .iter()
        .skip(state.offset)
        .take(state.page_size)
        .map(|m| MatchView::new(m, corpus))
        .collect();
    Ok(QueryResponse {
        dataset: corpus.id().to_string(),
        total_hits: matches.len(),
        offset: state.offset,
        page_size: state.page_size,
        matches: page,
        elapsed_ms,
    })
}

pub fn count_hits(state: &QueryState, corpus: &Corpus) -> Result<usize, ServiceError> {
    Ok(count(&compile(state, corpus)?, corpus))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakdownResponse {
    pub dataset: String,
    /// Relations the breakdown was computed over.
    pub total_matches: usize,
    pub variable: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub secondary: Option<String>,
    /// `"not_applicable"` when a cross-table has fewer than 2×2 cells.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_status: Option<&'static str>,
    pub result: Breakdown,
}

/// One-variable breakdown (`with_secondary = false`) or two-variable
/// breakdown of the state's matches.
pub fn breakdown(state: &QueryState, corpus: &Corpus, with_secondary: bool) -> Result<BreakdownResponse, ServiceError> {
    let spec = analysis_spec(state, &[corpus])?;
    let (primary, secondary) = state.variables()?;
    let secondary = if with_secondary {
        Some(secondary.ok_or_else(|| StateError::Invalid("no cross-tabulation variable selected".into()))?)
    } else {
        None
    };
    let matches = evaluate(&spec, corpus);
    let result = stats::breakdown(&matches, &primary, secondary.as_ref(), corpus.dataset(), state.crosstab_options());
    let test_status = match &result {
        Breakdown::CrossTab { table } if table.test.is_none() => Some("not_applicable"),
        _ => None,
    };
    Ok(BreakdownResponse {
        dataset: corpus.id().to_string(),
        total_matches: matches.len(),
        variable: primary.to_string(),
        secondary: secondary.map(|v| v.to_string()),
        test_status,
        result,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareResponse {
    pub dataset_a: String,
    pub dataset_b: String,
    pub variable: String,
    pub matches_a: usize,
    pub matches_b: usize,
    pub result: Comparison,
}

/// Compares the primary breakdown variable between `a` and `b`. Filter
/// values need only exist in one of them.
pub fn compare(state: &QueryState, a: &Corpus, b: &Corpus) -> Result<CompareResponse, ServiceError> {
    let spec = analysis_spec(state, &[a, b])?;
    let (var, _) = state.variables()?;
    let (ma, mb) = (evaluate(&spec, a), evaluate(&spec, b));
    Ok(CompareResponse {
        dataset_a: a.id().to_string(),
        dataset_b: b.id().to_string(),
        variable: var.to_string(),
        matches_a: ma.len(),
        matches_b: mb.len(),
        result: stats::compare_matches(&ma, a.dataset(), &mb, b.dataset(), &var),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportKind {
    Concordance,
    Freq,
    Crosstab,
    Compare,
}

impl ExportKind {
    pub fn parse(s: &str) -> Option<ExportKind> {
        match s {
            "concordance" => Some(ExportKind::Concordance),
            "freq" => Some(ExportKind::Freq),
            "crosstab" => Some(ExportKind::Crosstab),
            "compare" => Some(ExportKind::Compare),
            _ => None,
        }
    }

    /// The view a state describes: comparison, cross-table, breakdown, or
    /// the plain concordance.
    pub fn infer(state: &QueryState) -> ExportKind {
        match (&state.breakdown, &state.crosstab, &state.compare) {
            (Some(_), _, Some(_)) => ExportKind::Compare,
            (Some(_), Some(_), None) => ExportKind::Crosstab,
            (Some(_), None, None) => ExportKind::Freq,
            (None, _, _) => ExportKind::Concordance,
        }
    }
}

/// TSV for a state. `other` is the comparison corpus for
/// [`ExportKind::Compare`].
pub fn export_tsv(
    state: &QueryState,
    kind: ExportKind,
    corpus: &Corpus,
    other: Option<&Corpus>,
) -> Result<String, ServiceError> {
    match kind {
        ExportKind::Concordance => {
            let spec = compile(state, corpus)?;
            Ok(export::concordance_tsv(&evaluate(&spec, corpus), corpus.dataset()))
        }
        ExportKind::Freq => Ok(export::breakdown_tsv(&breakdown(state, corpus, false)?.result)),
        ExportKind::Crosstab => Ok(export::breakdown_tsv(&breakdown(state, corpus, true)?.result)),
        ExportKind::Compare => {
            let b = other.ok_or_else(|| StateError::Invalid("no comparison dataset selected".into()))?;
            let r = compare(state, corpus, b)?;
            Ok(export::compare_tsv(&r.result, &r.dataset_a, &r.dataset_b))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{LabelFilter, LabelKind};
    use crate::synth::FixtureBuilder;

    fn corpus() -> Corpus {
        let mut b = FixtureBuilder::new("svc");
        b.doc("GUM_news_svc");
        b.sentence("If/if/SCONJ/mark it/it/PRON/nsubj rains/rain/VERB/advcl we/we/PRON/nsubj stay/stay/VERB/root ./././punct");
        for i in 0..120 {
            let label = if i % 3 == 0 { "CONDITION" } else { "ELABORATION" };
            b.relation("1-3", "4-5", "1>2", label, &label.to_lowercase(), if i % 2 == 0 { "dm;dm;1" } else { "" });
        }
        Corpus::new(b.build().unwrap())
    }

    #[test]
    fn pages_are_stable_and_cover_all_hits() {
        let c = corpus();
        let mut s = QueryState::new("svc", "");
        let mut seen = Vec::new();
        for page in 0..3 {
            s.offset = page * 50;
            let r = query(&s, &c).unwrap();
            assert_eq!(r.total_hits, 120);
            seen.extend(r.matches.iter().map(|m| m.rel_id.clone()));
            let again = query(&s, &c).unwrap();
            assert_eq!(again.matches, r.matches);
        }
        assert_eq!(seen.len(), 120);
        s.offset = 150;
        assert!(query(&s, &c).unwrap().matches.is_empty());
    }

    #[test]
    fn text_line_marks_arguments_matches_and_signals() {
        let c = corpus();
        let r = query(&QueryState::new("svc", "rains"), &c).unwrap();
        assert_eq!(r.matches[0].text_line(), "[1 If{dm} it *rains* ] [2 we stay ] .");
    }

    #[test]
    fn error_codes_and_details() {
        let c = corpus();
        let e = query(&QueryState::new("svc", "a || b || c"), &c).unwrap_err();
        assert_eq!(e.code(), "parse_error");
        assert!(e.to_string().contains("multiple operators"));
        let mut s = QueryState::new("svc", "");
        s.filters.label = Some(LabelFilter {
            value: "NOPE".into(),
            negated: false,
            which: LabelKind::Disrpt,
        });
        let e = query(&s, &c).unwrap_err();
        assert_eq!(e.code(), "invalid_filter");
        assert_eq!(e.detail()["allowed"][0], "CONDITION");
    }

    #[test]
    fn export_kind_follows_state() {
        let c = corpus();
        let mut s = QueryState::new("svc", "");
        assert_eq!(ExportKind::infer(&s), ExportKind::Concordance);
        assert_eq!(export_tsv(&s, ExportKind::Concordance, &c, None).unwrap().lines().count(), 121);
        s.breakdown = Some("disrpt_label".into());
        let tsv = export_tsv(&s, ExportKind::infer(&s), &c, None).unwrap();
        assert_eq!(tsv, "value\tcount\tpercent\nELABORATION\t80\t66.6667\nCONDITION\t40\t33.3333\n");
        s.crosstab = Some("signal_type".into());
        assert_eq!(ExportKind::infer(&s), ExportKind::Crosstab);
        let r = breakdown(&s, &c, true).unwrap();
        assert!(r.test_status.is_none());
        s.compare = Some("svc".into());
        let tsv = export_tsv(&s, ExportKind::infer(&s), &c, Some(&c)).unwrap();
        assert!(tsv.starts_with("value\tcount_a"));
    }

    #[test]
    fn filter_match_breakdown_sees_both_outcomes() {
        let c = corpus();
        let mut s = QueryState::new("svc", "");
        s.filters.label = Some(LabelFilter {
            value: "CONDITION".into(),
            negated: false,
            which: LabelKind::Disrpt,
        });
        s.breakdown = Some("filter_match:label".into());
        let r = breakdown(&s, &c, false).unwrap();
        assert_eq!(r.total_matches, 120);
        let Breakdown::Frequencies { table } = r.result else { panic!() };
        assert_eq!(table.rows[0].value, "no");
        assert_eq!(table.rows[0].count, 80);
        // the concordance still applies the filter
        assert_eq!(query(&s, &c).unwrap().total_hits, 40);
    }
}
