//! Relation-centric data model.
//!
//! Every search unit is a [`Relation`]: two possibly discontinuous argument
//! spans aligned to document token positions, the same-sentence context
//! around them, labels, a direction and the signals attached to it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::IntegrityError;

/// One corpus token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenRecord {
    pub sent_index: u32,
    pub tok_index_doc: u32,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub deprel: String,
    /// Lowercased `form`, precomputed for case-insensitive matching.
    pub form_folded: String,
    /// Lowercased `lemma`.
    pub lemma_folded: String,
}

impl TokenRecord {
    pub fn new(
        sent_index: u32,
        tok_index_doc: u32,
        form: impl Into<String>,
        lemma: impl Into<String>,
        upos: impl Into<String>,
        deprel: impl Into<String>,
    ) -> Self {
        let form = form.into();
        let lemma = lemma.into();
        TokenRecord {
            sent_index,
            tok_index_doc,
            form_folded: form.to_lowercase(),
            lemma_folded: lemma.to_lowercase(),
            form,
            lemma,
            upos: upos.into(),
            deprel: deprel.into(),
        }
    }

    /// The deprel without its `:subtype` suffix.
    pub fn deprel_base(&self) -> &str {
        deprel_base(&self.deprel)
    }
}

pub fn deprel_base(deprel: &str) -> &str {
    deprel.split_once(':').map_or(deprel, |(base, _)| base)
}

/// A set of document token positions stored as sorted, non-overlapping,
/// non-adjacent inclusive ranges.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    ranges: Vec<(u32, u32)>,
}

impl Span {
    pub fn empty() -> Self {
        Span::default()
    }

    /// Builds a span from ranges that are already sorted, disjoint and
    /// non-adjacent. Use [`Span::from_positions`] or [`Span::normalized`]
    /// otherwise.
    pub fn from_sorted_ranges(ranges: Vec<(u32, u32)>) -> Self {
        debug_assert!(ranges.iter().all(|&(s, e)| s <= e));
        debug_assert!(ranges.windows(2).all(|w| w[0].1 + 1 < w[1].0));
        Span { ranges }
    }

    /// Sorts and merges overlapping or adjacent ranges.
    pub fn normalized(mut ranges: Vec<(u32, u32)>) -> Self {
        ranges.sort_unstable();
        let mut merged: Vec<(u32, u32)> = Vec::with_capacity(ranges.len());
        for (s, e) in ranges {
            debug_assert!(s <= e);
            match merged.last_mut() {
                Some(last) if s <= last.1.saturating_add(1) => last.1 = last.1.max(e),
                _ => merged.push((s, e)),
            }
        }
        Span { ranges: merged }
    }

    pub fn from_positions<I: IntoIterator<Item = u32>>(positions: I) -> Self {
        Span::normalized(positions.into_iter().map(|p| (p, p)).collect())
    }

    pub fn ranges(&self) -> &[(u32, u32)] {
        &self.ranges
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    /// Number of token positions covered.
    pub fn len(&self) -> usize {
        self.ranges.iter().map(|&(s, e)| (e - s + 1) as usize).sum()
    }

    pub fn first(&self) -> Option<u32> {
        self.ranges.first().map(|r| r.0)
    }

    pub fn last(&self) -> Option<u32> {
        self.ranges.last().map(|r| r.1)
    }

    pub fn contains(&self, pos: u32) -> bool {
        // ranges are sorted by start; find the last range starting at or before pos
        let idx = self.ranges.partition_point(|&(s, _)| s <= pos);
        idx > 0 && self.ranges[idx - 1].1 >= pos
    }

    /// True if any position of the span lies within `[lo, hi]`.
    pub fn intersects_range(&self, lo: u32, hi: u32) -> bool {
        let idx = self.ranges.partition_point(|&(_, e)| e < lo);
        idx < self.ranges.len() && self.ranges[idx].0 <= hi
    }

    pub fn positions(&self) -> impl Iterator<Item = u32> + '_ {
        self.ranges.iter().flat_map(|&(s, e)| s..=e)
    }

    pub fn union(&self, other: &Span) -> Span {
        let mut all = self.ranges.clone();
        all.extend_from_slice(&other.ranges);
        Span::normalized(all)
    }

    pub fn is_disjoint(&self, other: &Span) -> bool {
        other
            .ranges
            .iter()
            .all(|&(s, e)| !self.intersects_range(s, e))
    }

    /// Renders the span as a 1-based range expression (`"5-8,12"`).
    pub fn to_range_expr(&self) -> String {
        self.ranges
            .iter()
            .map(|&(s, e)| {
                if s == e {
                    (s + 1).to_string()
                } else {
                    format!("{}-{}", s + 1, e + 1)
                }
            })
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub enum Direction {
    #[default]
    #[serde(rename = "1>2")]
    OneToTwo,
    #[serde(rename = "1<2")]
    TwoToOne,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::OneToTwo => "1>2",
            Direction::TwoToOne => "1<2",
        }
    }

    pub fn parse(s: &str) -> Option<Direction> {
        match s {
            "1>2" => Some(Direction::OneToTwo),
            "1<2" => Some(Direction::TwoToOne),
            _ => None,
        }
    }

    pub fn flipped(self) -> Direction {
        match self {
            Direction::OneToTwo => Direction::TwoToOne,
            Direction::TwoToOne => Direction::OneToTwo,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signal {
    pub sig_type: String,
    pub sig_subtype: Option<String>,
    pub token_positions: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    /// `"<dataset>:<ordinal>"`, ordinal counted over `.rels` data lines.
    pub rel_id: String,
    pub ordinal: usize,
    /// Index into [`Dataset::documents`].
    pub doc: usize,
    pub doc_id: String,
    pub arg1: Span,
    pub arg2: Span,
    pub pre_ctx: Span,
    pub inter_ctx: Span,
    pub post_ctx: Span,
    pub direction: Direction,
    pub disrpt_label: String,
    pub orig_label: String,
    pub signals: Vec<Signal>,
    pub metadata: BTreeMap<String, String>,
}

impl Relation {
    pub fn source(&self) -> &Span {
        match self.direction {
            Direction::OneToTwo => &self.arg1,
            Direction::TwoToOne => &self.arg2,
        }
    }

    pub fn target(&self) -> &Span {
        match self.direction {
            Direction::OneToTwo => &self.arg2,
            Direction::TwoToOne => &self.arg1,
        }
    }

    pub fn args(&self) -> Span {
        self.arg1.union(&self.arg2)
    }

    /// arg1 ∪ arg2 ∪ all three contexts.
    pub fn window(&self) -> Span {
        Span::normalized(
            [
                &self.arg1,
                &self.arg2,
                &self.pre_ctx,
                &self.inter_ctx,
                &self.post_ctx,
            ]
            .iter()
            .flat_map(|s| s.ranges().iter().copied())
            .collect(),
        )
    }

    pub fn has_signal_type(&self, sig_type: &str) -> bool {
        self.signals.iter().any(|s| s.sig_type == sig_type)
    }

    pub fn has_signal_subtype(&self, subtype: &str) -> bool {
        self.signals
            .iter()
            .any(|s| s.sig_subtype.as_deref() == Some(subtype))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub tokens: Vec<TokenRecord>,
    /// Inclusive token ranges of each sentence, in order.
    pub sentences: Vec<(u32, u32)>,
}

impl Document {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LabelInventory {
    pub disrpt: BTreeSet<String>,
    pub orig: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SignalInventory {
    pub types: BTreeSet<String>,
    pub subtypes: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    pub upos: BTreeSet<String>,
    pub deprel: BTreeSet<String>,
    /// Folded lemma → number of occurrences.
    pub lemmas: HashMap<String, u32>,
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub dataset_id: String,
    pub documents: Vec<Document>,
    pub doc_index: HashMap<String, usize>,
    pub relations: Vec<Relation>,
    pub label_inventory: LabelInventory,
    pub signal_inventory: SignalInventory,
    pub vocab: Vocabulary,
    pub metadata_keys: BTreeSet<String>,
    /// False when the source `.rels` had no signal column.
    pub has_signals: bool,
    /// Free-form display metadata from the manifest (language, framework...).
    pub display: BTreeMap<String, String>,
}

impl Dataset {
    pub fn doc_len(&self, doc_id: &str) -> Option<usize> {
        self.doc_index.get(doc_id).map(|&i| self.documents[i].len())
    }

    pub fn document(&self, rel: &Relation) -> &Document {
        &self.documents[rel.doc]
    }

    pub fn token_count(&self) -> usize {
        self.documents.iter().map(Document::len).sum()
    }

    pub fn sentence_count(&self) -> usize {
        self.documents.iter().map(|d| d.sentences.len()).sum()
    }
}

/// Union of the complete sentences that intersect `arg1 ∪ arg2`.
pub fn relation_sentence_window(rel: &Relation, ds: &Dataset) -> Result<Span, IntegrityError> {
    let doc = ds
        .doc_index
        .get(&rel.doc_id)
        .map(|&i| &ds.documents[i])
        .ok_or_else(|| IntegrityError::UnknownDocument(rel.doc_id.clone()))?;
    Ok(sentence_window(doc, &rel.args()))
}

pub(crate) fn sentence_window(doc: &Document, args: &Span) -> Span {
    Span::normalized(
        doc.sentences
            .iter()
            .copied()
            .filter(|&(s, e)| args.intersects_range(s, e))
            .collect(),
    )
}

/// Checks disjointness of the five relation spans and that their union is
/// the sentence window. Returns a description of the first violation.
pub fn check_partition(rel: &Relation, ds: &Dataset) -> Result<(), String> {
    let parts = [
        ("arg1", &rel.arg1),
        ("arg2", &rel.arg2),
        ("pre_ctx", &rel.pre_ctx),
        ("inter_ctx", &rel.inter_ctx),
        ("post_ctx", &rel.post_ctx),
    ];
    for (i, (na, a)) in parts.iter().enumerate() {
        for (nb, b) in &parts[i + 1..] {
            if !a.is_disjoint(b) {
                return Err(format!("{}: {na} overlaps {nb}", rel.rel_id));
            }
        }
    }
    let window = relation_sentence_window(rel, ds).map_err(|e| e.to_string())?;
    if window != rel.window() {
        return Err(format!(
            "{}: spans cover {:?}, sentence window is {:?}",
            rel.rel_id,
            rel.window().ranges(),
            window.ranges()
        ));
    }
    Ok(())
}
