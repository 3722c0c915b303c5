//! DEQL: a whitespace-separated sequence of token patterns with at most one
//! span operator.
//!
//! ```text
//! if then                      both words anywhere in the two arguments
//! if || then                   `if` in arg1, `then` in arg2 (text order)
//! if -||> then                 `if` in the source, `then` in the target
//! to|PART |VERB|advcl -||>     annotated patterns, source side only
//! ```
//!
//! A pattern is `word|lemma|pos|deprel`. With exactly four segments the
//! fields are positional; otherwise the first segment is the word form and
//! later segments are classified through the closed UPOS and deprel
//! vocabularies, anything else being a lemma.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::DeqlError;
use crate::model::{deprel_base, Dataset};

pub const OP_ARG_ORDER: &str = "||";
pub const OP_SOURCE_TARGET: &str = "-||>";

pub const UNIVERSAL_UPOS: [&str; 17] = [
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM", "PART", "PRON", "PROPN",
    "PUNCT", "SCONJ", "SYM", "VERB", "X",
];

pub const UNIVERSAL_DEPREL: [&str; 37] = [
    "acl", "advcl", "advmod", "amod", "appos", "aux", "case", "cc", "ccomp", "clf", "compound",
    "conj", "cop", "csubj", "dep", "det", "discourse", "dislocated", "expl", "fixed", "flat",
    "goeswith", "iobj", "list", "mark", "nmod", "nsubj", "nummod", "obj", "obl", "orphan",
    "parataxis", "punct", "reparandum", "root", "vocative", "xcomp",
];

/// Closed tag vocabularies used to resolve the key of an unlabeled pattern
/// segment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TagVocabulary {
    pub upos: BTreeSet<String>,
    pub deprel: BTreeSet<String>,
}

impl TagVocabulary {
    /// The Universal Dependencies UPOS tags and universal relation labels.
    pub fn universal() -> Self {
        TagVocabulary {
            upos: UNIVERSAL_UPOS.iter().map(|s| s.to_string()).collect(),
            deprel: UNIVERSAL_DEPREL.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Universal tags plus every tag observed in the dataset. Subtyped
    /// deprels (`acl:relcl`) also contribute their base label.
    pub fn for_dataset(ds: &Dataset) -> Self {
        let mut v = TagVocabulary::universal();
        v.upos.extend(ds.vocab.upos.iter().cloned());
        for d in &ds.vocab.deprel {
            v.deprel.insert(d.clone());
            v.deprel.insert(deprel_base(d).to_string());
        }
        v
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenPattern {
    pub form: Option<String>,
    pub lemma: Option<String>,
    pub upos: Option<String>,
    pub deprel: Option<String>,
}

impl TokenPattern {
    pub fn form(form: &str) -> Self {
        TokenPattern {
            form: Some(form.to_string()),
            ..TokenPattern::default()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.form.is_none() && self.lemma.is_none() && self.upos.is_none() && self.deprel.is_none()
    }
}

impl fmt::Display for TokenPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.form, &self.lemma, &self.upos, &self.deprel) {
            (Some(form), None, None, None) => f.write_str(form),
            (form, lemma, upos, deprel) => {
                let s = |o: &Option<String>| o.clone().unwrap_or_default();
                write!(f, "{}|{}|{}|{}", s(form), s(lemma), s(upos), s(deprel))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum Operator {
    /// No operator: all patterns share one scope.
    #[default]
    Anywhere,
    /// `||`: left side in arg1, right side in arg2.
    ArgOrder,
    /// `-||>`: left side in the source, right side in the target.
    SourceTarget,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct QueryAst {
    pub left: Vec<TokenPattern>,
    pub op: Operator,
    pub right: Vec<TokenPattern>,
}

impl QueryAst {
    pub fn is_empty(&self) -> bool {
        self.left.is_empty() && self.right.is_empty()
    }
}

/// Canonical form: `parse(ast.to_string())` reproduces the AST.
impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.left.iter().map(ToString::to_string).collect();
        match self.op {
            Operator::Anywhere => {}
            Operator::ArgOrder => parts.push(OP_ARG_ORDER.into()),
            Operator::SourceTarget => parts.push(OP_SOURCE_TARGET.into()),
        }
        parts.extend(self.right.iter().map(ToString::to_string));
        f.write_str(&parts.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SegmentKind {
    Pattern(String),
    ArgOrder,
    SourceTarget,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub kind: SegmentKind,
    /// Byte offset of the segment in the query.
    pub offset: usize,
}

/// Splits on whitespace; `||` and `-||>` standing alone are operators.
pub fn tokenize(query: &str) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut start = None;
    let mut push = |s: usize, e: usize| {
        let text = &query[s..e];
        let kind = match text {
            OP_ARG_ORDER => SegmentKind::ArgOrder,
            OP_SOURCE_TARGET => SegmentKind::SourceTarget,
            _ => SegmentKind::Pattern(text.to_string()),
        };
        out.push(Segment { kind, offset: s });
    };
    for (i, c) in query.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                push(s, i);
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        push(s, query.len());
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Field {
    Lemma,
    Upos,
    Deprel,
}

/// Resolves one raw pattern segment into a [`TokenPattern`]. `offset` is
/// the segment's byte offset, used for error positions.
pub fn resolve_pattern(
    segment: &str,
    offset: usize,
    vocab: &TagVocabulary,
) -> Result<TokenPattern, DeqlError> {
    let parts: Vec<&str> = segment.split('|').collect();
    if parts.iter().all(|p| p.is_empty()) {
        return Err(DeqlError::new(offset, format!("empty token pattern `{segment}`")));
    }
    let some = |s: &str| (!s.is_empty()).then(|| s.to_string());
    if parts.len() == 4 {
        return Ok(TokenPattern {
            form: some(parts[0]),
            lemma: some(parts[1]),
            upos: some(parts[2]),
            deprel: some(parts[3]),
        });
    }
    let mut pat = TokenPattern {
        form: some(parts[0]),
        ..TokenPattern::default()
    };
    let mut pos = offset + parts[0].len() + 1;
    for part in &parts[1..] {
        let here = pos;
        pos += part.len() + 1;
        if part.is_empty() {
            continue;
        }
        let in_upos = vocab.upos.contains(*part);
        let in_deprel = vocab.deprel.contains(*part);
        let field = match (in_upos, in_deprel) {
            (true, true) => {
                return Err(DeqlError::new(
                    here,
                    format!("`{part}` is both a POS tag and a dependency relation; use word|lemma|pos|deprel"),
                ))
            }
            (true, false) => Field::Upos,
            (false, true) => Field::Deprel,
            (false, false) => Field::Lemma,
        };
        let slot = match field {
            Field::Lemma => &mut pat.lemma,
            Field::Upos => &mut pat.upos,
            Field::Deprel => &mut pat.deprel,
        };
        if let Some(prev) = slot {
            let name = match field {
                Field::Lemma => "lemma",
                Field::Upos => "POS",
                Field::Deprel => "deprel",
            };
            return Err(DeqlError::new(
                here,
                format!("`{part}` and `{prev}` both resolve to {name} in `{segment}`"),
            ));
        }
        *slot = Some(part.to_string());
    }
    Ok(pat)
}

/// Parses a DEQL query. An empty query has no patterns and no operator.
pub fn parse(query: &str, vocab: &TagVocabulary) -> Result<QueryAst, DeqlError> {
    let segments = tokenize(query);
    let mut ops = segments
        .iter()
        .filter(|s| !matches!(s.kind, SegmentKind::Pattern(_)));
    let op_seg = ops.next();
    if let Some(second) = ops.next() {
        return Err(DeqlError::new(
            second.offset,
            "multiple operators: a query may contain at most one `||` or `-||>`",
        ));
    }
    let mut ast = QueryAst::default();
    let mut seen_op = false;
    for seg in &segments {
        match &seg.kind {
            SegmentKind::Pattern(text) => {
                let pat = resolve_pattern(text, seg.offset, vocab)?;
                if seen_op {
                    ast.right.push(pat);
                } else {
                    ast.left.push(pat);
                }
            }
            SegmentKind::ArgOrder => {
                ast.op = Operator::ArgOrder;
                seen_op = true;
            }
            SegmentKind::SourceTarget => {
                ast.op = Operator::SourceTarget;
                seen_op = true;
            }
        }
    }
    if ast.op == Operator::ArgOrder && (ast.left.is_empty() || ast.right.is_empty()) {
        let at = op_seg.map_or(0, |s| s.offset);
        return Err(DeqlError::new(at, "`||` needs patterns on both sides"));
    }
    Ok(ast)
}
