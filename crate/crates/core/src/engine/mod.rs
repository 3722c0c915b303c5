//! Query evaluation over an indexed dataset.

mod filters;
mod index;
mod matching;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use filters::{FilterKind, Filters, LabelFilter, LabelKind, Negatable, Presence};
pub use index::{Postings, SearchIndex};
pub use matching::{match_pattern, match_side, CompiledPattern};

use crate::deql::{self, Operator, QueryAst, TagVocabulary};
use crate::error::{QueryError, ValidationError};
use crate::model::{Dataset, Relation, Span};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QueryOptions {
    /// Patterns must match consecutive tokens.
    #[serde(default)]
    pub exact: bool,
    /// Match word forms and lemmas case-sensitively.
    #[serde(default)]
    pub case_sensitive: bool,
    /// Operator-less queries also search the context spans.
    #[serde(default)]
    pub include_context: bool,
}

/// A parsed query plus its relation filters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QuerySpec {
    pub ast: QueryAst,
    pub options: QueryOptions,
    pub filters: Filters,
}

impl QuerySpec {
    pub fn new(ast: QueryAst, options: QueryOptions, filters: Filters) -> Self {
        QuerySpec {
            ast,
            options,
            filters,
        }
    }

    /// Parses `query` with the dataset's tag vocabulary and validates the
    /// filters against its inventories.
    pub fn compile(
        query: &str,
        options: QueryOptions,
        filters: Filters,
        corpus: &Corpus,
    ) -> Result<QuerySpec, QueryError> {
        let ast = deql::parse(query, corpus.vocab())?;
        filters.validate(corpus.dataset())?;
        Ok(QuerySpec::new(ast, options, filters))
    }
}

/// A dataset with its search index and tag vocabulary.
#[derive(Debug, Clone)]
pub struct Corpus {
    dataset: Dataset,
    index: SearchIndex,
    vocab: TagVocabulary,
}

impl Corpus {
    pub fn new(dataset: Dataset) -> Self {
        let index = SearchIndex::build(&dataset);
        let vocab = TagVocabulary::for_dataset(&dataset);
        Corpus {
            dataset,
            index,
            vocab,
        }
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn index(&self) -> &SearchIndex {
        &self.index
    }

    pub fn vocab(&self) -> &TagVocabulary {
        &self.vocab
    }

    pub fn id(&self) -> &str {
        &self.dataset.dataset_id
    }
}

/// One retrieved relation and the token positions the patterns matched.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Match {
    /// Index into [`Dataset::relations`].
    #[serde(skip)]
    pub rel_index: usize,
    pub rel_id: String,
    pub matched_token_positions: Vec<u32>,
}

struct Plan<'a> {
    left: Vec<CompiledPattern>,
    right: Vec<CompiledPattern>,
    /// Index postings for keyed patterns, `(side_is_right, postings)`.
    keyed: Vec<(bool, &'a Postings)>,
    /// Some keyed pattern names a word that never occurs.
    impossible: bool,
}

fn plan<'a>(q: &QuerySpec, index: &'a SearchIndex) -> Plan<'a> {
    let cs = q.options.case_sensitive;
    let compile = |side: &[deql::TokenPattern]| {
        side.iter()
            .map(|p| CompiledPattern::new(p, cs))
            .collect::<Vec<_>>()
    };
    let mut p = Plan {
        left: compile(&q.ast.left),
        right: compile(&q.ast.right),
        keyed: Vec::new(),
        impossible: false,
    };
    let sides = q
        .ast
        .left
        .iter()
        .map(|pat| (false, pat))
        .chain(q.ast.right.iter().map(|pat| (true, pat)));
    for (right, pat) in sides {
        let lookup = pat
            .form
            .as_ref()
            .map(|f| index.form(&f.to_lowercase()))
            .or_else(|| pat.lemma.as_ref().map(|l| index.lemma(&l.to_lowercase())));
        match lookup {
            Some(Some(postings)) => p.keyed.push((right, postings)),
            Some(None) => p.impossible = true,
            None => {}
        }
    }
    p
}

/// The scopes each side of the query is evaluated in.
fn scopes<'r>(q: &QuerySpec, rel: &'r Relation, args: &'r Span, window: &'r Span) -> (&'r Span, &'r Span) {
    match q.ast.op {
        Operator::Anywhere if q.options.include_context => (window, window),
        Operator::Anywhere => (args, args),
        Operator::ArgOrder => (&rel.arg1, &rel.arg2),
        Operator::SourceTarget => (rel.source(), rel.target()),
    }
}

fn candidates<'a>(q: &QuerySpec, corpus: &'a Corpus) -> Box<dyn Iterator<Item = usize> + 'a> {
    let all = || Box::new(0..corpus.dataset.relations.len()) as Box<dyn Iterator<Item = usize>>;
    match &q.filters.label {
        Some(l) if !l.negated => {
            let map = match l.which {
                LabelKind::Disrpt => &corpus.index.disrpt_labels,
                LabelKind::Orig => &corpus.index.orig_labels,
            };
            match map.get(&l.value) {
                Some(ids) => Box::new(ids.iter().copied()),
                None => Box::new(std::iter::empty()),
            }
        }
        _ => all(),
    }
}

fn match_relation(q: &QuerySpec, plan: &Plan, corpus: &Corpus, i: usize) -> Option<Vec<u32>> {
    let ds = &corpus.dataset;
    let rel = &ds.relations[i];
    if !q.filters.accepts(rel) {
        return None;
    }
    let (args, window) = (&corpus.index.args[i], &corpus.index.windows[i]);
    let (left_scope, right_scope) = scopes(q, rel, args, window);
    let doc = rel.doc as u32;
    for &(right, postings) in &plan.keyed {
        let scope = if right { right_scope } else { left_scope };
        if !postings.hits(doc, scope) {
            return None;
        }
    }
    let tokens = &ds.documents[rel.doc].tokens;
    let exact = q.options.exact;
    if q.ast.op == Operator::Anywhere && exact && !q.options.include_context {
        // exact sequences may not straddle the two arguments
        let a = match_side(&plan.left, &rel.arg1, true, tokens);
        let b = match_side(&plan.left, &rel.arg2, true, tokens);
        return match (a, b) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
    }
    let mut left = match_side(&plan.left, left_scope, exact, tokens)?;
    let right = match_side(&plan.right, right_scope, exact, tokens)?;
    left.extend(right);
    left.sort_unstable();
    Some(left)
}

/// All relations satisfying the query, in corpus order.
pub fn evaluate(q: &QuerySpec, corpus: &Corpus) -> Vec<Match> {
    let plan = plan(q, &corpus.index);
    if plan.impossible {
        return Vec::new();
    }
    candidates(q, corpus)
        .filter_map(|i| {
            match_relation(q, &plan, corpus, i).map(|positions| Match {
                rel_index: i,
                rel_id: corpus.dataset.relations[i].rel_id.clone(),
                matched_token_positions: positions,
            })
        })
        .collect()
}

/// Number of relations [`evaluate`] would return.
pub fn count(q: &QuerySpec, corpus: &Corpus) -> usize {
    let plan = plan(q, &corpus.index);
    if plan.impossible {
        return 0;
    }
    candidates(q, corpus)
        .filter(|&i| match_relation(q, &plan, corpus, i).is_some())
        .count()
}

/// Validates filters, then evaluates.
pub fn run(q: &QuerySpec, corpus: &Corpus) -> Result<Vec<Match>, ValidationError> {
    q.filters.validate(&corpus.dataset)?;
    Ok(evaluate(q, corpus))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    PreCtx,
    Arg1,
    InterCtx,
    Arg2,
    PostCtx,
    /// Signal tokens that lie outside the sentence window.
    Outside,
}

impl Region {
    pub fn of(rel: &Relation, pos: u32) -> Region {
        if rel.arg1.contains(pos) {
            Region::Arg1
        } else if rel.arg2.contains(pos) {
            Region::Arg2
        } else if rel.pre_ctx.contains(pos) {
            Region::PreCtx
        } else if rel.inter_ctx.contains(pos) {
            Region::InterCtx
        } else if rel.post_ctx.contains(pos) {
            Region::PostCtx
        } else {
            Region::Outside
        }
    }
}

/// Display roles of one token of a concordance line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TokenRole {
    pub position: u32,
    pub form: String,
    pub region: Region,
    pub query_match: bool,
    /// Types of the relation's signals anchored on this token.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub signals: Vec<String>,
}

/// Per-token roles over the sentence window plus any signal tokens outside
/// it, in position order.
pub fn highlight_roles(m: &Match, corpus: &Corpus) -> Vec<TokenRole> {
    let ds = &corpus.dataset;
    let rel = &ds.relations[m.rel_index];
    let tokens = &ds.documents[rel.doc].tokens;
    let mut positions: BTreeSet<u32> = corpus.index.windows[m.rel_index].positions().collect();
    positions.extend(rel.signals.iter().flat_map(|s| s.token_positions.iter().copied()));
    positions
        .into_iter()
        .map(|pos| {
            let mut signals: Vec<String> = rel
                .signals
                .iter()
                .filter(|s| s.token_positions.contains(&pos))
                .map(|s| s.sig_type.clone())
                .collect();
            signals.dedup();
            TokenRole {
                position: pos,
                form: tokens[pos as usize].form.clone(),
                region: Region::of(rel, pos),
                query_match: m.matched_token_positions.binary_search(&pos).is_ok(),
                signals,
            }
        })
        .collect()
}
