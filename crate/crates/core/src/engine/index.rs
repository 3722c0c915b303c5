use std::collections::HashMap;

use crate::model::{Dataset, Span};

/// Token occurrences sorted by `(document, position)`.
#[derive(Debug, Clone, Default)]
pub struct Postings(Vec<(u32, u32)>);

impl Postings {
    /// Positions of this key inside one document.
    fn in_doc(&self, doc: u32) -> &[(u32, u32)] {
        let lo = self.0.partition_point(|&(d, _)| d < doc);
        let hi = self.0.partition_point(|&(d, _)| d <= doc);
        &self.0[lo..hi]
    }

    /// True if any occurrence in `doc` falls inside `scope`.
    pub fn hits(&self, doc: u32, scope: &Span) -> bool {
        let slice = self.in_doc(doc);
        !slice.is_empty()
            && scope.ranges().iter().any(|&(s, e)| {
                let i = slice.partition_point(|&(_, p)| p < s);
                i < slice.len() && slice[i].1 <= e
            })
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Inverted index over case-folded word forms and lemmas, plus label →
/// relation lists.
#[derive(Debug, Clone, Default)]
pub struct SearchIndex {
    pub(crate) forms: HashMap<String, Postings>,
    pub(crate) lemmas: HashMap<String, Postings>,
    pub(crate) disrpt_labels: HashMap<String, Vec<usize>>,
    pub(crate) orig_labels: HashMap<String, Vec<usize>>,
    /// `arg1 ∪ arg2` per relation.
    pub(crate) args: Vec<Span>,
    /// Full sentence window per relation.
    pub(crate) windows: Vec<Span>,
}

impl SearchIndex {
    pub fn build(ds: &Dataset) -> Self {
        let mut idx = SearchIndex::default();
        for (d, doc) in ds.documents.iter().enumerate() {
            for (p, tok) in doc.tokens.iter().enumerate() {
                let at = (d as u32, p as u32);
                push(&mut idx.forms, &tok.form_folded, at);
                push(&mut idx.lemmas, &tok.lemma_folded, at);
            }
        }
        for (i, rel) in ds.relations.iter().enumerate() {
            idx.disrpt_labels
                .entry(rel.disrpt_label.clone())
                .or_default()
                .push(i);
            idx.orig_labels
                .entry(rel.orig_label.clone())
                .or_default()
                .push(i);
            idx.args.push(rel.args());
            idx.windows.push(rel.window());
        }
        idx
    }

    pub fn form(&self, folded: &str) -> Option<&Postings> {
        self.forms.get(folded)
    }

    pub fn lemma(&self, folded: &str) -> Option<&Postings> {
        self.lemmas.get(folded)
    }
}

fn push(map: &mut HashMap<String, Postings>, key: &str, at: (u32, u32)) {
    // tokens are visited in (doc, position) order, so postings stay sorted
    match map.get_mut(key) {
        Some(p) => p.0.push(at),
        None => {
            map.insert(key.to_string(), Postings(vec![at]));
        }
    }
}
