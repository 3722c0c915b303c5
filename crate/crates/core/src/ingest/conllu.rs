use std::collections::BTreeSet;

use crate::error::FormatError;
use crate::model::{Document, TokenRecord, Vocabulary};

/// Documents read from one or more CoNLL-U files.
#[derive(Debug, Clone, Default)]
pub struct ConlluCorpus {
    pub documents: Vec<Document>,
    pub vocab: Vocabulary,
}

impl ConlluCorpus {
    pub fn extend(&mut self, other: ConlluCorpus) {
        self.documents.extend(other.documents);
        self.vocab.upos.extend(other.vocab.upos);
        self.vocab.deprel.extend(other.vocab.deprel);
        for (lemma, n) in other.vocab.lemmas {
            *self.vocab.lemmas.entry(lemma).or_default() += n;
        }
    }
}

/// Tokens before the first `# newdoc id` line are collected under this id.
pub const ANONYMOUS_DOC: &str = "";

fn newdoc_id(comment: &str) -> Option<&str> {
    let body = comment.trim_start_matches('#').trim_start();
    let rest = body
        .strip_prefix("newdoc id")
        .or_else(|| body.strip_prefix("newdoc_id"))?;
    Some(rest.trim_start().strip_prefix('=')?.trim())
}

struct Builder {
    out: ConlluCorpus,
    doc: Option<Document>,
    sent_start: Option<u32>,
}

impl Builder {
    fn close_sentence(&mut self) {
        if let (Some(doc), Some(start)) = (self.doc.as_mut(), self.sent_start.take()) {
            doc.sentences.push((start, doc.tokens.len() as u32 - 1));
        }
    }

    fn close_doc(&mut self) {
        self.close_sentence();
        if let Some(doc) = self.doc.take() {
            self.out.documents.push(doc);
        }
    }

    fn open_doc(&mut self, doc_id: &str) {
        self.close_doc();
        self.doc = Some(Document {
            doc_id: doc_id.to_string(),
            ..Document::default()
        });
    }
}

/// Parses CoNLL-U text into documents with document-global 0-based token
/// indices. Multiword-token and empty-node lines are not indexed.
pub fn parse_conllu(text: &str) -> Result<ConlluCorpus, FormatError> {
    let mut b = Builder {
        out: ConlluCorpus::default(),
        doc: None,
        sent_start: None,
    };
    let mut upos = BTreeSet::new();
    let mut deprel = BTreeSet::new();

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            b.close_sentence();
            continue;
        }
        if line.starts_with('#') {
            if let Some(id) = newdoc_id(line) {
                b.open_doc(id);
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(FormatError::new(
                lineno,
                format!("expected 10 tab-separated columns, found {}", cols.len()),
            ));
        }
        let id = cols[0];
        if id.contains('-') || id.contains('.') {
            continue;
        }
        if id.parse::<u32>().is_err() {
            return Err(FormatError::new(lineno, format!("invalid token id `{id}`")).at_column(1));
        }
        if b.doc.is_none() {
            b.open_doc(ANONYMOUS_DOC);
        }
        let sent_index = b.doc.as_ref().map_or(0, |d| d.sentences.len() as u32);
        let doc = b.doc.as_mut().expect("document opened above");
        let index = doc.tokens.len() as u32;
        if b.sent_start.is_none() {
            b.sent_start = Some(index);
        }
        let tok = TokenRecord::new(sent_index, index, cols[1], cols[2], cols[3], cols[7]);
        if !upos.contains(cols[3]) {
            upos.insert(cols[3].to_string());
        }
        if !deprel.contains(cols[7]) {
            deprel.insert(cols[7].to_string());
        }
        *b.out.vocab.lemmas.entry(tok.lemma_folded.clone()).or_default() += 1;
        doc.tokens.push(tok);
    }
    b.close_doc();
    b.out.vocab.upos = upos;
    b.out.vocab.deprel = deprel;
    Ok(b.out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tok(id: &str, form: &str, upos: &str, deprel: &str) -> String {
        format!("{id}\t{form}\t{}\t{upos}\t_\t_\t0\t{deprel}\t_\t_\n", form.to_lowercase())
    }

    #[test]
    fn two_docs_two_sentences_three_tokens() {
        let mut text = String::new();
        for d in ["a", "b"] {
            text.push_str(&format!("# newdoc id = {d}\n"));
            for _ in 0..2 {
                text.push_str("# text = x y z\n");
                text.push_str(&tok("1", "x", "NOUN", "nsubj"));
                text.push_str(&tok("2", "y", "VERB", "root"));
                text.push_str(&tok("3", "z", "PUNCT", "punct"));
                text.push('\n');
            }
        }
        let c = parse_conllu(&text).unwrap();
        assert_eq!(c.documents.len(), 2);
        for doc in &c.documents {
            assert_eq!(doc.tokens.len(), 6);
            assert_eq!(doc.sentences, vec![(0, 2), (3, 5)]);
            let idx: Vec<u32> = doc.tokens.iter().map(|t| t.tok_index_doc).collect();
            assert_eq!(idx, (0..6).collect::<Vec<_>>());
            let sents: Vec<u32> = doc.tokens.iter().map(|t| t.sent_index).collect();
            assert_eq!(sents, vec![0, 0, 0, 1, 1, 1]);
        }
        assert_eq!(c.documents[1].doc_id, "b");
        assert!(c.vocab.upos.contains("VERB"));
        assert!(c.vocab.deprel.contains("punct"));
    }

    #[test]
    fn multiword_and_empty_nodes_are_skipped() {
        let text = format!(
            "# newdoc_id = d\n1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n{}{}1.1\tx\tx\tX\t_\t_\t_\t_\t_\t_\n",
            tok("1", "do", "AUX", "aux"),
            tok("2", "n't", "PART", "advmod")
        );
        let c = parse_conllu(&text).unwrap();
        assert_eq!(c.documents[0].doc_id, "d");
        assert_eq!(c.documents[0].tokens.len(), 2);
        assert_eq!(c.documents[0].sentences, vec![(0, 1)]);
    }

    #[test]
    fn empty_input_has_no_documents() {
        let c = parse_conllu("").unwrap();
        assert!(c.documents.is_empty());
    }

    #[test]
    fn wrong_column_count_cites_line() {
        let e = parse_conllu("# newdoc id = d\n1\tx\tx\n").unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn tokens_without_newdoc_go_to_anonymous_document() {
        let c = parse_conllu(&tok("1", "x", "X", "root")).unwrap();
        assert_eq!(c.documents[0].doc_id, ANONYMOUS_DOC);
    }
}
