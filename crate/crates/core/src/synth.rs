//! Corpus construction helpers: a builder for small hand-written fixtures
//! and a seeded generator of DISRPT-shaped random corpora. Both emit real
//! `.conllu` / `.rels` text and load it through the regular ingestion path.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::IngestError;
use crate::ingest::{build_dataset, parse_conllu, parse_rels, BuildOptions, RelsSource};
use crate::model::Dataset;

const RELS_HEADER: &str = "doc\tunit1_toks\tunit2_toks\tunit1_txt\tunit2_txt\ts1_toks\ts2_toks\tunit1_sent\tunit2_sent\tdir\torig_label\tlabel";

#[derive(Debug, Clone)]
struct FixtureToken {
    form: String,
    lemma: String,
    upos: String,
    deprel: String,
}

/// Builds a small corpus from readable token and relation descriptions.
///
/// Tokens are written `form/lemma/UPOS/deprel`; a bare `form` gets its
/// lowercase form as lemma, `X` and `dep`. Relation units use the same
/// 1-based document-wide range expressions as `.rels` files.
#[derive(Debug, Clone)]
pub struct FixtureBuilder {
    dataset_id: String,
    docs: Vec<(String, Vec<Vec<FixtureToken>>)>,
    relations: Vec<String>,
    extra_columns: Vec<String>,
    with_signals: bool,
}

impl FixtureBuilder {
    pub fn new(dataset_id: &str) -> Self {
        FixtureBuilder {
            dataset_id: dataset_id.to_string(),
            docs: Vec::new(),
            relations: Vec::new(),
            extra_columns: Vec::new(),
            with_signals: true,
        }
    }

    /// Omits the signal column from the generated `.rels`.
    pub fn without_signal_column(mut self) -> Self {
        self.with_signals = false;
        self
    }

    /// Adds extra `.rels` columns; relation rows then need as many extra cells.
    pub fn extra_columns(mut self, names: &[&str]) -> Self {
        self.extra_columns = names.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn doc(&mut self, doc_id: &str) -> &mut Self {
        self.docs.push((doc_id.to_string(), Vec::new()));
        self
    }

    /// Appends a sentence to the current document and returns the 1-based
    /// document index of its first token.
    pub fn sentence(&mut self, tokens: &str) -> u32 {
        let (_, sents) = self.docs.last_mut().expect("call doc() first");
        let start = sents.iter().map(Vec::len).sum::<usize>() as u32 + 1;
        sents.push(tokens.split_whitespace().map(parse_fixture_token).collect());
        start
    }

    /// Adds a relation row on the current document.
    pub fn relation(
        &mut self,
        unit1: &str,
        unit2: &str,
        dir: &str,
        label: &str,
        orig_label: &str,
        signals: &str,
    ) -> &mut Self {
        self.relation_with(unit1, unit2, dir, label, orig_label, signals, &[])
    }

    #[allow(clippy::too_many_arguments)]
    pub fn relation_with(
        &mut self,
        unit1: &str,
        unit2: &str,
        dir: &str,
        label: &str,
        orig_label: &str,
        signals: &str,
        extra: &[&str],
    ) -> &mut Self {
        let doc = self.docs.last().expect("call doc() first").0.clone();
        let mut row = format!("{doc}\t{unit1}\t{unit2}\t_\t_\t_\t_\t_\t_\t{dir}\t{orig_label}\t{label}");
        if self.with_signals {
            row.push('\t');
            row.push_str(if signals.is_empty() { "_" } else { signals });
        }
        for cell in extra {
            row.push('\t');
            row.push_str(cell);
        }
        self.relations.push(row);
        self
    }

    pub fn conllu_text(&self) -> String {
        let mut out = String::new();
        for (doc_id, sents) in &self.docs {
            let _ = writeln!(out, "# newdoc id = {doc_id}");
            for sent in sents {
                write_sentence(&mut out, sent.iter().map(|t| {
                    (t.form.as_str(), t.lemma.as_str(), t.upos.as_str(), t.deprel.as_str())
                }));
            }
        }
        out
    }

    pub fn rels_text(&self) -> String {
        let mut out = String::from(RELS_HEADER);
        if self.with_signals {
            out.push_str("\tsignals");
        }
        for c in &self.extra_columns {
            out.push('\t');
            out.push_str(c);
        }
        out.push('\n');
        for r in &self.relations {
            out.push_str(r);
            out.push('\n');
        }
        out
    }

    pub fn build(&self) -> Result<Dataset, IngestError> {
        load_text(&self.dataset_id, &self.rels_text(), &self.conllu_text())
    }
}

fn parse_fixture_token(s: &str) -> FixtureToken {
    let parts: Vec<&str> = s.split('/').collect();
    match parts[..] {
        [form, lemma, upos, deprel] => FixtureToken {
            form: form.into(),
            lemma: lemma.into(),
            upos: upos.into(),
            deprel: deprel.into(),
        },
        _ => FixtureToken {
            form: s.into(),
            lemma: s.to_lowercase(),
            upos: "X".into(),
            deprel: "dep".into(),
        },
    }
}

fn write_sentence<'a>(out: &mut String, tokens: impl Iterator<Item = (&'a str, &'a str, &'a str, &'a str)>) {
    for (i, (form, lemma, upos, deprel)) in tokens.enumerate() {
        let head = if deprel == "root" { 0 } else { 1 };
        let _ = writeln!(out, "{}\t{form}\t{lemma}\t{upos}\t_\t_\t{head}\t{deprel}\t_\t_", i + 1);
    }
    out.push('\n');
}

/// Parses and aligns in-memory `.rels` and `.conllu` text (strict mode).
pub fn load_text(dataset_id: &str, rels: &str, conllu: &str) -> Result<Dataset, IngestError> {
    let tokens = parse_conllu(conllu)?;
    let source = RelsSource {
        path: None,
        table: parse_rels(rels)?,
    };
    Ok(build_dataset(&[source], tokens, dataset_id, BuildOptions::default())?.dataset)
}

/// Shape of a generated corpus.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub seed: u64,
    pub dataset_id: String,
    pub target_tokens: usize,
    pub tokens_per_doc: usize,
    /// Inclusive bounds on sentence length.
    pub sentence_len: (usize, usize),
    /// Average relations per sentence.
    pub relations_per_sentence: f64,
    pub with_signals: bool,
}

impl SynthConfig {
    pub fn small(seed: u64) -> Self {
        SynthConfig {
            seed,
            dataset_id: format!("synth.small.{seed}"),
            target_tokens: 4_000,
            tokens_per_doc: 400,
            sentence_len: (4, 16),
            relations_per_sentence: 2.0,
            with_signals: true,
        }
    }

    /// Roughly the size of a large single-corpus release: ~250K tokens and
    /// ~30K relations.
    pub fn large(seed: u64) -> Self {
        SynthConfig {
            seed,
            dataset_id: format!("synth.large.{seed}"),
            target_tokens: 250_000,
            tokens_per_doc: 1_000,
            sentence_len: (8, 26),
            relations_per_sentence: 2.1,
            with_signals: true,
        }
    }
}

pub const LABELS: [&str; 17] = [
    "ADVERSATIVE",
    "ATTRIBUTION",
    "CAUSAL",
    "COMMENT",
    "CONCESSION",
    "CONDITION",
    "CONJUNCTION",
    "CONTRAST",
    "ELABORATION",
    "EXPLANATION",
    "EVALUATION",
    "FRAMING",
    "MODE",
    "ORGANIZATION",
    "PURPOSE",
    "QUERY",
    "TEMPORAL",
];

/// (form, lemma, upos, deprel) with a relative weight.
const LEXICON: &[(&str, &str, &str, &str, u32)] = &[
    ("the", "the", "DET", "det", 60),
    ("a", "a", "DET", "det", 30),
    (",", ",", "PUNCT", "punct", 40),
    (".", ".", "PUNCT", "punct", 20),
    ("and", "and", "CCONJ", "cc", 25),
    ("but", "but", "CCONJ", "cc", 8),
    ("if", "if", "SCONJ", "mark", 6),
    ("when", "when", "SCONJ", "mark", 6),
    ("when", "when", "ADV", "advmod", 2),
    ("then", "then", "ADV", "advmod", 6),
    ("to", "to", "PART", "mark", 14),
    ("to", "to", "ADP", "case", 10),
    ("so", "so", "ADV", "advmod", 5),
    ("because", "because", "SCONJ", "mark", 4),
    ("we", "we", "PRON", "nsubj", 14),
    ("it", "it", "PRON", "nsubj", 14),
    ("they", "they", "PRON", "nsubj", 10),
    ("think", "think", "VERB", "root", 4),
    ("think", "think", "VERB", "advcl", 1),
    ("think", "think", "VERB", "ccomp", 1),
    ("thinks", "think", "VERB", "root", 2),
    ("thought", "think", "VERB", "advcl", 1),
    ("thought", "thought", "NOUN", "obj", 1),
    ("improve", "improve", "VERB", "advcl", 4),
    ("improve", "improve", "VERB", "xcomp", 2),
    ("wait", "wait", "VERB", "root", 3),
    ("assess", "assess", "VERB", "advcl", 2),
    ("stay", "stay", "VERB", "root", 3),
    ("rains", "rain", "VERB", "advcl", 2),
    ("is", "be", "AUX", "cop", 12),
    ("was", "be", "AUX", "cop", 8),
    ("possible", "possible", "ADJ", "advcl", 2),
    ("necessary", "necessary", "ADJ", "advcl", 1),
    ("good", "good", "ADJ", "amod", 6),
    ("opportunity", "opportunity", "NOUN", "obj", 3),
    ("event", "event", "NOUN", "obl", 4),
    ("data", "datum", "NOUN", "nsubj", 5),
    ("people", "person", "NOUN", "nsubj", 5),
    ("time", "time", "NOUN", "obl:tmod", 5),
    ("which", "which", "PRON", "nsubj", 3),
    ("said", "say", "VERB", "acl:relcl", 3),
    ("said", "say", "VERB", "root", 3),
    ("after", "after", "ADP", "case", 4),
    ("in", "in", "ADP", "case", 16),
    ("of", "of", "ADP", "case", 18),
    ("Kim", "Kim", "PROPN", "nsubj", 3),
    ("Jin", "Jin", "PROPN", "nsubj", 3),
    ("left", "leave", "VERB", "root", 2),
    ("arrived", "arrive", "VERB", "advcl", 2),
    ("upset", "upset", "ADJ", "root", 1),
    ("The", "the", "DET", "det", 6),
    ("If", "if", "SCONJ", "mark", 2),
    ("When", "when", "SCONJ", "mark", 2),
];

const SIGNAL_TYPES: [(&str, &[&str]); 5] = [
    ("dm", &["dm"]),
    ("lexical", &["alternate_expression", "indicative_word"]),
    ("semantic", &["attribution_source", "lexical_chain", "repetition"]),
    ("syntactic", &["infinitival_clause", "relative_clause", "parallel_syntactic_construction"]),
    ("graphical", &["colon", "semicolon", "items_in_sequence"]),
];

/// Generated `.conllu` and `.rels` text.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub dataset_id: String,
    pub conllu: String,
    pub rels: String,
}

impl SynthCorpus {
    pub fn load(&self) -> Result<Dataset, IngestError> {
        load_text(&self.dataset_id, &self.rels, &self.conllu)
    }
}

pub fn generate(cfg: &SynthConfig) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let total_weight: u32 = LEXICON.iter().map(|w| w.4).sum();
    let mut conllu = String::with_capacity(cfg.target_tokens * 40);
    let mut rels = String::from(RELS_HEADER);
    if cfg.with_signals {
        rels.push_str("\tsignals");
    }
    rels.push('\n');

    let genres = ["news", "academic", "fiction", "interview", "reddit"];
    let mut produced = 0;
    let mut doc_no = 0;
    while produced < cfg.target_tokens {
        let genre = genres[doc_no % genres.len()];
        let doc_id = format!("SYN_{genre}_{doc_no:04}");
        doc_no += 1;
        let _ = writeln!(conllu, "# newdoc id = {doc_id}");

        let mut sentences: Vec<(u32, u32)> = Vec::new();
        let mut doc_tokens: Vec<&str> = Vec::new();
        let mut doc_len = 0u32;
        while (doc_len as usize) < cfg.tokens_per_doc && produced + (doc_len as usize) < cfg.target_tokens {
            let len = rng.gen_range(cfg.sentence_len.0..=cfg.sentence_len.1);
            let words: Vec<_> = (0..len)
                .map(|_| {
                    let mut pick = rng.gen_range(0..total_weight);
                    LEXICON
                        .iter()
                        .find(|w| {
                            if pick < w.4 {
                                true
                            } else {
                                pick -= w.4;
                                false
                            }
                        })
                        .expect("weights cover range")
                })
                .collect();
            write_sentence(&mut conllu, words.iter().map(|w| (w.0, w.1, w.2, w.3)));
            doc_tokens.extend(words.iter().map(|w| w.0));
            sentences.push((doc_len, doc_len + len as u32 - 1));
            doc_len += len as u32;
        }
        produced += doc_len as usize;

        for (si, &(s, e)) in sentences.iter().enumerate() {
            let mut n = cfg.relations_per_sentence.floor() as usize;
            if rng.gen_bool(cfg.relations_per_sentence.fract().clamp(0.0, 1.0)) {
                n += 1;
            }
            for _ in 0..n {
                let (u1, u2) = if rng.gen_bool(0.35) && si + 1 < sentences.len() {
                    cross_sentence_units(&mut rng, (s, e), sentences[si + 1])
                } else {
                    intra_sentence_units(&mut rng, (s, e))
                };
                let (u1, u2) = if rng.gen_bool(0.3) { (u2, u1) } else { (u1, u2) };
                let dir = if rng.gen_bool(0.5) { "1>2" } else { "1<2" };
                let label = *LABELS.choose(&mut rng).expect("labels");
                let orig = format!("{}-{}", label.to_lowercase(), rng.gen_range(1..=3));
                let _ = write!(
                    rels,
                    "{doc_id}\t{}\t{}\t_\t_\t_\t_\t_\t_\t{dir}\t{orig}\t{label}",
                    range_expr(&u1),
                    range_expr(&u2)
                );
                if cfg.with_signals {
                    rels.push('\t');
                    rels.push_str(&signals(&mut rng, &u1, &u2, &doc_tokens));
                }
                rels.push('\n');
            }
        }
    }
    SynthCorpus {
        dataset_id: cfg.dataset_id.clone(),
        conllu,
        rels,
    }
}

/// 0-based inclusive ranges.
type Unit = Vec<(u32, u32)>;

fn intra_sentence_units(rng: &mut ChaCha8Rng, (s, e): (u32, u32)) -> (Unit, Unit) {
    let len = e - s + 1;
    if len < 2 {
        return (vec![(s, s)], vec![(e, e)]);
    }
    // [pre] arg1 [inter] arg2 [post], each context possibly empty
    let a_start = s + rng.gen_range(0..=(len / 4).min(len - 2));
    let split = rng.gen_range(a_start..e);
    let mut b_start = split + 1;
    if b_start < e && rng.gen_bool(0.3) {
        b_start += 1;
    }
    let b_end = rng.gen_range(b_start..=e);
    let arg1 = vec![(a_start, split)];
    let arg2 = vec![(b_start, b_end)];
    // occasionally a discontinuous arg1 wrapping part of the sentence end
    if b_end + 2 <= e && rng.gen_bool(0.1) {
        return (vec![(a_start, split), (b_end + 2, e)], arg2);
    }
    (arg1, arg2)
}

fn cross_sentence_units(rng: &mut ChaCha8Rng, first: (u32, u32), second: (u32, u32)) -> (Unit, Unit) {
    let a_start = rng.gen_range(first.0..=first.1);
    let b_end = rng.gen_range(second.0..=second.1);
    (vec![(a_start, first.1)], vec![(second.0, b_end)])
}

fn range_expr(unit: &Unit) -> String {
    unit.iter()
        .map(|&(s, e)| if s == e { format!("{}", s + 1) } else { format!("{}-{}", s + 1, e + 1) })
        .collect::<Vec<_>>()
        .join(",")
}

fn signals(rng: &mut ChaCha8Rng, u1: &Unit, u2: &Unit, doc_tokens: &[&str]) -> String {
    let n = match rng.gen_range(0..10) {
        0..=2 => 0,
        3..=7 => 1,
        _ => 2,
    };
    let positions: Vec<u32> = u1.iter().chain(u2).flat_map(|&(s, e)| s..=e).collect();
    let mut out = Vec::new();
    for _ in 0..n {
        let (sig_type, subtypes) = SIGNAL_TYPES[rng.gen_range(0..SIGNAL_TYPES.len())];
        let subtype = subtypes.choose(rng).expect("subtypes");
        let anchor = if sig_type == "dm" {
            positions
                .iter()
                .copied()
                .find(|&p| matches!(doc_tokens[p as usize], "but" | "if" | "when" | "so" | "because" | "and" | "then" | "If" | "When"))
                .unwrap_or(positions[0])
        } else {
            *positions.choose(rng).expect("non-empty units")
        };
        out.push(format!("{sig_type};{subtype};{}", anchor + 1));
    }
    if out.is_empty() {
        "_".into()
    } else {
        out.join("|")
    }
}
