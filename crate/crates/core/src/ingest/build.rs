use std::collections::{BTreeMap, HashMap};

use tracing::warn;

use super::conllu::{ConlluCorpus, ANONYMOUS_DOC};
use super::range::parse_range_expr;
use super::rels::{RelsRow, RelsTable};
use crate::error::{AlignmentError, FormatError, IngestError};
use crate::model::{sentence_window, Dataset, Document, Relation, Signal, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    /// Out-of-bounds or unknown-document relations abort the build when set;
    /// otherwise they are skipped and reported as warnings.
    pub strict: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { strict: true }
    }
}

#[derive(Debug, Default)]
pub struct BuildReport {
    pub dataset: Dataset,
    /// Relations skipped in non-strict mode.
    pub skipped: Vec<AlignmentError>,
}

/// A `.rels` table plus the file it came from, for diagnostics.
#[derive(Debug, Clone, Default)]
pub struct RelsSource {
    pub path: Option<std::path::PathBuf>,
    pub table: RelsTable,
}

/// Aligns `.rels` rows to token positions and assembles a [`Dataset`].
pub fn build_dataset(
    rels: &[RelsSource],
    tokens: ConlluCorpus,
    dataset_id: &str,
    opts: BuildOptions,
) -> Result<BuildReport, IngestError> {
    let mut documents = tokens.documents;
    let ordinal_count: usize = rels.iter().map(|s| s.table.rows.len()).sum();
    resolve_anonymous_document(&mut documents, rels)?;

    let doc_index: HashMap<String, usize> = documents
        .iter()
        .enumerate()
        .map(|(i, d)| (d.doc_id.clone(), i))
        .collect();

    let mut report = BuildReport::default();
    let mut relations = Vec::with_capacity(ordinal_count);
    let mut ordinal = 0;
    for source in rels {
        for row in &source.table.rows {
            let this = ordinal;
            ordinal += 1;
            let located = |e: FormatError| -> IngestError {
                let e = FormatError { line: row.line, ..e };
                match &source.path {
                    Some(p) => e.in_file(p).into(),
                    None => e.into(),
                }
            };
            match build_relation(row, this, dataset_id, &documents, &doc_index, &source.table) {
                Ok(rel) => relations.push(rel),
                Err(RowError::Format(e)) => return Err(located(e)),
                Err(RowError::Alignment(e)) if opts.strict => return Err(e.into()),
                Err(RowError::Alignment(e)) => {
                    warn!(%e, "skipping relation");
                    report.skipped.push(e);
                }
            }
        }
    }

    let mut ds = Dataset {
        dataset_id: dataset_id.to_string(),
        documents,
        doc_index,
        relations,
        vocab: tokens.vocab,
        has_signals: rels.iter().any(|s| s.table.has_signal_column),
        ..Dataset::default()
    };
    for rel in &ds.relations {
        ds.label_inventory.disrpt.insert(rel.disrpt_label.clone());
        ds.label_inventory.orig.insert(rel.orig_label.clone());
        for sig in &rel.signals {
            ds.signal_inventory.types.insert(sig.sig_type.clone());
            if let Some(sub) = &sig.sig_subtype {
                ds.signal_inventory.subtypes.insert(sub.clone());
            }
        }
        ds.metadata_keys.extend(rel.metadata.keys().cloned());
    }
    report.dataset = ds;
    Ok(report)
}

/// A CoNLL-U file without `# newdoc id` lines yields one anonymous document;
/// it is usable only when the `.rels` rows name a single document.
fn resolve_anonymous_document(
    documents: &mut [Document],
    rels: &[RelsSource],
) -> Result<(), AlignmentError> {
    let Some(anon) = documents.iter().position(|d| d.doc_id == ANONYMOUS_DOC) else {
        return Ok(());
    };
    let mut named = rels
        .iter()
        .flat_map(|s| s.table.rows.iter())
        .map(|r| r.doc.as_str())
        .filter(|d| !documents.iter().any(|doc| doc.doc_id == *d));
    let Some(first) = named.next() else {
        return Ok(());
    };
    if let Some(other) = named.find(|d| *d != first) {
        return Err(AlignmentError {
            ordinal: 0,
            doc_id: other.to_string(),
            message: "CoNLL-U input lacks `# newdoc id` lines but relations reference several documents"
                .to_string(),
        });
    }
    documents[anon].doc_id = first.to_string();
    Ok(())
}

enum RowError {
    Format(FormatError),
    Alignment(AlignmentError),
}

fn build_relation(
    row: &RelsRow,
    ordinal: usize,
    dataset_id: &str,
    documents: &[Document],
    doc_index: &HashMap<String, usize>,
    table: &RelsTable,
) -> Result<Relation, RowError> {
    let align = |message: String| {
        RowError::Alignment(AlignmentError {
            ordinal,
            doc_id: row.doc.clone(),
            message: format!("line {}: {message}", row.line),
        })
    };
    let Some(&doc_idx) = doc_index.get(&row.doc) else {
        return Err(align("document not found in CoNLL-U input".into()));
    };
    let doc = &documents[doc_idx];
    let doc_len = doc.tokens.len() as u32;

    let unit = |expr: &str, column: usize| {
        parse_range_expr(expr).map_err(|e| {
            RowError::Format(FormatError {
                column: Some(column),
                message: format!("{} (`{expr}`)", e.message),
                ..e
            })
        })
    };
    let unit1 = unit(&row.unit1_toks, table.unit1_column)?;
    let unit2 = unit(&row.unit2_toks, table.unit2_column)?;
    for span in [&unit1, &unit2] {
        if let Some(last) = span.last().filter(|&l| l >= doc_len) {
            return Err(align(format!(
                "token index {} out of bounds (document has {doc_len} tokens)",
                last + 1
            )));
        }
    }
    if !unit1.is_disjoint(&unit2) {
        return Err(align("argument spans overlap".into()));
    }

    // arg1/arg2 follow text order; direction keeps pointing at the original unit1→unit2 arrow
    let (arg1, arg2, direction) = if unit1.first() < unit2.first() {
        (unit1, unit2, row.dir)
    } else {
        (unit2, unit1, row.dir.flipped())
    };

    let args = arg1.union(&arg2);
    let (first, last) = (args.first().unwrap_or(0), args.last().unwrap_or(0));
    let (mut pre, mut inter, mut post) = (Vec::new(), Vec::new(), Vec::new());
    for pos in sentence_window(doc, &args).positions() {
        if pos < first {
            pre.push(pos);
        } else if pos > last {
            post.push(pos);
        } else if !args.contains(pos) {
            inter.push(pos);
        }
    }

    let signals = match &row.signals {
        Some(cell) => parse_signals(cell).map_err(|msg| {
            let col = table.signal_column.unwrap_or(0);
            RowError::Format(FormatError::new(row.line, msg).at_column(col))
        })?,
        None => Vec::new(),
    };
    for sig in &signals {
        if let Some(&p) = sig.token_positions.iter().find(|&&p| p >= doc_len) {
            return Err(align(format!(
                "signal token {} out of bounds (document has {doc_len} tokens)",
                p + 1
            )));
        }
    }

    let mut metadata: BTreeMap<String, String> = row.extra.clone();
    if !metadata.contains_key("genre") {
        if let Some(genre) = genre_from_doc_id(&row.doc) {
            metadata.insert("genre".into(), genre.to_string());
        }
    }

    Ok(Relation {
        rel_id: format!("{dataset_id}:{ordinal}"),
        ordinal,
        doc: doc_idx,
        doc_id: row.doc.clone(),
        arg1,
        arg2,
        pre_ctx: Span::from_positions(pre),
        inter_ctx: Span::from_positions(inter),
        post_ctx: Span::from_positions(post),
        direction,
        disrpt_label: row.label.clone(),
        orig_label: row.orig_label.clone(),
        signals,
        metadata,
    })
}

/// Parses a signal cell: `type;subtype;positions` items separated by `|`,
/// positions as 1-based comma-separated indices. `_` or empty means none.
pub fn parse_signals(cell: &str) -> Result<Vec<Signal>, String> {
    let cell = cell.trim();
    if cell.is_empty() || cell == "_" {
        return Ok(Vec::new());
    }
    cell.split('|')
        .map(|desc| {
            let parts: Vec<&str> = desc.split(';').map(str::trim).collect();
            let [sig_type, subtype, positions] = parts[..] else {
                return Err(format!(
                    "signal descriptor `{desc}` must have the form type;subtype;positions"
                ));
            };
            if sig_type.is_empty() {
                return Err(format!("signal descriptor `{desc}` has an empty type"));
            }
            let token_positions = if positions.is_empty() || positions == "_" {
                Vec::new()
            } else {
                parse_range_expr(positions)
                    .map_err(|e| format!("signal descriptor `{desc}`: {}", e.message))?
                    .positions()
                    .collect()
            };
            Ok(Signal {
                sig_type: sig_type.to_string(),
                sig_subtype: (!subtype.is_empty() && subtype != "_").then(|| subtype.to_string()),
                token_positions,
            })
        })
        .collect()
}

/// `GUM_academic_art` → `academic`: ids of the form `CORPUS_genre_name`
/// with an uppercase corpus prefix carry their genre in second position.
pub fn genre_from_doc_id(doc_id: &str) -> Option<&str> {
    let mut parts = doc_id.split('_');
    let prefix = parts.next()?;
    let genre = parts.next()?;
    parts.next()?;
    let is_corpus_tag = !prefix.is_empty()
        && prefix.chars().any(|c| c.is_ascii_uppercase())
        && prefix
            .chars()
            .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit());
    (is_corpus_tag && !genre.is_empty()).then_some(genre)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::conllu::parse_conllu;
    use crate::ingest::rels::parse_rels;
    use crate::model::{check_partition, Direction};

    const HEADER: &str = "doc\tunit1_toks\tunit2_toks\tdir\torig_label\tlabel\tsignals";

    /// One document, two sentences of 10 tokens each.
    fn conllu() -> ConlluCorpus {
        let mut text = String::from("# newdoc id = GUM_news_x\n");
        for s in 0..2 {
            for i in 1..=10 {
                text.push_str(&format!("{i}\tw{s}{i}\tw\tNOUN\t_\t_\t0\tdep\t_\t_\n"));
            }
            text.push('\n');
        }
        parse_conllu(&text).unwrap()
    }

    fn build(rows: &[&str], strict: bool) -> Result<BuildReport, IngestError> {
        let text = format!("{HEADER}\n{}\n", rows.join("\n"));
        let src = RelsSource {
            path: None,
            table: parse_rels(&text).unwrap(),
        };
        build_dataset(&[src], conllu(), "t", BuildOptions { strict })
    }

    #[test]
    fn text_order_normalization_flips_direction() {
        let r = build(&["GUM_news_x\t6-9\t1-4\t1>2\tx\tx\t_"], true).unwrap();
        let rel = &r.dataset.relations[0];
        assert_eq!(rel.arg1.ranges(), &[(0, 3)]);
        assert_eq!(rel.arg2.ranges(), &[(5, 8)]);
        assert_eq!(rel.direction, Direction::TwoToOne);
        // the text-later unit1 is the source
        assert_eq!(rel.source(), &rel.arg2);
        assert_eq!(rel.inter_ctx.ranges(), &[(4, 4)]);
        assert_eq!(rel.post_ctx.ranges(), &[(9, 9)]);
        assert!(rel.pre_ctx.is_empty());
    }

    #[test]
    fn contexts_partition_the_window() {
        let r = build(&["GUM_news_x\t3-4\t7-8\t1<2\tx\tx\t_"], true).unwrap();
        let rel = &r.dataset.relations[0];
        assert_eq!(rel.pre_ctx.ranges(), &[(0, 1)]);
        assert_eq!(rel.inter_ctx.ranges(), &[(4, 5)]);
        assert_eq!(rel.post_ctx.ranges(), &[(8, 9)]);
        assert_eq!(rel.direction, Direction::TwoToOne);
        check_partition(rel, &r.dataset).unwrap();
    }

    #[test]
    fn full_sentence_arguments_have_no_context() {
        let r = build(&["GUM_news_x\t1-10\t11-20\t1>2\tx\tx\t_"], true).unwrap();
        let rel = &r.dataset.relations[0];
        assert!(rel.pre_ctx.is_empty() && rel.inter_ctx.is_empty() && rel.post_ctx.is_empty());
        assert_eq!(rel.window().ranges(), &[(0, 19)]);
    }

    #[test]
    fn window_spans_both_sentences_when_args_cross() {
        let r = build(&["GUM_news_x\t9-10\t11-12\t1>2\tx\tx\t_"], true).unwrap();
        let rel = &r.dataset.relations[0];
        assert_eq!(rel.pre_ctx.ranges(), &[(0, 7)]);
        assert_eq!(rel.post_ctx.ranges(), &[(12, 19)]);
        check_partition(rel, &r.dataset).unwrap();
    }

    #[test]
    fn discontinuous_interleaved_args_keep_partition() {
        let r = build(&["GUM_news_x\t2-3,8\t5-6\t1>2\tx\tx\t_"], true).unwrap();
        let rel = &r.dataset.relations[0];
        assert_eq!(rel.inter_ctx.ranges(), &[(3, 3), (6, 6)]);
        check_partition(rel, &r.dataset).unwrap();
    }

    #[test]
    fn signal_positions_shift_to_zero_based() {
        let r = build(&["GUM_news_x\t1-4\t5-15\t1>2\tx\tx\tdm;dm;14"], true).unwrap();
        let rel = &r.dataset.relations[0];
        assert_eq!(
            rel.signals,
            vec![Signal {
                sig_type: "dm".into(),
                sig_subtype: Some("dm".into()),
                token_positions: vec![13],
            }]
        );
        assert!(r.dataset.has_signals);
        assert!(r.dataset.signal_inventory.types.contains("dm"));
    }

    #[test]
    fn out_of_bounds_is_alignment_error_in_strict_mode() {
        let e = build(&["GUM_news_x\t1-2\t9999\t1>2\tx\tx\t_"], true).unwrap_err();
        match e {
            IngestError::Alignment(a) => {
                assert_eq!(a.ordinal, 0);
                assert_eq!(a.doc_id, "GUM_news_x");
                assert!(a.message.contains("9999"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let r = build(
            &["GUM_news_x\t1-2\t9999\t1>2\tx\tx\t_", "GUM_news_x\t1-2\t3\t1>2\tx\tx\t_"],
            false,
        )
        .unwrap();
        assert_eq!(r.dataset.relations.len(), 1);
        assert_eq!(r.dataset.relations[0].rel_id, "t:1");
        assert_eq!(r.skipped.len(), 1);
    }

    #[test]
    fn malformed_range_is_format_error_with_line() {
        match build(&["GUM_news_x\t1-2\t4\t1>2\tx\tx\t_", "GUM_news_x\t7-6\t1\t1>2\tx\tx\t_"], true) {
            Err(IngestError::Format(f)) => {
                assert_eq!(f.line, 3);
                assert_eq!(f.column, Some(2));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn genre_metadata_from_doc_id() {
        let r = build(&["GUM_news_x\t1\t2\t1>2\tx\tx\t_"], true).unwrap();
        assert_eq!(r.dataset.relations[0].metadata.get("genre").unwrap(), "news");
        assert_eq!(genre_from_doc_id("GENTLE_poetry_flowers"), Some("poetry"));
        assert_eq!(genre_from_doc_id("wsj_0001"), None);
        assert_eq!(genre_from_doc_id("doc1"), None);
    }

    #[test]
    fn signal_descriptor_grammar() {
        let s = parse_signals("dm;;3|lexical;indicative_word;1,4-5").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].sig_subtype, None);
        assert_eq!(s[1].token_positions, vec![0, 3, 4]);
        assert!(parse_signals("_").unwrap().is_empty());
        assert!(parse_signals("dm;3").is_err());
        assert_eq!(parse_signals("semantic;;").unwrap()[0].token_positions, Vec::<u32>::new());
    }

    #[test]
    fn anonymous_document_binds_to_single_rels_doc() {
        let tokens = parse_conllu("1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n2\tb\tb\tX\t_\t_\t1\tdep\t_\t_\n").unwrap();
        let text = format!("{HEADER}\nd\t1\t2\t1>2\tx\tx\t_\n");
        let src = RelsSource { path: None, table: parse_rels(&text).unwrap() };
        let r = build_dataset(&[src], tokens.clone(), "t", BuildOptions::default()).unwrap();
        assert_eq!(r.dataset.relations.len(), 1);

        let text = format!("{HEADER}\nd\t1\t2\t1>2\tx\tx\t_\ne\t1\t2\t1>2\tx\tx\t_\n");
        let src = RelsSource { path: None, table: parse_rels(&text).unwrap() };
        assert!(matches!(
            build_dataset(&[src], tokens, "t", BuildOptions::default()),
            Err(IngestError::Alignment(_))
        ));
    }
}
