//! Loading datasets from files through a manifest.

use std::fs;
use std::path::Path;

use relscope_core::error::IngestError;
use relscope_core::ingest::{load_entry, load_files, BuildOptions, Manifest};
use relscope_core::model::check_partition;
use relscope_core::synth::{generate, FixtureBuilder, SynthConfig};

const CONLLU: &str = "\
# newdoc_id = GUM_news_one
# sent_id = 1
1\tIf\tif\tSCONJ\t_\t_\t3\tmark\t_\t_
2\tit\tit\tPRON\t_\t_\t3\tnsubj\t_\t_
3-4\tdon't\t_\t_\t_\t_\t_\t_\t_\t_
3\tdo\tdo\tAUX\t_\t_\t0\troot\t_\t_
4\tn't\tnot\tPART\t_\t_\t3\tadvmod\t_\t_
4.1\telided\telided\tX\t_\t_\t_\t_\t_\t_
5\tstay\tstay\tVERB\t_\t_\t3\tadvcl:relcl\t_\t_

# newdoc id = GUM_news_two
1\tKim\tKim\tPROPN\t_\t_\t2\tnsubj\t_\t_
2\tleft\tleave\tVERB\t_\t_\t0\troot\t_\t_
3\t.\t.\tPUNCT\t_\t_\t2\tpunct\t_\t_
";

const RELS: &str = "\
doc\tunit1_toks\tunit2_toks\tunit1_txt\tunit2_txt\tdir\torig_label\tlabel\trel_type
GUM_news_one\t1-2\t3-5\t_\t_\t1>2\tcondition\tCONDITION\texplicit
GUM_news_two\t2\t1\t_\t_\t1>2\tattribution\tATTRIBUTION\timplicit
";

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

#[test]
fn json_manifest_with_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.rels", RELS);
    write(dir.path(), "a.conllu", CONLLU);
    write(
        dir.path(),
        "manifest.json",
        r#"{"datasets": [{"id": "fx.one", "rels": "a.rels", "conllu": ["a.conllu"], "language": "English"}]}"#,
    );
    let m = Manifest::load(&dir.path().join("manifest.json"), None).unwrap();
    let report = load_entry(m.get("fx.one").unwrap(), &m.base, BuildOptions::default()).unwrap();
    let ds = report.dataset;
    assert_eq!(ds.documents.len(), 2);
    // multiword and empty-node lines are not tokens
    assert_eq!(ds.documents[0].tokens.len(), 5);
    assert_eq!(ds.token_count(), 8);
    assert_eq!(ds.relations.len(), 2);
    assert!(!ds.has_signals);
    assert_eq!(ds.display["language"], "English");
    assert!(ds.metadata_keys.contains("rel_type"));
    assert!(ds.metadata_keys.contains("genre"));
    // the second relation is normalized to text order
    let r = &ds.relations[1];
    assert_eq!(r.arg1.ranges(), &[(0, 0)]);
    assert_eq!(r.direction.as_str(), "1<2");
    assert_eq!(r.post_ctx.ranges(), &[(2, 2)]);
    for rel in &ds.relations {
        check_partition(rel, &ds).unwrap();
    }
}

#[test]
fn key_value_manifest_and_data_root() {
    let data = tempfile::tempdir().unwrap();
    let conf = tempfile::tempdir().unwrap();
    write(data.path(), "train.rels", RELS);
    write(data.path(), "train.conllu", CONLLU);
    let syn = generate(&SynthConfig::small(3));
    write(data.path(), "syn.rels", &syn.rels);
    write(data.path(), "syn.conllu", &syn.conllu);
    write(
        conf.path(),
        "datasets.txt",
        "id = fx.one\nrels = train.rels\nconllu = train.conllu\n\n# synthetic\nid = syn\nrels = syn.rels\nconllu = syn.conllu\n",
    );
    let m = Manifest::load(&conf.path().join("datasets.txt"), Some(data.path())).unwrap();
    assert_eq!(m.entries.len(), 2);
    let syn_ds = load_entry(m.get("syn").unwrap(), &m.base, BuildOptions::default()).unwrap().dataset;
    assert_eq!(syn_ds.relations.len(), syn.load().unwrap().relations.len());
}

#[test]
fn split_files_continue_ordinals() {
    let dir = tempfile::tempdir().unwrap();
    let mut b = FixtureBuilder::new("x");
    b.doc("GUM_news_a");
    b.sentence("a b c d");
    b.relation("1-2", "3-4", "1>2", "A", "a", "dm;dm;1");
    write(dir.path(), "1.rels", &b.rels_text());
    write(dir.path(), "1.conllu", &b.conllu_text());
    let mut c = FixtureBuilder::new("x");
    c.doc("GUM_news_b");
    c.sentence("e f g");
    c.relation("1", "2-3", "1<2", "B", "b", "");
    write(dir.path(), "2.rels", &c.rels_text());
    write(dir.path(), "2.conllu", &c.conllu_text());
    let p = |n: &str| dir.path().join(n);
    let ds = load_files("x", &[p("1.rels"), p("2.rels")], &[p("1.conllu"), p("2.conllu")], BuildOptions::default())
        .unwrap()
        .dataset;
    let ids: Vec<_> = ds.relations.iter().map(|r| r.rel_id.as_str()).collect();
    assert_eq!(ids, ["x:0", "x:1"]);
    assert_eq!(ds.relations[1].doc_id, "GUM_news_b");
}

#[test]
fn alignment_errors_name_the_row_and_non_strict_skips() {
    let dir = tempfile::tempdir().unwrap();
    let bad = RELS.to_string() + "GUM_news_two\t1\t9999\t_\t_\t1>2\tx\tX\timplicit\n";
    write(dir.path(), "a.rels", &bad);
    write(dir.path(), "a.conllu", CONLLU);
    let p = |n: &str| dir.path().join(n);
    let err = load_files("fx", &[p("a.rels")], &[p("a.conllu")], BuildOptions::default()).unwrap_err();
    match &err {
        IngestError::Alignment(a) => {
            assert_eq!(a.ordinal, 2);
            assert_eq!(a.doc_id, "GUM_news_two");
        }
        other => panic!("unexpected {other}"),
    }
    let report = load_files("fx", &[p("a.rels")], &[p("a.conllu")], BuildOptions { strict: false }).unwrap();
    assert_eq!(report.dataset.relations.len(), 2);
    assert_eq!(report.skipped.len(), 1);
}

#[test]
fn format_errors_carry_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = RELS.to_string() + "GUM_news_two\t1\n";
    write(dir.path(), "a.rels", &bad);
    write(dir.path(), "a.conllu", CONLLU);
    let p = |n: &str| dir.path().join(n);
    let err = load_files("fx", &[p("a.rels")], &[p("a.conllu")], BuildOptions::default()).unwrap_err();
    let IngestError::Format(f) = &err else { panic!("unexpected {err}") };
    assert_eq!(f.line, 4);
    assert!(err.to_string().contains("a.rels"));

    let missing = load_files("fx", &[p("nope.rels")], &[p("a.conllu")], BuildOptions::default()).unwrap_err();
    assert!(matches!(missing, IngestError::Io { .. }));
}
