//! Tab-separated exports. Derived quantities use 4 decimal places and a
//! "." separator; counts are integers. Every table starts with a header row.

use std::fmt::Write as _;

use crate::engine::Match;
use crate::model::{Dataset, Relation, Span};
use crate::stats::{BoxSummary, Breakdown, Comparison, CrossTab, FreqTable, GroupBox};

pub const CONCORDANCE_HEADER: [&str; 9] = [
    "rel_id",
    "doc_id",
    "disrpt_label",
    "orig_label",
    "direction",
    "arg1_text",
    "arg2_text",
    "signals",
    "matched_tokens",
];

fn num(x: f64) -> String {
    format!("{x:.4}")
}

/// Tabs and line breaks inside a cell become spaces.
fn cell(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

fn row<S: AsRef<str>>(out: &mut String, cells: impl IntoIterator<Item = S>) {
    let mut first = true;
    for c in cells {
        if !first {
            out.push('\t');
        }
        first = false;
        out.push_str(&cell(c.as_ref()));
    }
    out.push('\n');
}

pub fn freq_tsv(t: &FreqTable) -> String {
    let mut out = String::new();
    row(&mut out, ["value", "count", "percent"]);
    for r in &t.rows {
        row(&mut out, [r.value.clone(), r.count.to_string(), num(r.percent)]);
    }
    out
}

/// Long format, one line per cell. The test columns repeat on every line
/// and are `NA` when the test is not applicable.
pub fn crosstab_tsv(t: &CrossTab) -> String {
    let mut out = String::new();
    row(
        &mut out,
        ["row", "col", "observed", "expected", "residual", "chi2", "dof", "p_value", "sig_code"],
    );
    for (i, r) in t.row_values.iter().enumerate() {
        for (j, c) in t.col_values.iter().enumerate() {
            let mut cells = vec![r.clone(), c.clone(), t.observed[i][j].to_string()];
            match &t.test {
                Some(test) => cells.extend([
                    num(test.expected[i][j]),
                    num(test.residuals[i][j]),
                    num(test.chi2),
                    test.dof.to_string(),
                    num(test.p_value),
                    test.sig_code.clone(),
                ]),
                None => cells.extend(["NA"; 6].map(String::from)),
            }
            row(&mut out, cells);
        }
    }
    out
}

const BOX_HEADER: [&str; 10] = [
    "group",
    "n",
    "min",
    "q1",
    "median",
    "q3",
    "max",
    "whisker_low",
    "whisker_high",
    "outliers",
];

fn box_row(out: &mut String, group: &str, b: &BoxSummary) {
    let outliers = b.outliers.iter().map(|&x| num(x)).collect::<Vec<_>>().join(",");
    row(
        out,
        [
            group.to_string(),
            b.n.to_string(),
            num(b.min),
            num(b.q1),
            num(b.median),
            num(b.q3),
            num(b.max),
            num(b.whisker_low),
            num(b.whisker_high),
            outliers,
        ],
    );
}

/// Box summaries, one line per group; groups without values are skipped.
pub fn boxes_tsv<'a>(groups: impl IntoIterator<Item = (&'a str, Option<&'a BoxSummary>)>) -> String {
    let mut out = String::new();
    row(&mut out, BOX_HEADER);
    for (g, b) in groups {
        if let Some(b) = b {
            box_row(&mut out, g, b);
        }
    }
    out
}

pub fn breakdown_tsv(b: &Breakdown) -> String {
    match b {
        Breakdown::Frequencies { table } => freq_tsv(table),
        Breakdown::CrossTab { table } => crosstab_tsv(table),
        Breakdown::Boxplot { summary } => boxes_tsv([("all", summary.as_ref())]),
        Breakdown::GroupedBoxes { groups } => {
            boxes_tsv(groups.iter().map(|GroupBox { value, summary }| (value.as_str(), Some(summary))))
        }
        Breakdown::Scatter { points } => {
            let mut out = String::new();
            row(&mut out, ["x", "y"]);
            for &(x, y) in points {
                row(&mut out, [num(x), num(y)]);
            }
            out
        }
    }
}

pub fn compare_tsv(c: &Comparison, id_a: &str, id_b: &str) -> String {
    match c {
        Comparison::Categorical { values, .. } => {
            let mut out = String::new();
            row(&mut out, ["value", "count_a", "percent_a", "count_b", "percent_b"]);
            for v in values {
                row(
                    &mut out,
                    [
                        v.value.clone(),
                        v.count_a.to_string(),
                        num(v.percent_a),
                        v.count_b.to_string(),
                        num(v.percent_b),
                    ],
                );
            }
            out
        }
        Comparison::Numerical { a, b } => boxes_tsv([(id_a, a.as_ref()), (id_b, b.as_ref())]),
    }
}

/// Token forms of a span; discontinuous ranges are joined with ` ... `.
pub fn span_text(span: &Span, rel: &Relation, ds: &Dataset) -> String {
    let tokens = &ds.documents[rel.doc].tokens;
    span.ranges()
        .iter()
        .map(|&(s, e)| {
            (s..=e)
                .map(|i| tokens[i as usize].form.as_str())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join(" ... ")
}

/// `type:subtype@form form|...`, or `_` without signals.
pub fn signal_summary(rel: &Relation, ds: &Dataset) -> String {
    if rel.signals.is_empty() {
        return "_".into();
    }
    let tokens = &ds.documents[rel.doc].tokens;
    rel.signals
        .iter()
        .map(|s| {
            let mut out = s.sig_type.clone();
            if let Some(sub) = &s.sig_subtype {
                let _ = write!(out, ":{sub}");
            }
            if !s.token_positions.is_empty() {
                let forms: Vec<&str> = s.token_positions.iter().map(|&p| tokens[p as usize].form.as_str()).collect();
                let _ = write!(out, "@{}", forms.join(" "));
            }
            out
        })
        .collect::<Vec<_>>()
        .join("|")
}

pub fn concordance_tsv(matches: &[Match], ds: &Dataset) -> String {
    let mut out = String::new();
    row(&mut out, CONCORDANCE_HEADER);
    for m in matches {
        let rel = &ds.relations[m.rel_index];
        let tokens = &ds.documents[rel.doc].tokens;
        let matched: Vec<&str> = m
            .matched_token_positions
            .iter()
            .map(|&p| tokens[p as usize].form.as_str())
            .collect();
        row(
            &mut out,
            [
                rel.rel_id.clone(),
                rel.doc_id.clone(),
                rel.disrpt_label.clone(),
                rel.orig_label.clone(),
                rel.direction.to_string(),
                span_text(&rel.arg1, rel, ds),
                span_text(&rel.arg2, rel, ds),
                signal_summary(rel, ds),
                matched.join(" "),
            ],
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{evaluate, Corpus, QuerySpec};
    use crate::stats::{chi_squared_test, frequencies, CategoricalVar};
    use crate::synth::FixtureBuilder;

    fn corpus() -> Corpus {
        let mut b = FixtureBuilder::new("ex");
        b.doc("d1");
        b.sentence("If/if/SCONJ/mark it/it/PRON/nsubj rains/rain/VERB/advcl we/we/PRON/nsubj stay/stay/VERB/root");
        b.relation("1-3", "4-5", "1>2", "CONDITION", "condition", "dm;dm;1|syntactic;;3")
            .relation("1,3", "4-5", "1<2", "ELABORATION", "elab", "");
        Corpus::new(b.build().unwrap())
    }

    #[test]
    fn concordance_columns() {
        let c = corpus();
        let m = evaluate(&QuerySpec::default(), &c);
        let tsv = concordance_tsv(&m, c.dataset());
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines[0], CONCORDANCE_HEADER.join("\t"));
        assert_eq!(
            lines[1],
            "ex:0\td1\tCONDITION\tcondition\t1>2\tIf it rains\twe stay\tdm:dm@If|syntactic@rains\t"
        );
        assert!(lines[2].contains("\tIf ... rains\t"));
        assert_eq!(concordance_tsv(&[], c.dataset()).lines().count(), 1);
    }

    #[test]
    fn four_decimal_places() {
        let c = corpus();
        let m = evaluate(&QuerySpec::default(), &c);
        let t = frequencies(&m, &CategoricalVar::DisrptLabel, c.dataset());
        assert_eq!(freq_tsv(&t), "value\tcount\tpercent\nCONDITION\t1\t50.0000\nELABORATION\t1\t50.0000\n");
    }

    #[test]
    fn crosstab_long_format() {
        let test = chi_squared_test(&[vec![20, 10], vec![10, 20]], false);
        let t = CrossTab {
            row_values: vec!["a".into(), "b".into()],
            col_values: vec!["x".into(), "y".into()],
            observed: vec![vec![20, 10], vec![10, 20]],
            test,
        };
        let tsv = crosstab_tsv(&t);
        let first = tsv.lines().nth(1).unwrap();
        assert_eq!(first, "a\tx\t20\t15.0000\t1.2910\t6.6667\t1\t0.0098\t**");
        assert_eq!(tsv.lines().count(), 5);
        let na = CrossTab { test: None, ..t };
        assert!(crosstab_tsv(&na).lines().nth(1).unwrap().ends_with("NA\tNA"));
    }

    #[test]
    fn cells_are_sanitized() {
        let mut out = String::new();
        row(&mut out, ["a\tb", "c\nd"]);
        assert_eq!(out, "a b\tc d\n");
    }
}
