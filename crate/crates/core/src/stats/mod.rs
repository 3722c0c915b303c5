//! Frequencies, cross-tabulation with Pearson residuals, numerical
//! summaries and two-dataset comparison over a match set.

mod boxplot;
mod distribution;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

pub use boxplot::{box_summary, quantile_sorted, BoxSummary};
pub use distribution::{chi2_sf, ln_gamma, regularized_gamma_q, significance_code};

use crate::engine::{evaluate, Corpus, FilterKind, Filters, Match, QuerySpec};
use crate::error::ValidationError;
use crate::model::{Dataset, Relation, Span};

/// Category shown for relations without signals (and signals without a
/// subtype) in signal breakdowns.
pub const NONE_VALUE: &str = "None";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CategoricalVar {
    DisrptLabel,
    OrigLabel,
    Direction,
    SignalType,
    SignalSubtype,
    Metadata(String),
    /// `yes`/`no`: whether the relation passes the given filter.
    FilterMatch(FilterKind, Filters),
}

impl CategoricalVar {
    fn per_signal(&self) -> bool {
        matches!(self, CategoricalVar::SignalType | CategoricalVar::SignalSubtype)
    }

    /// Category values a relation contributes: one per signal for the
    /// signal variables, otherwise exactly one (or none for an absent
    /// metadata key).
    pub fn values(&self, rel: &Relation) -> Vec<String> {
        match self {
            CategoricalVar::DisrptLabel => vec![rel.disrpt_label.clone()],
            CategoricalVar::OrigLabel => vec![rel.orig_label.clone()],
            CategoricalVar::Direction => vec![rel.direction.to_string()],
            CategoricalVar::SignalType | CategoricalVar::SignalSubtype => {
                if rel.signals.is_empty() {
                    return vec![NONE_VALUE.to_string()];
                }
                rel.signals
                    .iter()
                    .map(|s| match self {
                        CategoricalVar::SignalType => s.sig_type.clone(),
                        _ => s.sig_subtype.clone().unwrap_or_else(|| NONE_VALUE.to_string()),
                    })
                    .collect()
            }
            CategoricalVar::Metadata(key) => rel.metadata.get(key).cloned().into_iter().collect(),
            CategoricalVar::FilterMatch(_, f) => {
                vec![if f.accepts(rel) { "yes" } else { "no" }.to_string()]
            }
        }
    }
}

impl fmt::Display for CategoricalVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CategoricalVar::DisrptLabel => f.write_str("disrpt_label"),
            CategoricalVar::OrigLabel => f.write_str("orig_label"),
            CategoricalVar::Direction => f.write_str("direction"),
            CategoricalVar::SignalType => f.write_str("signal_type"),
            CategoricalVar::SignalSubtype => f.write_str("signal_subtype"),
            CategoricalVar::Metadata(k) => write!(f, "metadata:{k}"),
            CategoricalVar::FilterMatch(kind, _) => write!(f, "filter_match:{kind}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NumericalVar {
    Arg1Len,
    Arg2Len,
    SrcLen,
    TgtLen,
    Arg1DocPercentile,
    Arg2DocPercentile,
    SrcDocPercentile,
    TgtDocPercentile,
    ArgDistance,
    SignalCount,
}

impl NumericalVar {
    pub const ALL: [NumericalVar; 10] = [
        NumericalVar::Arg1Len,
        NumericalVar::Arg2Len,
        NumericalVar::SrcLen,
        NumericalVar::TgtLen,
        NumericalVar::Arg1DocPercentile,
        NumericalVar::Arg2DocPercentile,
        NumericalVar::SrcDocPercentile,
        NumericalVar::TgtDocPercentile,
        NumericalVar::ArgDistance,
        NumericalVar::SignalCount,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NumericalVar::Arg1Len => "arg1_len",
            NumericalVar::Arg2Len => "arg2_len",
            NumericalVar::SrcLen => "src_len",
            NumericalVar::TgtLen => "tgt_len",
            NumericalVar::Arg1DocPercentile => "arg1_doc_percentile",
            NumericalVar::Arg2DocPercentile => "arg2_doc_percentile",
            NumericalVar::SrcDocPercentile => "src_doc_percentile",
            NumericalVar::TgtDocPercentile => "tgt_doc_percentile",
            NumericalVar::ArgDistance => "arg_distance",
            NumericalVar::SignalCount => "signal_count",
        }
    }
}

/// A breakdown dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Variable {
    Categorical(CategoricalVar),
    Numerical(NumericalVar),
}

impl Variable {
    /// Parses `disrpt_label`, `metadata:genre`, `filter_match:label`,
    /// `arg_distance`, ... `filter_match` takes the filter from `filters`.
    pub fn parse(name: &str, filters: &Filters) -> Result<Variable, String> {
        use CategoricalVar as C;
        let cat = |c| Ok(Variable::Categorical(c));
        match name {
            "disrpt_label" | "label" => cat(C::DisrptLabel),
            "orig_label" => cat(C::OrigLabel),
            "direction" => cat(C::Direction),
            "signal_type" => cat(C::SignalType),
            "signal_subtype" => cat(C::SignalSubtype),
            _ => {
                if let Some(key) = name.strip_prefix("metadata:") {
                    return cat(C::Metadata(key.to_string()));
                }
                if let Some(kind) = name.strip_prefix("filter_match:") {
                    let kind = FilterKind::parse(kind)
                        .ok_or_else(|| format!("unknown filter `{kind}`"))?;
                    if !filters.is_set(kind) {
                        return Err(format!("filter_match:{kind} needs the {kind} filter to be set"));
                    }
                    return cat(C::FilterMatch(kind, filters.only(kind)));
                }
                NumericalVar::ALL
                    .into_iter()
                    .find(|v| v.as_str() == name)
                    .map(Variable::Numerical)
                    .ok_or_else(|| format!("unknown variable `{name}`"))
            }
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variable::Categorical(c) => c.fmt(f),
            Variable::Numerical(n) => f.write_str(n.as_str()),
        }
    }
}

fn doc_percentile(span: &Span, doc_len: usize) -> f64 {
    match span.first() {
        Some(first) if doc_len > 0 => 100.0 * first as f64 / doc_len as f64,
        _ => 0.0,
    }
}

/// Value of a numerical variable for one relation. Percentiles use the
/// span's first token relative to the document token count.
pub fn numeric_value(rel: &Relation, var: NumericalVar, ds: &Dataset) -> f64 {
    let doc_len = ds.documents.get(rel.doc).map_or(0, |d| d.len());
    match var {
        NumericalVar::Arg1Len => rel.arg1.len() as f64,
        NumericalVar::Arg2Len => rel.arg2.len() as f64,
        NumericalVar::SrcLen => rel.source().len() as f64,
        NumericalVar::TgtLen => rel.target().len() as f64,
        NumericalVar::Arg1DocPercentile => doc_percentile(&rel.arg1, doc_len),
        NumericalVar::Arg2DocPercentile => doc_percentile(&rel.arg2, doc_len),
        NumericalVar::SrcDocPercentile => doc_percentile(rel.source(), doc_len),
        NumericalVar::TgtDocPercentile => doc_percentile(rel.target(), doc_len),
        NumericalVar::ArgDistance => match (rel.arg1.last(), rel.arg2.first()) {
            (Some(end1), Some(start2)) if start2 > end1 => (start2 - end1 - 1) as f64,
            _ => 0.0,
        },
        NumericalVar::SignalCount => rel.signals.len() as f64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreqRow {
    pub value: String,
    pub count: u64,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreqTable {
    pub rows: Vec<FreqRow>,
    pub total: u64,
    /// Set when a metadata breakdown names a key no match carries.
    pub key_absent: bool,
}

fn sorted_counts(counts: HashMap<String, u64>) -> Vec<(String, u64)> {
    let mut v: Vec<_> = counts.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v
}

fn percent(count: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

fn relations<'a>(matches: &'a [Match], ds: &'a Dataset) -> impl Iterator<Item = &'a Relation> + 'a {
    matches.iter().map(move |m| &ds.relations[m.rel_index])
}

/// Counts per category, by descending count then value.
pub fn frequencies(matches: &[Match], var: &CategoricalVar, ds: &Dataset) -> FreqTable {
    let mut counts: HashMap<String, u64> = HashMap::new();
    for rel in relations(matches, ds) {
        for v in var.values(rel) {
            *counts.entry(v).or_default() += 1;
        }
    }
    let key_absent = matches!(var, CategoricalVar::Metadata(_)) && counts.is_empty() && !matches.is_empty();
    let total = counts.values().sum();
    FreqTable {
        rows: sorted_counts(counts)
            .into_iter()
            .map(|(value, count)| FreqRow {
                percent: percent(count, total),
                value,
                count,
            })
            .collect(),
        total,
        key_absent,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquared {
    pub expected: Vec<Vec<f64>>,
    pub residuals: Vec<Vec<f64>>,
    pub chi2: f64,
    pub dof: u32,
    pub p_value: f64,
    pub sig_code: String,
    pub yates: bool,
}

/// Pearson chi-squared test of independence. Needs at least 2×2 cells and
/// no zero marginals. With `yates`, a 2×2 statistic uses the continuity
/// correction; residuals stay uncorrected.
pub fn chi_squared_test(observed: &[Vec<u64>], yates: bool) -> Option<ChiSquared> {
    let rows = observed.len();
    let cols = observed.first().map_or(0, Vec::len);
    if rows < 2 || cols < 2 {
        return None;
    }
    let row_tot: Vec<f64> = observed.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let col_tot: Vec<f64> = (0..cols)
        .map(|j| observed.iter().map(|r| r[j]).sum::<u64>() as f64)
        .collect();
    if row_tot.iter().chain(&col_tot).any(|&t| t == 0.0) {
        return None;
    }
    let n: f64 = row_tot.iter().sum();
    let yates = yates && rows == 2 && cols == 2;
    let mut expected = vec![vec![0.0; cols]; rows];
    let mut residuals = vec![vec![0.0; cols]; rows];
    let mut chi2 = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            let e = row_tot[i] * col_tot[j] / n;
            let o = observed[i][j] as f64;
            expected[i][j] = e;
            residuals[i][j] = (o - e) / e.sqrt();
            chi2 += if yates {
                ((o - e).abs() - 0.5).max(0.0).powi(2) / e
            } else {
                residuals[i][j] * residuals[i][j]
            };
        }
    }
    let dof = ((rows - 1) * (cols - 1)) as u32;
    let p_value = chi2_sf(chi2, dof);
    Some(ChiSquared {
        expected,
        residuals,
        chi2,
        dof,
        p_value,
        sig_code: significance_code(p_value).to_string(),
        yates,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CrossTabOptions {
    /// Rows and columns whose total is below this are dropped first.
    pub min_count: u64,
    pub yates: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossTab {
    pub row_values: Vec<String>,
    pub col_values: Vec<String>,
    pub observed: Vec<Vec<u64>>,
    /// Absent when fewer than 2×2 cells remain ("test not applicable").
    pub test: Option<ChiSquared>,
}

/// Builds the contingency table of two categorical variables over the
/// matches. Two signal-level variables are paired per signal; otherwise
/// each relation contributes the product of its row and column values.
pub fn crosstab(
    matches: &[Match],
    row: &CategoricalVar,
    col: &CategoricalVar,
    ds: &Dataset,
    opts: CrossTabOptions,
) -> CrossTab {
    let mut cells: HashMap<(String, String), u64> = HashMap::new();
    for rel in relations(matches, ds) {
        let (rv, cv) = (row.values(rel), col.values(rel));
        if row.per_signal() && col.per_signal() {
            for pair in rv.into_iter().zip(cv) {
                *cells.entry(pair).or_default() += 1;
            }
        } else {
            for r in &rv {
                for c in &cv {
                    *cells.entry((r.clone(), c.clone())).or_default() += 1;
                }
            }
        }
    }
    let marginals = |cells: &HashMap<(String, String), u64>| {
        let mut rows: HashMap<String, u64> = HashMap::new();
        let mut cols: HashMap<String, u64> = HashMap::new();
        for ((r, c), n) in cells {
            *rows.entry(r.clone()).or_default() += n;
            *cols.entry(c.clone()).or_default() += n;
        }
        (rows, cols)
    };
    if opts.min_count > 0 {
        let (rows, cols) = marginals(&cells);
        let keep_r: BTreeSet<String> = rows.into_iter().filter(|(_, n)| *n >= opts.min_count).map(|(k, _)| k).collect();
        let keep_c: BTreeSet<String> = cols.into_iter().filter(|(_, n)| *n >= opts.min_count).map(|(k, _)| k).collect();
        cells.retain(|(r, c), _| keep_r.contains(r) && keep_c.contains(c));
    }
    // zero marginals vanish here since only non-empty cells are kept
    cells.retain(|_, n| *n > 0);
    let (rows, cols) = marginals(&cells);
    let row_values: Vec<String> = sorted_counts(rows).into_iter().map(|(k, _)| k).collect();
    let col_values: Vec<String> = sorted_counts(cols).into_iter().map(|(k, _)| k).collect();
    let observed: Vec<Vec<u64>> = row_values
        .iter()
        .map(|r| {
            col_values
                .iter()
                .map(|c| cells.get(&(r.clone(), c.clone())).copied().unwrap_or(0))
                .collect()
        })
        .collect();
    let test = chi_squared_test(&observed, opts.yates);
    CrossTab {
        row_values,
        col_values,
        observed,
        test,
    }
}

pub fn numeric_values(matches: &[Match], var: NumericalVar, ds: &Dataset) -> Vec<f64> {
    relations(matches, ds).map(|r| numeric_value(r, var, ds)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupBox {
    pub value: String,
    pub summary: BoxSummary,
}

/// Result of a one- or two-variable breakdown, shaped for plotting.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Breakdown {
    Frequencies { table: FreqTable },
    Boxplot { summary: Option<BoxSummary> },
    CrossTab { table: CrossTab },
    /// Numerical variable per category.
    GroupedBoxes { groups: Vec<GroupBox> },
    Scatter { points: Vec<(f64, f64)> },
}

pub fn breakdown(
    matches: &[Match],
    primary: &Variable,
    secondary: Option<&Variable>,
    ds: &Dataset,
    opts: CrossTabOptions,
) -> Breakdown {
    use Variable::{Categorical as Cat, Numerical as Num};
    match (primary, secondary) {
        (Cat(c), None) => Breakdown::Frequencies {
            table: frequencies(matches, c, ds),
        },
        (Num(n), None) => Breakdown::Boxplot {
            summary: box_summary(&numeric_values(matches, *n, ds)),
        },
        (Cat(a), Some(Cat(b))) => Breakdown::CrossTab {
            table: crosstab(matches, a, b, ds, opts),
        },
        (Num(n), Some(Cat(c))) | (Cat(c), Some(Num(n))) => Breakdown::GroupedBoxes {
            groups: grouped_boxes(matches, *n, c, ds),
        },
        (Num(a), Some(Num(b))) => Breakdown::Scatter {
            points: relations(matches, ds)
                .map(|r| (numeric_value(r, *a, ds), numeric_value(r, *b, ds)))
                .collect(),
        },
    }
}

/// One box per category, in frequency order.
pub fn grouped_boxes(matches: &[Match], num: NumericalVar, cat: &CategoricalVar, ds: &Dataset) -> Vec<GroupBox> {
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for rel in relations(matches, ds) {
        let x = numeric_value(rel, num, ds);
        let values: BTreeSet<String> = cat.values(rel).into_iter().collect();
        for v in values {
            groups.entry(v).or_default().push(x);
        }
    }
    let mut out: Vec<GroupBox> = groups
        .into_iter()
        .filter_map(|(value, xs)| box_summary(&xs).map(|summary| GroupBox { value, summary }))
        .collect();
    out.sort_by(|a, b| b.summary.n.cmp(&a.summary.n).then_with(|| a.value.cmp(&b.value)));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparedValue {
    pub value: String,
    pub count_a: u64,
    pub percent_a: f64,
    pub count_b: u64,
    pub percent_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Comparison {
    /// Each dataset normalized to its own total.
    Categorical {
        total_a: u64,
        total_b: u64,
        values: Vec<ComparedValue>,
    },
    Numerical {
        a: Option<BoxSummary>,
        b: Option<BoxSummary>,
    },
}

/// Pairs the distribution of `var` over the matches in two datasets.
pub fn compare_matches(
    matches_a: &[Match],
    ds_a: &Dataset,
    matches_b: &[Match],
    ds_b: &Dataset,
    var: &Variable,
) -> Comparison {
    match var {
        Variable::Categorical(c) => {
            let fa = frequencies(matches_a, c, ds_a);
            let fb = frequencies(matches_b, c, ds_b);
            let count = |t: &FreqTable, v: &str| t.rows.iter().find(|r| r.value == v).map_or(0, |r| r.count);
            let all: BTreeSet<&String> = fa.rows.iter().chain(&fb.rows).map(|r| &r.value).collect();
            let mut values: Vec<ComparedValue> = all
                .into_iter()
                .map(|v| {
                    let (ca, cb) = (count(&fa, v), count(&fb, v));
                    ComparedValue {
                        value: v.clone(),
                        count_a: ca,
                        percent_a: percent(ca, fa.total),
                        count_b: cb,
                        percent_b: percent(cb, fb.total),
                    }
                })
                .collect();
            values.sort_by(|x, y| {
                y.count_a
                    .cmp(&x.count_a)
                    .then_with(|| y.count_b.cmp(&x.count_b))
                    .then_with(|| x.value.cmp(&y.value))
            });
            Comparison::Categorical {
                total_a: fa.total,
                total_b: fb.total,
                values,
            }
        }
        Variable::Numerical(n) => Comparison::Numerical {
            a: box_summary(&numeric_values(matches_a, *n, ds_a)),
            b: box_summary(&numeric_values(matches_b, *n, ds_b)),
        },
    }
}

/// Runs the query on both corpora and compares `var`. Filter values need
/// only exist in one of the two datasets.
pub fn compare(q: &QuerySpec, a: &Corpus, b: &Corpus, var: &Variable) -> Result<Comparison, ValidationError> {
    q.filters.validate_against(&[a.dataset(), b.dataset()])?;
    let (ma, mb) = (evaluate(q, a), evaluate(q, b));
    Ok(compare_matches(&ma, a.dataset(), &mb, b.dataset(), var))
}
