//! Shared helpers for integration tests: the naive-scan oracle and random
//! query generation.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::Rng;
use relscope_core::deql::{Operator, QueryAst, TokenPattern};
use relscope_core::engine::{Filters, LabelFilter, LabelKind, Negatable, Presence, QueryOptions, QuerySpec};
use relscope_core::model::{Dataset, Direction, Relation, TokenRecord};

type Positions = BTreeSet<u32>;

fn positions(span: &relscope_core::model::Span) -> Positions {
    span.ranges().iter().flat_map(|&(s, e)| s..=e).collect()
}

fn token_ok(tok: &TokenRecord, pat: &TokenPattern, case_sensitive: bool) -> bool {
    let eq = |a: &str, b: &str| if case_sensitive { a == b } else { a.to_lowercase() == b.to_lowercase() };
    if let Some(f) = &pat.form {
        if !eq(f, &tok.form) {
            return false;
        }
    }
    if let Some(l) = &pat.lemma {
        if !eq(l, &tok.lemma) {
            return false;
        }
    }
    if let Some(u) = &pat.upos {
        if *u != tok.upos {
            return false;
        }
    }
    if let Some(d) = &pat.deprel {
        let base = tok.deprel.split(':').next().unwrap_or("");
        if *d != tok.deprel && d != base {
            return false;
        }
    }
    true
}

/// First assignment in lexicographic order, found by exhaustive search.
fn flexible(pats: &[TokenPattern], scope: &Positions, toks: &[TokenRecord], cs: bool, after: Option<u32>) -> Option<Vec<u32>> {
    let Some((first, rest)) = pats.split_first() else {
        return Some(Vec::new());
    };
    for &p in scope.iter().filter(|&&p| after.is_none_or(|a| p > a)) {
        if token_ok(&toks[p as usize], first, cs) {
            if let Some(mut tail) = flexible(rest, scope, toks, cs, Some(p)) {
                tail.insert(0, p);
                return Some(tail);
            }
        }
    }
    None
}

fn contiguous(pats: &[TokenPattern], scope: &Positions, toks: &[TokenRecord], cs: bool) -> Option<Vec<u32>> {
    if pats.is_empty() {
        return Some(Vec::new());
    }
    'start: for &s in scope {
        let run: Vec<u32> = (s..s + pats.len() as u32).collect();
        for (pat, &p) in pats.iter().zip(&run) {
            if !scope.contains(&p) || !token_ok(&toks[p as usize], pat, cs) {
                continue 'start;
            }
        }
        return Some(run);
    }
    None
}

fn side(pats: &[TokenPattern], scope: &Positions, toks: &[TokenRecord], opts: QueryOptions) -> Option<Vec<u32>> {
    if opts.exact {
        contiguous(pats, scope, toks, opts.case_sensitive)
    } else {
        flexible(pats, scope, toks, opts.case_sensitive, None)
    }
}

fn filters_ok(f: &Filters, rel: &Relation) -> bool {
    if let Some(l) = &f.label {
        let v = if l.which == LabelKind::Orig { &rel.orig_label } else { &rel.disrpt_label };
        if (v == &l.value) == l.negated {
            return false;
        }
    }
    if let Some(d) = &f.direction {
        if (rel.direction == d.value) == d.negated {
            return false;
        }
    }
    if let Some(t) = &f.signal_type {
        let has = rel.signals.iter().any(|s| s.sig_type == t.value);
        if has == t.negated {
            return false;
        }
    }
    if let Some(t) = &f.signal_subtype {
        let has = rel.signals.iter().any(|s| s.sig_subtype.as_ref() == Some(&t.value));
        if has == t.negated {
            return false;
        }
    }
    match f.any_signal {
        Some(Presence::Present) if rel.signals.is_empty() => false,
        Some(Presence::Absent) if !rel.signals.is_empty() => false,
        _ => true,
    }
}

/// Sentences overlapping either argument, as a position set.
fn sentence_window(rel: &Relation, ds: &Dataset) -> Positions {
    let args: Positions = positions(&rel.arg1).union(&positions(&rel.arg2)).copied().collect();
    let doc = &ds.documents[rel.doc];
    let mut out = Positions::new();
    for &(s, e) in &doc.sentences {
        if args.range(s..=e).next().is_some() {
            out.extend(s..=e);
        }
    }
    out
}

/// Naive evaluation: `(relation index, matched positions)` in corpus order.
pub fn oracle_evaluate(q: &QuerySpec, ds: &Dataset) -> Vec<(usize, Vec<u32>)> {
    let mut out = Vec::new();
    for (i, rel) in ds.relations.iter().enumerate() {
        if !filters_ok(&q.filters, rel) {
            continue;
        }
        let toks = &ds.documents[rel.doc].tokens;
        let a1 = positions(&rel.arg1);
        let a2 = positions(&rel.arg2);
        let (src, tgt) = if rel.direction == Direction::OneToTwo { (&a1, &a2) } else { (&a2, &a1) };
        let hit = match q.ast.op {
            Operator::Anywhere if q.options.include_context => side(&q.ast.left, &sentence_window(rel, ds), toks, q.options),
            Operator::Anywhere if q.options.exact => {
                let x = side(&q.ast.left, &a1, toks, q.options);
                let y = side(&q.ast.left, &a2, toks, q.options);
                match (x, y) {
                    (Some(x), Some(y)) => Some(if x.first() <= y.first() { x } else { y }),
                    (x, y) => x.or(y),
                }
            }
            Operator::Anywhere => {
                let both: Positions = a1.union(&a2).copied().collect();
                side(&q.ast.left, &both, toks, q.options)
            }
            Operator::ArgOrder | Operator::SourceTarget => {
                let (l, r) = if q.ast.op == Operator::ArgOrder { (&a1, &a2) } else { (src, tgt) };
                side(&q.ast.left, l, toks, q.options).and_then(|mut x| {
                    let y = side(&q.ast.right, r, toks, q.options)?;
                    x.extend(y);
                    x.sort_unstable();
                    Some(x)
                })
            }
        };
        if let Some(p) = hit {
            out.push((i, p));
        }
    }
    out
}

fn random_pattern<R: Rng>(rng: &mut R, tok: &TokenRecord) -> TokenPattern {
    loop {
        let mut p = TokenPattern::default();
        if rng.gen_bool(0.6) {
            let form = match rng.gen_range(0..10) {
                0 => tok.form.to_uppercase(),
                1 => "zzyzx".to_string(),
                _ => tok.form.clone(),
            };
            p.form = Some(form);
        }
        if rng.gen_bool(0.25) {
            p.lemma = Some(tok.lemma.clone());
        }
        if rng.gen_bool(0.35) {
            p.upos = Some(tok.upos.clone());
        }
        if rng.gen_bool(0.3) {
            let base = tok.deprel.split(':').next().unwrap().to_string();
            p.deprel = Some(if rng.gen_bool(0.5) { base } else { tok.deprel.clone() });
        }
        if !p.is_empty() {
            return p;
        }
    }
}

/// Patterns drawn in text order from a span of a random relation, so
/// queries hit often.
fn patterns_from<R: Rng>(rng: &mut R, pool: &[u32], toks: &[TokenRecord], len: std::ops::RangeInclusive<usize>) -> Vec<TokenPattern> {
    let n = rng.gen_range(len);
    if pool.is_empty() {
        return Vec::new();
    }
    let mut picks: Vec<u32> = if rng.gen_bool(0.4) && pool.len() >= n {
        let start = rng.gen_range(0..=pool.len() - n);
        pool[start..start + n].to_vec()
    } else {
        (0..n).map(|_| *pool.choose(rng).unwrap()).collect()
    };
    picks.sort_unstable();
    picks.iter().map(|&p| random_pattern(rng, &toks[p as usize])).collect()
}

fn random_filters<R: Rng>(rng: &mut R, ds: &Dataset) -> Filters {
    let mut f = Filters::default();
    let pick = |rng: &mut R, set: &BTreeSet<String>| set.iter().choose(rng).cloned();
    if rng.gen_bool(0.3) {
        let orig = rng.gen_bool(0.3);
        let set = if orig { &ds.label_inventory.orig } else { &ds.label_inventory.disrpt };
        f.label = pick(rng, set).map(|value| LabelFilter {
            value,
            negated: rng.gen_bool(0.4),
            which: if orig { LabelKind::Orig } else { LabelKind::Disrpt },
        });
    }
    if rng.gen_bool(0.25) {
        let d = if rng.gen_bool(0.5) { Direction::OneToTwo } else { Direction::TwoToOne };
        f.direction = Some(if rng.gen_bool(0.5) { Negatable::not(d) } else { Negatable::is(d) });
    }
    if rng.gen_bool(0.25) {
        f.signal_type = pick(rng, &ds.signal_inventory.types).map(|v| Negatable { value: v, negated: rng.gen_bool(0.5) });
    }
    if rng.gen_bool(0.2) {
        f.signal_subtype = pick(rng, &ds.signal_inventory.subtypes).map(|v| Negatable { value: v, negated: rng.gen_bool(0.5) });
    }
    if rng.gen_bool(0.2) {
        f.any_signal = Some(if rng.gen_bool(0.5) { Presence::Present } else { Presence::Absent });
    }
    f
}

pub fn random_spec<R: Rng>(rng: &mut R, ds: &Dataset) -> QuerySpec {
    let rel = ds.relations.choose(rng).unwrap();
    let toks = &ds.documents[rel.doc].tokens;
    let a1: Vec<u32> = positions(&rel.arg1).into_iter().collect();
    let a2: Vec<u32> = positions(&rel.arg2).into_iter().collect();
    let src: Vec<u32> = positions(rel.source()).into_iter().collect();
    let tgt: Vec<u32> = positions(rel.target()).into_iter().collect();
    let args: Vec<u32> = a1.iter().chain(&a2).copied().collect::<BTreeSet<_>>().into_iter().collect();
    let op = *[Operator::Anywhere, Operator::ArgOrder, Operator::SourceTarget].choose(rng).unwrap();
    let ast = match op {
        Operator::Anywhere => QueryAst {
            left: patterns_from(rng, &args, toks, 0..=3),
            op,
            right: Vec::new(),
        },
        Operator::ArgOrder => QueryAst {
            left: patterns_from(rng, &a1, toks, 1..=2),
            op,
            right: patterns_from(rng, &a2, toks, 1..=2),
        },
        Operator::SourceTarget => QueryAst {
            left: patterns_from(rng, &src, toks, 0..=2),
            op,
            right: patterns_from(rng, &tgt, toks, 0..=2),
        },
    };
    let options = QueryOptions {
        exact: rng.gen_bool(0.4),
        case_sensitive: rng.gen_bool(0.2),
        include_context: rng.gen_bool(0.2),
    };
    QuerySpec::new(ast, options, random_filters(rng, ds))
}
