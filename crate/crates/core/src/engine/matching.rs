use crate::deql::TokenPattern;
use crate::model::{deprel_base, TokenRecord, Span};

/// A [`TokenPattern`] with its form and lemma pre-folded for the chosen
/// case sensitivity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledPattern {
    pub form: Option<String>,
    pub lemma: Option<String>,
    pub upos: Option<String>,
    pub deprel: Option<String>,
    pub case_sensitive: bool,
}

impl CompiledPattern {
    pub fn new(pat: &TokenPattern, case_sensitive: bool) -> Self {
        let fold = |s: &Option<String>| {
            s.as_ref()
                .map(|v| if case_sensitive { v.clone() } else { v.to_lowercase() })
        };
        CompiledPattern {
            form: fold(&pat.form),
            lemma: fold(&pat.lemma),
            upos: pat.upos.clone(),
            deprel: pat.deprel.clone(),
            case_sensitive,
        }
    }

    pub fn matches(&self, tok: &TokenRecord) -> bool {
        let (form, lemma) = if self.case_sensitive {
            (&tok.form, &tok.lemma)
        } else {
            (&tok.form_folded, &tok.lemma_folded)
        };
        self.form.as_ref().is_none_or(|f| f == form)
            && self.lemma.as_ref().is_none_or(|l| l == lemma)
            && self.upos.as_ref().is_none_or(|u| *u == tok.upos)
            && self
                .deprel
                .as_ref()
                .is_none_or(|d| *d == tok.deprel || d == deprel_base(&tok.deprel))
    }
}

/// Case-insensitive pattern test: conjunction over the present fields.
/// A bare deprel like `advcl` also matches subtyped labels (`advcl:relcl`).
pub fn match_pattern(tok: &TokenRecord, pat: &TokenPattern) -> bool {
    CompiledPattern::new(pat, false).matches(tok)
}

/// Finds the leftmost placement of `patterns` inside `scope`.
///
/// With `exact`, the patterns must match consecutive tokens inside a single
/// range of the scope. Otherwise they must match strictly increasing
/// positions in the scope, in pattern order, with gaps allowed.
pub fn match_side(
    patterns: &[CompiledPattern],
    scope: &Span,
    exact: bool,
    tokens: &[TokenRecord],
) -> Option<Vec<u32>> {
    if patterns.is_empty() {
        return Some(Vec::new());
    }
    let k = patterns.len() as u32;
    if exact {
        for &(s, e) in scope.ranges() {
            if e - s + 1 < k {
                continue;
            }
            for start in s..=e + 1 - k {
                let hit = patterns
                    .iter()
                    .zip(start..)
                    .all(|(p, pos)| p.matches(&tokens[pos as usize]));
                if hit {
                    return Some((start..start + k).collect());
                }
            }
        }
        None
    } else {
        let mut out = Vec::with_capacity(patterns.len());
        let mut next = patterns.iter();
        let mut want = next.next();
        for pos in scope.positions() {
            let Some(p) = want else { break };
            if p.matches(&tokens[pos as usize]) {
                out.push(pos);
                want = next.next();
            }
        }
        want.is_none().then_some(out)
    }
}
