use crate::error::FormatError;
use crate::model::Span;

/// Parses a 1-based DISRPT range expression (`"5-8,12"`) into a 0-based span.
///
/// Errors carry line 0 and the 1-based character column of the offending
/// item inside `expr`; callers re-anchor them to their file position.
pub fn parse_range_expr(expr: &str) -> Result<Span, FormatError> {
    let mut items: Vec<(u32, u32, usize)> = Vec::new();
    let mut offset = 0;
    for item in expr.split(',') {
        let column = offset + 1;
        offset += item.len() + 1;
        let item = item.trim();
        let err = |msg: String| Err(FormatError::new(0, msg).at_column(column));
        if item.is_empty() {
            return err(format!("empty item in range expression `{expr}`"));
        }
        let (a, b) = match item.split_once('-') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (item, item),
        };
        let (Some(a), Some(b)) = (parse_index(a), parse_index(b)) else {
            return err(format!("malformed range item `{item}`"));
        };
        if b < a {
            return err(format!("reversed range `{item}`"));
        }
        items.push((a - 1, b - 1, column));
    }
    items.sort_unstable();
    for pair in items.windows(2) {
        if pair[1].0 <= pair[0].1 {
            return Err(FormatError::new(
                0,
                format!("overlapping items in range expression `{expr}`"),
            )
            .at_column(pair[1].2));
        }
    }
    Ok(Span::normalized(
        items.into_iter().map(|(s, e, _)| (s, e)).collect(),
    ))
}

fn parse_index(s: &str) -> Option<u32> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse::<u32>().ok().filter(|&n| n >= 1)
}
