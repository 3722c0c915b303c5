use std::collections::BTreeMap;

use crate::error::FormatError;
use crate::model::Direction;

/// Header name of the optional signal column.
pub const SIGNAL_COLUMN: &str = "signals";

const REQUIRED: [&str; 6] = ["doc", "unit1_toks", "unit2_toks", "dir", "orig_label", "label"];

/// Columns that are read into [`RelsRow`] fields rather than kept as metadata.
const KNOWN: [&str; 15] = [
    "doc",
    "unit1_toks",
    "unit2_toks",
    "unit1_txt",
    "unit2_txt",
    "u1_raw",
    "u2_raw",
    "s1_toks",
    "s2_toks",
    "unit1_sent",
    "unit2_sent",
    "dir",
    "orig_label",
    "label",
    SIGNAL_COLUMN,
];

/// One data line of a `.rels` file, as written.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelsRow {
    /// 1-based line number in the source file.
    pub line: usize,
    pub doc: String,
    pub unit1_toks: String,
    pub unit2_toks: String,
    pub unit1_txt: String,
    pub unit2_txt: String,
    pub s1_toks: String,
    pub s2_toks: String,
    pub unit1_sent: String,
    pub unit2_sent: String,
    pub dir: Direction,
    pub orig_label: String,
    pub label: String,
    pub signals: Option<String>,
    /// Unrecognized columns, keyed by their header name.
    pub extra: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelsTable {
    pub has_signal_column: bool,
    pub rows: Vec<RelsRow>,
    /// Column positions (1-based) of `unit1_toks`, `unit2_toks`, `signals`,
    /// for error reporting during alignment.
    pub unit1_column: usize,
    pub unit2_column: usize,
    pub signal_column: Option<usize>,
}

/// Parses a tab-separated `.rels` file. Columns are located by header name
/// (case-insensitive), so their order does not matter.
pub fn parse_rels(text: &str) -> Result<RelsTable, FormatError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((header_idx, header)) = lines.next() else {
        return Err(FormatError::new(1, "missing header row"));
    };
    let header: Vec<String> = header
        .trim_end_matches('\r')
        .split('\t')
        .map(|h| h.trim().to_lowercase())
        .collect();
    let col = |name: &str| header.iter().position(|h| h == name);
    for name in REQUIRED {
        if col(name).is_none() {
            return Err(FormatError::new(
                header_idx + 1,
                format!("header lacks required column `{name}`"),
            ));
        }
    }
    let idx = |name: &str| col(name).expect("required column checked");
    let (c_doc, c_u1, c_u2, c_dir, c_orig, c_label) = (
        idx("doc"),
        idx("unit1_toks"),
        idx("unit2_toks"),
        idx("dir"),
        idx("orig_label"),
        idx("label"),
    );
    let c_sig = col(SIGNAL_COLUMN);
    let extras: Vec<(usize, &String)> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| !KNOWN.contains(&h.as_str()))
        .collect();

    let mut table = RelsTable {
        has_signal_column: c_sig.is_some(),
        rows: Vec::new(),
        unit1_column: c_u1 + 1,
        unit2_column: c_u2 + 1,
        signal_column: c_sig.map(|c| c + 1),
    };
    for (i, line) in lines {
        let lineno = i + 1;
        let cells: Vec<&str> = line.trim_end_matches('\r').split('\t').collect();
        if cells.len() != header.len() {
            return Err(FormatError::new(
                lineno,
                format!(
                    "row has {} columns, header has {}",
                    cells.len(),
                    header.len()
                ),
            ));
        }
        let get = |name: &str| col(name).map(|c| cells[c].to_string()).unwrap_or_default();
        let dir = Direction::parse(cells[c_dir].trim()).ok_or_else(|| {
            FormatError::new(
                lineno,
                format!("unknown direction `{}` (expected 1>2 or 1<2)", cells[c_dir]),
            )
            .at_column(c_dir + 1)
        })?;
        table.rows.push(RelsRow {
            line: lineno,
            doc: cells[c_doc].trim().to_string(),
            unit1_toks: cells[c_u1].trim().to_string(),
            unit2_toks: cells[c_u2].trim().to_string(),
            unit1_txt: get("unit1_txt"),
            unit2_txt: get("unit2_txt"),
            s1_toks: get("s1_toks"),
            s2_toks: get("s2_toks"),
            unit1_sent: get("unit1_sent"),
            unit2_sent: get("unit2_sent"),
            dir,
            orig_label: cells[c_orig].trim().to_string(),
            label: cells[c_label].trim().to_string(),
            signals: c_sig.map(|c| cells[c].trim().to_string()),
            extra: extras
                .iter()
                .map(|&(c, name)| (name.clone(), cells[c].to_string()))
                .collect(),
        });
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "doc\tunit1_toks\tunit2_toks\tunit1_txt\tunit2_txt\ts1_toks\ts2_toks\tunit1_sent\tunit2_sent\tdir\torig_label\tlabel";

    fn row(dir: &str, label: &str) -> String {
        format!("d1\t1-3\t4-6\ta b c\td e f\t1-6\t1-6\ts\ts\t{dir}\t{label}-x\t{label}")
    }

    #[test]
    fn preserves_row_count_and_order() {
        let text = format!(
            "{HEADER}\n{}\n{}\n{}\n",
            row("1>2", "A"),
            row("1<2", "B"),
            row("1>2", "C")
        );
        let t = parse_rels(&text).unwrap();
        assert_eq!(t.rows.len(), 3);
        let labels: Vec<&str> = t.rows.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["A", "B", "C"]);
        assert_eq!(t.rows[1].dir, Direction::TwoToOne);
        assert_eq!(t.rows[0].line, 2);
        assert!(!t.has_signal_column);
    }

    #[test]
    fn rejects_unknown_direction() {
        let text = format!("{HEADER}\n{}\n", row("2>1", "A"));
        let e = parse_rels(&text).unwrap_err();
        assert_eq!(e.line, 2);
        assert_eq!(e.column, Some(10));
        assert!(e.message.contains("2>1"));
    }

    #[test]
    fn extra_column_becomes_metadata() {
        let text = format!("{HEADER}\tmeta\n{}\tgenre=news\n", row("1>2", "A"));
        let t = parse_rels(&text).unwrap();
        assert_eq!(t.rows[0].extra.get("meta").map(String::as_str), Some("genre=news"));
    }

    #[test]
    fn header_is_case_insensitive_and_order_free() {
        let text = "LABEL\tDir\tdoc\tunit2_toks\tunit1_toks\torig_label\tSignals\nelab\t1<2\td\t3\t1-2\telab-add\tdm;dm;1\n";
        let t = parse_rels(text).unwrap();
        let r = &t.rows[0];
        assert_eq!((r.label.as_str(), r.unit1_toks.as_str(), r.unit2_toks.as_str()), ("elab", "1-2", "3"));
        assert_eq!(r.signals.as_deref(), Some("dm;dm;1"));
        assert_eq!(t.signal_column, Some(7));
    }

    #[test]
    fn arity_mismatch_cites_line() {
        let text = format!("{HEADER}\n{}\n{}\textra\n", row("1>2", "A"), row("1>2", "A"));
        let e = parse_rels(&text).unwrap_err();
        assert_eq!(e.line, 3);
    }

    #[test]
    fn missing_required_column() {
        let e = parse_rels("doc\tunit1_toks\n").unwrap_err();
        assert!(e.message.contains("unit2_toks"));
        assert!(parse_rels("").is_err());
    }
}
