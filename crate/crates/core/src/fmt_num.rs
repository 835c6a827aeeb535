//! Number formatting shared by the CSV and key-value emitters.

/// Shortest round-trip decimal form with '.' separator; negative zero is
/// normalized so repeated runs stay byte-identical.
pub(crate) fn f64_field(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v}")
}

/// RFC-4180-style quoting: fields containing commas, quotes, or newlines are
/// wrapped and inner quotes doubled. The schemas in this crate never produce
/// such fields, but the writer stays safe for arbitrary strings.
pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub(crate) fn csv_line(fields: &[String]) -> String {
    let mut line = fields
        .iter()
        .map(|f| csv_field(f))
        .collect::<Vec<_>>()
        .join(",");
    line.push('\n');
    line
}
