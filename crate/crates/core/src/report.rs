//! Text output helpers shared by the CSV and JSON writers.

use std::io::Write;

/// Shortest-form-independent float text with 17 significant digits, so that
/// parsing the output recovers the value exactly.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes one CSV line (comma separated, LF terminated). Fields must not
/// contain commas.
pub fn write_csv_row<W: Write, S: AsRef<str>>(w: &mut W, fields: &[S]) -> std::io::Result<()> {
    let line = fields.iter().map(|f| f.as_ref()).collect::<Vec<_>>().join(",");
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")
}
