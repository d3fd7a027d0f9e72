//! Results CSV: a version comment, a header row, then one line per record.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

pub const VERSION_LINE: &str = "# suu-results v1";

/// Formats with 6 significant digits, shortest form.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("formatted float parses");
    rounded.to_string()
}

pub fn opt6(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_default()
}

/// Quotes a field if it contains a delimiter, quote or newline.
pub fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Renders the version line, header and rows.
pub fn render(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(VERSION_LINE);
    out.push('\n');
    out.push_str(&header.join(","));
    out.push('\n');
    for r in rows {
        out.push_str(&r.iter().map(|f| field(f)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

/// Appends rows with a single write on an append-mode handle, writing the
/// version line and header first when the file is new or empty.
pub fn append(path: &Path, header: &[&str], rows: &[Vec<String>]) -> std::io::Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    let fresh = f.metadata()?.len() == 0;
    let mut text = render(header, rows);
    if !fresh {
        let skip = VERSION_LINE.len() + 1 + header.join(",").len() + 1;
        text.drain(..skip);
    }
    f.write_all(text.as_bytes())?;
    f.flush()
}

/// Writes a whole table, replacing the file through a rename.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> std::io::Result<()> {
    let tmp = path.with_extension("csv.tmp");
    std::fs::write(&tmp, render(header, rows))?;
    std::fs::rename(tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_digits() {
        assert_eq!(sig6(8.0 / 3.0), "2.66667");
        assert_eq!(sig6(2.0), "2");
        assert_eq!(sig6(1234567.0), "1234570");
        assert_eq!(sig6(0.000123456789), "0.000123457");
        assert_eq!(sig6(0.0), "0");
    }

    #[test]
    fn quoting() {
        assert_eq!(field("a,b"), "\"a,b\"");
        assert_eq!(field("say \"x\""), "\"say \"\"x\"\"\"");
        assert_eq!(field("plain"), "plain");
    }

    #[test]
    fn append_writes_header_once() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        append(&p, &["a", "b"], &[vec!["1".into(), "2".into()]]).unwrap();
        append(&p, &["a", "b"], &[vec!["3".into(), "4".into()]]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text, "# suu-results v1\na,b\n1,2\n3,4\n");
    }
}
