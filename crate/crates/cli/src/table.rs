//! CSV tables with 12 significant digits and atomic file output.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// `x` rounded to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().expect("formatted float parses")
}

/// Shortest decimal that parses back to `round_sig(x)`.
pub fn format_sig(x: f64) -> String {
    let r = round_sig(x);
    if r == 0.0 {
        // Drops the sign of negative zero.
        return "0".into();
    }
    format!("{r}")
}

/// One parsed table line: every field is either empty or a number, except a
/// trailing free-text field.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub values: Vec<Option<f64>>,
    pub note: String,
}

impl Record {
    /// Rounds every value, so that the record equals its own round trip.
    pub fn rounded(values: Vec<Option<f64>>, note: impl Into<String>) -> Self {
        Self { values: values.into_iter().map(|v| v.map(round_sig)).collect(), note: note.into() }
    }
}

/// Serializes records under `header`, whose last column is the note.
pub fn to_csv(header: &[&str], records: &[Record]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in records {
        for v in &r.values {
            if let Some(v) = v {
                out.push_str(&format_sig(*v));
            }
            out.push(',');
        }
        out.push_str(&r.note.replace([',', '\n'], ";"));
        out.push('\n');
    }
    out
}

pub fn parse_csv(header: &[&str], text: &str) -> Result<Vec<Record>, TableError> {
    let mut lines = text.lines().enumerate();
    let err = |line: usize, message: String| TableError::Parse { line: line + 1, message };
    match lines.next() {
        Some((_, h)) if h.split(',').eq(header.iter().copied()) => {}
        Some((i, h)) => return Err(err(i, format!("unexpected header `{h}`"))),
        None => return Err(err(0, "empty table".into())),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(err(i, format!("expected {} fields, found {}", header.len(), fields.len())));
        }
        let (note, numbers) = fields.split_last().expect("nonempty header");
        let values = numbers
            .iter()
            .map(|f| {
                if f.is_empty() {
                    Ok(None)
                } else {
                    f.parse::<f64>().map(Some).map_err(|_| err(i, format!("`{f}` is not a number")))
                }
            })
            .collect::<Result<_, _>>()?;
        out.push(Record { values, note: note.to_string() });
    }
    Ok(out)
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), TableError> {
    let io = |source| TableError::Io { path: path.display().to_string(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.flush().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn formatting() {
        assert_eq!(format_sig(0.25), "0.25");
        assert_eq!(format_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_sig(2.0), "2");
        assert_eq!(format_sig(-0.0), "0");
        assert_eq!(format_sig(1.23456789012345e-9), "0.00000000123456789012");
    }

    #[test]
    fn header_and_shape_are_checked() {
        let h = ["a", "b", "status"];
        assert!(parse_csv(&h, "a,b\n").is_err());
        assert!(parse_csv(&h, "a,b,status\n1,2\n").is_err());
        assert!(parse_csv(&h, "a,b,status\nx,2,ok\n").is_err());
        let r = parse_csv(&h, "a,b,status\n1,,ok\n").unwrap();
        assert_eq!(r, vec![Record { values: vec![Some(1.0), None], note: "ok".into() }]);
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_atomic(&p, "one").unwrap();
        write_atomic(&p, "two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(rows in prop::collection::vec(prop::collection::vec(prop::option::of(-1e3f64..1e3), 3), 0..20)) {
            let h = ["x", "y", "z", "status"];
            let records: Vec<Record> = rows.into_iter().map(|v| Record::rounded(v, "ok")).collect();
            let text = to_csv(&h, &records);
            let back = parse_csv(&h, &text).unwrap();
            prop_assert_eq!(back.len(), records.len());
            for (a, b) in back.iter().zip(&records) {
                for (x, y) in a.values.iter().zip(&b.values) {
                    prop_assert_eq!(x.map(f64::to_bits), y.map(|v| if v == 0.0 { 0.0f64.to_bits() } else { v.to_bits() }));
                }
            }
            prop_assert_eq!(to_csv(&h, &back), text);
        }
    }
}
