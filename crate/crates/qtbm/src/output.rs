//! CSV text with fixed 17-significant-digit numbers, written atomically.

use std::io::{self, Write};
use std::path::Path;

/// `d.dddddddddddddddde±x`: 17 significant digits, enough to round-trip any
/// `f64`, with a fixed shape for every value.
pub fn number(x: f64) -> String {
    format!("{x:.16e}")
}

/// Builds CSV text with LF line endings.
#[derive(Debug, Clone, Default)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut csv = Csv::default();
        csv.raw_row(header.iter().map(|s| s.to_string()));
        csv
    }

    pub fn row(&mut self, values: &[f64]) {
        self.raw_row(values.iter().map(|&v| number(v)));
    }

    /// Row of preformatted cells.
    pub fn raw_row<I: IntoIterator<Item = String>>(&mut self, cells: I) {
        let cells: Vec<String> = cells.into_iter().collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// Writes `contents` to a temporary file beside `path`, then renames it over
/// `path`, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_have_seventeen_significant_digits_and_round_trip() {
        assert_eq!(number(0.0), "0.0000000000000000e0");
        assert_eq!(number(-1.5), "-1.5000000000000000e0");
        assert_eq!(number(0.1), "1.0000000000000001e-1");
        for x in [
            0.1,
            1.0 / 3.0,
            6.02214076e23,
            -2.2250738585072014e-308,
            5e-324,
        ] {
            assert_eq!(number(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn csv_rows_end_with_lf() {
        let mut csv = Csv::new(&["a", "b"]);
        csv.row(&[1.0, 2.0]);
        assert_eq!(
            csv.as_str(),
            "a,b\n1.0000000000000000e0,2.0000000000000000e0\n"
        );
        assert!(!csv.as_str().contains('\r'));
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, "first\n").unwrap();
        write_atomic(&path, "second\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
