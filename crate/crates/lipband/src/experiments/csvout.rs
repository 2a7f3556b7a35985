//! Tidy long-format CSV emission. Every file carries a header row and every
//! row carries the config hash and a seed, so reruns are byte-comparable.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::Result;

pub struct CsvFile {
    path: PathBuf,
    out: BufWriter<File>,
}

impl CsvFile {
    /// Creates `<dir>/<name>` and writes the header row. The first two
    /// columns are always `config_hash` and `seed`.
    pub fn create(dir: &Path, name: &str, columns: &[&str]) -> Result<Self> {
        let path = dir.join(name);
        let file = File::create(&path)?;
        let mut out = BufWriter::new(file);
        let mut header = vec!["config_hash", "seed"];
        header.extend_from_slice(columns);
        writeln!(out, "{}", header.join(","))?;
        Ok(CsvFile { path, out })
    }

    pub fn row(&mut self, config_hash: &str, seed: u64, cells: &[String]) -> Result<()> {
        write!(self.out, "{config_hash},{seed}")?;
        for cell in cells {
            write!(self.out, ",{cell}")?;
        }
        writeln!(self.out)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        self.out.flush()?;
        Ok(self.path)
    }
}

/// Float formatting for CSV cells: shortest round-trip representation, with
/// the explicit `inf` sentinel for unbounded rates.
pub fn fmt(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{v}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_rows() {
        let dir = std::env::temp_dir().join(format!("lipband-csv-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let mut csv = CsvFile::create(&dir, "t.csv", &["a", "b"]).unwrap();
        csv.row("beef", 3, &[fmt(1.5), fmt(f64::INFINITY)]).unwrap();
        let path = csv.finish().unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert_eq!(text, "config_hash,seed,a,b\nbeef,3,1.5,inf\n");
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn float_formatting_is_minimal() {
        assert_eq!(fmt(5.0), "5");
        assert_eq!(fmt(0.1), "0.1");
        assert_eq!(fmt(f64::INFINITY), "inf");
    }
}
