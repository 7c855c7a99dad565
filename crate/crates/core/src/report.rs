//! CSV tables and JSON manifests.
//!
//! Every CSV starts with a `# config_hash=... seed=...` comment line, then a
//! header row. Floats are printed with 6 significant digits.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// `%.6g`-style formatting.
pub fn sig6(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..6).contains(&exp) {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mant}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// SHA-256 of the compact JSON encoding, hex.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn header_line(&self) -> String {
        format!("# config_hash={} seed={}", self.config_hash, self.seed)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, prov: &Provenance, mut out: W) -> Result<()> {
        writeln!(out, "{}", prov.header_line())?;
        let mut w = csv::WriterBuilder::new().from_writer(out);
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self, prov: &Provenance) -> String {
        let mut buf = Vec::new();
        self.write(prov, &mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf8 csv")
    }

    pub fn write_file(&self, prov: &Provenance, path: &Path) -> Result<()> {
        let f = fs::File::create(path)?;
        self.write(prov, std::io::BufWriter::new(f))
    }

    /// Fixed-width rendering for terminals.
    pub fn render(&self) -> String {
        let cols = self.header.len();
        let mut width = vec![0; cols];
        for r in std::iter::once(&self.header).chain(&self.rows) {
            for (j, c) in r.iter().enumerate() {
                width[j] = width[j].max(c.len());
            }
        }
        let mut s = String::new();
        for r in std::iter::once(&self.header).chain(&self.rows) {
            let line: Vec<String> = r
                .iter()
                .enumerate()
                .map(|(j, c)| format!("{c:>w$}", w = width[j]))
                .collect();
            s.push_str(line.join("  ").trim_end());
            s.push('\n');
        }
        s
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: String,
    pub config_hash: String,
    pub seed: u64,
    pub runtime_secs: f64,
    pub threads: usize,
    pub parallel: bool,
    pub files: Vec<String>,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
}

impl Manifest {
    pub fn write_file(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        fs::write(path, s + "\n")?;
        Ok(())
    }
}

/// Writes `tables` as `<dir>/<name>.csv` plus `<dir>/manifest.json`.
pub fn write_artifacts(
    dir: &Path,
    tables: &[(String, Table)],
    prov: &Provenance,
    mut manifest: Manifest,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (name, t) in tables {
        let path = dir.join(format!("{name}.csv"));
        t.write_file(prov, &path)?;
        manifest.files.push(format!("{name}.csv"));
        written.push(path);
    }
    let path = dir.join("manifest.json");
    manifest.write_file(&path)?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(62.8), "62.8");
        assert_eq!(sig6(631.712345), "631.712");
        assert_eq!(sig6(0.00181234567), "0.00181235");
        assert_eq!(sig6(1234567.0), "1.23457e+06");
        assert_eq!(sig6(1.0e-7), "1e-07");
        assert_eq!(sig6(-2.5), "-2.5");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(999999.6), "1e+06");
        assert_eq!(sig6(100000.0), "100000");
    }

    #[test]
    fn csv_has_provenance_line() {
        let mut t = Table::new(["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        let prov = Provenance {
            config_hash: "abc".into(),
            seed: 7,
        };
        let s = t.to_csv_string(&prov);
        assert_eq!(s, "# config_hash=abc seed=7\na,b\n1,\"x,y\"\n");
    }

    #[test]
    fn hash_is_stable() {
        let a = config_hash(&serde_json::json!({"k": 1, "z": [1, 2]}));
        let b = config_hash(&serde_json::json!({"k": 1, "z": [1, 2]}));
        assert_eq!(a, b);
        assert_eq!(a.len(), 64);
    }
}
