//! Output files with a provenance header.

use crate::config::Format;
use crate::Failure;
use rwguide::table::Table;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

/// Hex SHA-256 of the configuration bytes.
pub fn config_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn header(hash: &str, seed: u64) -> String {
    format!("rwguide {} config={hash} seed={seed}", env!("CARGO_PKG_VERSION"))
}

pub struct Sink {
    dir: PathBuf,
    pub format: Format,
    header: String,
}

impl Sink {
    pub fn new(dir: &Path, format: Format, header: String) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::Validation(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), format, header })
    }

    fn write(&self, name: &str, text: &str) -> Result<(), Failure> {
        let p = self.dir.join(name);
        fs::write(&p, text).map_err(|e| Failure::Validation(format!("cannot write {}: {e}", p.display())))
    }

    /// `stem.csv` or `stem.json` depending on the format.
    pub fn table(&self, stem: &str, t: &Table) -> Result<(), Failure> {
        match self.format {
            Format::Csv => self.write(&format!("{stem}.csv"), &t.to_csv(&self.header)),
            Format::Json => self.write(&format!("{stem}.json"), &t.to_json(&self.header)),
        }
    }

    /// Full JSON document `{header, <key>: value}`.
    pub fn document<S: Serialize>(&self, stem: &str, key: &str, value: &S) -> Result<(), Failure> {
        let mut doc = serde_json::Map::new();
        doc.insert("header".into(), self.header.clone().into());
        let v = serde_json::to_value(value).map_err(|e| Failure::Numerical(format!("serialization: {e}")))?;
        doc.insert(key.into(), v);
        let text = serde_json::to_string_pretty(&doc).map_err(|e| Failure::Numerical(format!("serialization: {e}")))?;
        self.write(&format!("{stem}.json"), &(text + "\n"))
    }

    /// Plain text lines after a `#` header line.
    pub fn text(&self, name: &str, lines: &[String]) -> Result<(), Failure> {
        let mut s = format!("# {}\n", self.header);
        for l in lines {
            s.push_str(l);
            s.push('\n');
        }
        self.write(name, &s)
    }
}
