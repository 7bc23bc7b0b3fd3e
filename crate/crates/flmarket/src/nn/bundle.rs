//! Flat serialization for parameter bundles: an ordered list of
//! `(name, shape, values)` records stored as JSON.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ParamRecord {
    pub name: String,
    pub shape: (usize, usize),
    pub values: Vec<f64>,
}

impl ParamRecord {
    pub fn new(name: impl Into<String>, shape: (usize, usize), values: Vec<f64>) -> Self {
        let record = Self {
            name: name.into(),
            shape,
            values,
        };
        assert_eq!(
            record.shape.0 * record.shape.1,
            record.values.len(),
            "record {} shape does not match value count",
            record.name
        );
        record
    }
}

/// Ordered collection of named tensors.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Default)]
pub struct ParamBundle {
    pub records: Vec<ParamRecord>,
}

impl ParamBundle {
    pub fn push(&mut self, name: impl Into<String>, shape: (usize, usize), values: Vec<f64>) {
        self.records.push(ParamRecord::new(name, shape, values));
    }

    pub fn find(&self, name: &str) -> Result<&ParamRecord> {
        self.records
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| Error::ParamFile(format!("missing record {name:?}")))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path)?;
        serde_json::to_writer(BufWriter::new(file), self)
            .map_err(|e| Error::ParamFile(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path)?;
        serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::ParamFile(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_preserves_records() {
        let mut bundle = ParamBundle::default();
        bundle.push("w1", (2, 3), vec![1.0, -0.5, 0.25, 3.0, 0.0, 1e-9]);
        bundle.push("b1", (1, 3), vec![0.1, 0.2, 0.3]);
        let dir = std::env::temp_dir().join("flmarket_bundle_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bundle.json");
        bundle.save(&path).unwrap();
        let loaded = ParamBundle::load(&path).unwrap();
        assert_eq!(bundle, loaded);
        assert_eq!(loaded.find("b1").unwrap().shape, (1, 3));
        assert!(loaded.find("nope").is_err());
    }
}
