//! Output tables.
//!
//! Every table starts with the provenance columns
//! `config_hash, seed, p_gate, p_readout, px, py, pz`, followed by the
//! experiment's own columns. CSV has one header row and one row per
//! condition; JSON is an array of objects with the same keys in the same
//! order.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use qsdc_core::noise::NoiseModel;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::XlabError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = XlabError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(XlabError::Config(format!("unknown format {other:?}; expected csv or json"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

pub const PROVENANCE_COLUMNS: [&str; 7] = ["config_hash", "seed", "p_gate", "p_readout", "px", "py", "pz"];

/// Where a row came from: a digest of the experiment parameters, the master
/// seed and the noise parameters in force.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub p_gate: f64,
    pub p_readout: f64,
    pub px: f64,
    pub py: f64,
    pub pz: f64,
}

impl Provenance {
    pub fn new<T: Serialize>(params: &T, seed: u64, noise: &NoiseModel) -> Result<Self, XlabError> {
        let canonical = serde_json::to_vec(params)?;
        let digest = Sha256::digest(&canonical);
        Ok(Self {
            config_hash: hex::encode(&digest[..8]),
            seed,
            p_gate: noise.p_gate,
            p_readout: noise.p_readout,
            px: noise.error_mix.px,
            py: noise.error_mix.py,
            pz: noise.error_mix.pz,
        })
    }

    fn cells(&self) -> Vec<Value> {
        vec![
            self.config_hash.clone().into(),
            self.seed.into(),
            self.p_gate.into(),
            self.p_readout.into(),
            self.px.into(),
            self.py.into(),
            self.pz.into(),
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<Value>>,
}

impl Table {
    /// A table with the provenance columns followed by `columns`.
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: PROVENANCE_COLUMNS.iter().chain(columns).map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, provenance: &Provenance, cells: Vec<Value>) {
        let mut row = provenance.cells();
        row.extend(cells);
        assert_eq!(row.len(), self.columns.len(), "row width does not match header");
        self.rows.push(row);
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn get(&self, row: usize, column: &str) -> Option<&Value> {
        let i = self.columns.iter().position(|c| c == column)?;
        self.rows.get(row).map(|r| &r[i])
    }

    pub fn to_csv(&self) -> Result<String, XlabError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(csv_cell))?;
        }
        let bytes = w.into_inner().map_err(|e| XlabError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String, XlabError> {
        let objects: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let map: Map<String, Value> = self.columns.iter().cloned().zip(row.iter().cloned()).collect();
                Value::Object(map)
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&objects)?;
        s.push('\n');
        Ok(s)
    }

    pub fn render(&self, format: Format) -> Result<String, XlabError> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    pub fn write(&self, path: &Path, format: Format) -> Result<(), XlabError> {
        fs::write(path, self.render(format)?)?;
        Ok(())
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// `Some(x)` as a number, `None` (or a non-finite value) as an empty cell.
pub fn opt(x: Option<f64>) -> Value {
    match x {
        Some(v) if v.is_finite() => v.into(),
        _ => Value::Null,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample() -> Table {
        let prov = Provenance::new(&json!({"a": 1}), 9, &NoiseModel::calibrated(10)).unwrap();
        let mut t = Table::new(&["eta", "accuracy", "note"]);
        t.push(&prov, vec![10.into(), 0.95.into(), Value::Null]);
        t.push(&prov, vec![700.into(), opt(Some(0.5)), "a,b".into()]);
        t
    }

    #[test]
    fn csv_layout() {
        let csv = sample().to_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "config_hash,seed,p_gate,p_readout,px,py,pz,eta,accuracy,note");
        let row = lines.next().unwrap();
        assert!(row.ends_with(",10,0.95,"), "{row}");
        assert!(lines.next().unwrap().ends_with(",700,0.5,\"a,b\""));
    }

    #[test]
    fn json_keeps_column_order() {
        let json = sample().to_json().unwrap();
        let v: Value = serde_json::from_str(&json).unwrap();
        let keys: Vec<_> = v[0].as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys, sample().columns());
        assert_eq!(v[1]["eta"], 700);
    }

    #[test]
    fn hash_depends_on_parameters_only() {
        let n = NoiseModel::noiseless();
        let a = Provenance::new(&json!({"d": 1}), 1, &n).unwrap();
        let b = Provenance::new(&json!({"d": 1}), 2, &n).unwrap();
        let c = Provenance::new(&json!({"d": 2}), 1, &n).unwrap();
        assert_eq!(a.config_hash, b.config_hash);
        assert_ne!(a.config_hash, c.config_hash);
        assert_eq!(a.config_hash.len(), 16);
    }
}
