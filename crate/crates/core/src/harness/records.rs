use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::domain::fmt_f64;
use crate::error::{Error, Result};
use crate::learners::Method;

/// Exact CSV header of sweep output.
pub const CSV_HEADER: [&str; 13] = [
    "trial",
    "n_pub",
    "n_priv",
    "d",
    "epsilon",
    "delta",
    "method",
    "instance",
    "excess_risk",
    "runtime_ms",
    "seed",
    "aux",
    "status",
];

/// One row of sweep output. `excess_risk` holds the estimation error for
/// mean estimators and NaN for failed trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Global trial index `cell * trials + t`.
    pub trial: u64,
    pub n_pub: usize,
    pub n_priv: usize,
    pub d: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub method: Method,
    pub instance: String,
    pub excess_risk: f64,
    pub runtime_ms: f64,
    pub seed: u64,
    /// `key=value` pairs joined by `;`.
    pub aux: String,
    /// `ok` or `error:<Kind>`.
    pub status: String,
}

impl TrialRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn n(&self) -> usize {
        self.n_pub + self.n_priv
    }

    fn fields(&self) -> [String; 13] {
        [
            self.trial.to_string(),
            self.n_pub.to_string(),
            self.n_priv.to_string(),
            self.d.to_string(),
            fmt_f64(self.epsilon),
            fmt_f64(self.delta),
            self.method.to_string(),
            self.instance.clone(),
            fmt_f64(self.excess_risk),
            fmt_f64(self.runtime_ms),
            self.seed.to_string(),
            self.aux.clone(),
            self.status.clone(),
        ]
    }

    /// Value of an `aux` entry.
    pub fn aux_value(&self, key: &str) -> Option<&str> {
        self.aux
            .split(';')
            .filter_map(|kv| kv.split_once('='))
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v)
    }
}

/// Streams records as CSV; the header is written on construction.
pub struct RecordWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> RecordWriter<W> {
    pub fn new(writer: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(writer);
        inner.write_record(CSV_HEADER)?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, rec: &TrialRecord) -> Result<()> {
        self.inner.write_record(rec.fields())?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

pub fn write_records<W: Write>(records: &[TrialRecord], writer: W) -> Result<()> {
    let mut w = RecordWriter::new(writer)?;
    for r in records {
        w.write(r)?;
    }
    w.flush()
}

pub fn read_records<R: Read>(reader: R) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::InvalidParameter(format!(
            "unexpected CSV header: {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |col: &str| Error::InvalidParameter(format!("row {}: bad `{col}` value", row + 1));
        let int = |i: usize| rec[i].parse::<u64>().map_err(|_| bad(CSV_HEADER[i]));
        let float = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(CSV_HEADER[i]));
        out.push(TrialRecord {
            trial: int(0)?,
            n_pub: int(1)? as usize,
            n_priv: int(2)? as usize,
            d: int(3)? as usize,
            epsilon: float(4)?,
            delta: float(5)?,
            method: rec[6].parse()?,
            instance: rec[7].to_string(),
            excess_risk: float(8)?,
            runtime_ms: float(9)?,
            seed: int(10)?,
            aux: rec[11].to_string(),
            status: rec[12].to_string(),
        });
    }
    Ok(out)
}

/// Identifies a cell in a record set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub method: String,
    pub instance: String,
    pub n_pub: usize,
    pub n_priv: usize,
    pub d: usize,
    /// Bit patterns, so the key is totally ordered and hashable.
    pub epsilon_bits: u64,
    pub delta_bits: u64,
}

impl CellKey {
    pub fn of(r: &TrialRecord) -> Self {
        Self {
            method: r.method.to_string(),
            instance: r.instance.clone(),
            n_pub: r.n_pub,
            n_priv: r.n_priv,
            d: r.d,
            epsilon_bits: r.epsilon.to_bits(),
            delta_bits: r.delta.to_bits(),
        }
    }

    pub fn epsilon(&self) -> f64 {
        f64::from_bits(self.epsilon_bits)
    }

    pub fn delta(&self) -> f64 {
        f64::from_bits(self.delta_bits)
    }
}

/// Mean and standard error of the successful trials in a cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub method: String,
    pub instance: String,
    pub n_pub: usize,
    pub n_priv: usize,
    pub d: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub trials: usize,
    pub ok: usize,
    pub mean: f64,
    pub stderr: f64,
    pub errors: BTreeMap<String, usize>,
}

/// Per-cell aggregates, ordered by cell key.
pub fn summarize(records: &[TrialRecord]) -> Vec<CellSummary> {
    let mut groups: BTreeMap<CellKey, Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(CellKey::of(r)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(key, rows)| {
            let vals: Vec<f64> = rows.iter().filter(|r| r.is_ok()).map(|r| r.excess_risk).collect();
            let (mean, stderr) = mean_stderr(&vals);
            let mut errors = BTreeMap::new();
            for r in rows.iter().filter(|r| !r.is_ok()) {
                *errors.entry(r.status.clone()).or_insert(0) += 1;
            }
            CellSummary {
                epsilon: key.epsilon(),
                delta: key.delta(),
                method: key.method,
                instance: key.instance,
                n_pub: key.n_pub,
                n_priv: key.n_priv,
                d: key.d,
                trials: rows.len(),
                ok: vals.len(),
                mean,
                stderr,
                errors,
            }
        })
        .collect()
}

/// Sample mean and standard error of the mean (0 for fewer than 2 values,
/// NaN mean for none).
pub fn mean_stderr(vals: &[f64]) -> (f64, f64) {
    if vals.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    if vals.len() < 2 {
        return (mean, 0.0);
    }
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
