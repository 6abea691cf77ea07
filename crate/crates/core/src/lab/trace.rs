use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::LabError;
use crate::model::Transition;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceMeta {
    pub experiment: String,
    #[serde(rename = "power_nW", default, skip_serializing_if = "Option::is_none")]
    pub power_nw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Transition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_counts: Option<f64>,
}

impl TraceMeta {
    pub fn new(experiment: impl Into<String>) -> Self {
        TraceMeta {
            experiment: experiment.into(),
            ..Default::default()
        }
    }
}

/// Time-stamped PL samples. For integrated experiments the time axis is the
/// swept delay.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTrace {
    pub times: Vec<f64>,
    pub signal: Vec<f64>,
    pub meta: TraceMeta,
}

impl ExperimentTrace {
    pub fn new(times: Vec<f64>, signal: Vec<f64>, meta: TraceMeta) -> Result<Self, LabError> {
        let t = ExperimentTrace {
            times,
            signal,
            meta,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn empty(meta: TraceMeta) -> Self {
        ExperimentTrace {
            times: Vec::new(),
            signal: Vec::new(),
            meta,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn validate(&self) -> Result<(), LabError> {
        if self.times.len() != self.signal.len() {
            return Err(LabError::InvalidTrace("time and signal lengths differ".into()));
        }
        if let Some(i) = self.times.iter().position(|t| !t.is_finite()) {
            return Err(LabError::InvalidTrace(format!("non-finite time at row {i}")));
        }
        if let Some(i) = self.times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(LabError::InvalidTrace(format!(
                "timestamps not strictly increasing at row {}",
                i + 1
            )));
        }
        if let Some(i) = self.signal.iter().position(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(LabError::InvalidTrace(format!(
                "signal must be finite and non-negative (row {i})"
            )));
        }
        Ok(())
    }

    pub fn peak(&self) -> f64 {
        self.signal.iter().copied().fold(0.0, f64::max)
    }

    /// Samples with `t ≥ from_ns`.
    pub fn tail(&self, from_ns: f64) -> ExperimentTrace {
        let k = self.times.partition_point(|&t| t < from_ns);
        ExperimentTrace {
            times: self.times[k..].to_vec(),
            signal: self.signal[k..].to_vec(),
            meta: self.meta.clone(),
        }
    }

    pub fn scaled(&self, c: f64) -> ExperimentTrace {
        ExperimentTrace {
            signal: self.signal.iter().map(|s| s * c).collect(),
            ..self.clone()
        }
    }

    /// Sidecar metadata path: `trace.csv` → `trace.meta.json`.
    pub fn sidecar_path(csv: &Path) -> PathBuf {
        csv.with_extension("meta.json")
    }

    /// Writes `time_ns,signal` with round-trip precision.
    pub fn write_csv_to<W: std::io::Write>(&self, w: W) -> Result<(), LabError> {
        let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        let csv_err = |e: csv::Error| LabError::Io(e.to_string());
        wr.write_record(["time_ns", "signal"]).map_err(csv_err)?;
        for (t, s) in self.times.iter().zip(&self.signal) {
            wr.write_record([format!("{t:.16e}"), format!("{s:.16e}")])
                .map_err(csv_err)?;
        }
        wr.flush().map_err(|e| LabError::Io(e.to_string()))
    }

    pub fn read_csv_from<R: std::io::Read>(r: R, meta: TraceMeta) -> Result<Self, LabError> {
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let headers = rd.headers().map_err(|e| LabError::InvalidTrace(e.to_string()))?;
        if headers.len() != 2 || &headers[0] != "time_ns" || &headers[1] != "signal" {
            return Err(LabError::InvalidTrace(format!(
                "expected header `time_ns,signal`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let (mut times, mut signal) = (Vec::new(), Vec::new());
        for (i, rec) in rd.records().enumerate() {
            let rec = rec.map_err(|e| LabError::InvalidTrace(e.to_string()))?;
            let parse = |k: usize| -> Result<f64, LabError> {
                rec.get(k)
                    .unwrap_or("")
                    .parse::<f64>()
                    .map_err(|e| LabError::InvalidTrace(format!("row {}: {e}", i + 1)))
            };
            times.push(parse(0)?);
            signal.push(parse(1)?);
        }
        Self::new(times, signal, meta)
    }

    /// Writes the CSV and its metadata sidecar.
    pub fn save(&self, csv_path: impl AsRef<Path>) -> Result<(), LabError> {
        let csv_path = csv_path.as_ref();
        let io = |e: std::io::Error| LabError::Io(format!("{}: {e}", csv_path.display()));
        let f = std::fs::File::create(csv_path).map_err(io)?;
        self.write_csv_to(std::io::BufWriter::new(f))?;
        let meta = serde_json::to_string_pretty(&self.meta).expect("metadata serializes");
        std::fs::write(Self::sidecar_path(csv_path), meta + "\n").map_err(io)
    }

    /// Reads a CSV; metadata comes from the sidecar when present.
    pub fn load(csv_path: impl AsRef<Path>) -> Result<Self, LabError> {
        let csv_path = csv_path.as_ref();
        let io = |e: std::io::Error| LabError::Io(format!("{}: {e}", csv_path.display()));
        let side = Self::sidecar_path(csv_path);
        let meta = if side.exists() {
            let s = std::fs::read_to_string(&side).map_err(io)?;
            serde_json::from_str(&s)
                .map_err(|e| LabError::InvalidTrace(format!("{}: {e}", side.display())))?
        } else {
            TraceMeta::default()
        };
        let f = std::fs::File::open(csv_path).map_err(io)?;
        Self::read_csv_from(std::io::BufReader::new(f), meta)
    }
}
