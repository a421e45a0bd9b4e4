//! Machine-readable run reports.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use spgemm_core::aia::{AccessMode, CacheConfig, Phase};
use spgemm_core::{CsrMatrix, SpgemmStats};

pub const SCHEMA_VERSION: u32 = 1;

/// The JSON schema every report validates against.
pub const SCHEMA: &str = include_str!("../schema/bench_report.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineVariant {
    NaiveOracle,
    HashEngine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifyStatus {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDescriptor {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub nnz: usize,
}

impl InputDescriptor {
    pub fn of(name: impl Into<String>, m: &CsrMatrix) -> Self {
        Self {
            name: name.into(),
            rows: m.n_rows(),
            cols: m.n_cols(),
            nnz: m.nnz(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub workers: usize,
    pub seed: u64,
    pub warmup: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache: Option<CacheConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseSeconds {
    pub grouping: f64,
    pub allocation: f64,
    pub accumulation: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_ip: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nnz_out: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seconds: Option<PhaseSeconds>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flops: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gflops: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub round_trips: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accesses: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hit_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bytes_moved: Option<u64>,
}

impl Metrics {
    /// Engine counters and timings; flops = 2 * IP / total seconds.
    pub fn from_engine(stats: &SpgemmStats) -> Self {
        let flops = flops(stats.total_ip, stats.total_secs);
        Self {
            total_ip: Some(stats.total_ip as u64),
            nnz_out: Some(stats.nnz_out as u64),
            seconds: Some(PhaseSeconds {
                grouping: stats.grouping_secs,
                allocation: stats.allocation_secs,
                accumulation: stats.accumulation_secs,
                total: stats.total_secs,
            }),
            flops,
            gflops: flops.map(|f| round_sig(f / 1e9, 3)),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeResult {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub engine: Option<EngineVariant>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sim_mode: Option<AccessMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase: Option<Phase>,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub run_id: String,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<InputDescriptor>,
    pub environment: Environment,
    pub results: Vec<ModeResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyStatus>,
    /// Command-specific extras.
    pub details: Value,
}

impl BenchReport {
    /// `run_id` is derived from the command line and seed, so identical
    /// invocations produce identical reports apart from timings.
    pub fn new(command: &str, args: &[String], environment: Environment) -> Self {
        let mut h = Sha256::new();
        h.update(command.as_bytes());
        for a in args {
            h.update([0u8]);
            h.update(a.as_bytes());
        }
        h.update(environment.seed.to_le_bytes());
        h.update((environment.workers as u64).to_le_bytes());
        let digest = h.finalize();
        Self {
            schema_version: SCHEMA_VERSION,
            run_id: digest[..8].iter().map(|b| format!("{b:02x}")).collect(),
            command: command.into(),
            input: None,
            environment,
            results: Vec::new(),
            verify: None,
            details: Value::Object(Default::default()),
        }
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("detail values serialize");
        self.details
            .as_object_mut()
            .expect("details is an object")
            .insert(key.into(), v);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_json(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_json().as_bytes())?;
        f.write_all(b"\n")
    }
}

pub fn flops(total_ip: usize, secs: f64) -> Option<f64> {
    (secs > 0.0).then(|| 2.0 * total_ip as f64 / secs)
}

/// Rounds to `digits` significant digits.
pub fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let scale = 10f64.powi(digits - 1 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

/// Plot-ready CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|c| escape(c)).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

fn escape(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(round_sig(1.23456, 3), 1.23);
        assert_eq!(round_sig(0.000987654, 3), 0.000988);
        assert_eq!(round_sig(98765.0, 3), 98800.0);
        assert_eq!(round_sig(0.0, 3), 0.0);
    }

    #[test]
    fn run_id_is_stable() {
        let env = Environment {
            workers: 2,
            seed: 1,
            warmup: true,
            cache: None,
        };
        let a = BenchReport::new("spgemm", &["a.mtx".into()], env.clone());
        let b = BenchReport::new("spgemm", &["a.mtx".into()], env.clone());
        let c = BenchReport::new("spgemm", &["b.mtx".into()], env);
        assert_eq!(a.run_id, b.run_id);
        assert_ne!(a.run_id, c.run_id);
        assert_eq!(a.run_id.len(), 16);
    }

    #[test]
    fn csv_quotes_when_needed() {
        let mut t = CsvTable::new(&["a", "b"]);
        t.push(vec!["x,y".into(), "1".into()]);
        let mut out = Vec::new();
        t.write(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "a,b\n\"x,y\",1\n");
    }
}
