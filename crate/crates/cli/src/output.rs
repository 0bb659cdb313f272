use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use fairalloc::welfare::WelfareParam;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const CSV_HEADER: &str = "experiment,instance,policy,q,eta,T,reps,mean_alg,mean_opt,regret,regret_stderr,rel_regret,flu_value,degenerate,wall_time_ms";

/// One (instance, policy, q, T) cell. Floats are written in shortest
/// round-trip form, so reading a file back reproduces every field exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub instance: String,
    pub policy: String,
    pub q: WelfareParam,
    /// Empty for F and FR.
    pub eta: Option<f64>,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub reps: usize,
    pub mean_alg: f64,
    pub mean_opt: f64,
    pub regret: f64,
    pub regret_stderr: f64,
    pub rel_regret: f64,
    pub flu_value: f64,
    pub degenerate: bool,
    pub wall_time_ms: u64,
}

/// Cross-instance average of relative regret for one (policy, q, T).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub policy: String,
    pub q: WelfareParam,
    pub eta: Option<f64>,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub instances: usize,
    pub mean_rel_regret: f64,
}

pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut out: Vec<(SummaryRow, f64)> = Vec::new();
    for r in rows {
        let key = |s: &SummaryRow| s.policy == r.policy && s.q == r.q && s.eta == r.eta && s.horizon == r.horizon;
        match out.iter_mut().find(|(s, _)| key(s)) {
            Some((s, total)) => {
                s.instances += 1;
                *total += r.rel_regret;
            }
            None => out.push((
                SummaryRow {
                    policy: r.policy.clone(),
                    q: r.q,
                    eta: r.eta,
                    horizon: r.horizon,
                    instances: 1,
                    mean_rel_regret: 0.0,
                },
                r.rel_regret,
            )),
        }
    }
    out.into_iter()
        .map(|(mut s, total)| {
            s.mean_rel_regret = total / s.instances as f64;
            s
        })
        .collect()
}

/// Streams rows to disk, flushing after each so partial runs survive.
pub struct RowWriter {
    inner: csv::Writer<BufWriter<File>>,
    path: PathBuf,
}

impl RowWriter {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        Ok(Self { inner: csv::Writer::from_writer(BufWriter::new(file)), path })
    }

    pub fn write(&mut self, row: &ResultRow) -> Result<()> {
        self.inner.serialize(row)?;
        self.inner.flush().map_err(|e| CliError::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

pub fn write_rows<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_rows<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(CliError::from)).collect()
}

/// `dir/stem.csv` → `dir/stem.<suffix>`.
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "results".into());
    out.with_file_name(format!("{stem}.{suffix}"))
}

pub fn write_json(path: impl AsRef<Path>, value: &serde_json::Value) -> Result<()> {
    let path = path.as_ref();
    let mut f = File::create(path).map_err(|e| CliError::io(path, e))?;
    let text = serde_json::to_string_pretty(value).expect("json values serialize");
    writeln!(f, "{text}").map_err(|e| CliError::io(path, e))
}
