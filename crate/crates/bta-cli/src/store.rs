//! On-disk sample store: one line-delimited JSON file per chain, a header
//! line first (format version, chain id, spec, labels) and one record per
//! stored state after it.  Files are self-contained so `summarize` can run
//! without the original inputs.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use bta_core::engine::{SampleRecord, SampleSink};
use bta_core::model::ModelSpec;
use bta_core::Error;

use crate::error::{data_err, runtime_err, CliError};

pub const FORMAT_NAME: &str = "bta-chain";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainHeader {
    pub format: String,
    pub version: u32,
    pub chain: usize,
    pub n: usize,
    pub spec: ModelSpec,
    pub labels: Vec<String>,
    pub groups: Vec<String>,
}

/// Streaming writer used as the engine's per-chain sink.
pub struct FileSink {
    path: PathBuf,
    writer: BufWriter<File>,
}

impl FileSink {
    pub fn create(path: &Path, header: &ChainHeader) -> Result<FileSink, Error> {
        let file = File::create(path)
            .map_err(|e| Error::Io(format!("cannot create {}: {e}", path.display())))?;
        let mut writer = BufWriter::new(file);
        let line = serde_json::to_string(header)
            .map_err(|e| Error::Io(format!("header encode failure: {e}")))?;
        writeln!(writer, "{line}")
            .map_err(|e| Error::Io(format!("write failure on {}: {e}", path.display())))?;
        Ok(FileSink {
            path: path.to_path_buf(),
            writer,
        })
    }

    pub fn finish(mut self) -> Result<(), Error> {
        self.writer
            .flush()
            .map_err(|e| Error::Io(format!("flush failure on {}: {e}", self.path.display())))
    }
}

impl SampleSink for FileSink {
    fn write(&mut self, record: &SampleRecord) -> Result<(), Error> {
        let line = serde_json::to_string(record)
            .map_err(|e| Error::Io(format!("record encode failure: {e}")))?;
        writeln!(self.writer, "{line}")
            .map_err(|e| Error::Io(format!("write failure on {}: {e}", self.path.display())))
    }
}

/// Read one chain file back: header plus all records.
pub fn read_chain(path: &Path) -> Result<(ChainHeader, Vec<SampleRecord>), CliError> {
    let file = File::open(path)
        .map_err(|e| data_err(format!("cannot open chain file {}: {e}", path.display())))?;
    let mut lines = BufReader::new(file).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| data_err(format!("chain file {} is empty", path.display())))?
        .map_err(|e| data_err(format!("read failure on {}: {e}", path.display())))?;
    let header: ChainHeader = serde_json::from_str(&header_line)
        .map_err(|e| data_err(format!("bad chain header in {}: {e}", path.display())))?;
    if header.format != FORMAT_NAME {
        return Err(data_err(format!(
            "{} is not a chain file (format {})",
            path.display(),
            header.format
        )));
    }
    if header.version != FORMAT_VERSION {
        return Err(data_err(format!(
            "chain file {} has version {}, this build reads {}",
            path.display(),
            header.version,
            FORMAT_VERSION
        )));
    }
    let mut records = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line.map_err(|e| data_err(format!("read failure on {}: {e}", path.display())))?;
        if line.is_empty() {
            continue;
        }
        let rec: SampleRecord = serde_json::from_str(&line)
            .map_err(|e| data_err(format!("bad record {} in {}: {e}", k + 1, path.display())))?;
        records.push(rec);
    }
    Ok((header, records))
}

/// Chain files under a directory, sorted by chain index.
pub fn chain_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    let entries = std::fs::read_dir(dir)
        .map_err(|e| data_err(format!("cannot list {}: {e}", dir.display())))?;
    for entry in entries {
        let entry = entry.map_err(|e| runtime_err(format!("directory walk failure: {e}")))?;
        let path = entry.path();
        if path
            .file_name()
            .and_then(|s| s.to_str())
            .is_some_and(|s| s.starts_with("chain_") && s.ends_with(".jsonl"))
        {
            out.push(path);
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(data_err(format!(
            "no chain_*.jsonl files under {}",
            dir.display()
        )));
    }
    Ok(out)
}

pub fn chain_file_name(chain: usize) -> String {
    format!("chain_{chain:03}.jsonl")
}
