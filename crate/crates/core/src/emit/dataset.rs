//! Line-delimited training corpora and their manifest.

use std::collections::HashMap;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;
use thiserror::Error;

use super::text::{parse_meta_plan_text, parse_plan_text, parse_trace_text, ParseError, Verbalize, TEMPLATE_VERSION};
use crate::controller::{ControllerConfig, ControllerRecord, MetaPlan};
use crate::domain::{DomainTag, Plan, Problem, World};
use crate::search::{run_search, Algorithm, Run, TraceConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Sys1,
    Sys2,
    Controller,
}

impl RecordKind {
    pub const ALL: [RecordKind; 3] = [RecordKind::Sys1, RecordKind::Sys2, RecordKind::Controller];

    pub fn file_name(self) -> &'static str {
        match self {
            RecordKind::Sys1 => "sys1.jsonl",
            RecordKind::Sys2 => "sys2.jsonl",
            RecordKind::Controller => "controller.jsonl",
        }
    }
}

/// One training example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub kind: RecordKind,
    pub template_version: String,
    pub input_text: String,
    pub target_text: String,
    /// The target as structured data; the text must parse back to it.
    pub structured: serde_json::Value,
}

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("problem {0} has no gold plan")]
    MissingGold(String),
    #[error("controller record names unknown problem {0}")]
    UnknownProblem(String),
    #[error("{path}:{line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> EmitError + '_ {
    move |source| EmitError::Io {
        path: path.to_owned(),
        source,
    }
}

fn to_value<T: Serialize>(x: &T) -> serde_json::Value {
    serde_json::to_value(x).expect("in-memory values serialize")
}

fn record(id: &str, kind: RecordKind, input_text: String, target_text: String, structured: serde_json::Value) -> DatasetRecord {
    DatasetRecord {
        id: id.to_owned(),
        kind,
        template_version: TEMPLATE_VERSION.to_owned(),
        input_text,
        target_text,
        structured,
    }
}

/// The gold plan as a fast-planner target.
pub fn sys1_record<W: World>(problem: &Problem<W>) -> Result<DatasetRecord, EmitError> {
    let plan = problem
        .gold_plan
        .as_ref()
        .ok_or_else(|| EmitError::MissingGold(problem.id.clone()))?;
    Ok(record(
        &problem.id,
        RecordKind::Sys1,
        problem.instance.describe(&problem.start, &problem.goal),
        plan.verbalize(),
        to_value(plan),
    ))
}

/// A traced search run as a search-planner target.
pub fn sys2_record<W: World>(problem: &Problem<W>, run: &Run<W>) -> DatasetRecord {
    record(
        &problem.id,
        RecordKind::Sys2,
        problem.instance.describe(&problem.start, &problem.goal),
        run.verbalize(),
        to_value(run),
    )
}

pub fn controller_record<W: World>(problem: &Problem<W>, meta_plan: &MetaPlan<W::State>) -> DatasetRecord {
    record(
        &problem.id,
        RecordKind::Controller,
        problem.instance.describe(&problem.start, &problem.goal),
        meta_plan.verbalize(),
        to_value(meta_plan),
    )
}

#[derive(Debug, Error)]
pub enum RoundTripError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("structured field does not decode: {0}")]
    Structured(#[from] serde_json::Error),
    #[error("record {0}: parsed text differs from the structured mirror")]
    Mismatch(String),
}

/// Parses the record's text and checks it against the structured mirror.
pub fn check_round_trip<W: World>(rec: &DatasetRecord) -> Result<(), RoundTripError> {
    let same = match rec.kind {
        RecordKind::Sys1 => {
            parse_plan_text::<W::Action>(&rec.target_text)?
                == serde_json::from_value::<Plan<W::Action>>(rec.structured.clone())?
        }
        RecordKind::Sys2 => {
            parse_trace_text::<W::State, W::Action>(&rec.target_text)?
                == serde_json::from_value::<Run<W>>(rec.structured.clone())?
        }
        RecordKind::Controller => {
            parse_meta_plan_text::<W::State>(&rec.target_text)?
                == serde_json::from_value::<MetaPlan<W::State>>(rec.structured.clone())?
        }
    };
    if same {
        Ok(())
    } else {
        Err(RoundTripError::Mismatch(rec.id.clone()))
    }
}

/// Settings that shape the emitted files; hashed into the manifest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmitConfig {
    pub domain: DomainTag,
    pub algorithm: Algorithm,
    pub trace: TraceConfig,
    /// Seed the problems were generated with.
    pub seed: u64,
    pub controller: Option<ControllerConfig>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub kind: RecordKind,
    pub file: String,
    pub records: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub template_version: String,
    pub config: EmitConfig,
    pub config_hash: String,
    pub files: Vec<FileEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn jsonl(records: &[DatasetRecord]) -> Vec<u8> {
    let mut out = vec![];
    for r in records {
        serde_json::to_writer(&mut out, r).expect("records serialize");
        out.push(b'\n');
    }
    out
}

/// Writes all files to temporaries first and moves them into place only
/// once every file is complete.
fn write_atomically(dir: &Path, files: &[(&str, Vec<u8>)]) -> Result<(), EmitError> {
    let mut staged: Vec<(NamedTempFile, PathBuf)> = vec![];
    for (name, bytes) in files {
        let mut tmp = NamedTempFile::new_in(dir).map_err(io_err(dir))?;
        tmp.write_all(bytes).map_err(io_err(tmp.path()))?;
        tmp.as_file().sync_all().map_err(io_err(tmp.path()))?;
        staged.push((tmp, dir.join(name)));
    }
    let mut placed: Vec<PathBuf> = vec![];
    for (tmp, dest) in staged {
        if let Err(e) = tmp.persist(&dest) {
            for p in &placed {
                let _ = fs::remove_file(p);
            }
            return Err(EmitError::Io {
                path: dest,
                source: e.error,
            });
        }
        placed.push(dest);
    }
    Ok(())
}

/// Writes `sys1.jsonl`, `sys2.jsonl`, `controller.jsonl` and
/// `manifest.json` into `dir`.
pub fn emit_datasets<W: World>(
    problems: &[Problem<W>],
    controller: &[ControllerRecord<W::State>],
    config: &EmitConfig,
    dir: &Path,
) -> Result<Manifest, EmitError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let sys1 = problems.par_iter().map(sys1_record).collect::<Result<Vec<_>, _>>()?;
    let sys2: Vec<DatasetRecord> = problems
        .par_iter()
        .map(|p| sys2_record(p, &run_search(p, config.algorithm, &config.trace)))
        .collect();
    let by_id: HashMap<&str, &Problem<W>> = problems.iter().map(|p| (p.id.as_str(), p)).collect();
    let ctrl = controller
        .iter()
        .map(|r| {
            let p = by_id
                .get(r.problem_id.as_str())
                .ok_or_else(|| EmitError::UnknownProblem(r.problem_id.clone()))?;
            Ok(controller_record(p, &r.meta_plan))
        })
        .collect::<Result<Vec<_>, EmitError>>()?;

    let bodies = [
        (RecordKind::Sys1, jsonl(&sys1), sys1.len()),
        (RecordKind::Sys2, jsonl(&sys2), sys2.len()),
        (RecordKind::Controller, jsonl(&ctrl), ctrl.len()),
    ];
    let manifest = Manifest {
        template_version: TEMPLATE_VERSION.to_owned(),
        config: *config,
        config_hash: sha256_hex(&serde_json::to_vec(config).expect("config serializes")),
        files: bodies
            .iter()
            .map(|(kind, bytes, records)| FileEntry {
                kind: *kind,
                file: kind.file_name().to_owned(),
                records: *records,
                sha256: sha256_hex(bytes),
            })
            .collect(),
    };
    let mut manifest_bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    manifest_bytes.push(b'\n');
    let mut files: Vec<(&str, Vec<u8>)> = bodies.into_iter().map(|(k, b, _)| (k.file_name(), b)).collect();
    files.push((MANIFEST_FILE, manifest_bytes));
    write_atomically(dir, &files)?;
    Ok(manifest)
}

/// Reads a line-delimited file of records.
pub fn read_records(path: &Path) -> Result<Vec<DatasetRecord>, EmitError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut out = vec![];
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        out.push(serde_json::from_str(&line).map_err(|source| EmitError::Json {
            path: path.to_owned(),
            line: i + 1,
            source,
        })?);
    }
    Ok(out)
}
