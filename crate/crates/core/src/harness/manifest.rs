//! Run manifest: hashes, seeds and the inventory of an experiment's outputs.
//!
//! The manifest itself carries wall-clock timestamps and is therefore the one
//! output file that is not reproducible byte for byte.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, Mode};
use super::experiment::{CellInfo, CellKind};
use super::seeds::{stream_id, Purpose};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunSeed {
    pub run: u32,
    pub environment_stream: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy_stream: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CellSeeds {
    pub cell: String,
    pub runs: Vec<RunSeed>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FileEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunManifest {
    pub software_version: String,
    pub mode: Mode,
    pub config_hash: String,
    pub profile_name: String,
    pub profile_hash: String,
    pub master_seed: u64,
    pub runs: u32,
    pub horizon: u64,
    /// How random streams relate across cells.
    pub sampling: String,
    pub unit_of_analysis: String,
    pub confidence_intervals: String,
    pub seed_scheme: String,
    pub seeds: Vec<CellSeeds>,
    pub started_at_unix: u64,
    pub finished_at_unix: u64,
    pub files: Vec<FileEntry>,
}

pub fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_entry(root: &Path, path: &Path) -> Result<FileEntry> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let rel = path.strip_prefix(root).unwrap_or(path);
    let rel = rel
        .components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/");
    Ok(FileEntry {
        path: rel,
        bytes: bytes.len() as u64,
        sha256: sha256_hex(&bytes),
    })
}

impl RunManifest {
    pub fn new(
        config: &ExperimentConfig,
        profile_name: &str,
        profile_json: &str,
        cells: &[CellInfo],
    ) -> Self {
        let seeds = cells
            .iter()
            .map(|c| CellSeeds {
                cell: c.name.clone(),
                runs: (0..c.runs)
                    .map(|r| RunSeed {
                        run: r,
                        environment_stream: stream_id(c.code, r, Purpose::Environment),
                        policy_stream: (c.kind == CellKind::Nested)
                            .then(|| stream_id(c.code, r, Purpose::Policy)),
                    })
                    .collect(),
            })
            .collect();
        RunManifest {
            software_version: env!("CARGO_PKG_VERSION").into(),
            mode: config.mode,
            config_hash: config.result_hash(),
            profile_name: profile_name.into(),
            profile_hash: sha256_hex(profile_json.as_bytes()),
            master_seed: config.master_seed,
            runs: config.runs,
            horizon: config.horizon,
            sampling: "independent interaction streams per feature-set cell; nested configurations share streams per run index".into(),
            unit_of_analysis: "run-level per-gender means; Welch t-test, women vs men".into(),
            confidence_intervals: "normal approximation, mean +- 1.96 * std / sqrt(runs)".into(),
            seed_scheme: "ChaCha8 keyed by masterSeed; stream = cell << 40 | run << 8 | purpose (0 environment, 1 policy)".into(),
            seeds,
            started_at_unix: now_unix(),
            finished_at_unix: 0,
            files: Vec::new(),
        }
    }

    /// Record `files` (sorted by path) and the finish time, then write the manifest.
    pub fn finish(mut self, root: &Path, files: &[PathBuf]) -> Result<Self> {
        let mut entries = files
            .iter()
            .map(|p| file_entry(root, p))
            .collect::<Result<Vec<_>>>()?;
        entries.sort_by(|a, b| a.path.cmp(&b.path));
        self.files = entries;
        self.finished_at_unix = now_unix();
        super::io::write_text(
            &root.join(MANIFEST_FILE),
            &(serde_json::to_string_pretty(&self)? + "\n"),
        )?;
        Ok(self)
    }
}
