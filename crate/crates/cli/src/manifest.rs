use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub preset: Option<String>,
    pub threads: usize,
    pub config: serde_json::Value,
    pub inputs: Vec<FileEntry>,
    pub outputs: Vec<FileEntry>,
    pub summary: serde_json::Map<String, serde_json::Value>,
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}
