//! Shoebox sidecar files and canonical state serialization.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::state::{DashboardState, Shoebox};
use super::DashboardError;

/// Sidecar file holding the shoebox of one scenario between sessions.
pub fn shoebox_path(dir: &Path, scenario_id: &str) -> PathBuf {
    dir.join(format!("{scenario_id}.shoebox.json"))
}

/// Loads a shoebox sidecar; a missing file is an empty shoebox.
pub fn load_shoebox(path: &Path) -> Result<Shoebox, DashboardError> {
    match fs::read_to_string(path) {
        Ok(text) => serde_json::from_str(&text).map_err(|e| DashboardError::Persist(format!("{}: {e}", path.display()))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Shoebox::new()),
        Err(e) => Err(DashboardError::Persist(format!("{}: {e}", path.display()))),
    }
}

pub fn save_shoebox(path: &Path, shoebox: &Shoebox) -> Result<(), DashboardError> {
    let text = serde_json::to_string_pretty(shoebox).map_err(|e| DashboardError::Persist(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| DashboardError::Persist(format!("{}: {e}", path.display())))
}

/// JSON with keys sorted at every level; the golden-file form of a state.
pub fn canonical_json(state: &DashboardState) -> String {
    // serde_json's Value map is ordered, which canonicalizes key order
    let value = serde_json::to_value(state).expect("state serializes");
    serde_json::to_string_pretty(&value).expect("value serializes")
}

/// SHA-256 of the canonical JSON, hex encoded.
pub fn state_hash(state: &DashboardState) -> String {
    let value = serde_json::to_value(state).expect("state serializes");
    hex::encode(Sha256::digest(value.to_string().as_bytes()))
}

pub fn parse_state(json: &str) -> Result<DashboardState, DashboardError> {
    serde_json::from_str(json).map_err(|e| DashboardError::Persist(e.to_string()))
}
