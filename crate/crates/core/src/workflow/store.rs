//! On-disk layout of a data directory:
//!
//! ```text
//! <root>/volumes/<volume_id>/events.jsonl   append-only log, one event per line
//! <root>/volumes/<volume_id>/volume.json    derived snapshot
//! <root>/volumes/<volume_id>/pages.tsv      derived snapshot
//! <root>/volumes/<volume_id>/articles.tsv   derived snapshot
//! <root>/blobs/<sha256>                     scan images, content addressed
//! ```

use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use super::snapshot::VolumeSnapshot;
use super::volume::Event;
use super::ServiceError;

pub const EVENTS_FILE: &str = "events.jsonl";

pub fn content_address(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn io_err(path: &Path, e: std::io::Error) -> ServiceError {
    ServiceError::Io(format!("{}: {e}", path.display()))
}

pub(crate) enum Store {
    Memory {
        blobs: Mutex<HashMap<String, Vec<u8>>>,
    },
    Disk {
        root: PathBuf,
    },
}

impl Store {
    pub(crate) fn memory() -> Store {
        Store::Memory {
            blobs: Mutex::new(HashMap::new()),
        }
    }

    pub(crate) fn disk(root: &Path) -> Result<Store, ServiceError> {
        for sub in ["volumes", "blobs"] {
            let dir = root.join(sub);
            fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        }
        Ok(Store::Disk {
            root: root.to_path_buf(),
        })
    }

    fn volume_dir(root: &Path, volume_id: &str) -> PathBuf {
        root.join("volumes").join(volume_id)
    }

    pub(crate) fn append(&self, volume_id: &str, event: &Event) -> Result<(), ServiceError> {
        let Store::Disk { root } = self else {
            return Ok(());
        };
        let dir = Store::volume_dir(root, volume_id);
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        let path = dir.join(EVENTS_FILE);
        let mut line = serde_json::to_string(event).map_err(|e| ServiceError::Io(e.to_string()))?;
        line.push('\n');
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| io_err(&path, e))?;
        file.write_all(line.as_bytes())
            .map_err(|e| io_err(&path, e))?;
        file.sync_data().map_err(|e| io_err(&path, e))
    }

    pub(crate) fn write_snapshot(
        &self,
        volume_id: &str,
        snapshot: &VolumeSnapshot,
    ) -> Result<(), ServiceError> {
        let Store::Disk { root } = self else {
            return Ok(());
        };
        write_snapshot_to(&Store::volume_dir(root, volume_id), snapshot)
    }

    pub(crate) fn load_logs(&self) -> Result<Vec<(String, Vec<Event>)>, ServiceError> {
        let Store::Disk { root } = self else {
            return Ok(Vec::new());
        };
        let volumes = root.join("volumes");
        let mut ids: Vec<String> = fs::read_dir(&volumes)
            .map_err(|e| io_err(&volumes, e))?
            .filter_map(|entry| entry.ok())
            .filter(|entry| entry.path().join(EVENTS_FILE).is_file())
            .filter_map(|entry| entry.file_name().into_string().ok())
            .collect();
        ids.sort();
        let mut logs = Vec::with_capacity(ids.len());
        for id in ids {
            let path = volumes.join(&id).join(EVENTS_FILE);
            let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
            let events = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .enumerate()
                .map(|(i, line)| {
                    serde_json::from_str(line).map_err(|e| {
                        ServiceError::CorruptLog(format!("{}:{}: {e}", path.display(), i + 1))
                    })
                })
                .collect::<Result<Vec<Event>, _>>()?;
            logs.push((id, events));
        }
        Ok(logs)
    }

    pub(crate) fn put_blob(&self, bytes: &[u8]) -> Result<String, ServiceError> {
        let address = content_address(bytes);
        match self {
            Store::Memory { blobs } => {
                blobs
                    .lock()
                    .unwrap_or_else(|e| e.into_inner())
                    .insert(address.clone(), bytes.to_vec());
            }
            Store::Disk { root } => {
                let path = root.join("blobs").join(&address);
                if !path.exists() {
                    write_atomically(&path, bytes)?;
                }
            }
        }
        Ok(address)
    }

    pub(crate) fn get_blob(&self, address: &str) -> Option<Vec<u8>> {
        match self {
            Store::Memory { blobs } => blobs
                .lock()
                .unwrap_or_else(|e| e.into_inner())
                .get(address)
                .cloned(),
            Store::Disk { root } => fs::read(root.join("blobs").join(address)).ok(),
        }
    }
}

fn write_atomically(path: &Path, bytes: &[u8]) -> Result<(), ServiceError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

/// Writes every snapshot file under `dir`.
pub fn write_snapshot_to(dir: &Path, snapshot: &VolumeSnapshot) -> Result<(), ServiceError> {
    for (relative, contents) in &snapshot.files {
        let path = dir.join(relative);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
        write_atomically(&path, contents.as_bytes())?;
    }
    Ok(())
}
