//! Volume directories: the snapshot layout used as input.
//!
//! ```text
//! volume.json     metadata (volume_id, full_title, series, volume, publication_year, publication_month)
//! pages.tsv       scans in order, with any labels, overrides and duplicate marks
//! articles.tsv    optional article rows
//! abstracts/      abstract files named by articles.tsv
//! images/         optional <scan_id>.png / .tif / .tiff
//! ```

use std::collections::HashMap;
use std::fs;
use std::path::{Component, Path};

use crate::article::ArticleDraft;
use crate::pagination::{parse_pages_tsv, PageRow, ScanId, ScanStatus};

use super::snapshot::{parse_articles_tsv, ARTICLES_FILE, PAGES_FILE, VOLUME_FILE};
use super::{NewVolume, PageCommand, ScanUpload, Service, ServiceError, VolumeState};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VolumeDir {
    pub meta: NewVolume,
    pub pages: Vec<PageRow>,
    pub articles: Vec<ArticleDraft>,
    pub images: HashMap<ScanId, Vec<u8>>,
}

fn read(path: &Path) -> Result<String, ServiceError> {
    fs::read_to_string(path).map_err(|e| ServiceError::Io(format!("{}: {e}", path.display())))
}

fn relative_inside(dir: &Path, relative: &str) -> Result<std::path::PathBuf, ServiceError> {
    let rel = Path::new(relative);
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return Err(ServiceError::InvalidInput(format!(
            "reference {relative:?} leaves the volume directory"
        )));
    }
    Ok(dir.join(rel))
}

pub fn load_volume_dir(dir: &Path) -> Result<VolumeDir, ServiceError> {
    let meta: NewVolume = serde_json::from_str(&read(&dir.join(VOLUME_FILE))?)
        .map_err(|e| ServiceError::InvalidInput(format!("{VOLUME_FILE}: {e}")))?;
    let mut pages = parse_pages_tsv(&read(&dir.join(PAGES_FILE))?)
        .map_err(|e| ServiceError::InvalidInput(format!("{PAGES_FILE}: {e}")))?;
    pages.sort_by_key(|p| p.sequence_index);

    let articles_path = dir.join(ARTICLES_FILE);
    let mut articles = Vec::new();
    if articles_path.is_file() {
        let rows = parse_articles_tsv(&read(&articles_path)?)
            .map_err(|e| ServiceError::InvalidInput(format!("{ARTICLES_FILE}: {e}")))?;
        for row in rows {
            let mut draft = row.draft;
            if let Some(reference) = row.abstract_ref {
                draft.abstract_text = Some(read(&relative_inside(dir, &reference)?)?);
            }
            articles.push(draft);
        }
    }

    let mut images = HashMap::new();
    for page in &pages {
        for ext in ["png", "tif", "tiff"] {
            let path = relative_inside(&dir.join("images"), &format!("{}.{ext}", page.scan_id))?;
            if let Ok(bytes) = fs::read(&path) {
                images.insert(page.scan_id.clone(), bytes);
                break;
            }
        }
    }
    Ok(VolumeDir {
        meta,
        pages,
        articles,
        images,
    })
}

impl Service {
    /// Loads a volume directory into the service: creates the volume,
    /// ingests its scans, replays labels, overrides and duplicate marks, and,
    /// when articles are present, moves to article entry and enters them.
    /// Returns the new volume id.
    pub fn import_volume(&self, dir: VolumeDir, operator: &str) -> Result<String, ServiceError> {
        let VolumeDir {
            meta,
            pages,
            articles,
            mut images,
        } = dir;
        let volume = self.create_volume(meta, operator)?;
        let id = volume.volume_id;
        let uploads = pages
            .iter()
            .map(|p| ScanUpload {
                scan_id: p.scan_id.clone(),
                image: images.remove(&p.scan_id),
            })
            .collect();
        let mut version = self
            .ingest_scans(&id, volume.version, operator, uploads)?
            .version;
        for page in &pages {
            let mut commands = Vec::new();
            if let Some(label) = &page.label_text {
                commands.push(PageCommand::Assign {
                    scan_id: page.scan_id.clone(),
                    label: label.clone(),
                });
            }
            if let Some(label) = &page.override_text {
                commands.push(PageCommand::Override {
                    scan_id: page.scan_id.clone(),
                    label: label.clone(),
                    note: page.override_note.clone().unwrap_or_default(),
                });
            }
            if page.status == ScanStatus::MarkedDuplicate {
                commands.push(PageCommand::MarkDuplicate {
                    scan_id: page.scan_id.clone(),
                });
            }
            for command in commands {
                version = self
                    .apply_page_command(&id, version, operator, command)?
                    .version;
            }
        }
        if !articles.is_empty() {
            version = self
                .transition_to_article_mode(&id, version, operator)?
                .version;
            for draft in &articles {
                version = self.create_article(&id, version, operator, draft)?.version;
            }
        }
        Ok(id)
    }

    /// Imports a volume directory and takes it through finalization,
    /// returning the export file.
    pub fn derive_volume(&self, dir: VolumeDir, operator: &str) -> Result<String, ServiceError> {
        let id = self.import_volume(dir, operator)?;
        self.complete_volume(&id, operator)
    }

    /// Moves a volume to article entry if needed, finalizes it, and returns
    /// the export file.
    pub fn complete_volume(&self, volume_id: &str, operator: &str) -> Result<String, ServiceError> {
        let mut volume = self.volume(volume_id)?;
        if volume.state == VolumeState::PageNumbering {
            volume = self.transition_to_article_mode(volume_id, volume.version, operator)?;
        }
        self.finalize_volume(volume_id, volume.version, operator)?;
        self.export_records(volume_id)
    }
}
