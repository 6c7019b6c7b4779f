//! The two-stage capture workflow.
//!
//! A [`Service`] holds every volume behind its own lock. Each mutation names
//! the version it expects; a stale version is rejected with
//! [`ServiceError::VersionConflict`], so of two writers racing from the same
//! version exactly one wins. Accepted mutations become [`Event`]s appended to
//! the volume's log, and [`Volume::replay`] over that log rebuilds the volume.
//!
//! Bibcodes are deduplicated against every code already finalized under the
//! same stem. That set is only touched at finalize, under its own lock.

mod export;
mod import;
mod snapshot;
mod store;
mod volume;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::article::{derive_bibcode, resolve_draft, ArticleDraft, ArticleError, ArticleRecord};
use crate::bibcode::{assign_dedup_qualifier, format_bibcode, BibcodeError, VolumeField};
use crate::label::PageLabel;
use crate::pagination::{PageAssignment, PaginationError, PaginationReport, ScanId, ScanImage};
use crate::registry::{Registry, RegistryError, StemQuery};

pub use export::{export_records, parse_export, render_export, ExportRecord, ORIGIN};
pub use import::{load_volume_dir, VolumeDir};
pub use snapshot::{parse_articles_tsv, ArticleRow, VolumeSnapshot};
pub use store::{content_address, write_snapshot_to, EVENTS_FILE};
pub use volume::{Event, EventKind, IngestedScan, Volume, VolumeState, VolumeSummary};

use store::Store;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ServiceError {
    #[error("volume is in state {actual:?}, operation requires {expected:?}")]
    WrongState {
        expected: VolumeState,
        actual: VolumeState,
    },
    #[error("expected version {expected}, volume is at version {actual}")]
    VersionConflict { expected: u64, actual: u64 },
    #[error("unknown volume {0:?}")]
    UnknownVolume(String),
    #[error("volume {0:?} already exists")]
    DuplicateVolumeId(String),
    #[error("invalid volume id {0:?}: use letters, digits, '.', '_' or '-'")]
    InvalidVolumeId(String),
    #[error("publication year {0} outside 1000-9999")]
    InvalidYear(i64),
    #[error("publication month {0} outside 0-12")]
    InvalidMonth(u8),
    #[error("bibstem unresolved: {0}")]
    StemUnresolved(RegistryError),
    #[error("pagination incomplete: {} unlabeled scans, {} label conflicts", .0.unlabeled.len(), .0.conflicts.len())]
    PaginationIncomplete(PaginationReport),
    #[error("cannot reopen page numbering while {0} articles exist")]
    ArticlesExist(usize),
    #[error("volume has no articles")]
    NoArticles,
    #[error("articles without a derived bibcode: {0:?}")]
    UnderivedBibcodes(Vec<String>),
    #[error("unknown article {0:?}")]
    UnknownArticle(String),
    #[error("scan {0} has no stored image")]
    ImageNotFound(ScanId),
    #[error("image for scan {0} is neither PNG nor TIFF")]
    UnsupportedImage(ScanId),
    #[error(transparent)]
    Pagination(#[from] PaginationError),
    #[error(transparent)]
    Article(#[from] ArticleError),
    #[error(transparent)]
    Bibcode(#[from] BibcodeError),
    #[error("invalid volume directory: {0}")]
    InvalidInput(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("corrupt event log: {0}")]
    CorruptLog(String),
}

impl ServiceError {
    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::WrongState { .. } => "WrongState",
            ServiceError::VersionConflict { .. } => "VersionConflict",
            ServiceError::UnknownVolume(_) => "UnknownVolume",
            ServiceError::DuplicateVolumeId(_) => "DuplicateVolumeId",
            ServiceError::InvalidVolumeId(_) => "InvalidVolumeId",
            ServiceError::InvalidYear(_) => "InvalidYear",
            ServiceError::InvalidMonth(_) => "InvalidMonth",
            ServiceError::StemUnresolved(_) => "StemUnresolved",
            ServiceError::PaginationIncomplete(_) => "PaginationIncomplete",
            ServiceError::ArticlesExist(_) => "ArticlesExist",
            ServiceError::NoArticles => "NoArticles",
            ServiceError::UnderivedBibcodes(_) => "UnderivedBibcodes",
            ServiceError::UnknownArticle(_) => "UnknownArticle",
            ServiceError::ImageNotFound(_) => "ImageNotFound",
            ServiceError::UnsupportedImage(_) => "UnsupportedImage",
            ServiceError::Pagination(e) => e.code(),
            ServiceError::Article(e) => e.code(),
            ServiceError::Bibcode(e) => e.code(),
            ServiceError::InvalidInput(_) => "InvalidInput",
            ServiceError::Io(_) => "Io",
            ServiceError::CorruptLog(_) => "CorruptLog",
        }
    }

    /// True for failures of the environment rather than of the request.
    pub fn is_environmental(&self) -> bool {
        matches!(self, ServiceError::Io(_) | ServiceError::CorruptLog(_))
    }
}

type Result<T> = std::result::Result<T, ServiceError>;

/// Metadata for a new volume.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewVolume {
    #[serde(default)]
    pub volume_id: Option<String>,
    pub full_title: String,
    #[serde(default)]
    pub series: Option<String>,
    pub volume: VolumeField,
    pub publication_year: i64,
    #[serde(default)]
    pub publication_month: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanUpload {
    pub scan_id: ScanId,
    #[serde(skip)]
    pub image: Option<Vec<u8>>,
}

/// A page-numbering mutation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum PageCommand {
    Assign {
        scan_id: ScanId,
        label: String,
    },
    Override {
        scan_id: ScanId,
        label: String,
        note: String,
    },
    MarkDuplicate {
        scan_id: ScanId,
    },
    UnmarkDuplicate {
        scan_id: ScanId,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PageOutcome {
    pub version: u64,
    pub scan: ScanImage,
    pub assignment: Option<PageAssignment>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArticleOutcome {
    pub version: u64,
    pub article: ArticleRecord,
    /// Why no bibcode could be derived, when none was.
    pub bibcode_error: Option<String>,
}

struct VolumeSlot {
    volume: Volume,
    log: Vec<Event>,
}

pub struct Service {
    registry: Arc<Registry>,
    store: Store,
    volumes: RwLock<BTreeMap<String, Arc<Mutex<VolumeSlot>>>>,
    /// Scan id to owning volume id.
    scan_owner: Mutex<HashMap<ScanId, String>>,
    /// Codes finalized under each stem.
    family_codes: Mutex<HashMap<String, HashSet<String>>>,
    next_volume: Mutex<u64>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

fn valid_volume_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 64
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
}

/// Recognizes PNG and TIFF by their magic bytes.
pub fn image_content_type(bytes: &[u8]) -> Option<&'static str> {
    if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
        Some("image/png")
    } else if bytes.starts_with(b"II*\0") || bytes.starts_with(b"MM\0*") {
        Some("image/tiff")
    } else {
        None
    }
}

impl Service {
    pub fn in_memory(registry: Registry) -> Service {
        Service::with_store(registry, Store::memory())
    }

    /// Opens a data directory, replaying every volume's event log.
    pub fn open(data_dir: &Path, registry: Registry) -> Result<Service> {
        let service = Service::with_store(registry, Store::disk(data_dir)?);
        let logs = service.store.load_logs()?;
        {
            let mut volumes = service.volumes.write().unwrap_or_else(|e| e.into_inner());
            let mut owners = lock(&service.scan_owner);
            let mut codes = lock(&service.family_codes);
            let mut next = lock(&service.next_volume);
            for (id, log) in logs {
                let volume = Volume::replay(&log)?;
                if volume.volume_id != id {
                    return Err(ServiceError::CorruptLog(format!(
                        "log for {id} names {}",
                        volume.volume_id
                    )));
                }
                for scan in volume.pages().scans() {
                    owners.insert(scan.scan_id.clone(), id.clone());
                }
                if volume.state == VolumeState::Finalized {
                    let family = codes.entry(volume.stem.clone()).or_default();
                    for code in volume.articles().iter().filter_map(|a| a.bibcode.as_ref()) {
                        family.insert(format_bibcode(code)?);
                    }
                }
                if let Some(n) = id.strip_prefix("vol-").and_then(|n| n.parse::<u64>().ok()) {
                    *next = (*next).max(n);
                }
                volumes.insert(id, Arc::new(Mutex::new(VolumeSlot { volume, log })));
            }
        }
        Ok(service)
    }

    fn with_store(registry: Registry, store: Store) -> Service {
        Service {
            registry: Arc::new(registry),
            store,
            volumes: RwLock::new(BTreeMap::new()),
            scan_owner: Mutex::new(HashMap::new()),
            family_codes: Mutex::new(HashMap::new()),
            next_volume: Mutex::new(0),
        }
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    fn slot(&self, volume_id: &str) -> Result<Arc<Mutex<VolumeSlot>>> {
        self.volumes
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(volume_id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownVolume(volume_id.to_string()))
    }

    /// Runs `f` on a volume under its lock, after checking the caller's
    /// version against the current one.
    fn mutate<T>(
        &self,
        volume_id: &str,
        expected_version: u64,
        f: impl FnOnce(&mut VolumeSlot) -> Result<T>,
    ) -> Result<T> {
        let slot = self.slot(volume_id)?;
        let mut slot = lock(&slot);
        let actual = slot.volume.version;
        if actual != expected_version {
            return Err(ServiceError::VersionConflict {
                expected: expected_version,
                actual,
            });
        }
        f(&mut slot)
    }

    /// Applies `kind` to a copy of the volume, persists it, then publishes it.
    fn commit(&self, slot: &mut VolumeSlot, operator: &str, kind: EventKind) -> Result<()> {
        let event = Event {
            version: slot.volume.version + 1,
            operator: operator.to_string(),
            kind,
        };
        let mut next = slot.volume.clone();
        next.apply(&event)?;
        self.store.append(&next.volume_id, &event)?;
        self.store
            .write_snapshot(&next.volume_id, &VolumeSnapshot::of(&next))?;
        slot.volume = next;
        slot.log.push(event);
        Ok(())
    }

    pub fn create_volume(&self, meta: NewVolume, operator: &str) -> Result<Volume> {
        if !(1000..=9999).contains(&meta.publication_year) {
            return Err(ServiceError::InvalidYear(meta.publication_year));
        }
        if meta.publication_month > 12 {
            return Err(ServiceError::InvalidMonth(meta.publication_month));
        }
        let query = StemQuery {
            title: &meta.full_title,
            series: meta.series.as_deref(),
            year: Some(meta.publication_year as u32),
            volume: match meta.volume {
                VolumeField::Numeric(n) => Some(n.into()),
                VolumeField::TypeCode(_) => None,
            },
        };
        let stem = self
            .registry
            .resolve_stem(&query)
            .map_err(ServiceError::StemUnresolved)?
            .to_string();

        let mut volumes = self.volumes.write().unwrap_or_else(|e| e.into_inner());
        let volume_id = match meta.volume_id {
            Some(id) => id,
            None => {
                let mut next = lock(&self.next_volume);
                loop {
                    *next += 1;
                    let id = format!("vol-{:04}", *next);
                    if !volumes.contains_key(&id) {
                        break id;
                    }
                }
            }
        };
        if !valid_volume_id(&volume_id) {
            return Err(ServiceError::InvalidVolumeId(volume_id));
        }
        if volumes.contains_key(&volume_id) {
            return Err(ServiceError::DuplicateVolumeId(volume_id));
        }
        let event = Event {
            version: 1,
            operator: operator.to_string(),
            kind: EventKind::VolumeCreated {
                volume_id: volume_id.clone(),
                full_title: meta.full_title,
                series: meta.series,
                stem,
                volume: meta.volume,
                publication_year: meta.publication_year as u16,
                publication_month: meta.publication_month,
            },
        };
        let volume = Volume::from_created(&event)?;
        self.store.append(&volume_id, &event)?;
        self.store
            .write_snapshot(&volume_id, &VolumeSnapshot::of(&volume))?;
        volumes.insert(
            volume_id,
            Arc::new(Mutex::new(VolumeSlot {
                volume: volume.clone(),
                log: vec![event],
            })),
        );
        Ok(volume)
    }

    /// Registers scans in the given order. Scan ids are unique across the
    /// service. An empty list still records an event.
    pub fn ingest_scans(
        &self,
        volume_id: &str,
        expected_version: u64,
        operator: &str,
        uploads: Vec<ScanUpload>,
    ) -> Result<Volume> {
        self.mutate(volume_id, expected_version, |slot| {
            slot.volume.require_state(VolumeState::PageNumbering)?;
            let mut owners = lock(&self.scan_owner);
            let mut seen = HashSet::new();
            for upload in &uploads {
                if owners.contains_key(&upload.scan_id) || !seen.insert(&upload.scan_id) {
                    return Err(PaginationError::DuplicateScanId(upload.scan_id.clone()).into());
                }
                if let Some(bytes) = &upload.image {
                    if image_content_type(bytes).is_none() {
                        return Err(ServiceError::UnsupportedImage(upload.scan_id.clone()));
                    }
                }
            }
            let mut scans = Vec::with_capacity(uploads.len());
            for upload in uploads {
                let image_ref = upload
                    .image
                    .as_deref()
                    .map(|b| self.store.put_blob(b))
                    .transpose()?;
                scans.push(IngestedScan {
                    scan_id: upload.scan_id,
                    image_ref,
                });
            }
            let ids: Vec<ScanId> = scans.iter().map(|s| s.scan_id.clone()).collect();
            self.commit(slot, operator, EventKind::ScansIngested { scans })?;
            for id in ids {
                owners.insert(id, volume_id.to_string());
            }
            Ok(slot.volume.clone())
        })
    }

    pub fn apply_page_command(
        &self,
        volume_id: &str,
        expected_version: u64,
        operator: &str,
        command: PageCommand,
    ) -> Result<PageOutcome> {
        self.mutate(volume_id, expected_version, |slot| {
            slot.volume.require_state(VolumeState::PageNumbering)?;
            let pages = slot.volume.pages();
            let (scan_id, kind) = match command {
                PageCommand::Assign { scan_id, label } => {
                    let label = pages.parse_label_for(&scan_id, label.trim())?;
                    (scan_id.clone(), EventKind::PageAssigned { scan_id, label })
                }
                PageCommand::Override {
                    scan_id,
                    label,
                    note,
                } => {
                    let label = pages.parse_label_for(&scan_id, label.trim())?;
                    (
                        scan_id.clone(),
                        EventKind::OverrideSet {
                            scan_id,
                            label,
                            note,
                        },
                    )
                }
                PageCommand::MarkDuplicate { scan_id } => {
                    (scan_id.clone(), EventKind::DuplicateMarked { scan_id })
                }
                PageCommand::UnmarkDuplicate { scan_id } => {
                    (scan_id.clone(), EventKind::DuplicateUnmarked { scan_id })
                }
            };
            self.commit(slot, operator, kind)?;
            let pages = slot.volume.pages();
            Ok(PageOutcome {
                version: slot.volume.version,
                scan: pages
                    .scan(&scan_id)
                    .cloned()
                    .expect("committed scan exists"),
                assignment: pages.assignment(&scan_id).cloned(),
            })
        })
    }

    pub fn assign_page(
        &self,
        volume_id: &str,
        expected_version: u64,
        operator: &str,
        scan_id: &str,
        label: &str,
    ) -> Result<PageOutcome> {
        let command = PageCommand::Assign {
            scan_id: scan_id.into(),
            label: label.to_string(),
        };
        self.apply_page_command(volume_id, expected_version, operator, command)
    }

    pub fn suggest_next_label(
        &self,
        volume_id: &str,
        scan_id: &ScanId,
    ) -> Result<Option<PageLabel>> {
        let slot = self.slot(volume_id)?;
        let slot = lock(&slot);
        slot.volume.require_state(VolumeState::PageNumbering)?;
        Ok(slot.volume.pages().suggest_next_label(scan_id)?)
    }

    pub fn verify_pagination(&self, volume_id: &str) -> Result<PaginationReport> {
        let slot = self.slot(volume_id)?;
        let report = lock(&slot).volume.pages().verify();
        Ok(report)
    }

    pub fn transition_to_article_mode(
        &self,
        volume_id: &str,
        expected_version: u64,
        operator: &str,
    ) -> Result<Volume> {
        self.mutate(volume_id, expected_version, |slot| {
            self.commit(slot, operator, EventKind::EnteredArticleMode)?;
            Ok(slot.volume.clone())
        })
    }

    /// Returns an article-entry volume with no articles to page numbering.
    pub fn reopen_pagination(
        &self,
        volume_id: &str,
        expected_version: u64,
        operator: &str,
    ) -> Result<Volume> {
        self.mutate(volume_id, expected_version, |slot| {
            self.commit(slot, operator, EventKind::ReopenedPagination)?;
            Ok(slot.volume.clone())
        })
    }

    /// Stores an article and derives its bibcode. A derivation failure does
    /// not reject the article; it is reported in the outcome and blocks
    /// finalization until the article is removed.
    pub fn create_article(
        &self,
        volume_id: &str,
        expected_version: u64,
        operator: &str,
        draft: &ArticleDraft,
    ) -> Result<ArticleOutcome> {
        self.mutate(volume_id, expected_version, |slot| {
            let volume = &slot.volume;
            volume.require_state(VolumeState::ArticleEntry)?;
            let mut article = resolve_draft(
                draft,
                volume.pages(),
                volume.next_article_id(),
                volume.volume_id.clone(),
            )?;

            let mut existing = lock(&self.family_codes)
                .get(&volume.stem)
                .cloned()
                .unwrap_or_default();
            for code in volume.articles().iter().filter_map(|a| a.bibcode.as_ref()) {
                existing.insert(format_bibcode(code)?);
            }
            let bibcode_error = match derive_bibcode(&article, volume, &self.registry, &existing) {
                Ok(code) => {
                    article.bibcode = Some(code);
                    None
                }
                Err(e) => Some(format!("{}: {e}", e.code())),
            };
            self.commit(
                slot,
                operator,
                EventKind::ArticleCreated {
                    article: article.clone(),
                },
            )?;
            Ok(ArticleOutcome {
                version: slot.volume.version,
                article,
                bibcode_error,
            })
        })
    }

    pub fn remove_article(
        &self,
        volume_id: &str,
        expected_version: u64,
        operator: &str,
        article_id: &str,
    ) -> Result<Volume> {
        self.mutate(volume_id, expected_version, |slot| {
            let kind = EventKind::ArticleRemoved {
                article_id: article_id.to_string(),
            };
            self.commit(slot, operator, kind)?;
            Ok(slot.volume.clone())
        })
    }

    /// Closes the volume. Codes that collide with codes finalized under the
    /// same stem since entry are re-deduplicated before they are published.
    pub fn finalize_volume(
        &self,
        volume_id: &str,
        expected_version: u64,
        operator: &str,
    ) -> Result<Vec<ExportRecord>> {
        self.mutate(volume_id, expected_version, |slot| {
            let volume = &slot.volume;
            volume.require_state(VolumeState::ArticleEntry)?;
            if volume.articles().is_empty() {
                return Err(ServiceError::NoArticles);
            }
            let underived: Vec<String> = volume
                .articles()
                .iter()
                .filter(|a| a.bibcode.is_none())
                .map(|a| a.article_id.clone())
                .collect();
            if !underived.is_empty() {
                return Err(ServiceError::UnderivedBibcodes(underived));
            }

            let mut codes = lock(&self.family_codes);
            let mut taken = codes.get(&volume.stem).cloned().unwrap_or_default();
            let mut own = HashSet::new();
            for article in volume.articles() {
                own.insert(format_bibcode(
                    article.bibcode.as_ref().expect("checked above"),
                )?);
            }
            let mut finals = Vec::with_capacity(volume.articles().len());
            for article in volume.articles_in_page_order() {
                let mut code = article.bibcode.clone().expect("checked above");
                if taken.contains(&format_bibcode(&code)?) {
                    let mut occupied = taken.clone();
                    occupied.extend(own.iter().cloned());
                    code = assign_dedup_qualifier(&occupied, &code)?;
                    own.insert(format_bibcode(&code)?);
                }
                taken.insert(format_bibcode(&code)?);
                finals.push((article.article_id.clone(), code));
            }
            let stem = volume.stem.clone();
            self.commit(
                slot,
                operator,
                EventKind::Finalized {
                    bibcodes: finals.clone(),
                },
            )?;
            let family = codes.entry(stem).or_default();
            for (_, code) in &finals {
                family.insert(format_bibcode(code)?);
            }
            export_records(&slot.volume)
        })
    }

    /// The export file of a finalized volume.
    pub fn export_records(&self, volume_id: &str) -> Result<String> {
        let slot = self.slot(volume_id)?;
        let slot = lock(&slot);
        Ok(render_export(&export_records(&slot.volume)?))
    }

    pub fn volume(&self, volume_id: &str) -> Result<Volume> {
        let slot = self.slot(volume_id)?;
        let volume = lock(&slot).volume.clone();
        Ok(volume)
    }

    pub fn list_volumes(&self) -> Vec<VolumeSummary> {
        let slots: Vec<_> = self
            .volumes
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .values()
            .cloned()
            .collect();
        slots.iter().map(|s| lock(s).volume.summary()).collect()
    }

    pub fn event_log(&self, volume_id: &str) -> Result<Vec<Event>> {
        let slot = self.slot(volume_id)?;
        let log = lock(&slot).log.clone();
        Ok(log)
    }

    pub fn snapshot(&self, volume_id: &str) -> Result<VolumeSnapshot> {
        let slot = self.slot(volume_id)?;
        let snapshot = VolumeSnapshot::of(&lock(&slot).volume);
        Ok(snapshot)
    }

    /// Codes finalized under `stem`.
    pub fn family_codes(&self, stem: &str) -> HashSet<String> {
        lock(&self.family_codes)
            .get(stem)
            .cloned()
            .unwrap_or_default()
    }

    /// Image bytes and content type for a scan.
    pub fn scan_image(&self, scan_id: &ScanId) -> Result<(Vec<u8>, &'static str)> {
        let volume_id = lock(&self.scan_owner)
            .get(scan_id)
            .cloned()
            .ok_or_else(|| PaginationError::UnknownScan(scan_id.clone()))?;
        let volume = self.volume(&volume_id)?;
        let image_ref = volume
            .pages()
            .scan(scan_id)
            .and_then(|s| s.image_ref.clone())
            .ok_or_else(|| ServiceError::ImageNotFound(scan_id.clone()))?;
        let bytes = self
            .store
            .get_blob(&image_ref)
            .ok_or_else(|| ServiceError::ImageNotFound(scan_id.clone()))?;
        let content_type = image_content_type(&bytes)
            .ok_or_else(|| ServiceError::UnsupportedImage(scan_id.clone()))?;
        Ok((bytes, content_type))
    }
}
