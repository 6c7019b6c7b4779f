use serde::{Deserialize, Serialize};

use crate::article::ArticleRecord;
use crate::bibcode::{Bibcode, VolumeField};
use crate::label::PageLabel;
use crate::pagination::{PageBook, ScanId};

use super::ServiceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeState {
    PageNumbering,
    ArticleEntry,
    Finalized,
}

impl VolumeState {
    pub fn as_str(self) -> &'static str {
        match self {
            VolumeState::PageNumbering => "page_numbering",
            VolumeState::ArticleEntry => "article_entry",
            VolumeState::Finalized => "finalized",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestedScan {
    pub scan_id: ScanId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
}

/// Facts recorded in a volume's event log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    VolumeCreated {
        volume_id: String,
        full_title: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        series: Option<String>,
        stem: String,
        volume: VolumeField,
        publication_year: u16,
        publication_month: u8,
    },
    ScansIngested {
        scans: Vec<IngestedScan>,
    },
    PageAssigned {
        scan_id: ScanId,
        label: PageLabel,
    },
    OverrideSet {
        scan_id: ScanId,
        label: PageLabel,
        note: String,
    },
    DuplicateMarked {
        scan_id: ScanId,
    },
    DuplicateUnmarked {
        scan_id: ScanId,
    },
    EnteredArticleMode,
    ReopenedPagination,
    ArticleCreated {
        article: ArticleRecord,
    },
    ArticleRemoved {
        article_id: String,
    },
    Finalized {
        bibcodes: Vec<(String, Bibcode)>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub version: u64,
    pub operator: String,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// Workflow aggregate: one bound volume moving through page numbering,
/// article entry and finalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Volume {
    pub volume_id: String,
    pub full_title: String,
    pub series: Option<String>,
    pub stem: String,
    pub volume: VolumeField,
    pub publication_year: u16,
    /// 0 when the month is unknown.
    pub publication_month: u8,
    pub state: VolumeState,
    pub version: u64,
    pages: PageBook,
    articles: Vec<ArticleRecord>,
    articles_created: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VolumeSummary {
    pub volume_id: String,
    pub full_title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<String>,
    pub stem: String,
    pub volume: VolumeField,
    pub publication_year: u16,
    pub publication_month: u8,
    pub publication_date: String,
    pub state: VolumeState,
    pub version: u64,
    pub scan_count: usize,
    pub article_count: usize,
}

impl Volume {
    /// Rebuilds a volume from its complete event log.
    pub fn replay(events: &[Event]) -> Result<Volume, ServiceError> {
        let (first, rest) = events
            .split_first()
            .ok_or_else(|| ServiceError::CorruptLog("empty event log".into()))?;
        let mut volume = Volume::from_created(first)?;
        for event in rest {
            volume.apply(event)?;
        }
        Ok(volume)
    }

    pub(crate) fn from_created(event: &Event) -> Result<Volume, ServiceError> {
        match &event.kind {
            EventKind::VolumeCreated {
                volume_id,
                full_title,
                series,
                stem,
                volume,
                publication_year,
                publication_month,
            } if event.version == 1 => Ok(Volume {
                volume_id: volume_id.clone(),
                full_title: full_title.clone(),
                series: series.clone(),
                stem: stem.clone(),
                volume: volume.clone(),
                publication_year: *publication_year,
                publication_month: *publication_month,
                state: VolumeState::PageNumbering,
                version: 1,
                pages: PageBook::new(),
                articles: Vec::new(),
                articles_created: 0,
            }),
            _ => Err(ServiceError::CorruptLog(
                "log must start with volume_created at version 1".into(),
            )),
        }
    }

    pub fn pages(&self) -> &PageBook {
        &self.pages
    }

    pub fn articles(&self) -> &[ArticleRecord] {
        &self.articles
    }

    pub fn article(&self, article_id: &str) -> Option<&ArticleRecord> {
        self.articles.iter().find(|a| a.article_id == article_id)
    }

    pub fn publication_date(&self) -> String {
        format!("{:02}/{:04}", self.publication_month, self.publication_year)
    }

    pub fn summary(&self) -> VolumeSummary {
        VolumeSummary {
            volume_id: self.volume_id.clone(),
            full_title: self.full_title.clone(),
            series: self.series.clone(),
            stem: self.stem.clone(),
            volume: self.volume.clone(),
            publication_year: self.publication_year,
            publication_month: self.publication_month,
            publication_date: self.publication_date(),
            state: self.state,
            version: self.version,
            scan_count: self.pages.scans().len(),
            article_count: self.articles.len(),
        }
    }

    pub(crate) fn next_article_id(&self) -> String {
        format!("{}.a{}", self.volume_id, self.articles_created + 1)
    }

    /// Articles ordered by the scan position of their first page, then by
    /// entry order.
    pub fn articles_in_page_order(&self) -> Vec<&ArticleRecord> {
        let mut ordered: Vec<&ArticleRecord> = self.articles.iter().collect();
        ordered.sort_by_key(|a| {
            self.pages
                .scan_with_label(&a.first_page)
                .map_or(u32::MAX, |s| s.sequence_index)
        });
        ordered
    }

    pub(crate) fn require_state(&self, expected: VolumeState) -> Result<(), ServiceError> {
        if self.state != expected {
            return Err(ServiceError::WrongState {
                expected,
                actual: self.state,
            });
        }
        Ok(())
    }

    /// Applies one event. Every branch validates before it mutates, so a
    /// failed apply leaves the volume untouched.
    pub(crate) fn apply(&mut self, event: &Event) -> Result<(), ServiceError> {
        if event.version != self.version + 1 {
            return Err(ServiceError::CorruptLog(format!(
                "event version {} does not follow {}",
                event.version, self.version
            )));
        }
        match &event.kind {
            EventKind::VolumeCreated { .. } => {
                return Err(ServiceError::CorruptLog(
                    "volume_created after start of log".into(),
                ));
            }
            EventKind::ScansIngested { scans } => {
                self.require_state(VolumeState::PageNumbering)?;
                self.pages.add_scans(
                    scans
                        .iter()
                        .map(|s| (s.scan_id.clone(), s.image_ref.clone()))
                        .collect(),
                )?;
            }
            EventKind::PageAssigned { scan_id, label } => {
                self.require_state(VolumeState::PageNumbering)?;
                self.pages.assign_page(scan_id, *label)?;
            }
            EventKind::OverrideSet {
                scan_id,
                label,
                note,
            } => {
                self.require_state(VolumeState::PageNumbering)?;
                self.pages.set_override(scan_id, *label, note)?;
            }
            EventKind::DuplicateMarked { scan_id } => {
                self.require_state(VolumeState::PageNumbering)?;
                self.pages.mark_duplicate(scan_id)?;
            }
            EventKind::DuplicateUnmarked { scan_id } => {
                self.require_state(VolumeState::PageNumbering)?;
                self.pages.unmark_duplicate(scan_id)?;
            }
            EventKind::EnteredArticleMode => {
                self.require_state(VolumeState::PageNumbering)?;
                let report = self.pages.verify();
                if !report.complete {
                    return Err(ServiceError::PaginationIncomplete(report));
                }
                self.state = VolumeState::ArticleEntry;
            }
            EventKind::ReopenedPagination => {
                self.require_state(VolumeState::ArticleEntry)?;
                if !self.articles.is_empty() {
                    return Err(ServiceError::ArticlesExist(self.articles.len()));
                }
                self.state = VolumeState::PageNumbering;
            }
            EventKind::ArticleCreated { article } => {
                self.require_state(VolumeState::ArticleEntry)?;
                if article.article_id != self.next_article_id()
                    || article.volume_id != self.volume_id
                {
                    return Err(ServiceError::CorruptLog(format!(
                        "unexpected article id {}",
                        article.article_id
                    )));
                }
                for label in [&article.first_page, &article.last_page] {
                    if self.pages.scan_with_label(label).is_none() {
                        return Err(crate::article::ArticleError::UnknownPageLabel(
                            label.to_string(),
                        )
                        .into());
                    }
                }
                self.articles.push(article.clone());
                self.articles_created += 1;
            }
            EventKind::ArticleRemoved { article_id } => {
                self.require_state(VolumeState::ArticleEntry)?;
                let index = self
                    .articles
                    .iter()
                    .position(|a| &a.article_id == article_id)
                    .ok_or_else(|| ServiceError::UnknownArticle(article_id.clone()))?;
                self.articles.remove(index);
            }
            EventKind::Finalized { bibcodes } => {
                self.require_state(VolumeState::ArticleEntry)?;
                if self.articles.is_empty() {
                    return Err(ServiceError::NoArticles);
                }
                if bibcodes.len() != self.articles.len()
                    || bibcodes.iter().any(|(id, _)| self.article(id).is_none())
                {
                    return Err(ServiceError::CorruptLog(
                        "finalized codes do not cover the articles".into(),
                    ));
                }
                for (id, code) in bibcodes {
                    if let Some(article) = self.articles.iter_mut().find(|a| &a.article_id == id) {
                        article.bibcode = Some(code.clone());
                    }
                }
                self.state = VolumeState::Finalized;
            }
        }
        self.version = event.version;
        Ok(())
    }
}
