//! Article records entered against a numbered volume.

use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bibcode::{assign_dedup_qualifier, AuthorInitial, Bibcode, BibcodeError};
use crate::label::{LabelError, PageLabel};
use crate::pagination::PageBook;
use crate::registry::Registry;
use crate::workflow::Volume;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Author {
    pub last_name: String,
    #[serde(default)]
    pub rest: String,
}

impl Author {
    pub fn new(last_name: impl Into<String>, rest: impl Into<String>) -> Self {
        Author {
            last_name: last_name.into(),
            rest: rest.into(),
        }
    }

    /// `Last, Rest`, or just `Last` when there is nothing else.
    pub fn display_name(&self) -> String {
        if self.rest.is_empty() {
            self.last_name.clone()
        } else {
            format!("{}, {}", self.last_name, self.rest)
        }
    }

    /// Inverse of [`Author::display_name`].
    pub fn from_display(text: &str) -> Author {
        match text.split_once(", ") {
            Some((last, rest)) => Author::new(last.trim(), rest.trim()),
            None => Author::new(text.trim(), ""),
        }
    }
}

pub fn join_authors(authors: &[Author]) -> String {
    authors
        .iter()
        .map(Author::display_name)
        .collect::<Vec<_>>()
        .join("; ")
}

pub fn split_authors(text: &str) -> Vec<Author> {
    text.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(Author::from_display)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub article_id: String,
    pub volume_id: String,
    pub title: String,
    pub authors: Vec<Author>,
    pub first_page: PageLabel,
    pub last_page: PageLabel,
    #[serde(rename = "abstract", default, skip_serializing_if = "Option::is_none")]
    pub abstract_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bibcode: Option<Bibcode>,
}

/// Operator-entered article fields, before page labels are resolved.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleDraft {
    pub title: String,
    #[serde(default)]
    pub authors: Vec<Author>,
    pub first_page: String,
    pub last_page: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArticleError {
    #[error("page label {0:?} is not an effective label of an active scan in this volume")]
    UnknownPageLabel(String),
    #[error("first page {first} comes after last page {last} in scan order")]
    PageOrderViolation { first: PageLabel, last: PageLabel },
    #[error("article title must not be empty")]
    EmptyTitle,
    #[error("invalid author {0:?}: names must be non-empty and free of ';'")]
    InvalidAuthor(String),
    #[error("volume stem {0:?} is not in the registry")]
    StemUnresolved(String),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Bibcode(#[from] BibcodeError),
}

impl ArticleError {
    pub fn code(&self) -> &'static str {
        match self {
            ArticleError::UnknownPageLabel(_) => "UnknownPageLabel",
            ArticleError::PageOrderViolation { .. } => "PageOrderViolation",
            ArticleError::EmptyTitle => "EmptyTitle",
            ArticleError::InvalidAuthor(_) => "InvalidAuthor",
            ArticleError::StemUnresolved(_) => "StemUnresolved",
            ArticleError::Label(e) => e.code(),
            ArticleError::Bibcode(e) => e.code(),
        }
    }
}

/// Resolves a draft against the volume's effective labels.
pub fn resolve_draft(
    draft: &ArticleDraft,
    pages: &PageBook,
    article_id: String,
    volume_id: String,
) -> Result<ArticleRecord, ArticleError> {
    if draft.title.trim().is_empty() {
        return Err(ArticleError::EmptyTitle);
    }
    for author in &draft.authors {
        let bad = author.last_name.trim().is_empty()
            || author.last_name.contains([';', ','])
            || author.rest.contains(';');
        if bad
            || [&author.last_name, &author.rest]
                .iter()
                .any(|s| s.contains(['\t', '\n', '\r']))
        {
            return Err(ArticleError::InvalidAuthor(author.display_name()));
        }
    }
    let locate = |text: &str| -> Result<(PageLabel, u32), ArticleError> {
        let label: PageLabel = text
            .trim()
            .parse()
            .map_err(|_| ArticleError::UnknownPageLabel(text.to_string()))?;
        let scan = pages
            .scan_with_label(&label)
            .ok_or_else(|| ArticleError::UnknownPageLabel(text.to_string()))?;
        Ok((label, scan.sequence_index))
    };
    let (first_page, first_pos) = locate(&draft.first_page)?;
    let (last_page, last_pos) = locate(&draft.last_page)?;
    if first_pos > last_pos {
        return Err(ArticleError::PageOrderViolation {
            first: first_page,
            last: last_page,
        });
    }
    Ok(ArticleRecord {
        article_id,
        volume_id,
        title: draft.title.clone(),
        authors: draft.authors.clone(),
        first_page,
        last_page,
        abstract_text: draft.abstract_text.clone().filter(|a| !a.trim().is_empty()),
        bibcode: None,
    })
}

/// Bibcode for an article: publication year and stem of the volume, page
/// fields from the first page, initial of the first author, then dedup
/// against `existing`.
pub fn derive_bibcode(
    article: &ArticleRecord,
    volume: &Volume,
    registry: &Registry,
    existing: &HashSet<String>,
) -> Result<Bibcode, ArticleError> {
    if !registry.contains(&volume.stem) {
        return Err(ArticleError::StemUnresolved(volume.stem.clone()));
    }
    let page = article.first_page.bibcode_fields()?;
    let author_initial = article.authors.first().map_or(AuthorInitial::Unknown, |a| {
        AuthorInitial::from_last_name(&a.last_name)
    });
    let candidate = Bibcode {
        year: volume.publication_year,
        bibstem: volume.stem.clone(),
        volume: volume.volume.clone(),
        qualifier: page.qualifier,
        page: page.page,
        author_initial,
    };
    Ok(assign_dedup_qualifier(existing, &candidate)?)
}

/// `<title>, vol. <n>, pp. <first>-<last>`, or `p. <first>` for one page.
pub fn format_journal_ref(article: &ArticleRecord, volume: &Volume) -> String {
    let pages = if article.first_page == article.last_page {
        format!("p. {}", article.first_page)
    } else {
        format!("pp. {}-{}", article.first_page, article.last_page)
    };
    format!("{}, vol. {}, {}", volume.full_title, volume.volume, pages)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReportYears {
    pub start_year: u16,
    pub end_year: u16,
}

static REPORT_YEARS: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\bfor\s+the\s+years?\s+(\d{4})(?:\s*(?:-|–|to)\s*(\d{4}))?\b").unwrap()
});

/// The span of years a report covers, as stated in its title.
pub fn extract_report_years(title: &str) -> Option<ReportYears> {
    let caps = REPORT_YEARS.captures(title)?;
    let start_year: u16 = caps[1].parse().ok()?;
    let end_year = match caps.get(2) {
        Some(m) => m.as_str().parse().ok()?,
        None => start_year,
    };
    (start_year <= end_year).then_some(ReportYears {
        start_year,
        end_year,
    })
}
