//! Export blocks for finalized volumes.
//!
//! ```text
//! Title: ...
//! Authors: Last, Rest; Last, Rest
//! Journal: <title>, vol. <n>, pp. <first>-<last>
//! Publication Date: MM/YYYY
//! Origin: ADS
//! Bibliographic Code: <19 chars>
//! ```
//!
//! Records are separated by one blank line.

use serde::Serialize;

use crate::article::{format_journal_ref, join_authors, ArticleRecord};
use crate::bibcode::{format_bibcode, Bibcode};

use super::{ServiceError, Volume, VolumeState};

pub const ORIGIN: &str = "ADS";

const FIELDS: [&str; 6] = [
    "Title",
    "Authors",
    "Journal",
    "Publication Date",
    "Origin",
    "Bibliographic Code",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExportRecord {
    pub bibcode: Bibcode,
    pub title: String,
    pub authors: String,
    pub journal_ref: String,
    pub pub_date: String,
    pub origin: String,
}

impl ExportRecord {
    fn for_article(article: &ArticleRecord, volume: &Volume) -> Result<ExportRecord, ServiceError> {
        let bibcode = article
            .bibcode
            .clone()
            .ok_or_else(|| ServiceError::UnderivedBibcodes(vec![article.article_id.clone()]))?;
        Ok(ExportRecord {
            bibcode,
            title: article.title.clone(),
            authors: join_authors(&article.authors),
            journal_ref: format_journal_ref(article, volume),
            pub_date: volume.publication_date(),
            origin: ORIGIN.to_string(),
        })
    }

    /// Field values in block order.
    pub fn values(&self) -> [String; 6] {
        [
            self.title.clone(),
            self.authors.clone(),
            self.journal_ref.clone(),
            self.pub_date.clone(),
            self.origin.clone(),
            format_bibcode(&self.bibcode).expect("exported bibcodes are valid"),
        ]
    }

    pub fn to_block(&self) -> String {
        let mut out = String::new();
        for (name, value) in FIELDS.iter().zip(self.values()) {
            let value = value.replace(['\n', '\r'], " ");
            if value.is_empty() {
                out.push_str(&format!("{name}:\n"));
            } else {
                out.push_str(&format!("{name}: {value}\n"));
            }
        }
        out
    }
}

/// Export records of a finalized volume in first-page order.
pub fn export_records(volume: &Volume) -> Result<Vec<ExportRecord>, ServiceError> {
    volume.require_state(VolumeState::Finalized)?;
    volume
        .articles_in_page_order()
        .into_iter()
        .map(|a| ExportRecord::for_article(a, volume))
        .collect()
}

pub fn render_export(records: &[ExportRecord]) -> String {
    records
        .iter()
        .map(ExportRecord::to_block)
        .collect::<Vec<_>>()
        .join("\n")
}

/// Splits an export file back into `(field, value)` lists, one per record.
pub fn parse_export(text: &str) -> Vec<Vec<(String, String)>> {
    text.split("\n\n")
        .filter(|block| !block.trim().is_empty())
        .map(|block| {
            block
                .lines()
                .filter_map(|line| line.split_once(':'))
                .map(|(k, v)| (k.to_string(), v.strip_prefix(' ').unwrap_or(v).to_string()))
                .collect()
        })
        .collect()
}
