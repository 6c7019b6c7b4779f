//! Metadata capture for scanned historical observatory publications.
//!
//! The crate is organised around the two capture stages:
//!
//! - [`pagination`]: page numbering over the scans of a volume, duplicate
//!   marking and handwritten-number overrides.
//! - [`article`]: article entry against the numbered pages, bibcode
//!   derivation and journal references.
//!
//! Both stages are driven through [`workflow`], which owns the volume state
//! machine, the append-only event log, and optimistic versioning. The
//! identifier layer lives in [`bibcode`] (19-character codes and printed page
//! labels) and [`registry`] (journal abbreviations).

pub mod article;
pub mod bibcode;
pub mod label;
pub mod pagination;
pub mod registry;
mod tsv;
pub mod workflow;

pub use article::{
    derive_bibcode, extract_report_years, format_journal_ref, ArticleRecord, Author,
};
pub use bibcode::{
    assign_dedup_qualifier, format_bibcode, parse_bibcode, validate_bibcode_string, AuthorInitial,
    Bibcode, BibcodeError, Diagnostic, DiagnosticCode, Qualifier, VolumeField,
};
pub use label::{normalize_page_label, NormalizedPage, PageLabel, RawPageLabel};
pub use registry::{BibstemEntry, Registry, RegistryError};
pub use workflow::{Service, ServiceError, Volume, VolumeState};
