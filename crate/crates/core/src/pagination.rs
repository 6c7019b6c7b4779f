//! Page numbering over the scans of one volume.
//!
//! Every Active scan carries at most one assignment, and the effective label
//! of an assignment (the override when present, else the printed label) is
//! unique among Active scans. Scans marked as duplicates keep their
//! assignment but drop out of the uniqueness set until unmarked.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::label::{LabelError, PageLabel};
use crate::tsv;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScanId(pub String);

impl ScanId {
    pub fn new(id: impl Into<String>) -> Self {
        ScanId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ScanId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ScanId {
    fn from(s: &str) -> Self {
        ScanId(s.to_string())
    }
}

impl From<String> for ScanId {
    fn from(s: String) -> Self {
        ScanId(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanStatus {
    Active,
    MarkedDuplicate,
}

impl ScanStatus {
    fn as_str(self) -> &'static str {
        match self {
            ScanStatus::Active => "active",
            ScanStatus::MarkedDuplicate => "duplicate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanImage {
    pub scan_id: ScanId,
    pub sequence_index: u32,
    /// Content address of the image blob, when an image was supplied.
    pub image_ref: Option<String>,
    pub status: ScanStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelOverride {
    pub label: PageLabel,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageAssignment {
    pub scan_id: ScanId,
    pub label: PageLabel,
    pub override_label: Option<LabelOverride>,
}

impl PageAssignment {
    pub fn effective(&self) -> PageLabel {
        self.override_label.as_ref().map_or(self.label, |o| o.label)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PaginationError {
    #[error("unknown scan {0}")]
    UnknownScan(ScanId),
    #[error("scan {0} is marked as a duplicate")]
    ScanIsDuplicate(ScanId),
    #[error("scan {0} is already marked as a duplicate")]
    AlreadyMarked(ScanId),
    #[error("scan {0} is not marked as a duplicate")]
    NotMarked(ScanId),
    #[error("label {label} is already used by scan {conflicting_scan}")]
    DuplicateLabel {
        label: PageLabel,
        conflicting_scan: ScanId,
    },
    #[error("scan {0} has no page assignment to override")]
    NoAssignment(ScanId),
    #[error("an override needs a note recording its source")]
    EmptyNote,
    #[error("scan id {0} is already registered")]
    DuplicateScanId(ScanId),
    #[error(transparent)]
    InvalidLabel(#[from] LabelError),
}

impl PaginationError {
    pub fn code(&self) -> &'static str {
        match self {
            PaginationError::UnknownScan(_) => "UnknownScan",
            PaginationError::ScanIsDuplicate(_) => "ScanIsDuplicate",
            PaginationError::AlreadyMarked(_) => "AlreadyMarked",
            PaginationError::NotMarked(_) => "NotMarked",
            PaginationError::DuplicateLabel { .. } => "DuplicateLabel",
            PaginationError::NoAssignment(_) => "NoAssignment",
            PaginationError::EmptyNote => "EmptyNote",
            PaginationError::DuplicateScanId(_) => "DuplicateScanId",
            PaginationError::InvalidLabel(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LabelConflict {
    pub label: PageLabel,
    pub scans: Vec<ScanId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PaginationReport {
    pub complete: bool,
    pub unlabeled: Vec<ScanId>,
    pub conflicts: Vec<LabelConflict>,
}

/// Scans and page assignments of one volume.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PageBook {
    scans: Vec<ScanImage>,
    positions: HashMap<ScanId, usize>,
    assignments: BTreeMap<ScanId, PageAssignment>,
    in_use: HashMap<PageLabel, ScanId>,
}

type Result<T> = std::result::Result<T, PaginationError>;

impl PageBook {
    pub fn new() -> Self {
        PageBook::default()
    }

    /// Scans in film order.
    pub fn scans(&self) -> &[ScanImage] {
        &self.scans
    }

    pub fn scan(&self, scan_id: &ScanId) -> Option<&ScanImage> {
        self.positions.get(scan_id).map(|&i| &self.scans[i])
    }

    pub fn assignment(&self, scan_id: &ScanId) -> Option<&PageAssignment> {
        self.assignments.get(scan_id)
    }

    pub fn effective_label(&self, scan_id: &ScanId) -> Option<PageLabel> {
        self.assignments.get(scan_id).map(PageAssignment::effective)
    }

    /// The Active scan whose effective label is `label`.
    pub fn scan_with_label(&self, label: &PageLabel) -> Option<&ScanImage> {
        self.in_use.get(label).and_then(|id| self.scan(id))
    }

    /// Parses label text for a scan; bare `plate` and `unnumbered` take the
    /// scan's one-based position as their ordinal.
    pub fn parse_label_for(&self, scan_id: &ScanId, text: &str) -> Result<PageLabel> {
        let scan = self.scan_or_err(scan_id)?;
        Ok(PageLabel::parse_for_scan(text, scan.sequence_index + 1)?)
    }

    /// Appends scans in the given order, continuing the sequence numbering.
    pub fn add_scans(&mut self, scans: Vec<(ScanId, Option<String>)>) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for (id, _) in &scans {
            if self.positions.contains_key(id) || !seen.insert(id) {
                return Err(PaginationError::DuplicateScanId(id.clone()));
            }
        }
        for (scan_id, image_ref) in scans {
            let sequence_index = self.scans.len() as u32;
            self.positions.insert(scan_id.clone(), self.scans.len());
            self.scans.push(ScanImage {
                scan_id,
                sequence_index,
                image_ref,
                status: ScanStatus::Active,
            });
        }
        Ok(())
    }

    fn scan_or_err(&self, scan_id: &ScanId) -> Result<&ScanImage> {
        self.scan(scan_id)
            .ok_or_else(|| PaginationError::UnknownScan(scan_id.clone()))
    }

    fn active_or_err(&self, scan_id: &ScanId) -> Result<&ScanImage> {
        let scan = self.scan_or_err(scan_id)?;
        if scan.status == ScanStatus::MarkedDuplicate {
            return Err(PaginationError::ScanIsDuplicate(scan_id.clone()));
        }
        Ok(scan)
    }

    fn check_free(&self, label: PageLabel, owner: &ScanId) -> Result<()> {
        match self.in_use.get(&label) {
            Some(other) if other != owner => Err(PaginationError::DuplicateLabel {
                label,
                conflicting_scan: other.clone(),
            }),
            _ => Ok(()),
        }
    }

    fn store(&mut self, assignment: PageAssignment) -> PageAssignment {
        if let Some(old) = self.assignments.get(&assignment.scan_id) {
            self.in_use.remove(&old.effective());
        }
        self.in_use
            .insert(assignment.effective(), assignment.scan_id.clone());
        self.assignments
            .insert(assignment.scan_id.clone(), assignment.clone());
        assignment
    }

    /// Records the printed label of a scan, replacing any earlier one. An
    /// existing override stays in force.
    pub fn assign_page(&mut self, scan_id: &ScanId, label: PageLabel) -> Result<PageAssignment> {
        self.active_or_err(scan_id)?;
        let override_label = self
            .assignments
            .get(scan_id)
            .and_then(|a| a.override_label.clone());
        let assignment = PageAssignment {
            scan_id: scan_id.clone(),
            label,
            override_label,
        };
        self.check_free(assignment.effective(), scan_id)?;
        Ok(self.store(assignment))
    }

    pub fn set_override(
        &mut self,
        scan_id: &ScanId,
        label: PageLabel,
        note: &str,
    ) -> Result<PageAssignment> {
        self.active_or_err(scan_id)?;
        let current = self
            .assignments
            .get(scan_id)
            .ok_or_else(|| PaginationError::NoAssignment(scan_id.clone()))?;
        if note.trim().is_empty() {
            return Err(PaginationError::EmptyNote);
        }
        self.check_free(label, scan_id)?;
        let assignment = PageAssignment {
            override_label: Some(LabelOverride {
                label,
                note: note.to_string(),
            }),
            ..current.clone()
        };
        Ok(self.store(assignment))
    }

    /// Successor of the nearest preceding Active label that has an order,
    /// advanced past labels already in use.
    pub fn suggest_next_label(&self, scan_id: &ScanId) -> Result<Option<PageLabel>> {
        let position = self.scan_or_err(scan_id)?.sequence_index as usize;
        let precedent = self.scans[..position]
            .iter()
            .rev()
            .filter(|s| s.status == ScanStatus::Active)
            .filter_map(|s| self.effective_label(&s.scan_id))
            .find(PageLabel::has_successor);
        let Some(mut label) = precedent else {
            return Ok(None);
        };
        loop {
            label = match label.successor() {
                Some(next) => next,
                None => return Ok(None),
            };
            match self.in_use.get(&label) {
                Some(owner) if owner != scan_id => continue,
                _ => return Ok(Some(label)),
            }
        }
    }

    pub fn mark_duplicate(&mut self, scan_id: &ScanId) -> Result<ScanImage> {
        let &i = self
            .positions
            .get(scan_id)
            .ok_or_else(|| PaginationError::UnknownScan(scan_id.clone()))?;
        if self.scans[i].status == ScanStatus::MarkedDuplicate {
            return Err(PaginationError::AlreadyMarked(scan_id.clone()));
        }
        if let Some(label) = self.effective_label(scan_id) {
            self.in_use.remove(&label);
        }
        self.scans[i].status = ScanStatus::MarkedDuplicate;
        Ok(self.scans[i].clone())
    }

    /// Reactivates a scan. Fails if its kept label has since been taken.
    pub fn unmark_duplicate(&mut self, scan_id: &ScanId) -> Result<ScanImage> {
        let &i = self
            .positions
            .get(scan_id)
            .ok_or_else(|| PaginationError::UnknownScan(scan_id.clone()))?;
        if self.scans[i].status == ScanStatus::Active {
            return Err(PaginationError::NotMarked(scan_id.clone()));
        }
        if let Some(label) = self.effective_label(scan_id) {
            self.check_free(label, scan_id)?;
            self.in_use.insert(label, scan_id.clone());
        }
        self.scans[i].status = ScanStatus::Active;
        Ok(self.scans[i].clone())
    }

    /// Recomputes completeness and uniqueness from the scans themselves.
    pub fn verify(&self) -> PaginationReport {
        let mut unlabeled = Vec::new();
        let mut owners: BTreeMap<PageLabel, Vec<ScanId>> = BTreeMap::new();
        for scan in self.scans.iter().filter(|s| s.status == ScanStatus::Active) {
            match self.assignments.get(&scan.scan_id) {
                Some(a) => owners
                    .entry(a.effective())
                    .or_default()
                    .push(scan.scan_id.clone()),
                None => unlabeled.push(scan.scan_id.clone()),
            }
        }
        let conflicts: Vec<LabelConflict> = owners
            .into_iter()
            .filter(|(_, scans)| scans.len() > 1)
            .map(|(label, scans)| LabelConflict { label, scans })
            .collect();
        PaginationReport {
            complete: unlabeled.is_empty() && conflicts.is_empty(),
            unlabeled,
            conflicts,
        }
    }

    /// `pages.tsv`: one row per scan in sequence order, with a header row.
    pub fn to_pages_tsv(&self) -> String {
        let mut out = String::from(
            "scan_id\tsequence_index\tstatus\tlabel_kind\tlabel_text\toverride_text\toverride_note\n",
        );
        for scan in &self.scans {
            let assignment = self.assignments.get(&scan.scan_id);
            let row = [
                scan.scan_id.0.clone(),
                scan.sequence_index.to_string(),
                scan.status.as_str().to_string(),
                assignment
                    .map(|a| a.label.kind().to_string())
                    .unwrap_or_default(),
                assignment.map(|a| a.label.to_string()).unwrap_or_default(),
                assignment
                    .and_then(|a| a.override_label.as_ref())
                    .map(|o| o.label.to_string())
                    .unwrap_or_default(),
                assignment
                    .and_then(|a| a.override_label.as_ref())
                    .map(|o| o.note.clone())
                    .unwrap_or_default(),
            ];
            out.push_str(&tsv::join(&row));
            out.push('\n');
        }
        out
    }
}

/// One row of a `pages.tsv` file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageRow {
    pub scan_id: ScanId,
    pub sequence_index: u32,
    pub status: ScanStatus,
    pub label_text: Option<String>,
    pub override_text: Option<String>,
    pub override_note: Option<String>,
}

/// Reads `pages.tsv` rows. `label_kind` is informational and re-derived from
/// the label text.
pub fn parse_pages_tsv(text: &str) -> std::result::Result<Vec<PageRow>, String> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 && line.starts_with("scan_id\t") || line.is_empty() {
            continue;
        }
        let cols: Vec<String> = line
            .split('\t')
            .map(|c| tsv::unescape(c).ok_or_else(|| format!("line {}: bad escape in {c:?}", i + 1)))
            .collect::<std::result::Result<_, _>>()?;
        if cols.len() != 7 {
            return Err(format!(
                "line {}: expected 7 columns, found {}",
                i + 1,
                cols.len()
            ));
        }
        let status = match cols[2].as_str() {
            "active" | "" => ScanStatus::Active,
            "duplicate" => ScanStatus::MarkedDuplicate,
            other => return Err(format!("line {}: unknown status {other:?}", i + 1)),
        };
        let opt = |s: &String| Some(s.clone()).filter(|s| !s.is_empty());
        rows.push(PageRow {
            scan_id: ScanId(cols[0].clone()),
            sequence_index: cols[1]
                .parse()
                .map_err(|_| format!("line {}: bad sequence index {:?}", i + 1, cols[1]))?,
            status,
            label_text: opt(&cols[4]),
            override_text: opt(&cols[5]),
            override_note: opt(&cols[6]),
        });
    }
    Ok(rows)
}
