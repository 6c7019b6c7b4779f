//! Journal abbreviation (bibstem) registry.
//!
//! The on-disk form is UTF-8 TSV with nine columns per entry:
//!
//! ```text
//! stem  full_title  series  year_start  year_end  vol_start  vol_end  predecessor  successor
//! ```
//!
//! Empty columns mean "none" or "open". Lines starting with `#` and blank
//! lines are kept verbatim, so loading and re-serializing a file reproduces
//! it byte for byte.
//!
//! Entries sharing a title form a split family: they must be separable by
//! series designation, year range or volume range. Registries are immutable
//! snapshots; [`Registry::register_stem`] returns a new snapshot together with
//! an audit record.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::bibcode::is_valid_stem;

const COLUMNS: usize = 9;

/// Inclusive range with optionally open ends.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Span {
    pub start: Option<u32>,
    pub end: Option<u32>,
}

impl Span {
    pub fn new(start: Option<u32>, end: Option<u32>) -> Self {
        Span { start, end }
    }

    pub fn contains(&self, value: u32) -> bool {
        self.start.is_none_or(|s| s <= value) && self.end.is_none_or(|e| value <= e)
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        let lo = self.start.unwrap_or(0).max(other.start.unwrap_or(0));
        let hi = self
            .end
            .unwrap_or(u32::MAX)
            .min(other.end.unwrap_or(u32::MAX));
        lo <= hi
    }

    /// A representative value inside the span, if it is bounded on either side.
    pub fn midpoint(&self) -> Option<u32> {
        match (self.start, self.end) {
            (Some(s), Some(e)) => Some(s + (e - s) / 2),
            (Some(s), None) => Some(s),
            (None, Some(e)) => Some(e),
            (None, None) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BibstemEntry {
    pub stem: String,
    pub full_title: String,
    pub series_designation: Option<String>,
    pub year_range: Span,
    pub volume_range: Span,
    pub predecessor: Option<String>,
    pub successor: Option<String>,
}

impl BibstemEntry {
    pub fn new(stem: impl Into<String>, full_title: impl Into<String>) -> Self {
        BibstemEntry {
            stem: stem.into(),
            full_title: full_title.into(),
            series_designation: None,
            year_range: Span::default(),
            volume_range: Span::default(),
            predecessor: None,
            successor: None,
        }
    }

    pub fn with_series(mut self, series: impl Into<String>) -> Self {
        self.series_designation = Some(series.into());
        self
    }

    pub fn with_predecessor(mut self, stem: impl Into<String>) -> Self {
        self.predecessor = Some(stem.into());
        self
    }

    pub fn with_years(mut self, start: Option<u32>, end: Option<u32>) -> Self {
        self.year_range = Span::new(start, end);
        self
    }

    pub fn with_volumes(mut self, start: Option<u32>, end: Option<u32>) -> Self {
        self.volume_range = Span::new(start, end);
        self
    }

    /// The entry as one registry file line, without the line break.
    pub fn to_line(&self) -> String {
        let num = |n: Option<u32>| n.map(|n| n.to_string()).unwrap_or_default();
        [
            self.stem.clone(),
            self.full_title.clone(),
            self.series_designation.clone().unwrap_or_default(),
            num(self.year_range.start),
            num(self.year_range.end),
            num(self.volume_range.start),
            num(self.volume_range.end),
            self.predecessor.clone().unwrap_or_default(),
            self.successor.clone().unwrap_or_default(),
        ]
        .join("\t")
    }

    fn check_fields(&self) -> Result<(), String> {
        if !is_valid_stem(&self.stem) {
            return Err(format!("invalid stem {:?}", self.stem));
        }
        if self.full_title.trim().is_empty() {
            return Err("empty title".into());
        }
        let texts = [Some(&self.full_title), self.series_designation.as_ref()];
        if texts
            .into_iter()
            .flatten()
            .any(|t| t.contains(['\t', '\n', '\r']))
        {
            return Err("title and series must not contain tabs or line breaks".into());
        }
        if self.series_designation.as_deref() == Some("") {
            return Err("series designation must be absent rather than empty".into());
        }
        for (name, span) in [("year", self.year_range), ("volume", self.volume_range)] {
            if let (Some(s), Some(e)) = (span.start, span.end) {
                if s > e {
                    return Err(format!("{name} range {s}-{e} is reversed"));
                }
            }
        }
        for link in [&self.predecessor, &self.successor].into_iter().flatten() {
            if !is_valid_stem(link) {
                return Err(format!("invalid linked stem {link:?}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("line {line}, column {column}: {message}")]
    ParseError {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid entry {stem:?}: {message}")]
    InvalidEntry { stem: String, message: String },
    #[error("duplicate stem {0:?}")]
    DuplicateStem(String),
    #[error(
        "stems {0:?} and {1:?} share a title and cannot be told apart by series, years or volumes"
    )]
    OverlappingRanges(String, String),
    #[error("broken continuity link at {stem:?}: {message}")]
    BrokenContinuityLink { stem: String, message: String },
    #[error("no bibstem found for {0:?}")]
    NotFound(String),
    #[error("{query:?} matches several stems: {candidates:?}")]
    Ambiguous {
        query: String,
        candidates: Vec<String>,
    },
}

impl RegistryError {
    pub fn code(&self) -> &'static str {
        match self {
            RegistryError::ParseError { .. } => "ParseError",
            RegistryError::InvalidEntry { .. } => "InvalidEntry",
            RegistryError::DuplicateStem(_) => "DuplicateStem",
            RegistryError::OverlappingRanges(..) => "OverlappingRanges",
            RegistryError::BrokenContinuityLink { .. } => "BrokenContinuityLink",
            RegistryError::NotFound(_) => "NotFound",
            RegistryError::Ambiguous { .. } => "Ambiguous",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Line {
    Verbatim(String),
    Entry(usize),
}

/// One accepted registry mutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditRecord {
    pub version: u64,
    pub action: &'static str,
    pub stem: String,
}

impl fmt::Display for AuditRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}\t{}\t{}", self.version, self.action, self.stem)
    }
}

/// A bibstem lookup query. Title and series are compared after case folding
/// and whitespace collapsing.
#[derive(Debug, Clone, Default)]
pub struct StemQuery<'a> {
    pub title: &'a str,
    pub series: Option<&'a str>,
    pub year: Option<u32>,
    pub volume: Option<u32>,
}

impl<'a> StemQuery<'a> {
    pub fn title(title: &'a str) -> Self {
        StemQuery {
            title,
            ..Default::default()
        }
    }

    pub fn series(mut self, series: &'a str) -> Self {
        self.series = Some(series);
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Registry {
    lines: Vec<Line>,
    entries: Vec<BibstemEntry>,
    index: HashMap<String, usize>,
    trailing_newline: bool,
    version: u64,
}

pub fn normalize_title(title: &str) -> String {
    title
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

fn normalize_series(series: Option<&str>) -> Option<String> {
    series.map(normalize_title).filter(|s| !s.is_empty())
}

impl Registry {
    pub fn new() -> Self {
        Registry::default()
    }

    pub fn load(source: &str) -> Result<Registry, RegistryError> {
        let mut registry = Registry {
            trailing_newline: source.ends_with('\n'),
            ..Registry::default()
        };
        let body = source.strip_suffix('\n').unwrap_or(source);
        if body.is_empty() && source.len() <= 1 {
            return Ok(registry);
        }
        for (i, text) in body.split('\n').enumerate() {
            let line_no = i + 1;
            if text.is_empty() || text.starts_with('#') {
                registry.lines.push(Line::Verbatim(text.to_string()));
                continue;
            }
            let entry = parse_entry(text, line_no)?;
            if registry.index.contains_key(&entry.stem) {
                return Err(RegistryError::DuplicateStem(entry.stem));
            }
            registry
                .index
                .insert(entry.stem.clone(), registry.entries.len());
            registry.lines.push(Line::Entry(registry.entries.len()));
            registry.entries.push(entry);
        }
        registry.check_invariants()?;
        Ok(registry)
    }

    pub fn to_tsv(&self) -> String {
        let mut out: Vec<String> = Vec::with_capacity(self.lines.len());
        for line in &self.lines {
            match line {
                Line::Verbatim(text) => out.push(text.clone()),
                Line::Entry(i) => out.push(self.entries[*i].to_line()),
            }
        }
        let mut text = out.join("\n");
        if self.trailing_newline && !self.lines.is_empty() {
            text.push('\n');
        }
        text
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in file order.
    pub fn entries(&self) -> impl Iterator<Item = &BibstemEntry> {
        self.lines.iter().filter_map(|l| match l {
            Line::Entry(i) => Some(&self.entries[*i]),
            Line::Verbatim(_) => None,
        })
    }

    pub fn get(&self, stem: &str) -> Option<&BibstemEntry> {
        self.index.get(stem).map(|&i| &self.entries[i])
    }

    pub fn contains(&self, stem: &str) -> bool {
        self.index.contains_key(stem)
    }

    /// Picks the unique entry admitting the query. Series designation is
    /// matched first; year and volume ranges only break remaining ties.
    pub fn resolve_stem(&self, query: &StemQuery<'_>) -> Result<&str, RegistryError> {
        let title = normalize_title(query.title);
        let series = normalize_series(query.series);
        let family: Vec<&BibstemEntry> = self
            .entries()
            .filter(|e| normalize_title(&e.full_title) == title)
            .filter(|e| normalize_series(e.series_designation.as_deref()) == series)
            .collect();
        let describe = || match &series {
            Some(s) => format!("{} [{s}]", query.title),
            None => query.title.to_string(),
        };
        let candidates = if family.len() > 1 {
            family
                .into_iter()
                .filter(|e| query.year.is_none_or(|y| e.year_range.contains(y)))
                .filter(|e| query.volume.is_none_or(|v| e.volume_range.contains(v)))
                .collect()
        } else {
            family
        };
        match candidates.as_slice() {
            [] => Err(RegistryError::NotFound(describe())),
            [only] => Ok(&only.stem),
            many => Err(RegistryError::Ambiguous {
                query: describe(),
                candidates: many.iter().map(|e| e.stem.clone()).collect(),
            }),
        }
    }

    /// Returns a new registry with `entry` appended. Continuity links named by
    /// the entry are mirrored onto the linked entries.
    pub fn register_stem(
        &self,
        entry: BibstemEntry,
    ) -> Result<(Registry, AuditRecord), RegistryError> {
        entry
            .check_fields()
            .map_err(|message| RegistryError::InvalidEntry {
                stem: entry.stem.clone(),
                message,
            })?;
        if self.contains(&entry.stem) {
            return Err(RegistryError::DuplicateStem(entry.stem));
        }
        let mut next = self.clone();
        let broken = |message: String| RegistryError::BrokenContinuityLink {
            stem: entry.stem.clone(),
            message,
        };
        if let Some(pred) = &entry.predecessor {
            let &i = next
                .index
                .get(pred)
                .ok_or_else(|| broken(format!("predecessor {pred:?} not registered")))?;
            match &next.entries[i].successor {
                Some(s) if s != &entry.stem => {
                    return Err(broken(format!("{pred:?} already continues as {s:?}")));
                }
                _ => next.entries[i].successor = Some(entry.stem.clone()),
            }
        }
        if let Some(succ) = &entry.successor {
            let &i = next
                .index
                .get(succ)
                .ok_or_else(|| broken(format!("successor {succ:?} not registered")))?;
            match &next.entries[i].predecessor {
                Some(p) if p != &entry.stem => {
                    return Err(broken(format!("{succ:?} already continues from {p:?}")));
                }
                _ => next.entries[i].predecessor = Some(entry.stem.clone()),
            }
        }
        let stem = entry.stem.clone();
        next.index.insert(stem.clone(), next.entries.len());
        next.lines.push(Line::Entry(next.entries.len()));
        next.entries.push(entry);
        next.trailing_newline = true;
        next.check_invariants()?;
        next.version += 1;
        let audit = AuditRecord {
            version: next.version,
            action: "register",
            stem,
        };
        Ok((next, audit))
    }

    /// The full predecessor-to-successor chain through `stem`, oldest first.
    pub fn continuity_chain(&self, stem: &str) -> Result<Vec<String>, RegistryError> {
        let mut oldest = self
            .get(stem)
            .ok_or_else(|| RegistryError::NotFound(stem.to_string()))?;
        let limit = self.entries.len();
        for _ in 0..limit {
            match oldest.predecessor.as_deref().and_then(|p| self.get(p)) {
                Some(prev) => oldest = prev,
                None => break,
            }
        }
        let mut chain = vec![oldest.stem.clone()];
        let mut current = oldest;
        while let Some(next) = current.successor.as_deref().and_then(|s| self.get(s)) {
            if chain.len() > limit {
                break;
            }
            chain.push(next.stem.clone());
            current = next;
        }
        Ok(chain)
    }

    fn check_invariants(&self) -> Result<(), RegistryError> {
        for entry in &self.entries {
            let broken = |message: String| RegistryError::BrokenContinuityLink {
                stem: entry.stem.clone(),
                message,
            };
            if let Some(succ) = &entry.successor {
                let other = self
                    .get(succ)
                    .ok_or_else(|| broken(format!("successor {succ:?} not registered")))?;
                if other.predecessor.as_deref() != Some(&entry.stem) {
                    return Err(broken(format!("{succ:?} does not name it as predecessor")));
                }
            }
            if let Some(pred) = &entry.predecessor {
                let other = self
                    .get(pred)
                    .ok_or_else(|| broken(format!("predecessor {pred:?} not registered")))?;
                if other.successor.as_deref() != Some(&entry.stem) {
                    return Err(broken(format!("{pred:?} does not name it as successor")));
                }
            }
            if entry.predecessor.as_deref() == Some(&entry.stem) {
                return Err(broken("links to itself".into()));
            }
        }
        self.check_acyclic()?;
        self.check_families()
    }

    fn check_acyclic(&self) -> Result<(), RegistryError> {
        for entry in &self.entries {
            let mut current = entry;
            for _ in 0..self.entries.len() {
                match current.successor.as_deref().and_then(|s| self.get(s)) {
                    Some(next) if next.stem == entry.stem => {
                        return Err(RegistryError::BrokenContinuityLink {
                            stem: entry.stem.clone(),
                            message: "continuity links form a cycle".into(),
                        });
                    }
                    Some(next) => current = next,
                    None => break,
                }
            }
        }
        Ok(())
    }

    fn check_families(&self) -> Result<(), RegistryError> {
        let mut families: HashMap<String, Vec<&BibstemEntry>> = HashMap::new();
        for entry in self.entries() {
            families
                .entry(normalize_title(&entry.full_title))
                .or_default()
                .push(entry);
        }
        for members in families.values() {
            for (i, a) in members.iter().enumerate() {
                for b in &members[i + 1..] {
                    let same_series = normalize_series(a.series_designation.as_deref())
                        == normalize_series(b.series_designation.as_deref());
                    if same_series
                        && a.year_range.overlaps(&b.year_range)
                        && a.volume_range.overlaps(&b.volume_range)
                    {
                        return Err(RegistryError::OverlappingRanges(
                            a.stem.clone(),
                            b.stem.clone(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

fn parse_entry(text: &str, line: usize) -> Result<BibstemEntry, RegistryError> {
    let cols: Vec<&str> = text.split('\t').collect();
    let err = |column: usize, message: String| RegistryError::ParseError {
        line,
        column,
        message,
    };
    if cols.len() != COLUMNS {
        return Err(err(
            cols.len().min(COLUMNS),
            format!("expected {COLUMNS} columns, found {}", cols.len()),
        ));
    }
    let stem = cols[0];
    if !is_valid_stem(stem) {
        return Err(err(1, format!("invalid stem {stem:?}")));
    }
    if cols[1].trim().is_empty() {
        return Err(err(2, "empty title".into()));
    }
    let number = |column: usize| -> Result<Option<u32>, RegistryError> {
        let field = cols[column - 1];
        if field.is_empty() {
            return Ok(None);
        }
        if field.starts_with('0') || !field.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err(column, format!("expected a number, found {field:?}")));
        }
        field
            .parse()
            .map(Some)
            .map_err(|_| err(column, format!("number out of range: {field:?}")))
    };
    let link = |column: usize| -> Result<Option<String>, RegistryError> {
        match cols[column - 1] {
            "" => Ok(None),
            s if is_valid_stem(s) => Ok(Some(s.to_string())),
            s => Err(err(column, format!("invalid linked stem {s:?}"))),
        }
    };
    let entry = BibstemEntry {
        stem: stem.to_string(),
        full_title: cols[1].to_string(),
        series_designation: Some(cols[2]).filter(|s| !s.is_empty()).map(str::to_string),
        year_range: Span::new(number(4)?, number(5)?),
        volume_range: Span::new(number(6)?, number(7)?),
        predecessor: link(8)?,
        successor: link(9)?,
    };
    entry.check_fields().map_err(|message| err(1, message))?;
    Ok(entry)
}
