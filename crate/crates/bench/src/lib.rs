//! Deterministic inputs shared by the benchmarks under `benches/`.

use std::collections::HashSet;

use bibcap_core::pagination::{PageBook, ScanId};
use bibcap_core::{format_bibcode, AuthorInitial, Bibcode, PageLabel, Qualifier, VolumeField};

const STEMS: [&str; 5] = ["YalRY", "PUSNO", "BuAst", "AnWiD", "ApJ"];

/// `n` valid bibcodes spread over stems, volumes, pages and qualifiers.
pub fn sample_bibcodes(n: usize) -> Vec<Bibcode> {
    (0..n)
        .map(|i| {
            let qualifier = match i % 4 {
                0 => Qualifier::None,
                1 => Qualifier::Letter,
                2 => Qualifier::PageDesignator('D'),
                _ => Qualifier::Dedup('Q'),
            };
            let initial = match i % 27 {
                26 => AuthorInitial::Unknown,
                k => AuthorInitial::Initial(char::from(b'A' + k as u8)),
            };
            Bibcode {
                year: 1850 + (i % 150) as u16,
                bibstem: STEMS[i % STEMS.len()].to_string(),
                volume: VolumeField::Numeric(1 + (i % 9999) as u16),
                qualifier,
                page: 1 + (i * 7 % 9999) as u16,
                author_initial: initial,
            }
        })
        .collect()
}

/// Formatted codes for `sample_bibcodes(n)`.
pub fn sample_codes(n: usize) -> Vec<String> {
    sample_bibcodes(n)
        .iter()
        .map(|b| format_bibcode(b).expect("sample is valid"))
        .collect()
}

/// Raw page labels of every supported kind.
pub fn sample_labels(n: usize) -> Vec<String> {
    (1..=n)
        .map(|i| match i % 4 {
            0 => i.to_string(),
            1 => bibcap_core::label::to_roman((i % 3999 + 1) as u32),
            2 => format!("D:{i}"),
            _ => format!("{}.{}", i % 50 + 1, i % 9 + 1),
        })
        .collect()
}

/// A family holding the plain code and the first `taken` dedup letters,
/// so the next assignment walks `taken + 1` candidates.
pub fn crowded_family(candidate: &Bibcode, taken: usize) -> HashSet<String> {
    let mut existing = HashSet::new();
    existing.insert(format_bibcode(candidate).expect("candidate is valid"));
    for letter in ('Q'..='Z').take(taken) {
        let code = format_bibcode(&candidate.with_qualifier(Qualifier::Dedup(letter)));
        existing.insert(code.expect("dedup code is valid"));
    }
    existing
}

/// A page book of `n` scans, all but the last labelled `1..n-1`.
pub fn labelled_book(n: usize) -> PageBook {
    let mut book = PageBook::new();
    let scans = (0..n)
        .map(|i| (ScanId::new(format!("s{i}")), None))
        .collect();
    book.add_scans(scans).expect("fresh scan ids");
    for i in 0..n.saturating_sub(1) {
        let label = PageLabel::Arabic((i + 1) as u32);
        book.assign_page(&ScanId::new(format!("s{i}")), label)
            .expect("labels are distinct");
    }
    book
}
