#![allow(dead_code)]

pub mod model;

use std::collections::HashSet;
use std::path::PathBuf;

use bibcap_core::workflow::{load_volume_dir, NewVolume, ScanUpload, VolumeDir};
use bibcap_core::{format_bibcode, parse_bibcode, Bibcode, Registry, Service, VolumeField};

pub const REGISTRY_TSV: &str = include_str!("../../fixtures/registry.tsv");

pub const YALE_TITLE: &str = "Reports for the year presented by the Board of Managers of the Observatory of Yale University to the President and Fellows";

pub fn registry() -> Registry {
    Registry::load(REGISTRY_TSV).expect("fixture registry loads")
}

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures/volumes")
        .join(name)
}

pub fn fixture(name: &str) -> VolumeDir {
    load_volume_dir(&fixture_path(name)).expect("fixture volume loads")
}

pub fn service() -> Service {
    Service::in_memory(registry())
}

pub fn new_volume(id: &str, volume: u16, year: i64) -> NewVolume {
    NewVolume {
        volume_id: Some(id.to_string()),
        full_title: YALE_TITLE.to_string(),
        series: None,
        volume: VolumeField::Numeric(volume),
        publication_year: year,
        publication_month: 0,
    }
}

pub fn uploads(prefix: &str, n: usize) -> Vec<ScanUpload> {
    (0..n)
        .map(|i| ScanUpload {
            scan_id: format!("{prefix}-{i}").into(),
            image: None,
        })
        .collect()
}

/// Minimal PNG signature followed by filler bytes.
pub fn png(tag: u8) -> Vec<u8> {
    let mut bytes = b"\x89PNG\r\n\x1a\n".to_vec();
    bytes.extend_from_slice(&[0, 0, 0, 13, tag]);
    bytes
}

/// Reference layout written from the field widths alone: stem padded right,
/// volume and page padded left, '.' for absent qualifier or initial.
pub fn layout_oracle(
    year: u16,
    stem: &str,
    volume: &str,
    qualifier: char,
    page: u16,
    initial: char,
) -> String {
    let mut out = format!("{year:04}");
    out.push_str(stem);
    out.push_str(&".".repeat(5 - stem.chars().count()));
    out.push_str(&".".repeat(4 - volume.chars().count()));
    out.push_str(volume);
    out.push(qualifier);
    let page = page.to_string();
    out.push_str(&".".repeat(4 - page.len()));
    out.push_str(&page);
    out.push(initial);
    out
}

/// Every qualifier letter in order, checked one by one.
pub fn brute_force_dedup(existing: &HashSet<String>, candidate: &Bibcode) -> Option<Bibcode> {
    let code = format_bibcode(candidate).unwrap();
    if !existing.contains(&code) {
        return Some(candidate.clone());
    }
    let mut chars: Vec<char> = code.chars().collect();
    for letter in ['Q', 'R', 'S', 'T', 'U', 'V', 'W', 'X', 'Y', 'Z'] {
        chars[13] = letter;
        let next: String = chars.iter().collect();
        if !existing.contains(&next) {
            return Some(parse_bibcode(&next).unwrap());
        }
    }
    None
}
