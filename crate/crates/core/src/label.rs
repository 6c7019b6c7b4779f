//! Printed page labels and their mapping onto bibcode page fields.
//!
//! Accepted text forms:
//!
//! | text            | label                         |
//! |-----------------|-------------------------------|
//! | `305`           | arabic                        |
//! | `xiv`, `XIV`    | roman                         |
//! | `D4`, `D:305`   | letter-prefixed               |
//! | `1.1`           | composite (major.minor)       |
//! | `plate 3`       | plate with ordinal            |
//! | `unnumbered 7`  | unnumbered page with ordinal  |
//!
//! Bare `plate` / `unnumbered` are accepted by [`PageLabel::parse_for_scan`],
//! which supplies the ordinal from the scan position.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::bibcode::{is_page_designator, Qualifier};

const MAX_ROMAN: u32 = 3999;
const MAX_BIBCODE_PAGE: u32 = 9999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PageLabel {
    Arabic(u32),
    Roman(u32),
    LetterPrefixed { letter: char, number: u32 },
    Composite { major: u32, minor: u32 },
    Plate(u32),
    Unnumbered(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelError {
    #[error("page label must be non-empty without surrounding whitespace: {0:?}")]
    Blank(String),
    #[error("unparseable page label {0:?}")]
    Unparseable(String),
    #[error("page label {0} cannot populate a bibcode page field")]
    UnsupportedForBibcode(PageLabel),
}

impl LabelError {
    pub fn code(&self) -> &'static str {
        match self {
            LabelError::Blank(_) | LabelError::Unparseable(_) => "Unparseable",
            LabelError::UnsupportedForBibcode(_) => "UnsupportedForBibcode",
        }
    }
}

/// Label text exactly as printed or entered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPageLabel(String);

impl RawPageLabel {
    pub fn new(text: impl Into<String>) -> Result<Self, LabelError> {
        let text = text.into();
        if text.is_empty() || text.trim() != text {
            return Err(LabelError::Blank(text));
        }
        Ok(RawPageLabel(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Bibcode-facing view of a label: the qualifier and page fields, plus the
/// minor component of a composite label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormalizedPage {
    pub qualifier: Qualifier,
    pub page: u16,
    pub sublabel: Option<u32>,
}

pub fn normalize_page_label(raw: &RawPageLabel) -> Result<NormalizedPage, LabelError> {
    raw.as_str().parse::<PageLabel>()?.bibcode_fields()
}

impl PageLabel {
    pub fn kind(&self) -> &'static str {
        match self {
            PageLabel::Arabic(_) => "arabic",
            PageLabel::Roman(_) => "roman",
            PageLabel::LetterPrefixed { .. } => "letter",
            PageLabel::Composite { .. } => "composite",
            PageLabel::Plate(_) => "plate",
            PageLabel::Unnumbered(_) => "unnumbered",
        }
    }

    /// Parses `text`, filling the ordinal of a bare `plate` or `unnumbered`
    /// keyword with `ordinal`.
    pub fn parse_for_scan(text: &str, ordinal: u32) -> Result<PageLabel, LabelError> {
        if text.eq_ignore_ascii_case("plate") {
            Ok(PageLabel::Plate(ordinal))
        } else if text.eq_ignore_ascii_case("unnumbered") {
            Ok(PageLabel::Unnumbered(ordinal))
        } else {
            text.parse()
        }
    }

    pub fn bibcode_fields(&self) -> Result<NormalizedPage, LabelError> {
        let unsupported = || LabelError::UnsupportedForBibcode(*self);
        let page = |n: u32| {
            if (1..=MAX_BIBCODE_PAGE).contains(&n) {
                Ok(n as u16)
            } else {
                Err(unsupported())
            }
        };
        match *self {
            PageLabel::Arabic(n) => Ok(NormalizedPage {
                qualifier: Qualifier::None,
                page: page(n)?,
                sublabel: None,
            }),
            PageLabel::LetterPrefixed { letter, number } if is_page_designator(letter) => {
                Ok(NormalizedPage {
                    qualifier: Qualifier::PageDesignator(letter),
                    page: page(number)?,
                    sublabel: None,
                })
            }
            PageLabel::Composite { major, minor } => Ok(NormalizedPage {
                qualifier: Qualifier::None,
                page: page(major)?,
                sublabel: Some(minor),
            }),
            _ => Err(unsupported()),
        }
    }

    /// The next label of the same kind, if the kind has an order.
    pub fn successor(&self) -> Option<PageLabel> {
        match *self {
            PageLabel::Arabic(n) => n.checked_add(1).map(PageLabel::Arabic),
            PageLabel::Roman(n) if n < MAX_ROMAN => Some(PageLabel::Roman(n + 1)),
            PageLabel::LetterPrefixed { letter, number } => number
                .checked_add(1)
                .map(|number| PageLabel::LetterPrefixed { letter, number }),
            PageLabel::Composite { major, minor } => minor
                .checked_add(1)
                .map(|minor| PageLabel::Composite { major, minor }),
            _ => None,
        }
    }

    pub fn has_successor(&self) -> bool {
        !matches!(self, PageLabel::Plate(_) | PageLabel::Unnumbered(_))
    }
}

impl fmt::Display for PageLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PageLabel::Arabic(n) => write!(f, "{n}"),
            PageLabel::Roman(n) => f.write_str(&to_roman(*n).to_ascii_lowercase()),
            PageLabel::LetterPrefixed { letter, number } => write!(f, "{letter}:{number}"),
            PageLabel::Composite { major, minor } => write!(f, "{major}.{minor}"),
            PageLabel::Plate(n) => write!(f, "plate {n}"),
            PageLabel::Unnumbered(n) => write!(f, "unnumbered {n}"),
        }
    }
}

impl FromStr for PageLabel {
    type Err = LabelError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        if text.is_empty() || text.trim() != text {
            return Err(LabelError::Blank(text.to_string()));
        }
        let fail = || LabelError::Unparseable(text.to_string());

        if let Some(n) = decimal(text) {
            return Ok(PageLabel::Arabic(n));
        }
        if let Some((major, minor)) = text.split_once('.') {
            return match (decimal(major), decimal(minor)) {
                (Some(major), Some(minor)) => Ok(PageLabel::Composite { major, minor }),
                _ => Err(fail()),
            };
        }
        if let Some(rest) = keyword(text, "plate") {
            return decimal(rest).map(PageLabel::Plate).ok_or_else(fail);
        }
        if let Some(rest) = keyword(text, "unnumbered") {
            return decimal(rest).map(PageLabel::Unnumbered).ok_or_else(fail);
        }
        let mut chars = text.chars();
        let first = chars.next().ok_or_else(fail)?;
        if first.is_ascii_uppercase() && text.len() > 1 {
            let rest = chars.as_str();
            let digits = rest.strip_prefix(':').unwrap_or(rest);
            if let Some(number) = decimal(digits) {
                return Ok(PageLabel::LetterPrefixed {
                    letter: first,
                    number,
                });
            }
        }
        parse_roman(text).map(PageLabel::Roman).ok_or_else(fail)
    }
}

impl Serialize for PageLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PageLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Canonical positive decimal: digits only, no leading zero.
fn decimal(s: &str) -> Option<u32> {
    if s.is_empty() || s.starts_with('0') || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

fn keyword<'a>(text: &'a str, word: &str) -> Option<&'a str> {
    let head = text.get(..word.len())?;
    if !head.eq_ignore_ascii_case(word) {
        return None;
    }
    text[word.len()..].strip_prefix(' ')
}

const ROMAN_STEPS: [(u32, &str); 13] = [
    (1000, "M"),
    (900, "CM"),
    (500, "D"),
    (400, "CD"),
    (100, "C"),
    (90, "XC"),
    (50, "L"),
    (40, "XL"),
    (10, "X"),
    (9, "IX"),
    (5, "V"),
    (4, "IV"),
    (1, "I"),
];

/// Uppercase canonical numeral for `1..=3999`.
pub fn to_roman(mut n: u32) -> String {
    let mut out = String::new();
    for &(value, glyph) in &ROMAN_STEPS {
        while n >= value {
            out.push_str(glyph);
            n -= value;
        }
    }
    out
}

/// Value of a canonical roman numeral in either case (mixed case rejected).
pub fn parse_roman(text: &str) -> Option<u32> {
    let upper = text.to_ascii_uppercase();
    if text != upper && text != text.to_ascii_lowercase() {
        return None;
    }
    let mut rest = upper.as_str();
    let mut total = 0;
    for &(value, glyph) in &ROMAN_STEPS {
        while let Some(tail) = rest.strip_prefix(glyph) {
            total += value;
            rest = tail;
        }
    }
    if !rest.is_empty() || total == 0 || total > MAX_ROMAN || to_roman(total) != upper {
        return None;
    }
    Some(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(s: &str) -> Result<NormalizedPage, LabelError> {
        normalize_page_label(&RawPageLabel::new(s).unwrap())
    }

    #[test]
    fn raw_label_rejects_padding() {
        assert!(RawPageLabel::new("").is_err());
        assert!(RawPageLabel::new(" 4").is_err());
        assert!(RawPageLabel::new("4 ").is_err());
        assert!(RawPageLabel::new("D:4").is_ok());
    }

    #[test]
    fn normalizes_letter_designations() {
        let d305 = norm("D:305").unwrap();
        assert_eq!(d305.qualifier, Qualifier::PageDesignator('D'));
        assert_eq!(d305.page, 305);
        let d4 = norm("D4").unwrap();
        assert_eq!((d4.qualifier, d4.page), (Qualifier::PageDesignator('D'), 4));
    }

    #[test]
    fn normalizes_composite_to_leading_component() {
        let n = norm("1.1").unwrap();
        assert_eq!(
            n,
            NormalizedPage {
                qualifier: Qualifier::None,
                page: 1,
                sublabel: Some(1)
            }
        );
        assert_eq!(norm("1.8").unwrap().sublabel, Some(8));
    }

    #[test]
    fn plain_arabic_passes_through() {
        assert_eq!(
            norm("305").unwrap(),
            NormalizedPage {
                qualifier: Qualifier::None,
                page: 305,
                sublabel: None
            }
        );
    }

    #[test]
    fn roman_is_unsupported_for_bibcodes() {
        assert_eq!("xiv".parse::<PageLabel>().unwrap(), PageLabel::Roman(14));
        assert_eq!(
            norm("xiv").unwrap_err(),
            LabelError::UnsupportedForBibcode(PageLabel::Roman(14))
        );
    }

    #[test]
    fn non_designator_letters_and_big_pages_are_unsupported() {
        assert_eq!(norm("L4").unwrap_err().code(), "UnsupportedForBibcode");
        assert_eq!(norm("R4").unwrap_err().code(), "UnsupportedForBibcode");
        assert_eq!(norm("10000").unwrap_err().code(), "UnsupportedForBibcode");
        assert_eq!(norm("plate 3").unwrap_err().code(), "UnsupportedForBibcode");
    }

    #[test]
    fn unparseable_labels() {
        for bad in [
            "0", "007", "d4", "D:", "1.", ".1", "1.2.3", "iiii", "vx", "Xi", "plate", "plate x",
            "?",
        ] {
            assert_eq!(
                bad.parse::<PageLabel>().unwrap_err().code(),
                "Unparseable",
                "{bad}"
            );
        }
    }

    #[test]
    fn single_letters_read_as_roman() {
        assert_eq!("D".parse::<PageLabel>().unwrap(), PageLabel::Roman(500));
        assert_eq!("i".parse::<PageLabel>().unwrap(), PageLabel::Roman(1));
        assert_eq!(
            "MMMCMXCIX".parse::<PageLabel>().unwrap(),
            PageLabel::Roman(3999)
        );
    }

    #[test]
    fn keywords_take_ordinals() {
        assert_eq!("plate 3".parse::<PageLabel>().unwrap(), PageLabel::Plate(3));
        assert_eq!(
            "Unnumbered 12".parse::<PageLabel>().unwrap(),
            PageLabel::Unnumbered(12)
        );
        assert_eq!(
            PageLabel::parse_for_scan("plate", 9).unwrap(),
            PageLabel::Plate(9)
        );
        assert_eq!(
            PageLabel::parse_for_scan("unnumbered", 2).unwrap(),
            PageLabel::Unnumbered(2)
        );
        assert_eq!(
            PageLabel::parse_for_scan("17", 2).unwrap(),
            PageLabel::Arabic(17)
        );
    }

    #[test]
    fn display_is_canonical_and_reparses() {
        for text in ["305", "xiv", "D:305", "1.8", "plate 3", "unnumbered 4"] {
            let label: PageLabel = text.parse().unwrap();
            assert_eq!(label.to_string(), text);
        }
        assert_eq!("D4".parse::<PageLabel>().unwrap().to_string(), "D:4");
        assert_eq!("XIV".parse::<PageLabel>().unwrap().to_string(), "xiv");
    }

    #[test]
    fn successors() {
        assert_eq!(
            PageLabel::Arabic(41).successor(),
            Some(PageLabel::Arabic(42))
        );
        assert_eq!(PageLabel::Roman(3).successor(), Some(PageLabel::Roman(4)));
        assert_eq!(PageLabel::Roman(3999).successor(), None);
        let d17: PageLabel = "D:17".parse().unwrap();
        assert_eq!(d17.successor().unwrap().to_string(), "D:18");
        assert_eq!(PageLabel::Plate(3).successor(), None);
    }
}
