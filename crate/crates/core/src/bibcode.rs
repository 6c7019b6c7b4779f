//! 19-character bibliographic codes.
//!
//! Layout, by character position:
//!
//! ```text
//! 0    4     9    13 14   18
//! yyyy jjjjj vvvv m  pppp a
//! ```
//!
//! The stem is left-aligned, volume and page are right-aligned, and every
//! unused position is filled with `.`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const BIBCODE_LEN: usize = 19;

const YEAR: (usize, usize) = (0, 4);
const STEM: (usize, usize) = (4, 9);
const VOLUME: (usize, usize) = (9, 13);
const QUALIFIER: (usize, usize) = (13, 14);
const PAGE: (usize, usize) = (14, 18);
const AUTHOR: (usize, usize) = (18, 19);

const MAX_FIELD_NUMBER: u16 = 9999;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum VolumeField {
    Numeric(u16),
    /// Four lowercase letters naming a publication type, e.g. `conf`.
    TypeCode(String),
}

impl fmt::Display for VolumeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VolumeField::Numeric(n) => write!(f, "{n}"),
            VolumeField::TypeCode(code) => f.write_str(code),
        }
    }
}

impl FromStr for VolumeField {
    type Err = BibcodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let field = if s.chars().all(|c| c.is_ascii_digit()) && !s.is_empty() {
            VolumeField::Numeric(
                s.parse()
                    .map_err(|_| invalid(DiagnosticCode::InvalidVolume, s))?,
            )
        } else {
            VolumeField::TypeCode(s.to_string())
        };
        check_volume(&field)?;
        Ok(field)
    }
}

impl Serialize for VolumeField {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for VolumeField {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(u64),
            Text(String),
        }
        let text = match Raw::deserialize(deserializer)? {
            Raw::Number(n) => n.to_string(),
            Raw::Text(s) => s,
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// The single-character `m` position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Qualifier {
    None,
    /// `L`
    Letter,
    /// `A`..=`P` except `L`: a letter printed in front of page numbers.
    PageDesignator(char),
    /// `Q`..=`Z`: distinguishes otherwise identical codes.
    Dedup(char),
}

impl Qualifier {
    pub fn as_char(self) -> char {
        match self {
            Qualifier::None => '.',
            Qualifier::Letter => 'L',
            Qualifier::PageDesignator(c) | Qualifier::Dedup(c) => c,
        }
    }

    pub fn from_char(c: char) -> Option<Qualifier> {
        match c {
            '.' => Some(Qualifier::None),
            'L' => Some(Qualifier::Letter),
            c if is_page_designator(c) => Some(Qualifier::PageDesignator(c)),
            'Q'..='Z' => Some(Qualifier::Dedup(c)),
            _ => None,
        }
    }
}

/// Letters usable as printed page prefixes in the qualifier slot.
pub fn is_page_designator(c: char) -> bool {
    matches!(c, 'A'..='P') && c != 'L'
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AuthorInitial {
    Initial(char),
    Unknown,
}

impl AuthorInitial {
    /// Initial for a first author's last name: the first character after
    /// folding to ASCII, uppercased. Names that fold to something starting
    /// with a non-letter yield `Unknown`.
    pub fn from_last_name(last_name: &str) -> AuthorInitial {
        let folded = deunicode::deunicode(last_name.trim());
        match folded.chars().next() {
            Some(c) if c.is_ascii_alphabetic() => AuthorInitial::Initial(c.to_ascii_uppercase()),
            _ => AuthorInitial::Unknown,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            AuthorInitial::Initial(c) => c,
            AuthorInitial::Unknown => '.',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bibcode {
    pub year: u16,
    /// Stored without padding.
    pub bibstem: String,
    pub volume: VolumeField,
    pub qualifier: Qualifier,
    pub page: u16,
    pub author_initial: AuthorInitial,
}

impl Bibcode {
    pub fn validate(&self) -> Result<(), BibcodeError> {
        if !(1000..=9999).contains(&self.year) {
            return Err(invalid(DiagnosticCode::InvalidYear, self.year));
        }
        if !is_valid_stem(&self.bibstem) {
            return Err(invalid(DiagnosticCode::InvalidBibstem, &self.bibstem));
        }
        check_volume(&self.volume)?;
        let qualifier_ok = match self.qualifier {
            Qualifier::None | Qualifier::Letter => true,
            Qualifier::PageDesignator(c) => is_page_designator(c),
            Qualifier::Dedup(c) => matches!(c, 'Q'..='Z'),
        };
        if !qualifier_ok {
            return Err(invalid(
                DiagnosticCode::InvalidQualifier,
                format!("{:?}", self.qualifier),
            ));
        }
        if !(1..=MAX_FIELD_NUMBER).contains(&self.page) {
            return Err(invalid(DiagnosticCode::InvalidPage, self.page));
        }
        if let AuthorInitial::Initial(c) = self.author_initial {
            if !c.is_ascii_uppercase() {
                return Err(invalid(DiagnosticCode::InvalidAuthorChar, c));
            }
        }
        Ok(())
    }

    pub fn with_qualifier(&self, qualifier: Qualifier) -> Bibcode {
        Bibcode {
            qualifier,
            ..self.clone()
        }
    }
}

impl FromStr for Bibcode {
    type Err = BibcodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_bibcode(s)
    }
}

impl Serialize for Bibcode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let code = format_bibcode(self).map_err(serde::ser::Error::custom)?;
        serializer.serialize_str(&code)
    }
}

impl<'de> Deserialize<'de> for Bibcode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_bibcode(&s).map_err(serde::de::Error::custom)
    }
}

/// Stable diagnostic codes reported by [`validate_bibcode_string`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiagnosticCode {
    WrongLength,
    InvalidYear,
    InvalidBibstem,
    InvalidVolume,
    InvalidQualifier,
    InvalidPage,
    InvalidAuthorChar,
}

impl DiagnosticCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticCode::WrongLength => "WrongLength",
            DiagnosticCode::InvalidYear => "InvalidYear",
            DiagnosticCode::InvalidBibstem => "InvalidBibstem",
            DiagnosticCode::InvalidVolume => "InvalidVolume",
            DiagnosticCode::InvalidQualifier => "InvalidQualifier",
            DiagnosticCode::InvalidPage => "InvalidPage",
            DiagnosticCode::InvalidAuthorChar => "InvalidAuthorChar",
        }
    }
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One violated rule, located by character positions (`start..end`, end
/// exclusive).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    pub start: usize,
    pub end: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.end > self.start {
            write!(
                f,
                "{} at chars {}-{}: {}",
                self.code,
                self.start,
                self.end - 1,
                self.message
            )
        } else {
            write!(f, "{}: {}", self.code, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BibcodeError {
    #[error("{0}")]
    Malformed(Diagnostic),
    #[error("{code}: {value:?} does not fit the bibcode field")]
    InvalidField { code: DiagnosticCode, value: String },
    #[error(
        "code collides and its qualifier slot already holds {0:?}; pagination must resolve it"
    )]
    QualifierOccupied(Qualifier),
    #[error("all dedup qualifiers Q-Z are taken for {0}")]
    DedupExhausted(String),
}

impl BibcodeError {
    pub fn code(&self) -> &'static str {
        match self {
            BibcodeError::Malformed(d) => d.code.as_str(),
            BibcodeError::InvalidField { code, .. } => code.as_str(),
            BibcodeError::QualifierOccupied(_) => "QualifierOccupied",
            BibcodeError::DedupExhausted(_) => "DedupExhausted",
        }
    }
}

fn invalid(code: DiagnosticCode, value: impl fmt::Display) -> BibcodeError {
    BibcodeError::InvalidField {
        code,
        value: value.to_string(),
    }
}

fn is_stem_char(c: char) -> bool {
    c.is_ascii_alphabetic() || matches!(c, '&' | '+' | '-')
}

pub fn is_valid_stem(stem: &str) -> bool {
    (1..=5).contains(&stem.chars().count()) && stem.chars().all(is_stem_char)
}

fn check_volume(volume: &VolumeField) -> Result<(), BibcodeError> {
    let ok = match volume {
        VolumeField::Numeric(n) => (1..=MAX_FIELD_NUMBER).contains(n),
        VolumeField::TypeCode(code) => {
            code.len() == 4 && code.chars().all(|c| c.is_ascii_lowercase())
        }
    };
    if ok {
        Ok(())
    } else {
        Err(invalid(DiagnosticCode::InvalidVolume, volume))
    }
}

pub fn format_bibcode(b: &Bibcode) -> Result<String, BibcodeError> {
    b.validate()?;
    let mut out = String::with_capacity(BIBCODE_LEN);
    out.push_str(&b.year.to_string());
    out.push_str(&format!("{:.<5}", b.bibstem));
    out.push_str(&format!("{:.>4}", b.volume.to_string()));
    out.push(b.qualifier.as_char());
    out.push_str(&format!("{:.>4}", b.page));
    out.push(b.author_initial.as_char());
    debug_assert_eq!(out.len(), BIBCODE_LEN);
    Ok(out)
}

pub fn parse_bibcode(s: &str) -> Result<Bibcode, BibcodeError> {
    let chars: Vec<char> = s.chars().collect();
    if chars.len() != BIBCODE_LEN {
        return Err(BibcodeError::Malformed(length_diagnostic(chars.len())));
    }
    let fields = Fields::read(&chars);
    Ok(Bibcode {
        year: fields.year.map_err(BibcodeError::Malformed)?,
        bibstem: fields.stem.map_err(BibcodeError::Malformed)?,
        volume: fields.volume.map_err(BibcodeError::Malformed)?,
        qualifier: fields.qualifier.map_err(BibcodeError::Malformed)?,
        page: fields.page.map_err(BibcodeError::Malformed)?,
        author_initial: fields.author.map_err(BibcodeError::Malformed)?,
    })
}

/// Every rule `s` violates. Empty exactly when [`parse_bibcode`] succeeds.
pub fn validate_bibcode_string(s: &str) -> Vec<Diagnostic> {
    let chars: Vec<char> = s.chars().collect();
    if chars.len() != BIBCODE_LEN {
        return vec![length_diagnostic(chars.len())];
    }
    let fields = Fields::read(&chars);
    [
        fields.year.err(),
        fields.stem.err(),
        fields.volume.err(),
        fields.qualifier.err(),
        fields.page.err(),
        fields.author.err(),
    ]
    .into_iter()
    .flatten()
    .collect()
}

fn length_diagnostic(len: usize) -> Diagnostic {
    Diagnostic {
        code: DiagnosticCode::WrongLength,
        start: 0,
        end: len,
        message: format!("expected {BIBCODE_LEN} characters, found {len}"),
    }
}

/// Per-field parse results over a 19-character input.
struct Fields {
    year: Result<u16, Diagnostic>,
    stem: Result<String, Diagnostic>,
    volume: Result<VolumeField, Diagnostic>,
    qualifier: Result<Qualifier, Diagnostic>,
    page: Result<u16, Diagnostic>,
    author: Result<AuthorInitial, Diagnostic>,
}

impl Fields {
    fn read(chars: &[char]) -> Fields {
        let slice = |(a, b): (usize, usize)| &chars[a..b];
        Fields {
            year: read_year(slice(YEAR)),
            stem: read_stem(slice(STEM)),
            volume: read_volume(slice(VOLUME)),
            qualifier: read_qualifier(chars[QUALIFIER.0]),
            page: read_right_aligned(slice(PAGE))
                .ok_or_else(|| diag(DiagnosticCode::InvalidPage, PAGE, slice(PAGE), "page")),
            author: read_author(chars[AUTHOR.0]),
        }
    }
}

fn diag(code: DiagnosticCode, span: (usize, usize), text: &[char], what: &str) -> Diagnostic {
    let text: String = text.iter().collect();
    Diagnostic {
        code,
        start: span.0,
        end: span.1,
        message: format!("invalid {what} field {text:?}"),
    }
}

fn read_year(text: &[char]) -> Result<u16, Diagnostic> {
    let fail = || diag(DiagnosticCode::InvalidYear, YEAR, text, "year");
    if !text.iter().all(char::is_ascii_digit) {
        return Err(fail());
    }
    let year: u16 = text
        .iter()
        .collect::<String>()
        .parse()
        .map_err(|_| fail())?;
    if year < 1000 {
        return Err(fail());
    }
    Ok(year)
}

fn read_stem(text: &[char]) -> Result<String, Diagnostic> {
    let stem: String = text
        .iter()
        .collect::<String>()
        .trim_end_matches('.')
        .to_string();
    if is_valid_stem(&stem) {
        Ok(stem)
    } else {
        Err(diag(DiagnosticCode::InvalidBibstem, STEM, text, "bibstem"))
    }
}

fn read_volume(text: &[char]) -> Result<VolumeField, Diagnostic> {
    if text.iter().all(char::is_ascii_lowercase) {
        return Ok(VolumeField::TypeCode(text.iter().collect()));
    }
    read_right_aligned(text)
        .map(VolumeField::Numeric)
        .ok_or_else(|| diag(DiagnosticCode::InvalidVolume, VOLUME, text, "volume"))
}

/// Dots followed by a canonical decimal number in 1..=9999.
fn read_right_aligned(text: &[char]) -> Option<u16> {
    let digits = &text[text.iter().take_while(|&&c| c == '.').count()..];
    if digits.is_empty() || digits[0] == '0' || !digits.iter().all(char::is_ascii_digit) {
        return None;
    }
    digits.iter().collect::<String>().parse().ok()
}

fn read_qualifier(c: char) -> Result<Qualifier, Diagnostic> {
    Qualifier::from_char(c).ok_or_else(|| {
        diag(
            DiagnosticCode::InvalidQualifier,
            QUALIFIER,
            &[c],
            "qualifier",
        )
    })
}

fn read_author(c: char) -> Result<AuthorInitial, Diagnostic> {
    match c {
        '.' => Ok(AuthorInitial::Unknown),
        'A'..='Z' => Ok(AuthorInitial::Initial(c)),
        _ => Err(diag(
            DiagnosticCode::InvalidAuthorChar,
            AUTHOR,
            &[c],
            "author initial",
        )),
    }
}

/// Returns `candidate` unchanged when its code is free, otherwise the
/// candidate carrying the first free dedup letter in `Q..=Z`.
pub fn assign_dedup_qualifier(
    existing: &HashSet<String>,
    candidate: &Bibcode,
) -> Result<Bibcode, BibcodeError> {
    let code = format_bibcode(candidate)?;
    if !existing.contains(&code) {
        return Ok(candidate.clone());
    }
    match candidate.qualifier {
        Qualifier::None | Qualifier::Dedup(_) => {}
        occupied => return Err(BibcodeError::QualifierOccupied(occupied)),
    }
    for letter in 'Q'..='Z' {
        let next = candidate.with_qualifier(Qualifier::Dedup(letter));
        if !existing.contains(&format_bibcode(&next)?) {
            return Ok(next);
        }
    }
    Err(BibcodeError::DedupExhausted(code))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn yale() -> Bibcode {
        Bibcode {
            year: 1910,
            bibstem: "YalRY".into(),
            volume: VolumeField::Numeric(1),
            qualifier: Qualifier::None,
            page: 1,
            author_initial: AuthorInitial::Initial('E'),
        }
    }

    fn pusno() -> Bibcode {
        Bibcode {
            year: 1906,
            bibstem: "PUSNO".into(),
            volume: VolumeField::Numeric(4),
            qualifier: Qualifier::PageDesignator('D'),
            page: 1,
            author_initial: AuthorInitial::Unknown,
        }
    }

    #[test]
    fn formats_published_examples() {
        assert_eq!(format_bibcode(&yale()).unwrap(), "1910YalRY...1....1E");
        assert_eq!(format_bibcode(&pusno()).unwrap(), "1906PUSNO...4D...1.");
    }

    #[test]
    fn formats_maximal_fields() {
        let b = Bibcode {
            year: 2000,
            bibstem: "A".into(),
            volume: VolumeField::Numeric(9999),
            qualifier: Qualifier::None,
            page: 9999,
            author_initial: AuthorInitial::Initial('A'),
        };
        assert_eq!(format_bibcode(&b).unwrap(), "2000A....9999.9999A");
    }

    #[test]
    fn formats_type_code_volume() {
        let b = Bibcode {
            volume: VolumeField::TypeCode("conf".into()),
            ..yale()
        };
        let code = format_bibcode(&b).unwrap();
        assert_eq!(code, "1910YalRYconf....1E");
        assert_eq!(parse_bibcode(&code).unwrap(), b);
    }

    #[test]
    fn rejects_out_of_range_fields() {
        let cases = [
            (
                Bibcode {
                    year: 999,
                    ..yale()
                },
                "InvalidYear",
            ),
            (
                Bibcode {
                    bibstem: "Yal.R".into(),
                    ..yale()
                },
                "InvalidBibstem",
            ),
            (
                Bibcode {
                    bibstem: "".into(),
                    ..yale()
                },
                "InvalidBibstem",
            ),
            (
                Bibcode {
                    bibstem: "TooLong".into(),
                    ..yale()
                },
                "InvalidBibstem",
            ),
            (
                Bibcode {
                    volume: VolumeField::Numeric(0),
                    ..yale()
                },
                "InvalidVolume",
            ),
            (
                Bibcode {
                    volume: VolumeField::TypeCode("Conf".into()),
                    ..yale()
                },
                "InvalidVolume",
            ),
            (
                Bibcode {
                    qualifier: Qualifier::PageDesignator('L'),
                    ..yale()
                },
                "InvalidQualifier",
            ),
            (
                Bibcode {
                    qualifier: Qualifier::PageDesignator('Q'),
                    ..yale()
                },
                "InvalidQualifier",
            ),
            (
                Bibcode {
                    qualifier: Qualifier::Dedup('P'),
                    ..yale()
                },
                "InvalidQualifier",
            ),
            (
                Bibcode {
                    page: 10000,
                    ..yale()
                },
                "InvalidPage",
            ),
            (
                Bibcode {
                    author_initial: AuthorInitial::Initial('e'),
                    ..yale()
                },
                "InvalidAuthorChar",
            ),
        ];
        for (b, code) in cases {
            assert_eq!(format_bibcode(&b).unwrap_err().code(), code, "{b:?}");
        }
    }

    #[test]
    fn parses_published_examples() {
        assert_eq!(parse_bibcode("1910YalRY...1....1E").unwrap(), yale());
        assert_eq!(parse_bibcode("1906PUSNO...4D...1.").unwrap(), pusno());
    }

    #[test]
    fn parse_rejects_short_input() {
        let err = parse_bibcode("1910YalRY...1....1").unwrap_err();
        assert_eq!(err.code(), "WrongLength");
    }

    #[test]
    fn parse_rejects_embedded_dots_and_leading_zeros() {
        assert_eq!(
            parse_bibcode("1910Ya.RY...1....1E").unwrap_err().code(),
            "InvalidBibstem"
        );
        assert_eq!(
            parse_bibcode("1910YalRY..01....1E").unwrap_err().code(),
            "InvalidVolume"
        );
        assert_eq!(
            parse_bibcode("1910YalRY.1.1....1E").unwrap_err().code(),
            "InvalidVolume"
        );
        assert_eq!(
            parse_bibcode("1910YalRY...1.....E").unwrap_err().code(),
            "InvalidPage"
        );
        assert_eq!(
            parse_bibcode("1910YalRY...1a...1E").unwrap_err().code(),
            "InvalidQualifier"
        );
        assert_eq!(
            parse_bibcode("1910YalRY...1....1e").unwrap_err().code(),
            "InvalidAuthorChar"
        );
        assert_eq!(
            parse_bibcode("0910YalRY...1....1E").unwrap_err().code(),
            "InvalidYear"
        );
    }

    #[test]
    fn parse_classifies_qualifiers() {
        let q = |c: char| {
            parse_bibcode(&format!("1910YalRY...1{c}...1E"))
                .unwrap()
                .qualifier
        };
        assert_eq!(q('.'), Qualifier::None);
        assert_eq!(q('L'), Qualifier::Letter);
        assert_eq!(q('A'), Qualifier::PageDesignator('A'));
        assert_eq!(q('P'), Qualifier::PageDesignator('P'));
        assert_eq!(q('Q'), Qualifier::Dedup('Q'));
        assert_eq!(q('Z'), Qualifier::Dedup('Z'));
    }

    #[test]
    fn validate_reports_each_field() {
        assert!(validate_bibcode_string("1910YalRY...1....1E").is_empty());

        let d = validate_bibcode_string("191OYalRY...1....1E");
        assert_eq!(d.len(), 1);
        assert_eq!(
            (d[0].code, d[0].start, d[0].end),
            (DiagnosticCode::InvalidYear, 0, 4)
        );
        assert_eq!(
            d[0].to_string(),
            "InvalidYear at chars 0-3: invalid year field \"191O\""
        );

        let d = validate_bibcode_string("");
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, DiagnosticCode::WrongLength);

        let codes: Vec<_> = validate_bibcode_string("x910Y.lRY..x1#...01e")
            .into_iter()
            .map(|d| d.code)
            .collect();
        assert_eq!(codes, vec![DiagnosticCode::WrongLength]);

        let codes: Vec<_> = validate_bibcode_string("x910Y.lRY..x1#..01e")
            .into_iter()
            .map(|d| d.code)
            .collect();
        assert_eq!(
            codes,
            vec![
                DiagnosticCode::InvalidYear,
                DiagnosticCode::InvalidBibstem,
                DiagnosticCode::InvalidVolume,
                DiagnosticCode::InvalidQualifier,
                DiagnosticCode::InvalidPage,
                DiagnosticCode::InvalidAuthorChar,
            ]
        );
    }

    #[test]
    fn non_ascii_length_counts_characters() {
        let d = validate_bibcode_string("1910YälRY...1....1E");
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, DiagnosticCode::InvalidBibstem);
    }

    #[test]
    fn dedup_no_collision_returns_candidate() {
        let existing = HashSet::new();
        assert_eq!(assign_dedup_qualifier(&existing, &yale()).unwrap(), yale());
    }

    #[test]
    fn dedup_picks_q_first() {
        let existing: HashSet<String> = [format_bibcode(&yale()).unwrap()].into();
        let out = assign_dedup_qualifier(&existing, &yale()).unwrap();
        assert_eq!(out.qualifier, Qualifier::Dedup('Q'));
        assert_eq!(format_bibcode(&out).unwrap(), "1910YalRY...1Q...1E");
    }

    #[test]
    fn dedup_exhausts_after_ten_letters() {
        let mut existing: HashSet<String> = [format_bibcode(&yale()).unwrap()].into();
        for letter in 'Q'..='Z' {
            existing
                .insert(format_bibcode(&yale().with_qualifier(Qualifier::Dedup(letter))).unwrap());
        }
        assert_eq!(existing.len(), 11);
        let err = assign_dedup_qualifier(&existing, &yale()).unwrap_err();
        assert_eq!(err.code(), "DedupExhausted");
    }

    #[test]
    fn dedup_refuses_occupied_qualifier() {
        let existing: HashSet<String> = [format_bibcode(&pusno()).unwrap()].into();
        let err = assign_dedup_qualifier(&existing, &pusno()).unwrap_err();
        assert_eq!(
            err,
            BibcodeError::QualifierOccupied(Qualifier::PageDesignator('D'))
        );
    }

    #[test]
    fn author_initial_folds_diacritics() {
        assert_eq!(
            AuthorInitial::from_last_name("Elkin"),
            AuthorInitial::Initial('E')
        );
        assert_eq!(
            AuthorInitial::from_last_name("Ångström"),
            AuthorInitial::Initial('A')
        );
        assert_eq!(
            AuthorInitial::from_last_name("Øresund"),
            AuthorInitial::Initial('O')
        );
        assert_eq!(
            AuthorInitial::from_last_name("  de Sitter"),
            AuthorInitial::Initial('D')
        );
        assert_eq!(
            AuthorInitial::from_last_name("'t Hooft"),
            AuthorInitial::Unknown
        );
        assert_eq!(AuthorInitial::from_last_name(""), AuthorInitial::Unknown);
    }

    #[test]
    fn serde_uses_the_code_string() {
        let json = serde_json::to_string(&yale()).unwrap();
        assert_eq!(json, "\"1910YalRY...1....1E\"");
        let back: Bibcode = serde_json::from_str(&json).unwrap();
        assert_eq!(back, yale());
    }
}
