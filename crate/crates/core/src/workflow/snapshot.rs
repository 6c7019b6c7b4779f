//! Derived per-volume snapshot files. The event log stays authoritative;
//! these are regenerated after every accepted mutation.

use std::collections::BTreeMap;

use crate::article::{join_authors, split_authors, ArticleDraft};
use crate::bibcode::format_bibcode;
use crate::tsv;

use super::Volume;

pub const VOLUME_FILE: &str = "volume.json";
pub const PAGES_FILE: &str = "pages.tsv";
pub const ARTICLES_FILE: &str = "articles.tsv";
pub const ABSTRACTS_DIR: &str = "abstracts";

const ARTICLES_HEADER: &str =
    "article_id\tbibcode\ttitle\tauthors\tfirst_page\tlast_page\tabstract_ref\n";

/// Relative path to file contents.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VolumeSnapshot {
    pub files: BTreeMap<String, String>,
}

impl VolumeSnapshot {
    pub fn of(volume: &Volume) -> VolumeSnapshot {
        let mut files = BTreeMap::new();
        let mut summary =
            serde_json::to_string_pretty(&volume.summary()).expect("summary serializes");
        summary.push('\n');
        files.insert(VOLUME_FILE.to_string(), summary);
        files.insert(PAGES_FILE.to_string(), volume.pages().to_pages_tsv());

        let mut articles = String::from(ARTICLES_HEADER);
        for article in volume.articles() {
            let abstract_ref = match &article.abstract_text {
                Some(text) => {
                    let path = format!("{ABSTRACTS_DIR}/{}.txt", article.article_id);
                    files.insert(path.clone(), text.clone());
                    path
                }
                None => String::new(),
            };
            let row = [
                article.article_id.clone(),
                article
                    .bibcode
                    .as_ref()
                    .map(|b| format_bibcode(b).expect("stored bibcodes are valid"))
                    .unwrap_or_default(),
                article.title.clone(),
                join_authors(&article.authors),
                article.first_page.to_string(),
                article.last_page.to_string(),
                abstract_ref,
            ];
            articles.push_str(&tsv::join(&row));
            articles.push('\n');
        }
        files.insert(ARTICLES_FILE.to_string(), articles);
        VolumeSnapshot { files }
    }

    pub fn get(&self, path: &str) -> Option<&str> {
        self.files.get(path).map(String::as_str)
    }
}

/// One `articles.tsv` row read back as a draft. The abstract is left as its
/// reference; callers resolve it against the directory the file came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArticleRow {
    pub article_id: String,
    pub bibcode: Option<String>,
    pub draft: ArticleDraft,
    pub abstract_ref: Option<String>,
}

pub fn parse_articles_tsv(text: &str) -> Result<Vec<ArticleRow>, String> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 && line.starts_with("article_id\t") || line.is_empty() {
            continue;
        }
        let cols: Vec<String> = line
            .split('\t')
            .map(|c| tsv::unescape(c).ok_or_else(|| format!("line {}: bad escape in {c:?}", i + 1)))
            .collect::<Result<_, _>>()?;
        if cols.len() != 7 {
            return Err(format!(
                "line {}: expected 7 columns, found {}",
                i + 1,
                cols.len()
            ));
        }
        let opt = |s: &String| Some(s.clone()).filter(|s| !s.is_empty());
        rows.push(ArticleRow {
            article_id: cols[0].clone(),
            bibcode: opt(&cols[1]),
            draft: ArticleDraft {
                title: cols[2].clone(),
                authors: split_authors(&cols[3]),
                first_page: cols[4].clone(),
                last_page: cols[5].clone(),
                abstract_text: None,
            },
            abstract_ref: opt(&cols[6]),
        });
    }
    Ok(rows)
}
