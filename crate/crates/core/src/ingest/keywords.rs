use serde::{Deserialize, Serialize};

use super::IngestError;

/// A named list of lowercase keyword phrases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordGroup {
    pub id: String,
    pub name: String,
    pub keywords: Vec<String>,
}

impl KeywordGroup {
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.id.trim().is_empty() {
            return Err(IngestError::Config("keyword group with empty id".into()));
        }
        if self.keywords.is_empty() || self.keywords.iter().any(|k| k.trim().is_empty()) {
            return Err(IngestError::Config(format!("group {:?} has an empty keyword list or keyword", self.id)));
        }
        Ok(())
    }

    /// Number of case-insensitive whole-phrase keyword occurrences in `text`.
    pub fn count_matches(&self, text: &str) -> usize {
        let text_words = words(text);
        self.keywords
            .iter()
            .map(|k| {
                let phrase = words(k);
                if phrase.is_empty() || phrase.len() > text_words.len() {
                    return 0;
                }
                text_words.windows(phrase.len()).filter(|w| *w == phrase.as_slice()).count()
            })
            .sum()
    }
}

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric() && c != '\'')
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Id of the group with the most keyword hits; first configured group wins ties.
pub fn assign_keyword_group(text: &str, groups: &[KeywordGroup]) -> Option<String> {
    let mut best: Option<(&KeywordGroup, usize)> = None;
    for g in groups {
        let n = g.count_matches(text);
        if n > 0 && best.is_none_or(|(_, b)| n > b) {
            best = Some((g, n));
        }
    }
    best.map(|(g, _)| g.id.clone())
}
