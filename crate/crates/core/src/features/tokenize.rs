use crate::ingest::{EMAIL_PLACEHOLDER, URL_PLACEHOLDER, USER_PLACEHOLDER};
use crate::par;

const PLACEHOLDERS: [(&str, &str); 3] =
    [(URL_PLACEHOLDER, "url_tok"), (EMAIL_PLACEHOLDER, "email_tok"), (USER_PLACEHOLDER, "user_tok")];

/// Lowercased alphanumeric tokens of length ≥ 2 that are not pure digits.
/// PII placeholders become `url_tok`, `email_tok` and `user_tok`.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut rest = text;
    while !rest.is_empty() {
        let next = PLACEHOLDERS
            .iter()
            .filter_map(|(p, tok)| rest.find(p).map(|at| (at, *p, *tok)))
            .min_by_key(|(at, _, _)| *at);
        match next {
            Some((at, placeholder, tok)) => {
                push_words(&rest[..at], &mut tokens);
                tokens.push(tok.to_string());
                rest = &rest[at + placeholder.len()..];
            }
            None => {
                push_words(rest, &mut tokens);
                break;
            }
        }
    }
    tokens
}

fn push_words(segment: &str, out: &mut Vec<String>) {
    for word in segment.split(|c: char| !c.is_alphanumeric()) {
        if word.chars().count() < 2 || word.chars().all(|c| c.is_numeric()) {
            continue;
        }
        out.push(word.to_lowercase());
    }
}

pub fn tokenize_all<S: AsRef<str> + Sync>(texts: &[S]) -> Vec<Vec<String>> {
    par::map(texts, |t| tokenize(t.as_ref()))
}
