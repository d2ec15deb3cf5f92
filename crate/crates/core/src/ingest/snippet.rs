use super::IngestError;

/// Abbreviations whose trailing period never ends a sentence.
const PROTECTED: [&str; 6] = ["Mr.", "Mrs.", "Dr.", "U.S.", "St.", "vs."];

/// Split text into sentence units.
///
/// A boundary is `.`, `!` or `?` followed by whitespace and then an uppercase
/// letter, or by end of text (trailing whitespace allowed). A period closing
/// one of the protected abbreviations is never a boundary.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let text = text.trim();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut sentences = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if matches!(c, '.' | '!' | '?') {
            let end = pos + c.len_utf8();
            let mut j = i + 1;
            while j < chars.len() && chars[j].1.is_whitespace() {
                j += 1;
            }
            let at_end = j == chars.len();
            let boundary = at_end || (j > i + 1 && chars[j].1.is_uppercase());
            if boundary && !(c == '.' && ends_with_protected(&text[start..end])) {
                sentences.push(text[start..end].trim());
                start = if at_end { text.len() } else { chars[j].0 };
                i = j;
                continue;
            }
        }
        i += 1;
    }
    if start < text.len() {
        let tail = text[start..].trim();
        if !tail.is_empty() {
            sentences.push(tail);
        }
    }
    sentences
}

fn ends_with_protected(segment: &str) -> bool {
    PROTECTED.iter().any(|abbr| {
        segment.ends_with(abbr)
            && segment[..segment.len() - abbr.len()]
                .chars()
                .next_back()
                .is_none_or(|p| !p.is_alphanumeric())
    })
}

/// The first `max_sentences` sentences joined by single spaces.
pub fn extract_snippet(body_text: &str, max_sentences: usize) -> Result<String, IngestError> {
    if body_text.trim().is_empty() {
        return Err(IngestError::EmptyInput);
    }
    let max = max_sentences.max(1);
    Ok(split_sentences(body_text).into_iter().take(max).collect::<Vec<_>>().join(" "))
}
