//! Placeholder substitution for URLs, email addresses and @-usernames.

use std::sync::LazyLock;

use regex::Regex;

pub const URL_PLACEHOLDER: &str = "[URL]";
pub const EMAIL_PLACEHOLDER: &str = "[EMAIL]";
pub const USER_PLACEHOLDER: &str = "[USER]";

// A URL is a whitespace-delimited run starting at a `scheme://` or `www.` prefix.
static URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i:[a-z][a-z0-9+.\-]*://|www\.)\S*").unwrap());
static EMAIL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"[A-Za-z0-9._%+\-]+@[A-Za-z0-9][A-Za-z0-9\-]*(?:\.[A-Za-z0-9\-]+)+").unwrap()
});
static USER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"@\w+").unwrap());

/// Replace URLs, then emails, then usernames with fixed placeholders.
///
/// The passes run in that order so a URL carrying `user@host` is a single
/// `[URL]`, and an email is never split into a username. Placeholders contain
/// none of `@`, `://` or `www.`, so the output is a fixed point.
pub fn scrub_pii(text: &str) -> String {
    let pass = URL.replace_all(text, URL_PLACEHOLDER);
    let pass = EMAIL.replace_all(&pass, EMAIL_PLACEHOLDER);
    USER.replace_all(&pass, USER_PLACEHOLDER).into_owned()
}

pub fn contains_pii(text: &str) -> bool {
    URL.is_match(text) || EMAIL.is_match(text) || USER.is_match(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_examples() {
        assert_eq!(scrub_pii("contact a@b.com"), "contact [EMAIL]");
        assert_eq!(scrub_pii("no personal data here"), "no personal data here");
        assert_eq!(scrub_pii("@alice shared http://x.y/z"), "[USER] shared [URL]");
    }

    #[test]
    fn precedence() {
        assert_eq!(scrub_pii("see https://bob@host.org/p now"), "see [URL] now");
        assert_eq!(scrub_pii("visit WWW.Example.com."), "visit [URL]");
        assert_eq!(scrub_pii("mail j.doe+x@mail.co.uk."), "mail [EMAIL].");
        assert_eq!(scrub_pii("ping @bob_99, thanks"), "ping [USER], thanks");
        assert_eq!(scrub_pii("user@localhost"), "user[USER]");
    }

    fn pii_fragment() -> impl Strategy<Value = String> {
        prop_oneof![
            "[a-z]{1,8}",
            "[A-Za-z0-9 .,!?]{0,10}",
            "(https?|ftp)://[a-z0-9./@_-]{0,12}",
            "www\\.[a-z0-9.]{0,10}",
            "[a-z0-9._+-]{1,6}@[a-z0-9-]{1,6}(\\.[a-z]{1,4}){1,2}",
            "@[a-z0-9_]{1,8}",
            "[@:/.\\[\\]_ -]{1,4}",
            Just("[URL]".to_string()),
            Just("a@b".to_string()),
        ]
    }

    proptest! {
        #[test]
        fn idempotent_and_clean(parts in prop::collection::vec(pii_fragment(), 0..8)) {
            let text = parts.concat();
            let once = scrub_pii(&text);
            prop_assert!(!contains_pii(&once), "residual PII in {:?}", once);
            prop_assert_eq!(scrub_pii(&once), once);
        }
    }
}
