//! RSS 2.0 / Atom feed fetching and parsing.

use std::time::Duration;

use chrono::{DateTime, Utc};
use quick_xml::escape::resolve_xml_entity;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use url::Url;

use super::config::FeedSource;
use super::IngestError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArticleFlag {
    /// No parseable publication date; `published_at` is unset.
    MissingDate,
    /// The entry carried no body text.
    MissingBody,
}

/// One feed entry as published.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawArticle {
    pub feed_url: String,
    pub title: String,
    pub link: String,
    pub published_at: Option<DateTime<Utc>>,
    pub body_text: String,
    /// Publisher named by the entry (`<source>`), else the feed title.
    pub source: Option<String>,
    pub flags: Vec<ArticleFlag>,
}

impl RawArticle {
    /// Dataset tag for the corpus: publisher, else the link host.
    pub fn source_name(&self) -> String {
        if let Some(s) = self.source.as_deref().filter(|s| !s.trim().is_empty()) {
            return s.trim().to_string();
        }
        Url::parse(&self.link)
            .ok()
            .and_then(|u| u.host_str().map(str::to_owned))
            .unwrap_or_else(|| "unknown".into())
    }
}

/// Fetch and parse one feed. `file://` URLs are read from disk.
pub fn fetch_feed(feed_url: &str, timeout: Duration) -> Result<Vec<RawArticle>, IngestError> {
    let url = Url::parse(feed_url).map_err(|_| IngestError::InvalidUrl(feed_url.into()))?;
    let bytes = match url.scheme() {
        "file" => {
            let path = url.to_file_path().map_err(|_| IngestError::InvalidUrl(feed_url.into()))?;
            std::fs::read(&path).map_err(|e| IngestError::Transport {
                url: feed_url.into(),
                message: e.to_string(),
            })?
        }
        "http" | "https" => http_get(feed_url, timeout)?,
        _ => return Err(IngestError::InvalidUrl(feed_url.into())),
    };
    parse_feed(&bytes, feed_url)
}

fn http_get(url: &str, timeout: Duration) -> Result<Vec<u8>, IngestError> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(false)
        .build()
        .into();
    let transport = |e: ureq::Error| IngestError::Transport { url: url.into(), message: e.to_string() };
    let mut resp = agent.get(url).call().map_err(transport)?;
    let status = resp.status().as_u16();
    if status >= 400 {
        return Err(IngestError::Upstream { url: url.into(), status });
    }
    resp.body_mut().with_config().limit(64 * 1024 * 1024).read_to_vec().map_err(transport)
}

/// Result of fetching one configured feed.
#[derive(Debug)]
pub struct FeedFetch {
    pub source: FeedSource,
    pub result: Result<Vec<RawArticle>, IngestError>,
}

/// Fetch several feeds concurrently. Output is ordered by feed URL (stable for
/// duplicates), entries keep document order.
pub fn fetch_feeds(sources: &[FeedSource], timeout: Duration) -> Vec<FeedFetch> {
    let mut fetched: Vec<FeedFetch> = std::thread::scope(|scope| {
        let handles: Vec<_> = sources
            .iter()
            .map(|s| scope.spawn(move || fetch_feed(&s.url, timeout)))
            .collect();
        sources
            .iter()
            .zip(handles)
            .map(|(s, h)| FeedFetch {
                source: s.clone(),
                result: h.join().unwrap_or_else(|_| {
                    Err(IngestError::Transport { url: s.url.clone(), message: "fetch thread panicked".into() })
                }),
            })
            .collect()
    });
    fetched.sort_by(|a, b| a.source.url.cmp(&b.source.url));
    fetched
}

#[derive(Default)]
struct EntryBuf {
    title: String,
    link: String,
    date: String,
    body: String,
    source: String,
}

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Title,
    Link,
    Date,
    Body,
    Source,
    ChannelTitle,
}

/// Parse RSS 2.0 `<item>` or Atom `<entry>` elements in document order.
pub fn parse_feed(bytes: &[u8], feed_url: &str) -> Result<Vec<RawArticle>, IngestError> {
    let mut reader = Reader::from_reader(bytes);
    reader.config_mut().check_end_names = true;

    let mut depth = 0usize;
    let mut root_seen = false;
    let mut entry: Option<EntryBuf> = None;
    let mut entry_depth = 0usize;
    let mut field: Option<(Field, usize)> = None;
    let mut channel_title = String::new();
    let mut entries: Vec<(EntryBuf, u64)> = Vec::new();
    let mut buf = Vec::new();

    let parse_err = |offset: u64, message: String| IngestError::Parse { offset, message };

    loop {
        let offset = reader.buffer_position();
        let event = reader
            .read_event_into(&mut buf)
            .map_err(|e| parse_err(reader.error_position(), e.to_string()))?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let is_empty = matches!(event, Event::Empty(_));
                let name = local_name(e);
                if !root_seen {
                    if !matches!(name.as_str(), "rss" | "feed" | "rdf") {
                        return Err(parse_err(offset, format!("not a feed: root element <{name}>")));
                    }
                    root_seen = true;
                } else if entry.is_none() && matches!(name.as_str(), "item" | "entry") {
                    entry = Some(EntryBuf::default());
                    entry_depth = depth + 1;
                } else if let Some(cur) = entry.as_mut() {
                    if depth == entry_depth && field.is_none() {
                        let target = match name.as_str() {
                            "title" => Some(Field::Title),
                            "link" => {
                                if let Some(href) = attr(e, "href") {
                                    let rel = attr(e, "rel");
                                    if cur.link.is_empty() && rel.as_deref().is_none_or(|r| r == "alternate") {
                                        cur.link = href;
                                    }
                                    None
                                } else {
                                    Some(Field::Link)
                                }
                            }
                            "pubdate" | "published" | "updated" | "date" => {
                                (cur.date.is_empty() || name == "pubdate").then_some(Field::Date)
                            }
                            "description" | "summary" | "content" | "encoded" => {
                                cur.body.is_empty().then_some(Field::Body)
                            }
                            "source" => Some(Field::Source),
                            _ => None,
                        };
                        if let Some(t) = target {
                            if t == Field::Date {
                                cur.date.clear();
                            }
                            if !is_empty {
                                field = Some((t, depth + 1));
                            }
                        }
                    }
                } else if name == "title" && depth <= 2 && channel_title.is_empty() && !is_empty {
                    field = Some((Field::ChannelTitle, depth + 1));
                }
                if !is_empty {
                    depth += 1;
                }
            }
            Event::End(_) => {
                if let Some((_, d)) = field {
                    if d == depth {
                        field = None;
                    }
                }
                if entry.is_some() && depth == entry_depth {
                    entries.push((entry.take().unwrap(), offset));
                }
                depth = depth.saturating_sub(1);
            }
            Event::Text(t) => {
                let text = t.decode().map_err(|e| parse_err(offset, e.to_string()))?;
                push_text(&mut entry, &mut channel_title, field, &text);
            }
            Event::CData(t) => {
                let text = t.decode().map_err(|e| parse_err(offset, e.to_string()))?;
                push_text(&mut entry, &mut channel_title, field, &text);
            }
            Event::GeneralRef(r) => {
                let resolved = match r.resolve_char_ref().map_err(|e| parse_err(offset, e.to_string()))? {
                    Some(c) => c.to_string(),
                    None => {
                        let name = r.decode().map_err(|e| parse_err(offset, e.to_string()))?;
                        match resolve_xml_entity(&name) {
                            Some(s) => s.to_string(),
                            None => html_entity(&name)
                                .map(str::to_owned)
                                .ok_or_else(|| parse_err(offset, format!("unknown entity &{name};")))?,
                        }
                    }
                };
                push_text(&mut entry, &mut channel_title, field, &resolved);
            }
            Event::Eof => {
                if !root_seen {
                    return Err(parse_err(offset, "no root element: payload is not XML".into()));
                }
                if depth > 0 {
                    return Err(parse_err(offset, "unexpected end of document (truncated XML)".into()));
                }
                break;
            }
            _ => {}
        }
        buf.clear();
    }

    let feed_title = normalize_ws(&channel_title);
    let mut articles = Vec::with_capacity(entries.len());
    for (e, offset) in entries {
        let link = e.link.trim().to_string();
        if Url::parse(&link).is_err() {
            tracing::warn!(offset, feed_url, "skipping feed entry without a valid link");
            continue;
        }
        let published_at = parse_date(e.date.trim());
        let body_text = strip_html(&e.body);
        let mut flags = Vec::new();
        if published_at.is_none() {
            flags.push(ArticleFlag::MissingDate);
        }
        if body_text.is_empty() {
            flags.push(ArticleFlag::MissingBody);
        }
        let source = normalize_ws(&e.source);
        articles.push(RawArticle {
            feed_url: feed_url.to_string(),
            title: normalize_ws(&e.title),
            link,
            published_at,
            body_text,
            source: if !source.is_empty() {
                Some(source)
            } else if !feed_title.is_empty() {
                Some(feed_title.clone())
            } else {
                None
            },
            flags,
        });
    }
    Ok(articles)
}

fn push_text(entry: &mut Option<EntryBuf>, channel_title: &mut String, field: Option<(Field, usize)>, text: &str) {
    let Some((f, _)) = field else { return };
    let target = match (entry.as_mut(), f) {
        (Some(e), Field::Title) => &mut e.title,
        (Some(e), Field::Link) => &mut e.link,
        (Some(e), Field::Date) => &mut e.date,
        (Some(e), Field::Body) => &mut e.body,
        (Some(e), Field::Source) => &mut e.source,
        (None, Field::ChannelTitle) => channel_title,
        _ => return,
    };
    target.push_str(text);
}

fn local_name(e: &BytesStart<'_>) -> String {
    String::from_utf8_lossy(e.local_name().as_ref()).to_ascii_lowercase()
}

fn attr(e: &BytesStart<'_>, key: &str) -> Option<String> {
    e.attributes()
        .flatten()
        .find(|a| a.key.local_name().as_ref() == key.as_bytes())
        .and_then(|a| a.unescape_value().ok().map(|v| v.into_owned()))
}

fn parse_date(s: &str) -> Option<DateTime<Utc>> {
    if s.is_empty() {
        return None;
    }
    DateTime::parse_from_rfc2822(s)
        .or_else(|_| DateTime::parse_from_rfc3339(s))
        .ok()
        .map(|d| d.with_timezone(&Utc))
}

fn html_entity(name: &str) -> Option<&'static str> {
    Some(match name {
        "nbsp" => " ",
        "mdash" => "\u{2014}",
        "ndash" => "\u{2013}",
        "rsquo" | "lsquo" => "'",
        "rdquo" | "ldquo" => "\"",
        "hellip" => "...",
        _ => return None,
    })
}

/// Drop markup from feed descriptions, decode the common HTML entities and
/// collapse whitespace.
fn strip_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_tag = false;
    for c in s.chars() {
        match c {
            '<' => in_tag = true,
            '>' if in_tag => {
                in_tag = false;
                out.push(' ');
            }
            _ if !in_tag => out.push(c),
            _ => {}
        }
    }
    let decoded = out
        .replace("&nbsp;", " ")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&amp;", "&");
    normalize_ws(&decoded)
}

fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
