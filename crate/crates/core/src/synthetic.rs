//! Synthetic corpora and on-disk workflow fixtures with a planted signal.
//!
//! Fake documents carry several "marker" terms that real documents almost
//! never use, so any reasonable text classifier should separate them.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::Serialize;

use crate::ingest::{record_id_for_link, ConsolidatedRecord};
use crate::labeling::{Annotator, AnnotatorRole, ScriptedDecision};
use crate::rng::{self, SeededRng};
use crate::{jsonl, Label};

pub const FAKE_MARKERS: [&str; 10] =
    ["hoax", "bombshell", "rigged", "coverup", "leaked", "shocking", "secretly", "exposed", "outrage", "miracle"];

const FILLER: &[&str] = &[
    "election", "ballot", "vote", "voters", "county", "state", "campaign", "candidate", "debate", "poll", "senate",
    "governor", "council", "district", "turnout", "results", "office", "official", "policy", "budget", "public",
    "meeting", "report", "statement", "minister", "party", "leader", "support", "rally", "city", "local", "national",
    "federal", "court", "judge", "ruling", "law", "bill", "tax", "health", "school", "economy", "jobs", "energy",
    "border", "community", "press", "media", "television", "radio", "interview", "survey", "week", "month", "today",
    "morning", "evening", "spokesperson", "committee", "hearing", "members", "program", "plan", "funding", "record",
];

/// Chance that a real document mentions one marker anyway.
const REAL_MARKER_RATE: f64 = 0.04;
const FAKE_MARKERS_PER_DOC: usize = 3;

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

/// Three sentences of filler with markers mixed in according to `label`.
pub fn planted_text(rng: &mut SeededRng, label: Label) -> String {
    let n = rng.random_range(15..=24);
    let mut words: Vec<&str> = (0..n).map(|_| *FILLER.choose(rng).expect("filler")).collect();
    let markers: Vec<&str> = match label {
        Label::Fake => FAKE_MARKERS.choose_multiple(rng, FAKE_MARKERS_PER_DOC).copied().collect(),
        Label::Real if rng.random_bool(REAL_MARKER_RATE) => vec![*FAKE_MARKERS.choose(rng).expect("markers")],
        Label::Real => vec![],
    };
    words.extend(markers);
    words.shuffle(rng);
    let cut = [words.len() / 3, 2 * words.len() / 3];
    let sentences = [&words[..cut[0]], &words[cut[0]..cut[1]], &words[cut[1]..]];
    sentences
        .iter()
        .map(|s| {
            let mut t = capitalize(s[0]);
            for w in &s[1..] {
                t.push(' ');
                t.push_str(w);
            }
            t + "."
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).single().expect("valid date")
}

/// `n_docs` labeled records, alternating fake and real, dated an hour apart.
pub fn planted_corpus(n_docs: usize, seed: u64) -> Vec<ConsolidatedRecord> {
    let mut rng = rng::seeded(seed);
    (0..n_docs)
        .map(|i| {
            let label = Label::from(i % 2 == 1);
            ConsolidatedRecord::new(format!("syn-{i:05}"), "synthetic", planted_text(&mut rng, label))
                .with_label(label)
                .with_published_at(epoch() + Duration::hours(i as i64))
        })
        .collect()
}

/// Paths of a fixture written by [`write_workflow_fixture`].
#[derive(Debug, Clone)]
pub struct WorkflowFixture {
    pub feeds: PathBuf,
    pub benchmark: PathBuf,
    pub llm_responses: PathBuf,
    pub annotators: PathBuf,
    pub reviews: PathBuf,
    pub window_start: DateTime<Utc>,
    pub window_end: DateTime<Utc>,
}

const FEEDS: [(&str, &str, &str); 2] = [("politics", "Capitol Ledger", "elections"), ("regional", "Valley Courier", "places")];
const ITEMS_PER_FEED: usize = 60;
const BENCHMARK_RECORDS: usize = 120;
/// Share of records where the two reviewers disagree.
const DISSENT_RATE: f64 = 0.04;
/// Share of LLM suggestions that are wrong.
const LLM_ERROR_RATE: f64 = 0.15;

#[derive(Serialize)]
struct CannedResponse<'a> {
    record_id: &'a str,
    response: String,
}

fn rss(title: &str, items: &[(String, DateTime<Utc>, String)]) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<rss version=\"2.0\">\n<channel>\n");
    let _ = writeln!(out, "<title>{title}</title>\n<link>https://example.org/</link>\n<description>fixture</description>");
    for (i, (link, at, body)) in items.iter().enumerate() {
        let _ = writeln!(
            out,
            "<item>\n<title>Story {i}</title>\n<link>{link}</link>\n<pubDate>{}</pubDate>\n<description>{body}</description>\n<source url=\"https://example.org/\">{title}</source>\n</item>",
            at.to_rfc2822()
        );
    }
    out.push_str("</channel>\n</rss>\n");
    out
}

/// Write feeds, a benchmark file, canned LLM answers, three annotators and a
/// review script into `dir`. Every record's scripted final label is its
/// planted truth; a few records get a dissenting second reviewer.
pub fn write_workflow_fixture(dir: &Path, seed: u64) -> io::Result<WorkflowFixture> {
    let mut rng = rng::seeded(seed);
    std::fs::create_dir_all(dir.join("feeds"))?;
    let window_start = epoch();
    let window_end = Utc.with_ymd_and_hms(2024, 7, 1, 0, 0, 0).single().expect("valid date");
    let mut truth: Vec<(String, Label)> = Vec::new();

    let mut toml = String::from(
        "[[group]]\nid = \"elections\"\nname = \"Elections\"\nkeywords = [\"election\", \"ballot\", \"vote\"]\n\n\
         [[group]]\nid = \"places\"\nname = \"Places\"\nkeywords = [\"county\", \"city\", \"district\"]\n",
    );
    for (slug, title, group) in FEEDS {
        let items: Vec<(String, DateTime<Utc>, String)> = (0..ITEMS_PER_FEED)
            .map(|i| {
                let label = Label::from(rng.random_bool(0.5));
                let link = format!("https://example.org/{slug}/{i}");
                truth.push((record_id_for_link(&link), label));
                let at = window_start + Duration::hours(rng.random_range(0..24 * 170));
                (link, at, planted_text(&mut rng, label))
            })
            .collect();
        std::fs::write(dir.join("feeds").join(format!("{slug}.xml")), rss(title, &items))?;
        let _ = write!(toml, "\n[[feed]]\nurl = \"feeds/{slug}.xml\"\ngroup = \"{group}\"\n");
    }
    let feeds = dir.join("feeds.toml");
    std::fs::write(&feeds, toml)?;

    let bench_start = Utc.with_ymd_and_hms(2023, 1, 1, 0, 0, 0).single().expect("valid date");
    let bench: Vec<ConsolidatedRecord> = (0..BENCHMARK_RECORDS)
        .map(|i| {
            let label = Label::from(rng.random_bool(0.5));
            let id = format!("bench-{i:04}");
            truth.push((id.clone(), label));
            // provisional source-level label, occasionally wrong
            let provisional = if rng.random_bool(0.1) { label.flip() } else { label };
            ConsolidatedRecord::new(id, "benchmark", planted_text(&mut rng, label))
                .with_label(provisional)
                .with_published_at(bench_start + Duration::hours(i as i64 * 7))
        })
        .collect();
    let benchmark = dir.join("benchmark.jsonl");
    jsonl::write(&benchmark, &bench).map_err(io::Error::other)?;

    let responses: Vec<CannedResponse> = truth
        .iter()
        .map(|(id, label)| {
            let said = if rng.random_bool(LLM_ERROR_RATE) { label.flip() } else { *label };
            let word = if said.is_fake() { "FAKE" } else { "REAL" };
            CannedResponse { record_id: id, response: format!("{word}\nCanned answer for offline runs.") }
        })
        .collect();
    let llm_responses = dir.join("llm_responses.jsonl");
    jsonl::write(&llm_responses, &responses).map_err(io::Error::other)?;

    let people = vec![
        Annotator::new("ana", "Ana", AnnotatorRole::Linguist),
        Annotator::new("ben", "Ben", AnnotatorRole::DataScientist),
        Annotator::new("chi", "Chi", AnnotatorRole::MlScientist),
    ];
    let annotators = dir.join("annotators.jsonl");
    jsonl::write(&annotators, &people).map_err(io::Error::other)?;

    let script: Vec<ScriptedDecision> = truth
        .iter()
        .map(|(id, label)| {
            let mut d = ScriptedDecision::agreed(id.clone(), *label);
            if rng.random_bool(DISSENT_RATE) {
                d.dissent_label = Some(label.flip());
            }
            d
        })
        .collect();
    let reviews = dir.join("reviews.jsonl");
    jsonl::write(&reviews, &script).map_err(io::Error::other)?;

    Ok(WorkflowFixture { feeds, benchmark, llm_responses, annotators, reviews, window_start, window_end })
}
