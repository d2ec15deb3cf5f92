use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ConfusionMatrix, EvalError, Leaderboard, LeaderboardRow};

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(EvalError::Input(format!("unknown report format {other:?} (expected markdown, csv or json)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderOptions {
    /// Add a TN% column to the confusion table. Off reproduces the
    /// three-column TP/FN/FP layout.
    pub include_tn: bool,
    /// Decimals for metric values in markdown.
    pub decimals: usize,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions { include_tn: true, decimals: 4 }
    }
}

/// The JSON report document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub format_version: u32,
    pub leaderboard: Leaderboard,
}

impl EvaluationReport {
    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        let r: EvaluationReport = serde_json::from_str(text).map_err(|e| EvalError::Input(format!("report JSON: {e}")))?;
        if r.format_version != REPORT_FORMAT_VERSION {
            return Err(EvalError::Input(format!("unsupported report format version {}", r.format_version)));
        }
        Ok(r)
    }
}

/// `count / total` as a whole percentage, rounding halves up.
pub fn whole_percent(count: u64, total: u64) -> u64 {
    (200 * count + total) / (2 * total)
}

fn cell(value: f64, best: bool, decimals: usize) -> String {
    if best {
        format!("**{value:.decimals$}**")
    } else {
        format!("{value:.decimals$}")
    }
}

fn escape_md(s: &str) -> String {
    s.replace('|', "\\|")
}

fn markdown(lb: &Leaderboard, opts: &RenderOptions) -> String {
    let d = opts.decimals;
    let mut out = String::new();
    out.push_str("## Results\n\n");
    out.push_str("| Model | Accuracy | Precision | Recall | F1 Score |\n");
    out.push_str("|---|---|---|---|---|\n");
    for LeaderboardRow { report: r, best } in &lb.rows {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} |",
            escape_md(&r.model_name),
            cell(r.accuracy, best.accuracy, d),
            cell(r.precision, best.precision, d),
            cell(r.recall, best.recall, d),
            cell(r.f1, best.f1, d)
        );
    }
    out.push_str("\n## Confusion Matrix\n\n");
    if opts.include_tn {
        out.push_str("| Model | TP | FN | FP | TN |\n|---|---|---|---|---|\n");
    } else {
        out.push_str("| Model | TP | FN | FP |\n|---|---|---|---|\n");
    }
    for row in &lb.rows {
        let ConfusionMatrix { tp, fp, tn, fn_ } = row.report.confusion;
        let total = row.report.confusion.total();
        let pct = |c: u64| format!("{}%", whole_percent(c, total));
        let _ = write!(out, "| {} | {} | {} | {} |", escape_md(&row.report.model_name), pct(tp), pct(fn_), pct(fp));
        if opts.include_tn {
            let _ = write!(out, " {} |", pct(tn));
        }
        out.push('\n');
    }
    let notes: Vec<String> = lb
        .rows
        .iter()
        .flat_map(|row| {
            let r = &row.report;
            let flags = (!r.degenerate_flags.is_empty()).then(|| {
                let names: Vec<String> =
                    r.degenerate_flags.iter().map(|f| serde_json::to_value(f).unwrap().as_str().unwrap().to_string()).collect();
                format!("{}: {} (reported as 0)", r.model_name, names.join(", "))
            });
            flags.into_iter().chain(r.notes.iter().map(move |n| format!("{}: {n}", r.model_name)))
        })
        .collect();
    if !notes.is_empty() {
        out.push_str("\nNotes:\n\n");
        for n in notes {
            let _ = writeln!(out, "- {}", escape_md(&n));
        }
    }
    out
}

fn csv(lb: &Leaderboard) -> Result<String, EvalError> {
    let mut w = ::csv::Writer::from_writer(Vec::new());
    w.write_record(["model", "accuracy", "precision", "recall", "f1", "tp", "fn", "fp", "tn", "degenerate_flags", "notes"])?;
    for row in &lb.rows {
        let r = &row.report;
        let c = r.confusion;
        let flags: Vec<String> =
            r.degenerate_flags.iter().map(|f| serde_json::to_value(f).unwrap().as_str().unwrap().to_string()).collect();
        w.write_record([
            r.model_name.clone(),
            r.accuracy.to_string(),
            r.precision.to_string(),
            r.recall.to_string(),
            r.f1.to_string(),
            c.tp.to_string(),
            c.fn_.to_string(),
            c.fp.to_string(),
            c.tn.to_string(),
            flags.join(";"),
            r.notes.join("; "),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| EvalError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Render a leaderboard. Markdown rounds; CSV and JSON keep full precision.
pub fn render_report(lb: &Leaderboard, format: ReportFormat, opts: &RenderOptions) -> Result<String, EvalError> {
    if lb.rows.is_empty() {
        return Err(EvalError::Input("empty leaderboard".into()));
    }
    match format {
        ReportFormat::Markdown => Ok(markdown(lb, opts)),
        ReportFormat::Csv => csv(lb),
        ReportFormat::Json => {
            let doc = EvaluationReport { format_version: REPORT_FORMAT_VERSION, leaderboard: lb.clone() };
            Ok(serde_json::to_string_pretty(&doc).expect("report serializes") + "\n")
        }
    }
}
