//! Metric reports and their JSON / CSV / Markdown renderings.

use std::fmt::Write as _;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::Condition;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// A ratio in [0, 1] (or a signed relative change), shown as a percentage.
    Fraction,
    /// A plain real value such as entropy in bits or a distance.
    Scalar,
    /// 1.0 for true, 0.0 for false.
    Flag,
    Count,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub value: f64,
    pub kind: MetricKind,
}

/// Which table shape the Markdown renderer uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportLayout {
    MainTable,
    BleuTrap,
    NoiseDependency,
    PrefixStrip,
    Baselines,
    Generic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub layout: ReportLayout,
    pub system_name: String,
    pub condition: Option<Condition>,
    pub metrics: IndexMap<String, Metric>,
    pub config_fingerprint: String,
    pub metadata: IndexMap<String, String>,
    pub warnings: Vec<String>,
}

impl MetricReport {
    pub fn new(
        layout: ReportLayout,
        system_name: impl Into<String>,
        condition: Option<Condition>,
        config: &impl Serialize,
    ) -> Self {
        Self {
            layout,
            system_name: system_name.into(),
            condition,
            metrics: IndexMap::new(),
            config_fingerprint: fingerprint(config),
            metadata: IndexMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, value: f64, kind: MetricKind) -> Result<()> {
        let name = name.into();
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("metric `{name}`")));
        }
        self.metrics.insert(name, Metric { value, kind });
        Ok(())
    }

    pub fn set_flag(&mut self, name: impl Into<String>, flag: bool) {
        self.metrics.insert(
            name.into(),
            Metric {
                value: if flag { 1.0 } else { 0.0 },
                kind: MetricKind::Flag,
            },
        );
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).map(|m| m.value)
    }

    pub fn flag(&self, name: &str) -> Option<bool> {
        self.metrics
            .get(name)
            .filter(|m| m.kind == MetricKind::Flag)
            .map(|m| m.value != 0.0)
    }

    pub fn note(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.metadata.insert(key.into(), value.into());
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }
}

/// Hex SHA-256 of the JSON serialization of `config`.
pub fn fingerprint(config: &impl Serialize) -> String {
    let bytes = serde_json::to_vec(config).expect("config serializes to JSON");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::InvalidInput(format!("unknown report format `{other}`"))),
        }
    }
}

pub fn parse_report_json(bytes: &[u8]) -> Result<MetricReport> {
    serde_json::from_slice(bytes).map_err(|e| Error::Parse {
        path: "<report>".into(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// `(ours − base) / base` when higher is better, `(base − ours) / base`
/// otherwise. `None` for a zero baseline.
pub fn relative_improvement(ours: f64, base: f64, higher_is_better: bool) -> Option<f64> {
    if base == 0.0 {
        return None;
    }
    let diff = if higher_is_better { ours - base } else { base - ours };
    Some(diff / base)
}

/// Percentage with one decimal, rounding halves away from zero.
pub fn format_percent(fraction: f64) -> String {
    let tenths = (fraction * 1000.0).round();
    let v = tenths / 10.0;
    // Avoid "-0.0%".
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.1}%")
}

fn format_metric(m: &Metric) -> String {
    match m.kind {
        MetricKind::Fraction => format_percent(m.value),
        MetricKind::Scalar => format!("{:.2}", m.value),
        MetricKind::Flag => if m.value != 0.0 { "yes" } else { "no" }.to_string(),
        MetricKind::Count => format!("{}", m.value as i64),
    }
}

pub fn render_report(r: &MetricReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(r).expect("report serializes to JSON");
            out.push(b'\n');
            out
        }
        ReportFormat::Csv => render_csv(r).into_bytes(),
        ReportFormat::Markdown => render_markdown(r).into_bytes(),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render_csv(r: &MetricReport) -> String {
    let condition = r.condition.map(|c| c.to_string()).unwrap_or_default();
    let mut out = String::from("system_name,condition,metric,kind,value\n");
    for (name, m) in &r.metrics {
        let kind = serde_json::to_value(m.kind).expect("kind serializes");
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            csv_field(&r.system_name),
            condition,
            csv_field(name),
            kind.as_str().unwrap_or_default(),
            m.value
        );
    }
    out
}

pub const MAIN_TABLE_COLUMNS: [(&str, &str); 10] = [
    ("acc_2way", "2-Way"),
    ("acc_4way", "4-Way"),
    ("acc_10way", "10-Way"),
    ("acc_24way", "24-Way"),
    ("content_recall", "C. Recall"),
    ("dist_1", "Dist-1"),
    ("dist_2", "Dist-2"),
    ("head_entropy", "H. Ent"),
    ("self_bleu", "S-BLEU"),
    ("fd", "FD"),
];

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn render(&self, out: &mut String) {
        let _ = writeln!(out, "| {} |", self.header.join(" | "));
        let _ = writeln!(
            out,
            "|{}|",
            self.header.iter().map(|_| "---").collect::<Vec<_>>().join("|")
        );
        for row in &self.rows {
            let _ = writeln!(out, "| {} |", row.join(" | "));
        }
    }
}

fn cell(r: &MetricReport, key: &str, used: &mut Vec<String>) -> String {
    match r.metrics.get(key) {
        Some(m) => {
            used.push(key.to_string());
            format_metric(m)
        }
        None => "–".to_string(),
    }
}

fn render_markdown(r: &MetricReport) -> String {
    let mut out = String::new();
    let _ = write!(out, "## {}", r.system_name);
    if let Some(c) = r.condition {
        let _ = write!(out, " ({c})");
    }
    out.push_str("\n\n");

    let mut used = Vec::new();
    match r.layout {
        ReportLayout::MainTable => {
            let mut header = vec!["Model"];
            header.extend(MAIN_TABLE_COLUMNS.iter().map(|(_, h)| *h));
            let mut t = Table::new(&header);
            let mut row = vec![r.system_name.clone()];
            for (key, _) in MAIN_TABLE_COLUMNS {
                row.push(cell(r, key, &mut used));
            }
            t.rows.push(row);
            t.render(&mut out);
        }
        ReportLayout::BleuTrap => {
            let mut t = Table::new(&["Metric", "MTV Evaluation", "Standard", "MTV (sentence mean)", "Standard (sentence mean)"]);
            for n in 1..=2 {
                t.rows.push(vec![
                    format!("BLEU-{n}"),
                    cell(r, &format!("bleu{n}_mtv"), &mut used),
                    cell(r, &format!("bleu{n}_single"), &mut used),
                    cell(r, &format!("bleu{n}_mtv_sentence_mean"), &mut used),
                    cell(r, &format!("bleu{n}_single_sentence_mean"), &mut used),
                ]);
            }
            t.render(&mut out);
        }
        ReportLayout::NoiseDependency => {
            let mut t = Table::new(&["Input", "C. Recall", "Dist-2", "FD"]);
            for (label, suffix) in [("Real", "real"), ("Noise", "noise"), ("Δ (noise − real)", "delta")] {
                t.rows.push(vec![
                    label.to_string(),
                    cell(r, &format!("content_recall_{suffix}"), &mut used),
                    cell(r, &format!("dist_2_{suffix}"), &mut used),
                    cell(r, &format!("fd_{suffix}"), &mut used),
                ]);
            }
            t.render(&mut out);
            let _ = writeln!(out, "\nSignal dependency: {}", cell(r, "signal_dependency_verdict", &mut used));
        }
        ReportLayout::PrefixStrip => {
            let mut t = Table::new(&["Metric", "Original", "Stripped", "Drop (Δ)"]);
            for n in 1..=4 {
                t.rows.push(vec![
                    format!("BLEU-{n}"),
                    cell(r, &format!("bleu{n}_original"), &mut used),
                    cell(r, &format!("bleu{n}_stripped"), &mut used),
                    cell(r, &format!("bleu{n}_drop"), &mut used),
                ]);
            }
            t.render(&mut out);
        }
        ReportLayout::Baselines => {
            let mut t = Table::new(&["Task", "Metric", "Baseline"]);
            for (task, metric, key) in [
                ("Sentiment", "Accuracy", "sentiment_chance"),
                ("Topic", "Accuracy", "topic_chance"),
                ("Length", "MAE", "length_mae"),
                ("Surprisal", "MAE", "surprisal_mae"),
            ] {
                t.rows.push(vec![task.to_string(), metric.to_string(), cell(r, key, &mut used)]);
            }
            t.render(&mut out);
        }
        ReportLayout::Generic => {}
    }

    let rest: Vec<(&String, &Metric)> = r.metrics.iter().filter(|(k, _)| !used.contains(k)).collect();
    if !rest.is_empty() {
        if r.layout != ReportLayout::Generic {
            out.push('\n');
        }
        let mut t = Table::new(&["Metric", "Value"]);
        for (k, m) in rest {
            t.rows.push(vec![k.clone(), format_metric(m)]);
        }
        t.render(&mut out);
    }
    if !r.metadata.is_empty() {
        out.push_str("\nNotes:\n");
        for (k, v) in &r.metadata {
            let _ = writeln!(out, "- {k}: {v}");
        }
    }
    if !r.warnings.is_empty() {
        out.push_str("\nWarnings:\n");
        for w in &r.warnings {
            let _ = writeln!(out, "- {w}");
        }
    }
    let _ = writeln!(out, "\nConfig fingerprint: `{}`", r.config_fingerprint);
    out
}
