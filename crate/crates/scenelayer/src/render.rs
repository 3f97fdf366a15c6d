//! Markdown and CSV renderings of a metric report.

use scenelayer_core::metrics::{MetricEntry, MetricReport, TOTAL_MEAN, TOTAL_TEXT};

/// Column order of the layer tables.
pub const COLUMNS: [&str; 7] = ["L1", "L2", "L3", "L4", "L5", TOTAL_TEXT, TOTAL_MEAN];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Markdown,
    Csv,
    Series,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "markdown" | "md" => Some(Format::Markdown),
            "csv" => Some(Format::Csv),
            "series" => Some(Format::Series),
            "json" => Some(Format::Json),
            _ => None,
        }
    }
}

pub fn render(report: &MetricReport, format: Format) -> String {
    match format {
        Format::Markdown => markdown(report),
        Format::Csv => csv_rows(report),
        Format::Series => series(report),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
    }
}

fn fixed4(v: f64) -> String {
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

fn cell(e: Option<&MetricEntry>) -> String {
    match e {
        None => "-".into(),
        Some(MetricEntry { score: None, .. }) => "NA".into(),
        Some(MetricEntry { score: Some(v), .. }) => fixed4(*v),
    }
}

/// (metric, mode) pairs in first-appearance order.
fn rows(report: &MetricReport) -> Vec<(&str, &str)> {
    let mut out: Vec<(&str, &str)> = Vec::new();
    for e in &report.entries {
        let key = (e.metric.as_str(), e.mode.as_str());
        if !out.contains(&key) {
            out.push(key);
        }
    }
    out
}

fn family(metric: &str) -> &'static str {
    match metric.split('/').next().unwrap_or(metric) {
        "O" | "D" | "D_ref" => "Semantic originality and diversity",
        "CO" | "CD" | "CD_ref" => "Component originality and diversity",
        "CharD" | "CharD_ref" => "Characteristics diversity",
        "count" | "count_ref" => "Mean component counts",
        _ => "Other metrics",
    }
}

const FAMILIES: [&str; 5] = [
    "Semantic originality and diversity",
    "Component originality and diversity",
    "Characteristics diversity",
    "Mean component counts",
    "Other metrics",
];

/// Tables with layers as columns. `-` marks a metric not computed for a
/// layer, `NA` an undefined score.
pub fn markdown(report: &MetricReport) -> String {
    let mut out = String::new();
    out.push_str("# Scenario metrics\n\n");
    out.push_str(&format!(
        "provider: {} | generated: {} | reference: {}\n",
        report.provider_id, report.generated, report.reference
    ));
    let header = format!(
        "| Metric | Mode | {} |\n|---|---|{}\n",
        COLUMNS.join(" | "),
        "---:|".repeat(COLUMNS.len())
    );
    let all = rows(report);
    if all.is_empty() {
        out.push('\n');
        out.push_str(&header);
        return out;
    }
    for fam in FAMILIES {
        let fam_rows: Vec<_> = all.iter().filter(|(m, _)| family(m) == fam).collect();
        if fam_rows.is_empty() {
            continue;
        }
        out.push_str(&format!("\n## {fam}\n\n"));
        out.push_str(&header);
        for (metric, mode) in fam_rows {
            let cells: Vec<String> = COLUMNS
                .iter()
                .map(|layer| cell(report.get(layer, metric, mode)))
                .collect();
            out.push_str(&format!("| {metric} | {mode} | {} |\n", cells.join(" | ")));
        }
    }
    out
}

fn score_text(score: Option<f64>) -> String {
    score.map_or_else(|| "NA".to_string(), |v| (v + 0.0).to_string())
}

/// One row per entry: layer, metric, mode, score, M, N, na_pairs.
pub fn csv_rows(report: &MetricReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["layer", "metric", "mode", "score", "M", "N", "na_pairs"])
        .expect("in-memory write");
    for e in &report.entries {
        w.write_record([
            e.layer.clone(),
            e.metric.clone(),
            e.mode.clone(),
            score_text(e.score),
            e.m.to_string(),
            e.n.to_string(),
            e.na_pairs.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// Plot series: one row per (metric, mode), one column per layer.
pub fn series(report: &MetricReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["metric".to_string(), "mode".to_string()];
    header.extend(COLUMNS.iter().map(|c| c.to_string()));
    w.write_record(&header).expect("in-memory write");
    for (metric, mode) in rows(report) {
        let mut rec = vec![metric.to_string(), mode.to_string()];
        rec.extend(COLUMNS.iter().map(|layer| match report.get(layer, metric, mode) {
            None => String::new(),
            Some(e) => score_text(e.score),
        }));
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}
