use scenelayer::render::{csv_rows, markdown, render, series, Format, COLUMNS};
use scenelayer_core::metrics::{MetricEntry, MetricReport};

fn entry(layer: &str, metric: &str, mode: &str, score: Option<f64>) -> MetricEntry {
    MetricEntry {
        layer: layer.into(),
        metric: metric.into(),
        mode: mode.into(),
        score,
        m: 4,
        n: 2,
        na_pairs: usize::from(score.is_none()),
    }
}

fn sample() -> MetricReport {
    MetricReport {
        provider_id: "local-bow-256".into(),
        generated: 4,
        reference: 2,
        entries: vec![
            entry("L1", "O", "max", Some(0.5)),
            entry("L2", "O", "max", Some(-0.0)),
            entry("L3", "CO", "max", None),
            entry("L4", "CO", "max", Some(1.0 / 3.0)),
            entry("L4", "count/objects", "mean", Some(3.25)),
            entry("total-text", "O", "max", Some(0.123456)),
        ],
    }
}

#[test]
fn empty_report_renders_header_only() {
    let r = MetricReport {
        provider_id: "p".into(),
        ..MetricReport::default()
    };
    let md = markdown(&r);
    assert!(md.starts_with("# Scenario metrics\n\nprovider: p | generated: 0 | reference: 0\n"));
    assert!(!md.contains("##"));
    let lines: Vec<&str> = md.lines().collect();
    assert_eq!(lines.last().copied(), Some("|---|---|---:|---:|---:|---:|---:|---:|---:|"));
    assert_eq!(csv_rows(&r), "layer,metric,mode,score,M,N,na_pairs\n");
    assert_eq!(series(&r), format!("metric,mode,{}\n", COLUMNS.join(",")));
}

#[test]
fn markdown_cells_distinguish_missing_from_undefined() {
    let md = markdown(&sample());
    assert!(md.contains("## Semantic originality and diversity"));
    assert!(md.contains("| O | max | 0.5000 | 0.0000 | - | - | - | 0.1235 | - |"), "{md}");
    assert!(md.contains("| CO | max | - | - | NA | 0.3333 | - | - | - |"), "{md}");
    assert!(md.contains("## Mean component counts"));
    assert!(md.contains("| count/objects | mean | - | - | - | 3.2500 | - | - | - |"));
    let semantic = md.find("## Semantic").unwrap();
    let component = md.find("## Component").unwrap();
    let counts = md.find("## Mean").unwrap();
    assert!(semantic < component && component < counts);
    assert!(!md.contains("## Characteristics"));
}

#[test]
fn csv_has_one_row_per_entry() {
    let text = csv_rows(&sample());
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["layer", "metric", "mode", "score", "M", "N", "na_pairs"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    assert_eq!(&rows[2][3], "NA");
    assert_eq!(&rows[2][6], "1");
    assert_eq!(rows[3][3].parse::<f64>().unwrap(), 1.0 / 3.0);
}

#[test]
fn series_has_one_row_per_metric_mode() {
    let text = series(&sample());
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[1], "O,max,0.5,0,,,,0.123456,");
    assert_eq!(lines[2], format!("CO,max,,,NA,{},,,", 1.0f64 / 3.0));
}

#[test]
fn rendering_is_deterministic_and_json_round_trips() {
    let r = sample();
    for f in [Format::Markdown, Format::Csv, Format::Series, Format::Json] {
        assert_eq!(render(&r, f), render(&r.clone(), f));
    }
    let back: MetricReport = serde_json::from_str(&render(&r, Format::Json)).unwrap();
    assert_eq!(back.entries.len(), r.entries.len());
    assert_eq!(markdown(&back), markdown(&r));
}

#[test]
fn format_names() {
    assert_eq!(Format::parse("md"), Some(Format::Markdown));
    assert_eq!(Format::parse("markdown"), Some(Format::Markdown));
    assert_eq!(Format::parse("csv"), Some(Format::Csv));
    assert_eq!(Format::parse("series"), Some(Format::Series));
    assert_eq!(Format::parse("json"), Some(Format::Json));
    assert_eq!(Format::parse("xml"), None);
}
