//! Report tables over run records.
//!
//! Markdown groups records by scenario and system and collapses runs that
//! differ only in `k` into one row with `a / b / c` cells, ordered by `k`.
//! CSV keeps one row per record.

use super::{HarnessError, RunRecord};
use crate::generation::Scenario;
use crate::metrics::MetricReport;
use crate::scalar::Scalar;
use std::fmt::Write as _;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(HarnessError::Config(format!("unknown report format '{s}'"))),
        }
    }
}

pub const CSV_HEADER: [&str; 9] = [
    "scenario",
    "system",
    "k",
    "answer_length",
    "rouge_l",
    "str_em",
    "disambig_f1",
    "dr",
    "config_hash",
];

const SCENARIO_ORDER: [Scenario; 5] = [
    Scenario::QuestionRepeat,
    Scenario::RetrievalOnly,
    Scenario::ClosedBook,
    Scenario::RandomRetrieval,
    Scenario::OpenBook,
];

fn method_label(tag: &str) -> String {
    match tag {
        "random" => "Random".into(),
        other => other.to_ascii_uppercase(),
    }
}

/// Row key: everything that identifies a system except `k`.
fn group_key<T: Scalar>(r: &RunRecord<T>) -> (usize, String, String) {
    let scenario = SCENARIO_ORDER
        .iter()
        .position(|s| *s == r.config.scenario)
        .unwrap_or(SCENARIO_ORDER.len());
    let method = r
        .config
        .retriever
        .as_ref()
        .map(|s| s.config.method.as_str().to_string())
        .unwrap_or_default();
    (scenario, method, r.config.system_label())
}

fn system_name<T: Scalar>(r: &RunRecord<T>, ks: &[usize]) -> String {
    let ks = ks.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
    let method = r
        .config
        .retriever
        .as_ref()
        .map(|s| method_label(s.config.method.as_str()));
    match (r.config.scenario, method) {
        (Scenario::QuestionRepeat, _) => r.config.system_label(),
        (Scenario::RetrievalOnly, Some(m)) => match &r.config.label {
            Some(l) => format!("{l} {m}@{ks}"),
            None => format!("{m}@{ks}"),
        },
        (Scenario::ClosedBook, _) => format!("{} Closed Book", r.config.system_label()),
        (_, Some(m)) => format!("{} {m}@{ks}", r.config.system_label()),
        (_, None) => r.config.system_label(),
    }
}

fn metric_columns<T: Scalar>(m: &MetricReport<T>) -> [T; 5] {
    let m = m.rounded();
    [m.answer_length, m.rouge_l, m.str_em, m.disambig_f1, m.dr]
}

fn fmt1<T: Scalar>(x: T) -> String {
    format!("{:.1}", x.to_f64().unwrap_or(f64::NAN))
}

pub fn render_report<T: Scalar>(records: &[RunRecord<T>], format: ReportFormat) -> String {
    match format {
        ReportFormat::Markdown => render_markdown(records),
        ReportFormat::Csv => render_csv(records),
    }
}

fn render_markdown<T: Scalar>(records: &[RunRecord<T>]) -> String {
    // groups in order of first appearance, then stably by scenario
    let mut groups: Vec<((usize, String, String), Vec<&RunRecord<T>>)> = Vec::new();
    for r in records {
        let key = group_key(r);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    groups.sort_by_key(|(k, _)| k.0);

    let mut out = String::from(
        "| Scenario | System | Answer Length | Rouge-L | Str-EM | Disambig-F1 | DR |\n\
         |---|---|---|---|---|---|---|\n",
    );
    for (_, mut members) in groups {
        members.sort_by_key(|r| r.config.retriever.as_ref().map_or(0, |s| s.config.k));
        let ks: Vec<usize> = members
            .iter()
            .filter_map(|r| r.config.retriever.as_ref().map(|s| s.config.k))
            .collect();
        let first = members[0];
        let cells: Vec<String> = (0..5)
            .map(|col| {
                members
                    .iter()
                    .map(|r| match &r.evaluation {
                        Some(ev) => fmt1(metric_columns(&ev.report)[col]),
                        None => "n/a".into(),
                    })
                    .collect::<Vec<_>>()
                    .join(" / ")
            })
            .collect();
        let _ = writeln!(
            out,
            "| {} | {} | {} |",
            first.config.scenario,
            system_name(first, &ks),
            cells.join(" | ")
        );
    }
    out
}

fn render_csv<T: Scalar>(records: &[RunRecord<T>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in records {
        let k = r.config.retriever.as_ref().map_or(0, |s| s.config.k);
        let metrics: Vec<String> = match &r.evaluation {
            Some(ev) => metric_columns(&ev.report).iter().map(|x| fmt1(*x)).collect(),
            None => vec![String::new(); 5],
        };
        let mut row = vec![r.config.scenario.to_string(), system_name(r, &[k]), k.to_string()];
        row.extend(metrics);
        row.push(r.config_hash.clone());
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Split;
    use crate::harness::{ExperimentConfig, RetrieverSpec, Timings};
    use crate::metrics::Evaluation;
    use crate::retrieval::{RetrievalMethod, RetrieverConfig};

    fn record(scenario: Scenario, method: Option<RetrievalMethod>, k: usize, rouge: f64) -> RunRecord<f64> {
        let mut config = ExperimentConfig::new("d", Split::Dev, scenario, "out");
        config.label = Some("T5-base".into());
        config.retriever = method.map(|m| RetrieverSpec {
            config: RetrieverConfig {
                seed: Some(0),
                ..RetrieverConfig::new(m, k)
            },
            corpus: "c".into(),
            dense_store: None,
            query_vectors: None,
        });
        RunRecord {
            config_hash: config.content_hash(),
            config,
            rows: Vec::new(),
            failures: Vec::new(),
            evaluation: Some(Evaluation {
                report: MetricReport::new(60.0, rouge, 10.0, 4.0).unwrap(),
                per_sample: Vec::new(),
            }),
            timings: Timings::default(),
            tool_version: "t".into(),
        }
    }

    #[test]
    fn single_record_one_row() {
        let md = render_report(
            &[record(Scenario::ClosedBook, None, 0, 30.0)],
            ReportFormat::Markdown,
        );
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(
            lines[2],
            "| closed_book | T5-base Closed Book | 60.0 | 30.0 | 10.0 | 4.0 | 11.0 |"
        );
    }

    #[test]
    fn k_variants_collapse_in_k_order() {
        let recs = [
            record(Scenario::OpenBook, Some(RetrievalMethod::Dense), 5, 35.0),
            record(Scenario::OpenBook, Some(RetrievalMethod::Dense), 1, 31.0),
            record(Scenario::OpenBook, Some(RetrievalMethod::Dense), 3, 33.0),
        ];
        let md = render_report(&recs, ReportFormat::Markdown);
        let row = md.lines().nth(2).unwrap();
        assert!(
            row.starts_with("| open_book | T5-base DENSE@1,3,5 | 60.0 / 60.0 / 60.0 | 31.0 / 33.0 / 35.0 |"),
            "{row}"
        );
        assert_eq!(md.lines().count(), 3);
    }

    #[test]
    fn groups_follow_scenario_order() {
        let recs = [
            record(Scenario::OpenBook, Some(RetrievalMethod::Bm25), 1, 31.0),
            record(Scenario::ClosedBook, None, 0, 30.0),
        ];
        let md = render_report(&recs, ReportFormat::Markdown);
        assert!(md.lines().nth(2).unwrap().contains("Closed Book"));
        assert!(md.lines().nth(3).unwrap().contains("BM25@1"));
    }

    #[test]
    fn csv_round_trips() {
        let recs = [
            record(Scenario::RetrievalOnly, Some(RetrievalMethod::Bm25), 1, 31.4),
            record(Scenario::RandomRetrieval, Some(RetrievalMethod::Random), 3, 20.0),
        ];
        let text = render_report(&recs, ReportFormat::Csv);
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        assert_eq!(rd.headers().unwrap().iter().collect::<Vec<_>>(), CSV_HEADER);
        let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
        assert_eq!(rows.len(), 2);
        assert_eq!(&rows[0][4], "31.4");
        assert_eq!(&rows[1][1], "T5-base Random@3");
    }
}
