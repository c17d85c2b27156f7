//! Text, CSV and JSON rendering of [`MetricsReport`]s.

use serde::{Deserialize, Serialize};

use super::MetricsReport;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    TableText,
    Csv,
    Json,
}

const COLUMNS: [&str; 6] = ["Method", "Accuracy(%)", "Precision(%)", "Recall(%)", "F1(%)", "EM(%)"];

fn row(r: &MetricsReport) -> [String; 6] {
    let s = &r.scores;
    let pct = |x: f64| format!("{:.2}", x * 100.0);
    [
        r.method.clone(),
        pct(s.accuracy),
        pct(s.precision),
        pct(s.recall),
        pct(s.f1),
        pct(s.em),
    ]
}

/// Render one or more reports. Table and CSV give one row per report with
/// table values in percent and CSV values as fractions; JSON is an array.
pub fn render_report(reports: &[MetricsReport], format: ReportFormat) -> String {
    match format {
        ReportFormat::TableText => {
            let rows: Vec<[String; 6]> = reports.iter().map(row).collect();
            let mut widths = COLUMNS.map(str::len);
            for r in &rows {
                for (w, cell) in widths.iter_mut().zip(r) {
                    *w = (*w).max(cell.len());
                }
            }
            let line = |cells: &[String]| {
                let padded: Vec<String> = cells
                    .iter()
                    .zip(widths)
                    .enumerate()
                    .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                    .collect();
                padded.join("  ").trim_end().to_string() + "\n"
            };
            let mut out = line(&COLUMNS.map(String::from));
            let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
            out += &line(&rule);
            for r in &rows {
                out += &line(r);
            }
            out
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["method", "accuracy", "precision", "recall", "f1", "em"])
                .expect("writing to memory");
            for r in reports {
                let s = &r.scores;
                w.write_record([
                    r.method.clone(),
                    s.accuracy.to_string(),
                    s.precision.to_string(),
                    s.recall.to_string(),
                    s.f1.to_string(),
                    s.em.to_string(),
                ])
                .expect("writing to memory");
            }
            String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv output is utf-8")
        }
        ReportFormat::Json => serde_json::to_string_pretty(reports).expect("reports serialize") + "\n",
    }
}
