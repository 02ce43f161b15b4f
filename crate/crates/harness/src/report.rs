use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use erm_lab_core::{Error, Result};

use crate::suite::RunReport;
use crate::trial::TrialRecord;

pub const CSV_HEADER: &str = "trial,reduction,n,d,t,oracle,verdict,agree,stat_lo,stat_hi,thresh_lo,thresh_hi,bits,ms";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            _ => Err(Error::Parameter(format!("unknown report format '{s}'"))),
        }
    }
}

fn row(r: &TrialRecord) -> [String; 14] {
    [
        r.trial.to_string(),
        r.reduction.as_str().to_string(),
        r.n.to_string(),
        r.d.to_string(),
        r.t.map(|t| t.to_string()).unwrap_or_default(),
        r.oracle.as_str().to_string(),
        r.verdict.as_str().to_string(),
        r.agree.to_string(),
        r.stat_lo.clone(),
        r.stat_hi.clone(),
        r.thresh_lo.clone(),
        r.thresh_hi.clone(),
        r.bits.to_string(),
        format!("{:.3}", r.ms),
    ]
}

fn csv(report: &RunReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER.split(',')).map_err(io)?;
    for r in &report.records {
        w.write_record(row(r)).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One table row per trial under a header row; scaling rows, if any, in a
/// second table.
fn markdown(report: &RunReport) -> String {
    let a = &report.aggregate;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# erm-lab report\n\nagreement {}/{} decided, undecidable {}, failed {}, digest `{}`\n",
        a.agreed, a.decided, a.undecidable, a.failed, report.digest
    );
    if !report.records.is_empty() {
        let _ = writeln!(s, "| {} |", CSV_HEADER.replace(',', " | "));
        let _ = writeln!(s, "|{}", "---|".repeat(14));
        for r in &report.records {
            let _ = writeln!(s, "| {} |", row(r).join(" | "));
        }
    }
    if !report.scaling.is_empty() {
        let _ = writeln!(s, "\n## oracle scaling\n");
        let _ = writeln!(s, "| n | d | runs | ms_per_run | ratio |\n|---|---|---|---|---|");
        for r in &report.scaling {
            let ratio = r.ratio.map(|x| format!("{x:.2}")).unwrap_or_default();
            let _ = writeln!(s, "| {} | {} | {} | {:.4} | {} |", r.n, r.d, r.runs, r.ms_per_run, ratio);
        }
    }
    s
}

pub fn render_report(report: &RunReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(report).expect("report serializes") + "\n"),
        ReportFormat::Csv => csv(report),
        ReportFormat::Markdown => Ok(markdown(report)),
    }
}

pub fn emit_report(report: &RunReport, format: ReportFormat, path: &Path) -> Result<()> {
    std::fs::write(path, render_report(report, format)?)?;
    Ok(())
}
