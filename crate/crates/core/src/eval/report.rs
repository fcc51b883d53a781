//! CSV and Markdown renderings of evaluation results.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::GroupReport;

/// Per-query rows: query_id, scenario, scorer, rank, rr, ndcg10, ndcg20.
pub fn write_group_csv<W: std::io::Write>(report: &GroupReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["query_id", "scenario", "scorer", "rank", "rr", "ndcg10", "ndcg20"])?;
    for o in &report.outcomes {
        w.write_record([
            o.query_id.clone(),
            o.scenario.to_string(),
            o.method.clone(),
            format!("{}", o.rank),
            format!("{:.6}", o.rr),
            format!("{:.6}", o.ndcg10),
            format!("{:.6}", o.ndcg20),
        ])?;
    }
    w.flush().map_err(|e| Error::Eval(e.to_string()))
}

pub fn significance_csv<W: std::io::Write>(reports: &[GroupReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["group", "method_a", "method_b", "mrr_a", "mrr_b", "n", "statistic", "p_value"])?;
    for r in reports {
        for t in &r.significance {
            w.write_record([
                r.group_id.to_string(),
                t.method_a.clone(),
                t.method_b.clone(),
                format!("{:.4}", t.mrr_a),
                format!("{:.4}", t.mrr_b),
                t.test.n.to_string(),
                format!("{}", t.test.statistic),
                format!("{:.6e}", t.test.p_value),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::Eval(e.to_string()))
}

/// One table of MRR / NDCG per group, then the group-by-method MRR grid.
pub fn summary_markdown(reports: &[GroupReport]) -> String {
    let mut s = String::from("# Evaluation summary\n");
    for r in reports {
        let _ = writeln!(s, "\n## Group {}\n", r.group_id);
        s.push_str("| method | queries | MRR | NDCG@10 | NDCG@20 | not retrieved |\n");
        s.push_str("|---|---:|---:|---:|---:|---:|\n");
        for m in &r.summaries {
            let _ = writeln!(
                s,
                "| {} | {} | {:.4} | {:.4} | {:.4} | {} |",
                m.method, m.queries, m.mrr, m.ndcg10, m.ndcg20, m.missing
            );
        }
    }
    if let Some(first) = reports.first() {
        s.push_str("\n## MRR by group\n\n| group |");
        for m in &first.summaries {
            let _ = write!(s, " {} |", m.method);
        }
        s.push_str("\n|---|");
        s.push_str(&"---:|".repeat(first.summaries.len()));
        s.push('\n');
        for r in reports {
            let _ = write!(s, "| {} |", r.group_id);
            for m in &r.summaries {
                let _ = write!(s, " {:.4} |", m.mrr);
            }
            s.push('\n');
        }
    }
    s
}

/// Writes `group<k>.csv`, `summary.md` and `significance.csv` into `dir`.
pub fn write_report(reports: &[GroupReport], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for r in reports {
        let path = dir.join(format!("group{}.csv", r.group_id));
        let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        write_group_csv(r, std::io::BufWriter::new(f))?;
    }
    let path = dir.join("significance.csv");
    let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    significance_csv(reports, std::io::BufWriter::new(f))?;
    let path = dir.join("summary.md");
    fs::write(&path, summary_markdown(reports)).map_err(|e| Error::io(&path, e))
}
