//! Audit report rendering: CSV (machine-readable) and plain text.

use std::fmt::Write as _;

use crate::audit::{AgentScope, AuditReport, ManipulationCheck};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 9] = [
    "agent",
    "true_pref",
    "misreport",
    "worst_truth",
    "worst_misreport",
    "best_truth",
    "best_misreport",
    "violates_i",
    "violates_ii",
];

/// One CSV row. Agents are 1-based; preferences are space-separated 1-based
/// object numbers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportRow {
    pub agent: usize,
    pub true_pref: String,
    pub misreport: String,
    pub worst_truth: usize,
    pub worst_misreport: usize,
    pub best_truth: usize,
    pub best_misreport: usize,
    pub violates_i: bool,
    pub violates_ii: bool,
}

impl From<&ManipulationCheck> for ReportRow {
    fn from(c: &ManipulationCheck) -> Self {
        Self {
            agent: c.agent + 1,
            true_pref: c.true_pref.to_string(),
            misreport: c.misreport.to_string(),
            worst_truth: c.worst_truth,
            worst_misreport: c.worst_misreport,
            best_truth: c.best_truth,
            best_misreport: c.best_misreport,
            violates_i: c.violates_i,
            violates_ii: c.violates_ii,
        }
    }
}

pub fn to_csv(report: &AuditReport) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for c in &report.checks {
        let r = ReportRow::from(c);
        w.write_record([
            r.agent.to_string(),
            r.true_pref,
            r.misreport,
            r.worst_truth.to_string(),
            r.worst_misreport.to_string(),
            r.best_truth.to_string(),
            r.best_misreport.to_string(),
            r.violates_i.to_string(),
            r.violates_ii.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// Reads rows written by [`to_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let bad = |line: usize, message: String| Error::Parse { line, message };
    let headers = rdr.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    if headers.iter().ne(CSV_HEADER) {
        return Err(bad(1, "unexpected CSV header".into()));
    }
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| bad(line, e.to_string()))?;
        let num = |i: usize| -> Result<usize> {
            rec[i]
                .parse()
                .map_err(|_| bad(line, format!("column {} is not an integer", CSV_HEADER[i])))
        };
        let flag = |i: usize| -> Result<bool> {
            rec[i]
                .parse()
                .map_err(|_| bad(line, format!("column {} is not a boolean", CSV_HEADER[i])))
        };
        rows.push(ReportRow {
            agent: num(0)?,
            true_pref: rec[1].to_string(),
            misreport: rec[2].to_string(),
            worst_truth: num(3)?,
            worst_misreport: num(4)?,
            best_truth: num(5)?,
            best_misreport: num(6)?,
            violates_i: flag(7)?,
            violates_ii: flag(8)?,
        });
    }
    Ok(rows)
}

pub fn to_text(report: &AuditReport) -> String {
    let inst = &report.instance;
    let mut out = String::new();
    let caps: Vec<String> = inst.capacities().iter().map(|q| q.to_string()).collect();
    writeln!(out, "mechanism: {}", report.mechanism).unwrap();
    writeln!(
        out,
        "instance: N={} M={} capacities={}",
        inst.n_agents(),
        inst.n_objects(),
        caps.join(",")
    )
    .unwrap();
    let scope = match report.scope {
        AgentScope::One(a) => format!("agent {}", a + 1),
        AgentScope::All => "all agents".to_string(),
    };
    writeln!(out, "scope: {scope}").unwrap();
    writeln!(out, "checks: {}", report.checks.len()).unwrap();
    let flagged: Vec<&ManipulationCheck> = report.violations().collect();
    writeln!(out, "violations: {}", flagged.len()).unwrap();
    writeln!(
        out,
        "verdict: {}",
        if report.obviously_manipulable {
            "obviously manipulable"
        } else {
            "no obvious manipulation found"
        }
    )
    .unwrap();
    writeln!(
        out,
        "note: exhaustive over every opponent profile of this instance; evidence for this instance only, not a general proof"
    )
    .unwrap();
    for c in flagged {
        writeln!(
            out,
            "\nagent {} true [{}] misreport [{}]",
            c.agent + 1,
            c.true_pref,
            c.misreport
        )
        .unwrap();
        writeln!(
            out,
            "  worst case: truth {} vs misreport {}{}",
            c.worst_truth,
            c.worst_misreport,
            if c.violates_i { "  (violated)" } else { "" }
        )
        .unwrap();
        writeln!(
            out,
            "  best case:  truth {} vs misreport {}{}",
            c.best_truth,
            c.best_misreport,
            if c.violates_ii { "  (violated)" } else { "" }
        )
        .unwrap();
        for (label, w) in [("worst", &c.witness_i), ("best", &c.witness_ii)] {
            if let Some(w) = w {
                writeln!(out, "  {label}-case witness, truth: {}", w.truth).unwrap();
                writeln!(out, "  {label}-case witness, misreport: {}", w.misreport).unwrap();
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_header() {
        assert!(parse_csv("a,b\n1,2\n").is_err());
    }

    #[test]
    fn rejects_bad_cells() {
        let text = format!("{}\n1,1 2,2 1,x,1,1,1,false,false\n", CSV_HEADER.join(","));
        assert!(matches!(
            parse_csv(&text),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
