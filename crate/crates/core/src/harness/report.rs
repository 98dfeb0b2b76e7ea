use std::fmt::Write as _;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::{ExperimentId, ExperimentReport, HarnessError};

const NA: &str = "NA";

/// CSV header for a report of the given experiment. E3 adds the group and
/// gap columns.
pub fn csv_header(id: ExperimentId) -> Vec<&'static str> {
    let mut header = vec![
        "n",
        "delta",
        "protocol",
        "empirical_mean",
        "stderr",
        "analytical",
        "abs_diff",
    ];
    if id == ExperimentId::E3 {
        header.extend(["group", "gap_db"]);
    }
    header
}

fn number(v: f64) -> String {
    if v.is_nan() {
        NA.to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.6}")
    }
}

fn optional(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), number)
}

/// Writes the report as CSV. An empty report yields the header only.
pub fn write_csv<W: Write>(report: &ExperimentReport, out: W) -> Result<(), csv::Error> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(csv_header(report.id))?;
    for row in &report.rows {
        let mut record = vec![
            row.n.to_string(),
            row.delta.to_string(),
            row.protocol.name().to_string(),
            number(row.empirical_mean),
            number(row.stderr),
            optional(row.analytical),
            optional(row.abs_diff()),
        ];
        if report.id == ExperimentId::E3 {
            record.push(row.group.map_or(NA, |g| g.name()).to_string());
            record.push(optional(row.gap_db));
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes the report as CSV to `path`, creating or truncating it.
pub fn emit_csv(report: &ExperimentReport, path: &Path) -> Result<(), HarnessError> {
    let file = File::create(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv(report, file).map_err(|source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

/// Human-readable table with a footer carrying the run parameters.
pub fn render_table(report: &ExperimentReport) -> String {
    let e3 = report.id == ExperimentId::E3;
    let mut s = String::new();
    let _ = write!(s, "{:>4} {:>6} {:>5} {:>9}", "n", "delta", "proto", "cap");
    if e3 {
        let _ = write!(s, " {:>5} {:>7}", "group", "gap_db");
    }
    let _ = writeln!(
        s,
        " {:>12} {:>10} {:>12} {:>10}",
        "mean_aoi", "stderr", "analytical", "abs_diff"
    );
    for row in &report.rows {
        let _ = write!(
            s,
            "{:>4} {:>6} {:>5} {:>9.6}",
            row.n,
            row.delta,
            row.protocol.name(),
            row.p
        );
        if e3 {
            let _ = write!(
                s,
                " {:>5} {:>7}",
                row.group.map_or(NA, |g| g.name()),
                row.gap_db
                    .map_or_else(|| NA.to_string(), |g| format!("{g:.1}"))
            );
        }
        let fmt4 = |v: f64| {
            if v.is_nan() {
                NA.to_string()
            } else {
                format!("{v:.4}")
            }
        };
        let _ = writeln!(
            s,
            " {:>12} {:>10} {:>12} {:>10}",
            fmt4(row.empirical_mean),
            fmt4(row.stderr),
            row.analytical.map_or_else(|| NA.to_string(), fmt4),
            row.abs_diff().map_or_else(|| NA.to_string(), fmt4)
        );
    }
    let _ = writeln!(
        s,
        "# experiment={} horizon={} replications={} master_seed={}",
        report.id.name(),
        report.horizon,
        report.replications,
        report.master_seed
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{Group, Protocol, ReportRow};

    fn row(group: Option<Group>) -> ReportRow {
        ReportRow {
            n: 4,
            delta: 1,
            protocol: Protocol::Aira,
            p: 0.25,
            group,
            gap_db: group.map(|_| 2.0),
            empirical_mean: 9.5,
            stderr: f64::NAN,
            analytical: None,
            samples: vec![9.5],
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        let report = ExperimentReport {
            id: ExperimentId::E1,
            horizon: 10,
            replications: 1,
            master_seed: 3,
            rows: vec![],
        };
        let mut buf = Vec::new();
        write_csv(&report, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "n,delta,protocol,empirical_mean,stderr,analytical,abs_diff\n"
        );
    }

    #[test]
    fn e3_rows_carry_group_columns() {
        let report = ExperimentReport {
            id: ExperimentId::E3,
            horizon: 10,
            replications: 1,
            master_seed: 3,
            rows: vec![row(Some(Group::High))],
        };
        let mut buf = Vec::new();
        write_csv(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "n,delta,protocol,empirical_mean,stderr,analytical,abs_diff,group,gap_db"
        );
        assert_eq!(lines[1], "4,1,AIRA,9.500000,NA,NA,NA,high,2.000000");
    }

    #[test]
    fn table_footer_has_seed() {
        let report = ExperimentReport {
            id: ExperimentId::Custom,
            horizon: 10,
            replications: 1,
            master_seed: 777,
            rows: vec![row(None)],
        };
        assert!(render_table(&report).ends_with("master_seed=777\n"));
    }
}
