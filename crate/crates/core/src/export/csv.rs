use std::io::Write;

use crate::analysis::{ConformanceTable, EventLog, TemporalViolation};
use crate::error::Result;
use crate::time::format_timestamp;

pub fn write_violations(violations: &[TemporalViolation], out: impl Write) -> Result<()> {
    let mut w = ::csv::Writer::from_writer(out);
    w.write_record([
        "cause",
        "effect",
        "cause_type",
        "effect_type",
        "cause_time",
        "effect_time",
    ])?;
    for v in violations {
        w.write_record([
            v.cause.as_str(),
            &v.effect,
            &v.cause_type,
            &v.effect_type,
            &format_timestamp(v.cause_timestamp),
            &format_timestamp(v.effect_timestamp),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_event_log(log: &EventLog, out: impl Write) -> Result<()> {
    let mut w = ::csv::Writer::from_writer(out);
    w.write_record(["case", "activity", "timestamp", "event"])?;
    for r in &log.rows {
        w.write_record([
            r.case.as_str(),
            &r.activity,
            &format_timestamp(r.timestamp),
            &r.event,
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn percent(expected: usize, unexpected: usize) -> String {
    match crate::analysis::conformance::ratio_percent(expected, unexpected) {
        Some(p) => format!("{p:.2}%"),
        None if unexpected == 0 => "0.00%".to_string(),
        None => "n/a".to_string(),
    }
}

/// Source × target grid. A cell holds `expected / unexpected` on expected
/// targets and `0 / 0` elsewhere; the last column totals the row.
pub fn write_conformance_grid(table: &ConformanceTable, out: impl Write) -> Result<()> {
    let mut w = ::csv::Writer::from_writer(out);
    let mut header = vec!["source".to_string()];
    header.extend(table.activities.iter().cloned());
    header.push("Total".into());
    w.write_record(&header)?;
    for source in &table.activities {
        let mut record = vec![source.clone()];
        match table.row(source) {
            Some(row) => {
                for target in &table.activities {
                    let cell = match row.expected.iter().find(|(t, _)| t == target) {
                        Some((_, n)) => format!("{n} / {}", row.unexpected),
                        None => "0 / 0".into(),
                    };
                    record.push(cell);
                }
                let e = row.expected_total();
                record.push(format!(
                    "{e} / {} ({})",
                    row.unexpected,
                    percent(e, row.unexpected)
                ));
            }
            None => {
                record.extend(table.activities.iter().map(|_| "0 / 0".to_string()));
                record.push("0 / 0 (0.00%)".into());
            }
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Violations per expected type-pair: `source,target,violations`.
pub fn write_violation_counts(table: &ConformanceTable, out: impl Write) -> Result<()> {
    let mut w = ::csv::Writer::from_writer(out);
    w.write_record(["source", "target", "violations"])?;
    for ((a, b), n) in &table.violations {
        w.write_record([a.as_str(), b, &n.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
