//! Timestamp handling. All event times are integer microseconds since the
//! Unix epoch.

use chrono::{DateTime, NaiveDate, NaiveDateTime, SecondsFormat, Utc};

pub type Micros = i64;

/// Parses an ISO-8601 timestamp into microseconds since the epoch.
///
/// Accepted shapes: RFC 3339 with offset (`2021-03-01T10:00:00.123Z`),
/// naive date-times with `T` or a space separator (interpreted as UTC),
/// bare dates, and plain integers (taken as microseconds).
pub fn parse_timestamp(raw: &str) -> Option<Micros> {
    let s = raw.trim();
    if s.is_empty() {
        return None;
    }
    if let Ok(v) = s.parse::<i64>() {
        return Some(v);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp_micros());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt.and_utc().timestamp_micros());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|dt| dt.and_utc().timestamp_micros())
}

/// Formats microseconds as RFC 3339 with microsecond precision.
pub fn format_timestamp(micros: Micros) -> String {
    match DateTime::<Utc>::from_timestamp_micros(micros) {
        Some(dt) => dt.to_rfc3339_opts(SecondsFormat::Micros, true),
        None => micros.to_string(),
    }
}
