//! UTC timestamps as whole minutes since the Unix epoch, and the quarter-hour
//! bucketing used for every airport-level series.

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};

/// Minutes since 1970-01-01T00:00Z.
pub type UtcMinute = i64;
/// Quarter-hours since 1970-01-01T00:00Z.
pub type Quarter = i64;

pub const QUARTER_MINUTES: i64 = 15;
pub const QUARTERS_PER_DAY: i64 = 96;

pub fn quarter_of(minute: UtcMinute) -> Quarter {
    minute.div_euclid(QUARTER_MINUTES)
}

pub fn quarter_start(q: Quarter) -> UtcMinute {
    q * QUARTER_MINUTES
}

pub fn day_start_quarter(date: NaiveDate) -> Quarter {
    quarter_of(date_minute(date))
}

pub fn date_minute(date: NaiveDate) -> UtcMinute {
    date.and_hms_opt(0, 0, 0).expect("midnight exists").and_utc().timestamp() / 60
}

pub fn to_datetime(minute: UtcMinute) -> NaiveDateTime {
    DateTime::<Utc>::from_timestamp(minute * 60, 0)
        .expect("timestamp in chrono range")
        .naive_utc()
}

/// `YYYY-MM-DDTHH:MM:SSZ`.
pub fn format_utc(minute: UtcMinute) -> String {
    to_datetime(minute).format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

/// Parses an ISO-8601 UTC timestamp. Accepts RFC 3339 with any offset,
/// or a naive `YYYY-MM-DDTHH:MM[:SS]` taken as UTC. Seconds are truncated.
pub fn parse_utc(s: &str) -> Result<UtcMinute, String> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt.timestamp().div_euclid(60));
    }
    let s = s.strip_suffix('Z').unwrap_or(s);
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(dt.and_utc().timestamp().div_euclid(60));
        }
    }
    Err(format!("unparseable timestamp {s:?}"))
}
