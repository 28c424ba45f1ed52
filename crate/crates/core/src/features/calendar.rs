use chrono::{Datelike, NaiveDate, Timelike, Weekday};

use super::FeatureError;
use crate::airports::{AirportInfo, AIRPORTS};
use crate::clock::{date_minute, to_datetime, UtcMinute};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CalendarFields {
    /// 0 = January.
    pub month: u32,
    pub local_hour: u32,
    /// 0 = Monday.
    pub day_of_week: u32,
}

fn nth_sunday(year: i32, month: u32, n: u32) -> NaiveDate {
    NaiveDate::from_weekday_of_month_opt(year, month, Weekday::Sun, n as u8).expect("every month has a first and second Sunday")
}

/// Offset of local time from UTC in minutes at instant `utc`. US rule: DST
/// begins the second Sunday of March at 02:00 standard time and ends the
/// first Sunday of November at 02:00 daylight time.
pub fn local_offset_minutes(info: &AirportInfo, utc: UtcMinute) -> i64 {
    let std = i64::from(info.utc_offset_hours) * 60;
    if !info.observes_dst {
        return std;
    }
    let year = to_datetime(utc + std).year();
    let start = date_minute(nth_sunday(year, 3, 2)) + 120 - std;
    let end = date_minute(nth_sunday(year, 11, 1)) + 120 - (std + 60);
    if (start..end).contains(&utc) {
        std + 60
    } else {
        std
    }
}

pub fn local_calendar(info: &AirportInfo, utc: UtcMinute) -> CalendarFields {
    let local = to_datetime(utc + local_offset_minutes(info, utc));
    CalendarFields {
        month: local.month0(),
        local_hour: local.hour(),
        day_of_week: local.weekday().num_days_from_monday(),
    }
}

/// Calendar fields for a built-in airport by table index.
pub fn calendar_features(utc: UtcMinute, airport: usize) -> Result<CalendarFields, FeatureError> {
    let info = AIRPORTS
        .get(airport)
        .ok_or_else(|| FeatureError::UnknownAirport(airport.to_string()))?;
    Ok(local_calendar(info, utc))
}
