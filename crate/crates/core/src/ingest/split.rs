use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use super::master::MasterTable;
use super::IngestError;
use crate::clock::{day_start_quarter, Quarter, QUARTERS_PER_DAY};

/// Half-open UTC date interval `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Self {
        Self { start, end }
    }

    pub fn days(&self) -> i64 {
        (self.end - self.start).num_days()
    }

    fn quarters(&self) -> (Quarter, Quarter) {
        (day_start_quarter(self.start), day_start_quarter(self.end))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: DateRange,
    pub validation: DateRange,
    pub test: DateRange,
}

impl SplitSpec {
    /// Test is the last `test_days`, validation the `validation_days` before it,
    /// train everything earlier.
    pub fn tail(start: NaiveDate, n_days: usize, validation_days: usize, test_days: usize) -> Result<Self, IngestError> {
        if validation_days + test_days > n_days {
            return Err(IngestError::Split(format!(
                "{validation_days} validation + {test_days} test days exceed the {n_days}-day span"
            )));
        }
        let day = |k: usize| start.checked_add_days(Days::new(k as u64)).expect("date in range");
        let (v0, t0) = (n_days - validation_days - test_days, n_days - test_days);
        Ok(Self {
            train: DateRange::new(day(0), day(v0)),
            validation: DateRange::new(day(v0), day(t0)),
            test: DateRange::new(day(t0), day(n_days)),
        })
    }

    /// The default for a table: 15 test days and 16 validation days, shrunk
    /// proportionally for short tables.
    pub fn default_for(table: &MasterTable) -> Result<Self, IngestError> {
        let n_days = table.n_quarters / QUARTERS_PER_DAY as usize;
        let start = crate::clock::to_datetime(crate::clock::quarter_start(table.start)).date();
        let (val, test) = if n_days >= 62 { (16, 15) } else { (n_days * 16 / 60, n_days / 4) };
        Self::tail(start, n_days, val, test)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        for (name, r) in [("train", self.train), ("validation", self.validation), ("test", self.test)] {
            if r.end < r.start {
                return Err(IngestError::Split(format!("{name} range {} .. {} is reversed", r.start, r.end)));
            }
        }
        if self.train.end > self.validation.start || self.validation.end > self.test.start {
            return Err(IngestError::Split("ranges overlap or are out of order".into()));
        }
        Ok(())
    }
}

/// Partitions `table` into train, validation and test tables.
pub fn split(table: &MasterTable, spec: &SplitSpec) -> Result<[MasterTable; 3], IngestError> {
    spec.validate()?;
    let (lo, _) = spec.train.quarters();
    let (_, hi) = spec.test.quarters();
    let gaps = spec.train.end != spec.validation.start || spec.validation.end != spec.test.start;
    if gaps || lo > table.start || hi < table.end() {
        return Err(IngestError::Split(format!(
            "split {}..{} with gaps={gaps} does not cover the table",
            spec.train.start, spec.test.end
        )));
    }
    Ok([spec.train, spec.validation, spec.test].map(|r| {
        let (a, b) = r.quarters();
        table.slice(a, b)
    }))
}
