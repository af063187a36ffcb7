use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

/// A calendar quarter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Quarter {
    year: i32,
    q: u8,
}

impl Quarter {
    pub fn new(year: i32, q: u8) -> Self {
        assert!((1..=4).contains(&q), "quarter must be 1..=4, got {q}");
        Quarter { year, q }
    }

    pub fn containing(date: NaiveDate) -> Self {
        Quarter::new(date.year(), ((date.month() - 1) / 3 + 1) as u8)
    }

    /// Linear index: consecutive quarters differ by one.
    pub fn index(self) -> i32 {
        self.year * 4 + (self.q as i32 - 1)
    }

    pub fn from_index(index: i32) -> Self {
        Quarter::new(index.div_euclid(4), (index.rem_euclid(4) + 1) as u8)
    }

    pub fn offset(self, quarters: i32) -> Self {
        Quarter::from_index(self.index() + quarters)
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn number(self) -> u8 {
        self.q
    }

    pub fn first_day(self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year, 3 * (self.q as u32 - 1) + 1, 1).expect("valid quarter start")
    }

    pub fn last_day(self) -> NaiveDate {
        self.offset(1).first_day().pred_opt().expect("valid quarter end")
    }

    pub fn days(self) -> i64 {
        (self.last_day() - self.first_day()).num_days() + 1
    }
}

impl fmt::Display for Quarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year, self.q)
    }
}

impl FromStr for Quarter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (y, q) = s
            .split_once('Q')
            .ok_or_else(|| format!("expected YYYYQn, got `{s}`"))?;
        let year = y.parse().map_err(|_| format!("bad year in `{s}`"))?;
        let q: u8 = q.parse().map_err(|_| format!("bad quarter in `{s}`"))?;
        if !(1..=4).contains(&q) {
            return Err(format!("quarter out of range in `{s}`"));
        }
        Ok(Quarter::new(year, q))
    }
}
