use chrono::{Datelike, Days, NaiveDate};
use data_ingest::DateRange;
use serde::{Deserialize, Serialize};

/// Hand-engineered 0/1 calendar features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalendarFlag {
    ChristmasWeek,
    EasterWeek,
    SchoolHolidays,
    BusDays,
    BorderClosed,
    NotableDates,
}

impl CalendarFlag {
    pub const ALL: [CalendarFlag; 6] = [
        CalendarFlag::ChristmasWeek,
        CalendarFlag::EasterWeek,
        CalendarFlag::SchoolHolidays,
        CalendarFlag::BusDays,
        CalendarFlag::BorderClosed,
        CalendarFlag::NotableDates,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CalendarFlag::ChristmasWeek => "christmas_week",
            CalendarFlag::EasterWeek => "easter_week",
            CalendarFlag::SchoolHolidays => "school_holidays",
            CalendarFlag::BusDays => "bus_days",
            CalendarFlag::BorderClosed => "border_closed",
            CalendarFlag::NotableDates => "notable_dates",
        }
    }
}

/// Date tables behind the calendar flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalendarConfig {
    /// First December day of the seven-day Christmas week.
    pub christmas_start_day: u32,
    pub school_holidays: Vec<DateRange>,
    pub bus_days: Vec<NaiveDate>,
    pub border_closed: Vec<DateRange>,
    pub notable_dates: Vec<NaiveDate>,
}

impl Default for CalendarConfig {
    fn default() -> Self {
        CalendarConfig {
            christmas_start_day: 24,
            school_holidays: Vec::new(),
            bus_days: Vec::new(),
            border_closed: Vec::new(),
            notable_dates: Vec::new(),
        }
    }
}

impl CalendarConfig {
    pub fn flag(&self, flag: CalendarFlag, date: NaiveDate) -> bool {
        match flag {
            CalendarFlag::ChristmasWeek => {
                date.month() == 12
                    && (self.christmas_start_day..self.christmas_start_day + 7).contains(&date.day())
            }
            CalendarFlag::EasterWeek => {
                let easter = easter_sunday(date.year());
                // Palm Sunday through Holy Saturday.
                let start = easter - Days::new(7);
                start <= date && date < easter
            }
            CalendarFlag::SchoolHolidays => self.school_holidays.iter().any(|r| r.contains(date)),
            CalendarFlag::BusDays => self.bus_days.contains(&date),
            CalendarFlag::BorderClosed => self.border_closed.iter().any(|r| r.contains(date)),
            CalendarFlag::NotableDates => self.notable_dates.contains(&date),
        }
    }

    pub fn value(&self, flag: CalendarFlag, date: NaiveDate) -> f64 {
        if self.flag(flag, date) {
            1.0
        } else {
            0.0
        }
    }
}

/// Gregorian Easter Sunday (anonymous Gregorian computus).
pub fn easter_sunday(year: i32) -> NaiveDate {
    let a = year % 19;
    let b = year / 100;
    let c = year % 100;
    let d = b / 4;
    let e = b % 4;
    let f = (b + 8) / 25;
    let g = (b - f + 1) / 3;
    let h = (19 * a + b - d - g + 15) % 30;
    let i = c / 4;
    let k = c % 4;
    let l = (32 + 2 * e + 2 * i - h - k) % 7;
    let m = (a + 11 * h + 22 * l) / 451;
    let month = (h + l - 7 * m + 114) / 31;
    let day = (h + l - 7 * m + 114) % 31 + 1;
    NaiveDate::from_ymd_opt(year, month as u32, day as u32).expect("computus yields a valid date")
}
