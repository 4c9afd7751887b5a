//! Working hours and slot-calendar arithmetic.
//!
//! All times here are hospital-local wall-clock times. A doctor's week is a
//! set of non-overlapping `[start, end)` intervals per weekday; bookable slots
//! are tiled from the start of each interval and any trailing remainder that
//! is shorter than one slot is dropped.

use std::collections::BTreeMap;
use std::fmt;
use std::num::NonZeroU32;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::domain::DoctorId;

const MINUTES_PER_DAY: u16 = 24 * 60;

/// Minutes since local midnight, rendered as `HH:MM`.
///
/// `24:00` is representable so that a working interval can run until
/// midnight, but it never appears as a slot start.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimeOfDay(u16);

#[derive(Debug, Error, PartialEq, Eq)]
#[error("time must be HH:MM in 24-hour format, got {0:?}")]
pub struct TimeParseError(pub String);

impl TimeOfDay {
    pub const MIDNIGHT: TimeOfDay = TimeOfDay(0);

    pub fn from_minutes(minutes: u16) -> Option<Self> {
        (minutes <= MINUTES_PER_DAY).then_some(TimeOfDay(minutes))
    }

    pub fn from_hm(hour: u16, minute: u16) -> Option<Self> {
        if minute >= 60 {
            return None;
        }
        Self::from_minutes(hour.checked_mul(60)?.checked_add(minute)?)
    }

    pub fn minutes(self) -> u16 {
        self.0
    }

    /// The time `minutes` later, if still within the day.
    pub fn plus(self, minutes: u32) -> Option<Self> {
        let total = u32::from(self.0) + minutes;
        u16::try_from(total).ok().and_then(Self::from_minutes)
    }

    pub fn to_naive(self) -> Option<chrono::NaiveTime> {
        chrono::NaiveTime::from_hms_opt(u32::from(self.0 / 60), u32::from(self.0 % 60), 0)
    }
}

impl fmt::Display for TimeOfDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}", self.0 / 60, self.0 % 60)
    }
}

impl FromStr for TimeOfDay {
    type Err = TimeParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || TimeParseError(s.to_owned());
        let bytes = s.as_bytes();
        if bytes.len() != 5 || bytes[2] != b':' {
            return Err(err());
        }
        let digits = |range: std::ops::Range<usize>| -> Result<u16, TimeParseError> {
            let part = &s[range];
            if !part.bytes().all(|b| b.is_ascii_digit()) {
                return Err(err());
            }
            part.parse().map_err(|_| err())
        };
        let (hour, minute) = (digits(0..2)?, digits(3..5)?);
        if hour > 24 || (hour == 24 && minute != 0) {
            return Err(err());
        }
        TimeOfDay::from_hm(hour, minute).ok_or_else(err)
    }
}

impl Serialize for TimeOfDay {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TimeOfDay {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weekday {
    Monday,
    Tuesday,
    Wednesday,
    Thursday,
    Friday,
    Saturday,
    Sunday,
}

impl Weekday {
    pub const ALL: [Weekday; 7] = [
        Weekday::Monday,
        Weekday::Tuesday,
        Weekday::Wednesday,
        Weekday::Thursday,
        Weekday::Friday,
        Weekday::Saturday,
        Weekday::Sunday,
    ];

    pub fn of(date: NaiveDate) -> Self {
        Self::ALL[date.weekday().num_days_from_monday() as usize]
    }
}

/// One contiguous working period, `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WorkInterval {
    pub start: TimeOfDay,
    pub end: TimeOfDay,
}

impl WorkInterval {
    pub fn new(start: TimeOfDay, end: TimeOfDay) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, start: TimeOfDay, end: TimeOfDay) -> bool {
        self.start <= start && end <= self.end
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WorkingHoursError {
    #[error("{day:?} interval {start}-{end} must start before it ends")]
    EmptyInterval {
        day: Weekday,
        start: TimeOfDay,
        end: TimeOfDay,
    },
    #[error("{day:?} intervals {first} and {second} overlap")]
    Overlap {
        day: Weekday,
        first: String,
        second: String,
    },
}

/// Weekly working hours. Weekdays that are absent have no working time.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WorkingHours(BTreeMap<Weekday, Vec<WorkInterval>>);

impl WorkingHours {
    /// Validates and normalises (sorts) the intervals of every weekday.
    pub fn new(
        days: impl IntoIterator<Item = (Weekday, Vec<WorkInterval>)>,
    ) -> Result<Self, WorkingHoursError> {
        let mut map: BTreeMap<Weekday, Vec<WorkInterval>> = BTreeMap::new();
        for (day, intervals) in days {
            map.entry(day).or_default().extend(intervals);
        }
        let hours = WorkingHours(map);
        hours.normalized()
    }

    /// Re-checks invariants; used after deserialising untrusted input.
    pub fn normalized(mut self) -> Result<Self, WorkingHoursError> {
        for (&day, intervals) in self.0.iter_mut() {
            intervals.sort();
            for iv in intervals.iter() {
                if iv.start >= iv.end {
                    return Err(WorkingHoursError::EmptyInterval {
                        day,
                        start: iv.start,
                        end: iv.end,
                    });
                }
            }
            for pair in intervals.windows(2) {
                if pair[1].start < pair[0].end {
                    return Err(WorkingHoursError::Overlap {
                        day,
                        first: format!("{}-{}", pair[0].start, pair[0].end),
                        second: format!("{}-{}", pair[1].start, pair[1].end),
                    });
                }
            }
        }
        self.0.retain(|_, v| !v.is_empty());
        Ok(self)
    }

    pub fn on(&self, day: Weekday) -> &[WorkInterval] {
        self.0.get(&day).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A bookable unit: one doctor, one local date, one start time.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeSlot {
    pub doctor_id: DoctorId,
    pub date: NaiveDate,
    pub start: TimeOfDay,
    pub duration_minutes: u32,
}

impl TimeSlot {
    pub fn end(&self) -> TimeOfDay {
        self.start
            .plus(self.duration_minutes)
            .expect("slot end lies within the day")
    }
}

/// Every slot of `slot_minutes` that fits in the doctor's working hours on
/// `date`, tiled from each interval's start, sorted by start time.
pub fn generate_slots(
    doctor_id: DoctorId,
    hours: &WorkingHours,
    date: NaiveDate,
    slot_minutes: NonZeroU32,
) -> Vec<TimeSlot> {
    let length = slot_minutes.get();
    let mut slots = Vec::new();
    for interval in hours.on(Weekday::of(date)) {
        let mut start = interval.start;
        while let Some(end) = start.plus(length) {
            if end > interval.end {
                break;
            }
            slots.push(TimeSlot {
                doctor_id,
                date,
                start,
                duration_minutes: length,
            });
            start = end;
        }
    }
    slots.sort_by_key(|s| s.start);
    slots
}

/// True iff both slots belong to the same doctor and date and their time
/// ranges intersect with positive length. Touching endpoints do not overlap.
pub fn slot_overlaps(a: &TimeSlot, b: &TimeSlot) -> bool {
    a.doctor_id == b.doctor_id
        && a.date == b.date
        && u32::from(a.start.minutes()) < u32::from(b.start.minutes()) + b.duration_minutes
        && u32::from(b.start.minutes()) < u32::from(a.start.minutes()) + a.duration_minutes
}
