//! Event-log parsing and per-day aggregation.
//!
//! Input is pre-counted: one record per `(user_id, day, count)`. The CSV form
//! has the header `user_id,day,count`; the JSONL form carries the same three
//! keys on every line. A day is either an ISO-8601 calendar date or an
//! integer index and is taken as given (no timezone handling).

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use chrono::NaiveDate;

use crate::error::{Error, Result};

/// Day identifier. Integer indices sort before calendar dates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DayKey {
    Index(i64),
    Date(NaiveDate),
}

impl fmt::Display for DayKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DayKey::Index(i) => write!(f, "{i}"),
            DayKey::Date(d) => write!(f, "{}", d.format("%Y-%m-%d")),
        }
    }
}

impl FromStr for DayKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Ok(i) = s.parse::<i64>() {
            return Ok(DayKey::Index(i));
        }
        NaiveDate::parse_from_str(s, "%Y-%m-%d")
            .map(DayKey::Date)
            .map_err(|_| format!("unparseable day {s:?}: expected YYYY-MM-DD or an integer"))
    }
}

/// One user's activity count on one day.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityEvent {
    pub user_id: String,
    pub day: DayKey,
    pub count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventFormat {
    Csv,
    Jsonl,
}

/// Distinct activity levels with the number of users at each, ascending by
/// level.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActivityHistogram {
    bins: Vec<(f64, u64)>,
}

impl ActivityHistogram {
    /// Builds from raw per-user activities. Non-finite or non-positive values
    /// are rejected.
    pub fn from_activities<I: IntoIterator<Item = f64>>(values: I) -> Result<Self> {
        let mut v: Vec<f64> = values.into_iter().collect();
        if let Some(bad) = v.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::domain(format!("activity must be finite and > 0, got {bad}")));
        }
        v.sort_by(f64::total_cmp);
        let mut bins: Vec<(f64, u64)> = Vec::new();
        for x in v {
            match bins.last_mut() {
                Some((level, n)) if *level == x => *n += 1,
                _ => bins.push((x, 1)),
            }
        }
        Ok(ActivityHistogram { bins })
    }

    /// Builds from `(level, users)` pairs; repeated levels are merged and
    /// zero counts dropped.
    pub fn from_counts<I: IntoIterator<Item = (f64, u64)>>(pairs: I) -> Result<Self> {
        let mut merged: BTreeMap<u64, (f64, u64)> = BTreeMap::new();
        for (level, n) in pairs {
            if !(level.is_finite() && level > 0.0) {
                return Err(Error::domain(format!("activity level must be finite and > 0, got {level}")));
            }
            if n == 0 {
                continue;
            }
            // positive finite floats order like their bit patterns
            merged.entry(level.to_bits()).or_insert((level, 0)).1 += n;
        }
        Ok(ActivityHistogram {
            bins: merged.into_values().collect(),
        })
    }

    pub fn bins(&self) -> &[(f64, u64)] {
        &self.bins
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn population(&self) -> u64 {
        self.bins.iter().map(|&(_, n)| n).sum()
    }

    pub fn total_activity(&self) -> f64 {
        self.bins.iter().map(|&(f, n)| f * n as f64).sum()
    }

    pub fn max_level(&self) -> Option<f64> {
        self.bins.last().map(|&(f, _)| f)
    }

    pub fn min_level(&self) -> Option<f64> {
        self.bins.first().map(|&(f, _)| f)
    }

    /// True when every level is a whole number.
    pub fn is_integral(&self) -> bool {
        self.bins.iter().all(|&(f, _)| f.fract() == 0.0)
    }

    /// One value per user, ascending.
    pub fn expand(&self) -> Vec<f64> {
        self.bins
            .iter()
            .flat_map(|&(f, n)| std::iter::repeat_n(f, n as usize))
            .collect()
    }
}

/// Aggregate state of one active day.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySnapshot {
    pub day: DayKey,
    /// Distinct active users, `P`.
    pub population: u64,
    /// Total activity, `F`.
    pub total_activity: f64,
    pub histogram: ActivityHistogram,
    pub f_max: f64,
}

impl DailySnapshot {
    pub fn from_histogram(day: DayKey, histogram: ActivityHistogram) -> Result<Self> {
        let f_max = histogram
            .max_level()
            .ok_or_else(|| Error::insufficient(format!("day {day} has no active users")))?;
        Ok(DailySnapshot {
            day,
            population: histogram.population(),
            total_activity: histogram.total_activity(),
            histogram,
            f_max,
        })
    }

    pub fn from_activities<I: IntoIterator<Item = f64>>(day: DayKey, values: I) -> Result<Self> {
        Self::from_histogram(day, ActivityHistogram::from_activities(values)?)
    }
}

pub fn parse_events<R: Read>(reader: R, format: EventFormat) -> Result<Vec<ActivityEvent>> {
    match format {
        EventFormat::Csv => parse_csv(reader),
        EventFormat::Jsonl => parse_jsonl(reader),
    }
}

fn make_event(line: u64, user: &str, day: &str, count: &str) -> Result<ActivityEvent> {
    if user.is_empty() {
        return Err(Error::parse(line, "empty user_id"));
    }
    let day = day.parse::<DayKey>().map_err(|e| Error::parse(line, e))?;
    let count = count
        .trim()
        .parse::<u64>()
        .map_err(|_| Error::parse(line, format!("count {count:?} is not a non-negative integer")))?;
    if count == 0 {
        return Err(Error::parse(line, "count must be >= 1"));
    }
    Ok(ActivityEvent {
        user_id: user.to_string(),
        day,
        count,
    })
}

fn parse_csv<R: Read>(reader: R) -> Result<Vec<ActivityEvent>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Ok(Vec::new()),
        Some(h) => h.map_err(|e| csv_error(e, 1))?,
    };
    let column = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::parse(1, format!("missing column {name:?} in header")))
    };
    let (iu, id, ic) = (column("user_id")?, column("day")?, column("count")?);

    let mut events = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| csv_error(e, 0))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        let field = |i: usize| {
            rec.get(i)
                .ok_or_else(|| Error::parse(line, format!("expected {} fields, found {}", header.len(), rec.len())))
        };
        events.push(make_event(line, field(iu)?, field(id)?, field(ic)?)?);
    }
    Ok(events)
}

fn csv_error(e: csv::Error, fallback_line: u64) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line());
    Error::parse(line, e.to_string())
}

fn parse_jsonl<R: Read>(reader: R) -> Result<Vec<ActivityEvent>> {
    use serde_json::Value;

    let mut events = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = idx as u64 + 1;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let obj: Value = serde_json::from_str(&line).map_err(|e| Error::parse(lineno, e.to_string()))?;
        let get = |key: &str| {
            obj.get(key)
                .ok_or_else(|| Error::parse(lineno, format!("missing key {key:?}")))
        };
        let user = get("user_id")?
            .as_str()
            .ok_or_else(|| Error::parse(lineno, "user_id must be a string"))?;
        let day = match get("day")? {
            Value::String(s) => s.clone(),
            Value::Number(n) if n.is_i64() => n.to_string(),
            other => return Err(Error::parse(lineno, format!("day must be a date string or integer, got {other}"))),
        };
        let count = match get("count")? {
            Value::Number(n) if n.is_u64() => n.to_string(),
            other => return Err(Error::parse(lineno, format!("count must be a positive integer, got {other}"))),
        };
        events.push(make_event(lineno, user, &day, &count)?);
    }
    Ok(events)
}

/// Groups events into one snapshot per active day, ascending by day.
/// Counts for the same `(user, day)` are summed before histogramming.
pub fn aggregate(events: &[ActivityEvent]) -> Vec<DailySnapshot> {
    let mut by_day: BTreeMap<DayKey, HashMap<&str, u64>> = BTreeMap::new();
    for ev in events {
        *by_day.entry(ev.day).or_default().entry(ev.user_id.as_str()).or_insert(0) += ev.count;
    }
    by_day
        .into_iter()
        .map(|(day, users)| {
            let mut levels: BTreeMap<u64, u64> = BTreeMap::new();
            let mut total: u64 = 0;
            for &c in users.values() {
                *levels.entry(c).or_insert(0) += 1;
                total += c;
            }
            let f_max = *levels.keys().next_back().expect("day has at least one user") as f64;
            DailySnapshot {
                day,
                population: users.len() as u64,
                total_activity: total as f64,
                histogram: ActivityHistogram {
                    bins: levels.into_iter().map(|(f, n)| (f as f64, n)).collect(),
                },
                f_max,
            }
        })
        .collect()
}

/// Writes events as CSV ordered by day, then user id.
pub fn export_events_csv<W: Write>(events: &[ActivityEvent], writer: W) -> Result<()> {
    let mut sorted: Vec<&ActivityEvent> = events.iter().collect();
    sorted.sort_by(|a, b| a.day.cmp(&b.day).then_with(|| a.user_id.cmp(&b.user_id)));
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["user_id", "day", "count"]).map_err(io)?;
    for ev in sorted {
        w.write_record([ev.user_id.as_str(), &ev.day.to_string(), &ev.count.to_string()])
            .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Expands integer-valued snapshots back into one event per user.
///
/// Users are named `u` followed by a zero-padded index so lexicographic and
/// numeric order agree within a day.
pub fn snapshots_to_events(days: &[DailySnapshot]) -> Result<Vec<ActivityEvent>> {
    let mut events = Vec::new();
    for snap in days {
        if !snap.histogram.is_integral() {
            return Err(Error::domain(format!(
                "day {} has non-integer activities; simulate with integerized counts to export events",
                snap.day
            )));
        }
        let width = snap.population.max(1).to_string().len();
        for (i, f) in snap.histogram.expand().into_iter().enumerate() {
            events.push(ActivityEvent {
                user_id: format!("u{i:0width$}"),
                day: snap.day,
                count: f as u64,
            });
        }
    }
    Ok(events)
}
