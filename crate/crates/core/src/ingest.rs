//! Reading open-format event data and reducing it to countable observations.
//!
//! Expected directory layout:
//!
//! ```text
//! <data_dir>/competitions.json
//! <data_dir>/matches/<competition_id>/<season_id>.json
//! <data_dir>/events/<match_id>.json
//! ```
//!
//! Only passes, carries, dribbles, errors, miscontrols, clearances and shots
//! survive [`normalize`]; everything else is skipped.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use log::warn;
use serde::Deserialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::grid::{PITCH_LENGTH, PITCH_WIDTH};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Projects the point onto the pitch rectangle.
    pub fn clamped(self) -> Self {
        Point {
            x: self.x.clamp(0.0, PITCH_LENGTH),
            y: self.y.clamp(0.0, PITCH_WIDTH),
        }
    }
}

/// One event as it appears in the provider files, before any filtering.
#[derive(Debug, Clone, PartialEq)]
pub struct RawEventRecord {
    pub match_id: i64,
    pub event_type: String,
    pub location: Option<Point>,
    pub end_location: Option<Point>,
    pub outcome: Option<String>,
    pub team_id: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Move,
    Shot,
    Loss,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Move => "move",
            EventKind::Shot => "shot",
            EventKind::Loss => "loss",
        }
    }
}

/// A countable on-ball observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormalizedEvent {
    /// Successful ball progression from `start` to `end`.
    Move {
        start: Point,
        end: Point,
    },
    Shot {
        start: Point,
        is_goal: bool,
    },
    /// Possession-ending action at `start`.
    Loss {
        start: Point,
    },
}

impl NormalizedEvent {
    pub fn kind(&self) -> EventKind {
        match self {
            NormalizedEvent::Move { .. } => EventKind::Move,
            NormalizedEvent::Shot { .. } => EventKind::Shot,
            NormalizedEvent::Loss { .. } => EventKind::Loss,
        }
    }

    pub fn start(&self) -> Point {
        match *self {
            NormalizedEvent::Move { start, .. }
            | NormalizedEvent::Shot { start, .. }
            | NormalizedEvent::Loss { start } => start,
        }
    }

    pub fn end(&self) -> Option<Point> {
        match *self {
            NormalizedEvent::Move { end, .. } => Some(end),
            _ => None,
        }
    }

    pub fn is_goal(&self) -> bool {
        matches!(self, NormalizedEvent::Shot { is_goal: true, .. })
    }

    fn clamped(self) -> Self {
        match self {
            NormalizedEvent::Move { start, end } => NormalizedEvent::Move {
                start: start.clamped(),
                end: end.clamped(),
            },
            NormalizedEvent::Shot { start, is_goal } => NormalizedEvent::Shot {
                start: start.clamped(),
                is_goal,
            },
            NormalizedEvent::Loss { start } => NormalizedEvent::Loss { start: start.clamped() },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    /// Event type is not one of the kept categories.
    Filtered,
    /// A kept event type without the coordinates it requires.
    MissingLocation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalized {
    Kept(NormalizedEvent),
    Skip(SkipReason),
}

/// Pass outcomes are absent for completed passes; any named outcome is a failure.
fn pass_completed(outcome: Option<&str>) -> bool {
    outcome.is_none()
}

fn dribble_completed(outcome: Option<&str>) -> bool {
    matches!(outcome, Some(o) if o.eq_ignore_ascii_case("complete"))
}

/// Maps a provider event onto one of the kept categories, or skips it.
pub fn normalize(raw: &RawEventRecord) -> Normalized {
    let outcome = raw.outcome.as_deref();
    let kind = match raw.event_type.as_str() {
        "Pass" if pass_completed(outcome) => EventKind::Move,
        "Carry" => EventKind::Move,
        "Dribble" if dribble_completed(outcome) => EventKind::Move,
        "Pass" | "Dribble" | "Error" | "Miscontrol" | "Clearance" => EventKind::Loss,
        "Shot" => EventKind::Shot,
        _ => return Normalized::Skip(SkipReason::Filtered),
    };
    let Some(start) = raw.location else {
        return Normalized::Skip(SkipReason::MissingLocation);
    };
    let event = match kind {
        EventKind::Move => {
            // take-ons carry no end location; the ball stays in the cell
            let end = match (raw.event_type.as_str(), raw.end_location) {
                (_, Some(end)) => end,
                ("Dribble", None) => start,
                _ => return Normalized::Skip(SkipReason::MissingLocation),
            };
            NormalizedEvent::Move { start, end }
        }
        EventKind::Shot => NormalizedEvent::Shot {
            start,
            is_goal: matches!(outcome, Some(o) if o.eq_ignore_ascii_case("goal")),
        },
        EventKind::Loss => NormalizedEvent::Loss { start },
    };
    Normalized::Kept(event.clamped())
}

/// Running tally of [`normalize`] outcomes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NormalizeStats {
    pub moves: u64,
    pub shots: u64,
    pub losses: u64,
    pub filtered: u64,
    pub missing_location: u64,
}

impl NormalizeStats {
    pub fn record(&mut self, n: &Normalized) {
        match n {
            Normalized::Kept(e) => match e.kind() {
                EventKind::Move => self.moves += 1,
                EventKind::Shot => self.shots += 1,
                EventKind::Loss => self.losses += 1,
            },
            Normalized::Skip(SkipReason::Filtered) => self.filtered += 1,
            Normalized::Skip(SkipReason::MissingLocation) => self.missing_location += 1,
        }
    }

    pub fn kept(&self) -> u64 {
        self.moves + self.shots + self.losses
    }

    pub fn total(&self) -> u64 {
        self.kept() + self.filtered + self.missing_location
    }
}

/// A kept event tagged with its match.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchEvent {
    pub match_id: i64,
    pub event: NormalizedEvent,
}

/// Normalizes a batch, logging one warning summary for events lacking coordinates.
pub fn normalize_all(raw: &[RawEventRecord]) -> (Vec<MatchEvent>, NormalizeStats) {
    let mut stats = NormalizeStats::default();
    let mut kept = Vec::with_capacity(raw.len() / 2);
    for r in raw {
        let n = normalize(r);
        stats.record(&n);
        if let Normalized::Kept(event) = n {
            kept.push(MatchEvent {
                match_id: r.match_id,
                event,
            });
        }
    }
    if stats.missing_location > 0 {
        warn!(
            "skipped {} kept-type events without a required location",
            stats.missing_location
        );
    }
    (kept, stats)
}

#[derive(Debug, Deserialize)]
struct CompetitionEntry {
    competition_id: i64,
    season_id: i64,
    #[serde(default)]
    competition_name: Option<String>,
}

#[derive(Debug, Deserialize)]
struct MatchEntry {
    match_id: i64,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let mut text = String::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::MalformedFile {
            path: path.to_owned(),
            reason: e.to_string(),
        })?;
    serde_json::from_str(&text).map_err(|e| Error::MalformedFile {
        path: path.to_owned(),
        reason: e.to_string(),
    })
}

fn competition_selected(entry: &CompetitionEntry, filter: Option<&[String]>) -> bool {
    let Some(filter) = filter else {
        return true;
    };
    filter.iter().any(|f| {
        let f = f.trim();
        f == entry.competition_id.to_string()
            || f == format!("{}/{}", entry.competition_id, entry.season_id)
            || entry
                .competition_name
                .as_deref()
                .is_some_and(|name| name.eq_ignore_ascii_case(f))
    })
}

/// Match ids of every selected competition season, sorted and deduplicated.
pub fn list_matches(data_dir: &Path, competition_filter: Option<&[String]>) -> Result<Vec<i64>> {
    if !data_dir.is_dir() {
        return Err(Error::Config(format!(
            "data directory {} does not exist",
            data_dir.display()
        )));
    }
    let competitions: Vec<CompetitionEntry> = read_json(&data_dir.join("competitions.json"))?;
    let mut ids = Vec::new();
    for entry in competitions
        .iter()
        .filter(|c| competition_selected(c, competition_filter))
    {
        let path = data_dir
            .join("matches")
            .join(entry.competition_id.to_string())
            .join(format!("{}.json", entry.season_id));
        if !path.exists() {
            warn!("no match list at {}", path.display());
            continue;
        }
        let matches: Vec<MatchEntry> = read_json(&path)?;
        ids.extend(matches.iter().map(|m| m.match_id));
    }
    ids.sort_unstable();
    ids.dedup();
    Ok(ids)
}

fn point_of(v: Option<&Value>) -> Option<Point> {
    let arr = v?.as_array()?;
    Some(Point::new(arr.first()?.as_f64()?, arr.get(1)?.as_f64()?))
}

fn name_of(v: Option<&Value>) -> Option<String> {
    v?.get("name")?.as_str().map(str::to_owned)
}

/// Extracts the fields used downstream from one provider event object.
pub fn raw_from_json(match_id: i64, v: &Value) -> RawEventRecord {
    let event_type = name_of(v.get("type")).unwrap_or_default();
    let detail = match event_type.as_str() {
        "Pass" => v.get("pass"),
        "Carry" => v.get("carry"),
        "Dribble" => v.get("dribble"),
        "Shot" => v.get("shot"),
        "Clearance" => v.get("clearance"),
        _ => None,
    };
    RawEventRecord {
        match_id,
        location: point_of(v.get("location")),
        end_location: detail.and_then(|d| point_of(d.get("end_location"))),
        outcome: detail.and_then(|d| name_of(d.get("outcome"))),
        team_id: v.get("team").and_then(|t| t.get("id")).and_then(Value::as_i64),
        event_type,
    }
}

fn parse_match_file(path: &Path, match_id: i64) -> Result<Vec<RawEventRecord>> {
    let events: Vec<Value> = read_json(path)?;
    Ok(events.iter().map(|v| raw_from_json(match_id, v)).collect())
}

/// Reads every event of every selected match, ordered by match id then file order.
pub fn parse_event_files(data_dir: &Path, competition_filter: Option<&[String]>) -> Result<Vec<RawEventRecord>> {
    let ids = list_matches(data_dir, competition_filter)?;
    let events_dir = data_dir.join("events");
    let paths: Vec<(i64, PathBuf)> = ids
        .into_iter()
        .map(|id| (id, events_dir.join(format!("{id}.json"))))
        .filter(|(_, p)| {
            let found = p.exists();
            if !found {
                warn!("no event file at {}", p.display());
            }
            found
        })
        .collect();
    let per_file: Vec<Vec<RawEventRecord>> = paths
        .iter()
        .map(|(id, p)| parse_match_file(p, *id))
        .collect::<Result<_>>()?;
    Ok(per_file.into_iter().flatten().collect())
}

pub const EVENTS_CSV_HEADER: [&str; 7] = ["match_id", "kind", "x_start", "y_start", "x_end", "y_end", "is_goal"];

/// Writes the event interchange CSV.
pub fn write_events_csv<W: Write>(out: W, events: &[MatchEvent]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EVENTS_CSV_HEADER)?;
    for me in events {
        let e = &me.event;
        let start = e.start();
        let (xe, ye) = match e.end() {
            Some(p) => (format!("{:.6}", p.x), format!("{:.6}", p.y)),
            None => (String::new(), String::new()),
        };
        let goal = match e {
            NormalizedEvent::Shot { is_goal, .. } => is_goal.to_string(),
            _ => String::new(),
        };
        w.write_record([
            me.match_id.to_string(),
            e.kind().as_str().to_owned(),
            format!("{:.6}", start.x),
            format!("{:.6}", start.y),
            xe,
            ye,
            goal,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the event interchange CSV written by [`write_events_csv`].
pub fn read_events_csv<R: Read>(input: R) -> Result<Vec<MatchEvent>> {
    let mut r = csv::Reader::from_reader(input);
    let bad = |line: usize, what: &str| Error::MalformedFile {
        path: PathBuf::from("<events csv>"),
        reason: format!("record {line}: {what}"),
    };
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let num = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| bad(line, EVENTS_CSV_HEADER[k]))
        };
        let match_id = rec
            .get(0)
            .and_then(|s| s.parse::<i64>().ok())
            .ok_or_else(|| bad(line, "match_id"))?;
        let start = Point::new(num(2)?, num(3)?);
        let event = match rec.get(1).unwrap_or("") {
            "move" => NormalizedEvent::Move {
                start,
                end: Point::new(num(4)?, num(5)?),
            },
            "shot" => NormalizedEvent::Shot {
                start,
                is_goal: rec.get(6) == Some("true"),
            },
            "loss" => NormalizedEvent::Loss { start },
            other => return Err(bad(line, &format!("unknown kind `{other}`"))),
        };
        out.push(MatchEvent {
            match_id,
            event: event.clamped(),
        });
    }
    Ok(out)
}
