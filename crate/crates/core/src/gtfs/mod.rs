//! GTFS Schedule ingestion: eager validation of a feed directory and
//! construction of a single-day, pattern-indexed timetable.

mod network;
mod parse;
mod write;

pub use network::{build_network, Pattern, Stop, TransitNetwork, Transfer};
pub use parse::{format_time, parse_feed, parse_time};
pub use write::write_feed;

use chrono::NaiveDate;
use thiserror::Error;

use crate::geo::Coord;

/// Seconds since midnight of the service day. Values past 86400 denote
/// after-midnight trips belonging to the same service day.
pub type Time = u32;

#[derive(Debug, Error)]
pub enum GtfsError {
    #[error("required file {0} is missing")]
    MissingFile(String),
    #[error("{file}: {source}")]
    Csv {
        file: String,
        #[source]
        source: csv::Error,
    },
    #[error("{file}: missing required column {column}")]
    MissingColumn { file: String, column: String },
    #[error("{file} line {line}, column {column}: {message}")]
    Malformed {
        file: String,
        line: u64,
        column: String,
        message: String,
    },
    #[error("{file} line {line}: {field} references unknown id {value:?}")]
    DanglingReference {
        file: String,
        line: u64,
        field: String,
        value: String,
    },
    #[error("{file} line {line}: duplicate id {id:?}")]
    DuplicateId { file: String, line: u64, id: String },
    #[error("trip {trip_id}: {message}")]
    InvalidTrip { trip_id: String, message: String },
    #[error("frequencies.txt defines headway-based trips, which are not supported")]
    FrequenciesUnsupported,
    #[error("no service is active on {0}")]
    NoActiveService(NaiveDate),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawStop {
    pub stop_id: String,
    pub name: String,
    pub coord: Coord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawRoute {
    pub route_id: String,
    /// GTFS `route_type` (3 = bus).
    pub route_type: u16,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawTrip {
    pub trip_id: String,
    pub route_id: String,
    pub service_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RawStopTime {
    pub trip_id: String,
    pub stop_sequence: u32,
    pub arrival: Time,
    pub departure: Time,
    pub stop_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalendarEntry {
    pub service_id: String,
    /// Monday first.
    pub weekdays: [bool; 7],
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalendarException {
    pub service_id: String,
    pub date: NaiveDate,
    /// `true` for exception_type 1 (added), `false` for 2 (removed).
    pub added: bool,
}

/// Every row of a feed with types coerced and references checked.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawFeed {
    pub stops: Vec<RawStop>,
    pub routes: Vec<RawRoute>,
    pub trips: Vec<RawTrip>,
    pub stop_times: Vec<RawStopTime>,
    pub calendar: Vec<CalendarEntry>,
    pub calendar_dates: Vec<CalendarException>,
}
