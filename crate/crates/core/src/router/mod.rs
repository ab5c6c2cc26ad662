//! Timetable routing: round-based earliest-arrival search from a stop to
//! walk-attached destinations, sampled per minute across a departure
//! window and reduced to a percentile travel time.

mod access;
mod profile;
mod raptor;

pub use access::{Egress, StreetLinks, TRANSFER_CAP_M};
pub use profile::{hourly_travel_times, travel_time_percentile, travel_time_percentiles};
pub use raptor::{earliest_arrival, Arrival, RaptorWorkspace};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gtfs::Time;

#[derive(Debug, Error, PartialEq)]
pub enum RouterError {
    #[error("invalid query configuration: {0}")]
    InvalidConfig(String),
    #[error("origin stop {0} is not in the network")]
    UnknownStop(usize),
}

/// Search parameters. Defaults reproduce the reference travel-time
/// computer: a 10 minute window, median, 2 hour cap, 8 rides, 3.6 km/h.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryConfig {
    /// Start of the departure window, seconds since midnight.
    pub departure: Time,
    /// Window length in seconds; one sample per whole minute.
    pub window: u32,
    pub percentile: u8,
    pub max_duration: u32,
    pub max_rides: u8,
    pub walk_speed_kmh: f64,
    /// Cap on each walking leg, in seconds.
    pub max_walk_duration: u32,
}

impl Default for QueryConfig {
    fn default() -> Self {
        Self {
            departure: 9 * 3600,
            window: 600,
            percentile: 50,
            max_duration: 7200,
            max_rides: 8,
            walk_speed_kmh: 3.6,
            max_walk_duration: 7200,
        }
    }
}

impl QueryConfig {
    pub fn validate(&self) -> Result<(), RouterError> {
        let bad = |m: &str| Err(RouterError::InvalidConfig(m.to_string()));
        if self.window < 60 {
            return bad("window must be at least 60 seconds");
        }
        if !(1..=100).contains(&self.percentile) {
            return bad("percentile must be in [1, 100]");
        }
        if self.max_duration == 0 || self.max_rides == 0 || self.max_walk_duration == 0 {
            return bad("duration, ride and walk caps must be positive");
        }
        if !(self.walk_speed_kmh.is_finite() && self.walk_speed_kmh > 0.0) {
            return bad("walk speed must be positive");
        }
        Ok(())
    }

    /// Departure minutes sampled for the window.
    pub fn sample_minutes(&self) -> impl Iterator<Item = Time> + '_ {
        (self.departure..self.departure + self.window).step_by(60)
    }

    pub fn walk_seconds(&self, meters: f64) -> u32 {
        crate::geo::walk_seconds(meters, self.walk_speed_kmh)
    }
}

/// Percentile travel time for one origin–destination pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TravelTimeResult {
    /// `None` marks the destination unreachable within the caps.
    pub seconds: Option<u32>,
    pub rides_used: Option<u8>,
    /// Departure minute whose sample was selected.
    pub provenance: Option<Time>,
}

impl TravelTimeResult {
    pub const UNREACHABLE: Self = Self {
        seconds: None,
        rides_used: None,
        provenance: None,
    };
}
