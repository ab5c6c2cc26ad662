//! Public-transport travel-time variability analysis.
//!
//! The crate turns a GTFS timetable, a pedestrian network and sets of
//! origin zones and destination facilities into per-zone hourly travel
//! times, a day-level variability metric, and the spatial and inequality
//! statistics built on top of it.

pub mod geo;
pub mod gtfs;
pub mod router;
pub mod metrics;
pub mod pipeline;
pub mod spatial;
