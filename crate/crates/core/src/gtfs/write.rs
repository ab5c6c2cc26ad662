use std::fs;
use std::path::Path;

use super::{format_time, GtfsError, RawFeed};

fn csv_err(file: &str) -> impl Fn(csv::Error) -> GtfsError + '_ {
    move |source| GtfsError::Csv {
        file: file.to_string(),
        source,
    }
}

fn write_table<const N: usize>(
    dir: &Path,
    file: &str,
    header: [&str; N],
    rows: impl Iterator<Item = [String; N]>,
) -> Result<(), GtfsError> {
    let mut w = csv::Writer::from_path(dir.join(file)).map_err(csv_err(file))?;
    w.write_record(header).map_err(csv_err(file))?;
    for row in rows {
        w.write_record(&row).map_err(csv_err(file))?;
    }
    w.flush().map_err(|e| csv_err(file)(e.into()))
}

/// Writes the feed as a GTFS directory that [`super::parse_feed`] reads
/// back to an equal feed.
pub fn write_feed(dir: &Path, feed: &RawFeed) -> Result<(), GtfsError> {
    fs::create_dir_all(dir).map_err(|e| csv_err("gtfs directory")(e.into()))?;
    write_table(
        dir,
        "stops.txt",
        ["stop_id", "stop_name", "stop_lat", "stop_lon"],
        feed.stops.iter().map(|s| {
            [s.stop_id.clone(), s.name.clone(), s.coord.lat.to_string(), s.coord.lon.to_string()]
        }),
    )?;
    write_table(
        dir,
        "routes.txt",
        ["route_id", "route_type"],
        feed.routes.iter().map(|r| [r.route_id.clone(), r.route_type.to_string()]),
    )?;
    write_table(
        dir,
        "trips.txt",
        ["route_id", "service_id", "trip_id"],
        feed.trips
            .iter()
            .map(|t| [t.route_id.clone(), t.service_id.clone(), t.trip_id.clone()]),
    )?;
    write_table(
        dir,
        "stop_times.txt",
        ["trip_id", "arrival_time", "departure_time", "stop_id", "stop_sequence"],
        feed.stop_times.iter().map(|st| {
            [
                st.trip_id.clone(),
                format_time(st.arrival),
                format_time(st.departure),
                st.stop_id.clone(),
                st.stop_sequence.to_string(),
            ]
        }),
    )?;
    if !feed.calendar.is_empty() {
        let day = |b: bool| if b { "1" } else { "0" }.to_string();
        write_table(
            dir,
            "calendar.txt",
            [
                "service_id", "monday", "tuesday", "wednesday", "thursday", "friday", "saturday",
                "sunday", "start_date", "end_date",
            ],
            feed.calendar.iter().map(|c| {
                let w = c.weekdays;
                [
                    c.service_id.clone(),
                    day(w[0]),
                    day(w[1]),
                    day(w[2]),
                    day(w[3]),
                    day(w[4]),
                    day(w[5]),
                    day(w[6]),
                    c.start_date.format("%Y%m%d").to_string(),
                    c.end_date.format("%Y%m%d").to_string(),
                ]
            }),
        )?;
    }
    if !feed.calendar_dates.is_empty() {
        write_table(
            dir,
            "calendar_dates.txt",
            ["service_id", "date", "exception_type"],
            feed.calendar_dates.iter().map(|e| {
                [
                    e.service_id.clone(),
                    e.date.format("%Y%m%d").to_string(),
                    if e.added { "1" } else { "2" }.to_string(),
                ]
            }),
        )?;
    }
    Ok(())
}
