use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::path::Path;

use chrono::NaiveDate;

use super::{
    CalendarEntry, CalendarException, GtfsError, RawFeed, RawRoute, RawStop, RawStopTime,
    RawTrip, Time,
};
use crate::geo::Coord;

/// Parses `H:MM:SS` (hours may exceed 23) into seconds since midnight.
pub fn parse_time(s: &str) -> Result<Time, String> {
    let mut parts = s.trim().split(':');
    let (Some(h), Some(m), Some(sec), None) = (parts.next(), parts.next(), parts.next(), parts.next())
    else {
        return Err(format!("expected H:MM:SS, got {s:?}"));
    };
    let num = |p: &str| -> Result<u32, String> {
        if p.is_empty() || !p.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("expected H:MM:SS, got {s:?}"));
        }
        p.parse().map_err(|_| format!("time component out of range in {s:?}"))
    };
    let (h, m, sec) = (num(h)?, num(m)?, num(sec)?);
    if m > 59 || sec > 59 {
        return Err(format!("minutes and seconds must be below 60 in {s:?}"));
    }
    h.checked_mul(3600)
        .and_then(|v| v.checked_add(m * 60 + sec))
        .ok_or_else(|| format!("time out of range in {s:?}"))
}

pub fn format_time(t: Time) -> String {
    format!("{:02}:{:02}:{:02}", t / 3600, (t / 60) % 60, t % 60)
}

fn parse_date(s: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s.trim(), "%Y%m%d").map_err(|e| format!("bad date {s:?}: {e}"))
}

/// A GTFS text file with its header resolved to column positions.
struct Table {
    file: String,
    reader: csv::Reader<File>,
    columns: HashMap<String, usize>,
}

impl Table {
    fn open(dir: &Path, file: &str) -> Result<Option<Table>, GtfsError> {
        let path = dir.join(file);
        if !path.is_file() {
            return Ok(None);
        }
        let csv_err = |source| GtfsError::Csv {
            file: file.to_string(),
            source,
        };
        let mut reader = csv::ReaderBuilder::new()
            .flexible(true)
            .from_path(&path)
            .map_err(csv_err)?;
        let columns = reader
            .headers()
            .map_err(csv_err)?
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim_start_matches('\u{feff}').trim().to_string(), i))
            .collect();
        Ok(Some(Table {
            file: file.to_string(),
            reader,
            columns,
        }))
    }

    fn require(dir: &Path, file: &str) -> Result<Table, GtfsError> {
        Self::open(dir, file)?.ok_or_else(|| GtfsError::MissingFile(file.to_string()))
    }

    fn column(&self, name: &str) -> Result<Column, GtfsError> {
        self.columns
            .get(name)
            .map(|&idx| Column { name: name.to_string(), idx })
            .ok_or_else(|| GtfsError::MissingColumn {
                file: self.file.clone(),
                column: name.to_string(),
            })
    }

    fn optional_column(&self, name: &str) -> Option<Column> {
        self.columns.get(name).map(|&idx| Column { name: name.to_string(), idx })
    }

    /// Calls `f` for every data row with its 1-based file line number.
    fn for_each_row(
        mut self,
        mut f: impl FnMut(&Row<'_>) -> Result<(), GtfsError>,
    ) -> Result<(), GtfsError> {
        let mut record = csv::StringRecord::new();
        loop {
            let more = self.reader.read_record(&mut record).map_err(|source| GtfsError::Csv {
                file: self.file.clone(),
                source,
            })?;
            if !more {
                return Ok(());
            }
            if record.iter().all(|v| v.trim().is_empty()) {
                continue;
            }
            let line = record.position().map_or(0, |p| p.line());
            f(&Row {
                file: &self.file,
                line,
                record: &record,
            })?;
        }
    }
}

struct Column {
    name: String,
    idx: usize,
}

struct Row<'a> {
    file: &'a str,
    line: u64,
    record: &'a csv::StringRecord,
}

impl Row<'_> {
    fn raw(&self, col: &Column) -> &str {
        self.record.get(col.idx).unwrap_or("").trim()
    }

    fn malformed(&self, col: &Column, message: impl Into<String>) -> GtfsError {
        GtfsError::Malformed {
            file: self.file.to_string(),
            line: self.line,
            column: col.name.clone(),
            message: message.into(),
        }
    }

    fn text(&self, col: &Column) -> Result<String, GtfsError> {
        let v = self.raw(col);
        if v.is_empty() {
            return Err(self.malformed(col, "value is required"));
        }
        Ok(v.to_string())
    }

    fn parse<T: std::str::FromStr>(&self, col: &Column) -> Result<T, GtfsError> {
        let v = self.raw(col);
        v.parse()
            .map_err(|_| self.malformed(col, format!("cannot parse {v:?}")))
    }

    fn duplicate(&self, id: &str) -> GtfsError {
        GtfsError::DuplicateId {
            file: self.file.to_string(),
            line: self.line,
            id: id.to_string(),
        }
    }
}

fn parse_stops(dir: &Path) -> Result<Vec<RawStop>, GtfsError> {
    let table = Table::require(dir, "stops.txt")?;
    let id = table.column("stop_id")?;
    let lat = table.column("stop_lat")?;
    let lon = table.column("stop_lon")?;
    let name = table.optional_column("stop_name");
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    table.for_each_row(|row| {
        let stop_id = row.text(&id)?;
        if !seen.insert(stop_id.clone()) {
            return Err(row.duplicate(&stop_id));
        }
        let la: f64 = row.parse(&lat)?;
        let lo: f64 = row.parse(&lon)?;
        if !(la.is_finite() && (-90.0..=90.0).contains(&la)) {
            return Err(row.malformed(&lat, format!("latitude {la} outside [-90, 90]")));
        }
        if !(lo.is_finite() && (-180.0..=180.0).contains(&lo)) {
            return Err(row.malformed(&lon, format!("longitude {lo} outside [-180, 180]")));
        }
        out.push(RawStop {
            stop_id,
            name: name.as_ref().map(|c| row.raw(c).to_string()).unwrap_or_default(),
            coord: Coord::new(la, lo),
        });
        Ok(())
    })?;
    Ok(out)
}

fn parse_routes(dir: &Path) -> Result<Vec<RawRoute>, GtfsError> {
    let table = Table::require(dir, "routes.txt")?;
    let id = table.column("route_id")?;
    let kind = table.column("route_type")?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    table.for_each_row(|row| {
        let route_id = row.text(&id)?;
        if !seen.insert(route_id.clone()) {
            return Err(row.duplicate(&route_id));
        }
        out.push(RawRoute {
            route_id,
            route_type: row.parse(&kind)?,
        });
        Ok(())
    })?;
    Ok(out)
}

/// Trips with the line each was declared on.
fn parse_trips(dir: &Path) -> Result<Vec<(u64, RawTrip)>, GtfsError> {
    let table = Table::require(dir, "trips.txt")?;
    let route = table.column("route_id")?;
    let service = table.column("service_id")?;
    let id = table.column("trip_id")?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    table.for_each_row(|row| {
        let trip_id = row.text(&id)?;
        if !seen.insert(trip_id.clone()) {
            return Err(row.duplicate(&trip_id));
        }
        out.push((
            row.line,
            RawTrip {
                trip_id,
                route_id: row.text(&route)?,
                service_id: row.text(&service)?,
            },
        ));
        Ok(())
    })?;
    Ok(out)
}

fn parse_stop_times(dir: &Path) -> Result<Vec<(u64, RawStopTime)>, GtfsError> {
    let table = Table::require(dir, "stop_times.txt")?;
    let trip = table.column("trip_id")?;
    let arr = table.column("arrival_time")?;
    let dep = table.column("departure_time")?;
    let stop = table.column("stop_id")?;
    let seq = table.column("stop_sequence")?;
    let mut out = Vec::new();
    table.for_each_row(|row| {
        let time = |col: &Column| -> Result<Option<Time>, GtfsError> {
            let v = row.raw(col);
            if v.is_empty() {
                return Ok(None);
            }
            parse_time(v).map(Some).map_err(|m| row.malformed(col, m))
        };
        let (arrival, departure) = match (time(&arr)?, time(&dep)?) {
            (Some(a), Some(d)) => (a, d),
            (Some(a), None) => (a, a),
            (None, Some(d)) => (d, d),
            (None, None) => {
                return Err(row.malformed(
                    &arr,
                    "arrival and departure are both empty; interpolated times are not supported",
                ))
            }
        };
        out.push((
            row.line,
            RawStopTime {
                trip_id: row.text(&trip)?,
                stop_sequence: row.parse(&seq)?,
                arrival,
                departure,
                stop_id: row.text(&stop)?,
            },
        ));
        Ok(())
    })?;
    Ok(out)
}

fn parse_calendar(dir: &Path) -> Result<Option<Vec<CalendarEntry>>, GtfsError> {
    let Some(table) = Table::open(dir, "calendar.txt")? else {
        return Ok(None);
    };
    let id = table.column("service_id")?;
    let days = [
        "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday",
    ]
    .map(|d| table.column(d));
    let days: Vec<Column> = days.into_iter().collect::<Result<_, _>>()?;
    let start = table.column("start_date")?;
    let end = table.column("end_date")?;
    let mut out = Vec::new();
    table.for_each_row(|row| {
        let mut weekdays = [false; 7];
        for (flag, col) in weekdays.iter_mut().zip(&days) {
            *flag = match row.raw(col) {
                "1" => true,
                "0" => false,
                other => return Err(row.malformed(col, format!("expected 0 or 1, got {other:?}"))),
            };
        }
        out.push(CalendarEntry {
            service_id: row.text(&id)?,
            weekdays,
            start_date: parse_date(row.raw(&start)).map_err(|m| row.malformed(&start, m))?,
            end_date: parse_date(row.raw(&end)).map_err(|m| row.malformed(&end, m))?,
        });
        Ok(())
    })?;
    Ok(Some(out))
}

fn parse_calendar_dates(dir: &Path) -> Result<Option<Vec<CalendarException>>, GtfsError> {
    let Some(table) = Table::open(dir, "calendar_dates.txt")? else {
        return Ok(None);
    };
    let id = table.column("service_id")?;
    let date = table.column("date")?;
    let kind = table.column("exception_type")?;
    let mut out = Vec::new();
    table.for_each_row(|row| {
        let added = match row.raw(&kind) {
            "1" => true,
            "2" => false,
            other => return Err(row.malformed(&kind, format!("expected 1 or 2, got {other:?}"))),
        };
        out.push(CalendarException {
            service_id: row.text(&id)?,
            date: parse_date(row.raw(&date)).map_err(|m| row.malformed(&date, m))?,
            added,
        });
        Ok(())
    })?;
    Ok(Some(out))
}

fn has_frequencies(dir: &Path) -> Result<bool, GtfsError> {
    let Some(table) = Table::open(dir, "frequencies.txt")? else {
        return Ok(false);
    };
    let mut any = false;
    table.for_each_row(|_| {
        any = true;
        Ok(())
    })?;
    Ok(any)
}

/// Reads and validates a GTFS feed directory.
///
/// Files are parsed on separate threads; cross-file references and
/// per-trip time ordering are checked once all files are in.
pub fn parse_feed(dir: &Path) -> Result<RawFeed, GtfsError> {
    if has_frequencies(dir)? {
        return Err(GtfsError::FrequenciesUnsupported);
    }
    let (stops, routes, trips, stop_times, calendar, calendar_dates) = std::thread::scope(|s| {
        let stops = s.spawn(|| parse_stops(dir));
        let routes = s.spawn(|| parse_routes(dir));
        let trips = s.spawn(|| parse_trips(dir));
        let calendar = s.spawn(|| parse_calendar(dir));
        let calendar_dates = s.spawn(|| parse_calendar_dates(dir));
        let stop_times = parse_stop_times(dir);
        (
            stops.join().expect("stops parser panicked"),
            routes.join().expect("routes parser panicked"),
            trips.join().expect("trips parser panicked"),
            stop_times,
            calendar.join().expect("calendar parser panicked"),
            calendar_dates.join().expect("calendar_dates parser panicked"),
        )
    });
    let (stops, routes, trips, stop_times) = (stops?, routes?, trips?, stop_times?);
    let (calendar, calendar_dates) = match (calendar?, calendar_dates?) {
        (None, None) => {
            return Err(GtfsError::MissingFile(
                "calendar.txt or calendar_dates.txt".to_string(),
            ))
        }
        (c, d) => (c.unwrap_or_default(), d.unwrap_or_default()),
    };

    let route_ids: HashSet<&str> = routes.iter().map(|r| r.route_id.as_str()).collect();
    let service_ids: HashSet<&str> = calendar
        .iter()
        .map(|c| c.service_id.as_str())
        .chain(calendar_dates.iter().map(|c| c.service_id.as_str()))
        .collect();
    for (line, trip) in &trips {
        let dangling = |field: &str, value: &str| GtfsError::DanglingReference {
            file: "trips.txt".into(),
            line: *line,
            field: field.into(),
            value: value.into(),
        };
        if !route_ids.contains(trip.route_id.as_str()) {
            return Err(dangling("route_id", &trip.route_id));
        }
        if !service_ids.contains(trip.service_id.as_str()) {
            return Err(dangling("service_id", &trip.service_id));
        }
    }

    let trip_ids: HashSet<&str> = trips.iter().map(|(_, t)| t.trip_id.as_str()).collect();
    let stop_ids: HashSet<&str> = stops.iter().map(|s| s.stop_id.as_str()).collect();
    for (line, st) in &stop_times {
        let dangling = |field: &str, value: &str| GtfsError::DanglingReference {
            file: "stop_times.txt".into(),
            line: *line,
            field: field.into(),
            value: value.into(),
        };
        if !trip_ids.contains(st.trip_id.as_str()) {
            return Err(dangling("trip_id", &st.trip_id));
        }
        if !stop_ids.contains(st.stop_id.as_str()) {
            return Err(dangling("stop_id", &st.stop_id));
        }
    }

    let stop_times: Vec<RawStopTime> = stop_times.into_iter().map(|(_, st)| st).collect();
    validate_trip_times(&stop_times)?;

    Ok(RawFeed {
        stops,
        routes,
        trips: trips.into_iter().map(|(_, t)| t).collect(),
        stop_times,
        calendar,
        calendar_dates,
    })
}

fn validate_trip_times(stop_times: &[RawStopTime]) -> Result<(), GtfsError> {
    let mut by_trip: HashMap<&str, Vec<&RawStopTime>> = HashMap::new();
    for st in stop_times {
        by_trip.entry(&st.trip_id).or_default().push(st);
    }
    let mut trips: Vec<_> = by_trip.into_iter().collect();
    trips.sort_unstable_by_key(|(id, _)| *id);
    for (trip_id, mut rows) in trips {
        let invalid = |message: String| GtfsError::InvalidTrip {
            trip_id: trip_id.to_string(),
            message,
        };
        rows.sort_by_key(|st| st.stop_sequence);
        for st in &rows {
            if st.departure < st.arrival {
                return Err(invalid(format!(
                    "departs {} before arriving {} at stop_sequence {}",
                    format_time(st.departure),
                    format_time(st.arrival),
                    st.stop_sequence
                )));
            }
        }
        for pair in rows.windows(2) {
            if pair[0].stop_sequence == pair[1].stop_sequence {
                return Err(invalid(format!(
                    "stop_sequence {} appears twice",
                    pair[0].stop_sequence
                )));
            }
            if pair[1].arrival < pair[0].departure {
                return Err(invalid(format!(
                    "arrives at stop_sequence {} before leaving stop_sequence {}",
                    pair[1].stop_sequence, pair[0].stop_sequence
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn times_past_midnight_are_not_wrapped() {
        assert_eq!(parse_time("24:30:00"), Ok(88_200));
        assert_eq!(parse_time("25:10:00"), Ok(90_600));
        assert_eq!(parse_time(" 9:05:07"), Ok(9 * 3600 + 5 * 60 + 7));
        assert_eq!(format_time(90_600), "25:10:00");
    }

    #[test]
    fn malformed_times_are_rejected() {
        for bad in ["", "9:00", "09:60:00", "09:00:61", "a:00:00", "09:00:00:00", "-1:00:00"] {
            assert!(parse_time(bad).is_err(), "{bad}");
        }
    }

    pub(crate) fn write_minimal(dir: &Path) {
        fs::write(
            dir.join("stops.txt"),
            "stop_id,stop_name,stop_lat,stop_lon\nS1,One,51.0,-1.0\nS2,Two,51.01,-1.0\n",
        )
        .unwrap();
        fs::write(dir.join("routes.txt"), "route_id,route_type\nR1,3\n").unwrap();
        fs::write(dir.join("trips.txt"), "route_id,service_id,trip_id\nR1,WK,T1\n").unwrap();
        fs::write(
            dir.join("stop_times.txt"),
            "trip_id,arrival_time,departure_time,stop_id,stop_sequence\n\
             T1,09:00:00,09:00:00,S1,1\nT1,09:10:00,09:10:00,S2,2\n",
        )
        .unwrap();
        fs::write(
            dir.join("calendar.txt"),
            "service_id,monday,tuesday,wednesday,thursday,friday,saturday,sunday,start_date,end_date\n\
             WK,1,1,1,1,1,0,0,20240101,20241231\n",
        )
        .unwrap();
    }

    #[test]
    fn minimal_feed() {
        let dir = tempfile::tempdir().unwrap();
        write_minimal(dir.path());
        let feed = parse_feed(dir.path()).unwrap();
        assert_eq!(feed.trips.len(), 1);
        assert_eq!(feed.stop_times.len(), 2);
        assert_eq!(feed.stop_times[1].arrival, 9 * 3600 + 600);
    }

    #[test]
    fn dangling_trip_is_named() {
        let dir = tempfile::tempdir().unwrap();
        write_minimal(dir.path());
        fs::write(
            dir.path().join("stop_times.txt"),
            "trip_id,arrival_time,departure_time,stop_id,stop_sequence\n\
             T1,09:00:00,09:00:00,S1,1\nT9,09:10:00,09:10:00,S2,2\n",
        )
        .unwrap();
        let err = parse_feed(dir.path()).unwrap_err();
        match &err {
            GtfsError::DanglingReference { value, line, .. } => {
                assert_eq!(value, "T9");
                assert_eq!(*line, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("T9"));
    }

    #[test]
    fn missing_required_file() {
        let dir = tempfile::tempdir().unwrap();
        write_minimal(dir.path());
        fs::remove_file(dir.path().join("routes.txt")).unwrap();
        assert!(matches!(parse_feed(dir.path()), Err(GtfsError::MissingFile(f)) if f == "routes.txt"));
    }

    #[test]
    fn needs_some_calendar() {
        let dir = tempfile::tempdir().unwrap();
        write_minimal(dir.path());
        fs::remove_file(dir.path().join("calendar.txt")).unwrap();
        assert!(matches!(parse_feed(dir.path()), Err(GtfsError::MissingFile(_))));
    }

    #[test]
    fn malformed_row_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        write_minimal(dir.path());
        fs::write(
            dir.path().join("stops.txt"),
            "stop_id,stop_name,stop_lat,stop_lon\nS1,One,51.0,-1.0\nS2,Two,north,-1.0\n",
        )
        .unwrap();
        match parse_feed(dir.path()).unwrap_err() {
            GtfsError::Malformed { file, line, column, .. } => {
                assert_eq!(file, "stops.txt");
                assert_eq!(line, 3);
                assert_eq!(column, "stop_lat");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn out_of_range_latitude() {
        let dir = tempfile::tempdir().unwrap();
        write_minimal(dir.path());
        fs::write(
            dir.path().join("stops.txt"),
            "stop_id,stop_name,stop_lat,stop_lon\nS1,One,91.0,-1.0\nS2,Two,51.0,-1.0\n",
        )
        .unwrap();
        assert!(matches!(parse_feed(dir.path()), Err(GtfsError::Malformed { .. })));
    }

    #[test]
    fn time_travel_within_trip_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_minimal(dir.path());
        fs::write(
            dir.path().join("stop_times.txt"),
            "trip_id,arrival_time,departure_time,stop_id,stop_sequence\n\
             T1,09:00:00,09:05:00,S1,1\nT1,09:04:00,09:10:00,S2,2\n",
        )
        .unwrap();
        assert!(matches!(parse_feed(dir.path()), Err(GtfsError::InvalidTrip { .. })));
    }

    #[test]
    fn frequencies_are_refused() {
        let dir = tempfile::tempdir().unwrap();
        write_minimal(dir.path());
        fs::write(
            dir.path().join("frequencies.txt"),
            "trip_id,start_time,end_time,headway_secs\nT1,06:00:00,22:00:00,600\n",
        )
        .unwrap();
        assert!(matches!(parse_feed(dir.path()), Err(GtfsError::FrequenciesUnsupported)));
    }

    #[test]
    fn byte_order_mark_in_header() {
        let dir = tempfile::tempdir().unwrap();
        write_minimal(dir.path());
        fs::write(dir.path().join("routes.txt"), "\u{feff}route_id,route_type\nR1,3\n").unwrap();
        assert!(parse_feed(dir.path()).is_ok());
    }
}
