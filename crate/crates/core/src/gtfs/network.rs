use std::collections::{BTreeMap, HashMap, HashSet};

use chrono::{Datelike, NaiveDate};

use super::{GtfsError, RawFeed, RawStopTime, Time};
use crate::geo::Coord;

#[derive(Debug, Clone, PartialEq)]
pub struct Stop {
    pub id: String,
    pub name: String,
    pub coord: Coord,
}

/// Walking link between two stops, used between rides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transfer {
    pub to: usize,
    pub distance_m: f64,
}

/// Trips sharing one stop sequence, ordered so that no trip overtakes
/// the one before it at any stop. Times are stored trip-major.
#[derive(Debug, Clone)]
pub struct Pattern {
    route_id: String,
    stops: Vec<usize>,
    trip_ids: Vec<String>,
    sequences: Vec<u32>,
    arrivals: Vec<Time>,
    departures: Vec<Time>,
}

impl Pattern {
    pub fn route_id(&self) -> &str {
        &self.route_id
    }

    pub fn stops(&self) -> &[usize] {
        &self.stops
    }

    pub fn num_stops(&self) -> usize {
        self.stops.len()
    }

    pub fn num_trips(&self) -> usize {
        self.trip_ids.len()
    }

    pub fn trip_id(&self, trip: usize) -> &str {
        &self.trip_ids[trip]
    }

    #[inline]
    pub fn arrival(&self, trip: usize, pos: usize) -> Time {
        self.arrivals[trip * self.stops.len() + pos]
    }

    #[inline]
    pub fn departure(&self, trip: usize, pos: usize) -> Time {
        self.departures[trip * self.stops.len() + pos]
    }

    pub fn trip_arrivals(&self, trip: usize) -> &[Time] {
        let n = self.stops.len();
        &self.arrivals[trip * n..(trip + 1) * n]
    }

    pub fn trip_departures(&self, trip: usize) -> &[Time] {
        let n = self.stops.len();
        &self.departures[trip * n..(trip + 1) * n]
    }

    /// First trip leaving position `pos` at or after `time`.
    pub fn earliest_trip(&self, pos: usize, time: Time) -> Option<usize> {
        let n = self.num_trips();
        let mut lo = 0;
        let mut hi = n;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.departure(mid, pos) < time {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        (lo < n).then_some(lo)
    }
}

/// Single-day timetable indexed for round-based routing. Immutable once
/// transfers are attached; share it freely across router workers.
#[derive(Debug, Clone)]
pub struct TransitNetwork {
    stops: Vec<Stop>,
    stop_index: HashMap<String, usize>,
    patterns: Vec<Pattern>,
    /// (pattern, position) for every visit of a pattern to each stop.
    stop_patterns: Vec<Vec<(u32, u32)>>,
    transfers: Vec<Vec<Transfer>>,
    service_date: NaiveDate,
}

impl TransitNetwork {
    pub fn stops(&self) -> &[Stop] {
        &self.stops
    }

    pub fn stop_index(&self, id: &str) -> Option<usize> {
        self.stop_index.get(id).copied()
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn patterns_at(&self, stop: usize) -> &[(u32, u32)] {
        &self.stop_patterns[stop]
    }

    pub fn transfers(&self, stop: usize) -> &[Transfer] {
        &self.transfers[stop]
    }

    pub fn service_date(&self) -> NaiveDate {
        self.service_date
    }

    pub fn num_trips(&self) -> usize {
        self.patterns.iter().map(Pattern::num_trips).sum()
    }

    /// Replaces the stop-to-stop walking links. Self links are dropped.
    pub fn set_transfers(&mut self, mut transfers: Vec<Vec<Transfer>>) {
        assert_eq!(transfers.len(), self.stops.len(), "one transfer list per stop");
        for (from, list) in transfers.iter_mut().enumerate() {
            list.retain(|t| t.to != from);
            list.sort_by(|a, b| a.to.cmp(&b.to).then(a.distance_m.total_cmp(&b.distance_m)));
            list.dedup_by_key(|t| t.to);
        }
        self.transfers = transfers;
    }

    /// The retained trips as stop-time rows, sorted by trip and sequence.
    pub fn stop_time_rows(&self) -> Vec<RawStopTime> {
        let mut rows = Vec::new();
        for p in &self.patterns {
            let n = p.num_stops();
            for trip in 0..p.num_trips() {
                for pos in 0..n {
                    rows.push(RawStopTime {
                        trip_id: p.trip_ids[trip].clone(),
                        stop_sequence: p.sequences[trip * n + pos],
                        arrival: p.arrival(trip, pos),
                        departure: p.departure(trip, pos),
                        stop_id: self.stops[p.stops[pos]].id.clone(),
                    });
                }
            }
        }
        rows.sort();
        rows
    }
}

fn active_services(feed: &RawFeed, date: NaiveDate) -> HashSet<&str> {
    let weekday = date.weekday().num_days_from_monday() as usize;
    let mut active: HashSet<&str> = feed
        .calendar
        .iter()
        .filter(|c| c.start_date <= date && date <= c.end_date && c.weekdays[weekday])
        .map(|c| c.service_id.as_str())
        .collect();
    for ex in feed.calendar_dates.iter().filter(|e| e.date == date) {
        if ex.added {
            active.insert(&ex.service_id);
        } else {
            active.remove(ex.service_id.as_str());
        }
    }
    active
}

struct TripRows<'a> {
    trip_id: &'a str,
    route_id: &'a str,
    rows: Vec<&'a RawStopTime>,
}

impl TripRows<'_> {
    /// True when `self` never runs ahead of `other` at any stop.
    fn follows(&self, other: &TripRows<'_>) -> bool {
        self.rows
            .iter()
            .zip(&other.rows)
            .all(|(a, b)| a.arrival >= b.arrival && a.departure >= b.departure)
    }
}

/// Restricts a validated feed to one service day and indexes it into
/// non-overtaking patterns. Trips with fewer than two stops are dropped.
pub fn build_network(feed: &RawFeed, service_date: NaiveDate) -> Result<TransitNetwork, GtfsError> {
    let active = active_services(feed, service_date);
    if active.is_empty() {
        return Err(GtfsError::NoActiveService(service_date));
    }

    let stops: Vec<Stop> = feed
        .stops
        .iter()
        .map(|s| Stop {
            id: s.stop_id.clone(),
            name: s.name.clone(),
            coord: s.coord,
        })
        .collect();
    let stop_index: HashMap<String, usize> = stops
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.clone(), i))
        .collect();

    let mut by_trip: HashMap<&str, Vec<&RawStopTime>> = HashMap::new();
    for st in &feed.stop_times {
        by_trip.entry(&st.trip_id).or_default().push(st);
    }

    // Keyed by stop sequence so pattern order is independent of hashing.
    let mut groups: BTreeMap<Vec<usize>, Vec<TripRows<'_>>> = BTreeMap::new();
    for trip in feed.trips.iter().filter(|t| active.contains(t.service_id.as_str())) {
        let Some(mut rows) = by_trip.remove(trip.trip_id.as_str()) else {
            continue;
        };
        if rows.len() < 2 {
            continue;
        }
        rows.sort_by_key(|r| r.stop_sequence);
        let key = rows.iter().map(|r| stop_index[&r.stop_id]).collect();
        groups.entry(key).or_default().push(TripRows {
            trip_id: &trip.trip_id,
            route_id: &trip.route_id,
            rows,
        });
    }
    if groups.is_empty() {
        return Err(GtfsError::NoActiveService(service_date));
    }

    let mut patterns = Vec::new();
    for (stop_seq, mut trips) in groups {
        trips.sort_by(|a, b| {
            let da = a.rows.iter().map(|r| r.departure);
            let db = b.rows.iter().map(|r| r.departure);
            da.cmp(db).then_with(|| a.trip_id.cmp(b.trip_id))
        });
        let mut chains: Vec<Vec<TripRows<'_>>> = Vec::new();
        for trip in trips {
            match chains
                .iter_mut()
                .find(|c| trip.follows(c.last().expect("chains are never empty")))
            {
                Some(chain) => chain.push(trip),
                None => chains.push(vec![trip]),
            }
        }
        for chain in chains {
            let mut p = Pattern {
                route_id: chain[0].route_id.to_string(),
                stops: stop_seq.clone(),
                trip_ids: Vec::with_capacity(chain.len()),
                sequences: Vec::new(),
                arrivals: Vec::new(),
                departures: Vec::new(),
            };
            for trip in chain {
                p.trip_ids.push(trip.trip_id.to_string());
                for r in trip.rows {
                    p.sequences.push(r.stop_sequence);
                    p.arrivals.push(r.arrival);
                    p.departures.push(r.departure);
                }
            }
            patterns.push(p);
        }
    }

    let mut stop_patterns = vec![Vec::new(); stops.len()];
    for (pi, p) in patterns.iter().enumerate() {
        for (pos, &s) in p.stops.iter().enumerate() {
            stop_patterns[s].push((pi as u32, pos as u32));
        }
    }

    Ok(TransitNetwork {
        transfers: vec![Vec::new(); stops.len()],
        stops,
        stop_index,
        patterns,
        stop_patterns,
        service_date,
    })
}
