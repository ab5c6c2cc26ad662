use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{PipelineError, RunConfig, Table};
use crate::geo::{haversine, Coord, SettlementClass};
use crate::gtfs::{
    write_feed, CalendarEntry, RawFeed, RawRoute, RawStop, RawStopTime, RawTrip, Time,
};

const CELL_M: f64 = 2000.0;
const ORIGIN: Coord = Coord { lat: 52.0, lon: -1.5 };
const SERVICE_DATE: &str = "2024-03-14";
/// Seconds per hop between adjacent cells, dwell included.
const HOP_S: Time = 300;
const FIRST_DEPARTURE: Time = 6 * 3600;
const LAST_DEPARTURE: Time = 22 * 3600;

/// Parameters of a synthetic grid city.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub rows: usize,
    pub cols: usize,
    /// Minutes between departures on downtown routes.
    pub downtown_headway: u32,
    /// Minutes between departures on the city-wide grid routes.
    pub rural_headway: u32,
    pub seed: u64,
    /// Neighbours for spatial weights in the generated config.
    pub knn_k: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            rows: 10,
            cols: 10,
            downtown_headway: 10,
            rural_headway: 60,
            seed: 7,
            knn_k: 10,
        }
    }
}

struct Grid {
    rows: usize,
    cols: usize,
    dlat: f64,
    dlon: f64,
}

impl Grid {
    fn centre(&self, r: usize, c: usize) -> Coord {
        Coord::new(ORIGIN.lat + r as f64 * self.dlat, ORIGIN.lon + c as f64 * self.dlon)
    }

    fn offset(&self, p: Coord, rng: &mut ChaCha8Rng, max_m: f64) -> Coord {
        let f = max_m / CELL_M;
        Coord::new(
            p.lat + rng.random_range(-f..f) * self.dlat,
            p.lon + rng.random_range(-f..f) * self.dlon,
        )
    }

    /// Middle band of rows or columns, about two fifths of the extent.
    fn downtown_span(n: usize) -> (usize, usize) {
        let lo = n * 3 / 10;
        (lo, n - 1 - lo)
    }

    fn is_downtown(&self, r: usize, c: usize) -> bool {
        let (r0, r1) = Self::downtown_span(self.rows);
        let (c0, c1) = Self::downtown_span(self.cols);
        (r0..=r1).contains(&r) && (c0..=c1).contains(&c)
    }

    fn settlement(&self, r: usize, c: usize) -> SettlementClass {
        if self.is_downtown(r, c) {
            return SettlementClass::UrbanNearer;
        }
        let cr = ((self.rows - 1) as f64 / 2.0).max(0.5);
        let cc = ((self.cols - 1) as f64 / 2.0).max(0.5);
        let d = ((r as f64 - cr).abs() / cr).max((c as f64 - cc).abs() / cc);
        match d {
            d if d < 0.6 => SettlementClass::UrbanFurther,
            d if d < 0.7 => SettlementClass::LargerRuralNearer,
            d if d < 0.8 => SettlementClass::LargerRuralFurther,
            d if d < 0.9 => SettlementClass::SmallerRuralNearer,
            _ => SettlementClass::SmallerRuralFurther,
        }
    }
}

fn stop_id(r: usize, c: usize) -> String {
    format!("S{r:02}{c:02}")
}

/// Departures every `headway` minutes across the service day, each
/// jittered by up to a quarter headway; sparse services also drop about
/// one run in seven.
fn departures(rng: &mut ChaCha8Rng, headway: u32) -> Vec<Time> {
    let step = headway * 60;
    let jitter = (step / 4) as i64;
    let mut out = Vec::new();
    let mut t = FIRST_DEPARTURE;
    while t < LAST_DEPARTURE {
        let skip = headway > 20 && rng.random_bool(1.0 / 7.0);
        let d = t as i64 + rng.random_range(-jitter..=jitter);
        if !skip {
            out.push(d.max(0) as Time);
        }
        t += step;
    }
    out.sort_unstable();
    out
}

fn add_route(feed: &mut RawFeed, rng: &mut ChaCha8Rng, route_id: String, stops: &[String], headway: u32) {
    if stops.len() < 2 {
        return;
    }
    feed.routes.push(RawRoute {
        route_id: route_id.clone(),
        route_type: 3,
    });
    for (dir, seq) in [stops.to_vec(), stops.iter().rev().cloned().collect()].iter().enumerate() {
        for (n, start) in departures(rng, headway).into_iter().enumerate() {
            let trip_id = format!("{route_id}_{dir}_{n:03}");
            feed.trips.push(RawTrip {
                trip_id: trip_id.clone(),
                route_id: route_id.clone(),
                service_id: "WK".into(),
            });
            for (k, stop) in seq.iter().enumerate() {
                let t = start + k as Time * HOP_S;
                feed.stop_times.push(RawStopTime {
                    trip_id: trip_id.clone(),
                    stop_sequence: k as u32 + 1,
                    arrival: t,
                    departure: t,
                    stop_id: stop.clone(),
                });
            }
        }
    }
}

/// Writes a grid city with its timetable, walk network, zones, facilities,
/// deprivation scores, an all-unchanged lookup and a `run.toml` pointing
/// at them. The same spec always produces the same files.
///
/// Every row and column has a two-way route at the rural headway; rows
/// and columns crossing the downtown box also get a frequent route over
/// the downtown cells. One hospital sits at the centre and GPs are
/// scattered at random.
pub fn generate_synthetic_city(spec: &SynthSpec, out: &Path) -> Result<RunConfig, PipelineError> {
    let n = spec.rows * spec.cols;
    if n < spec.knn_k + 1 {
        return Err(PipelineError::input(
            "synth",
            format!("a {}x{} grid has {n} zones; at least {} are needed", spec.rows, spec.cols, spec.knn_k + 1),
        ));
    }
    if spec.downtown_headway == 0 || spec.rural_headway == 0 {
        return Err(PipelineError::input("synth", "headways must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dlat = CELL_M / haversine(ORIGIN, Coord::new(ORIGIN.lat + 1.0, ORIGIN.lon));
    let dlon = CELL_M / haversine(ORIGIN, Coord::new(ORIGIN.lat, ORIGIN.lon + 1.0));
    let grid = Grid {
        rows: spec.rows,
        cols: spec.cols,
        dlat,
        dlon,
    };
    let cells: Vec<(usize, usize)> = (0..spec.rows).flat_map(|r| (0..spec.cols).map(move |c| (r, c))).collect();

    // Timetable.
    let mut feed = RawFeed {
        calendar: vec![CalendarEntry {
            service_id: "WK".into(),
            weekdays: [true; 7],
            start_date: NaiveDate::from_ymd_opt(2024, 1, 1).expect("valid date"),
            end_date: NaiveDate::from_ymd_opt(2024, 12, 31).expect("valid date"),
        }],
        ..RawFeed::default()
    };
    for &(r, c) in &cells {
        feed.stops.push(RawStop {
            stop_id: stop_id(r, c),
            name: format!("Cell {r} {c}"),
            coord: grid.offset(grid.centre(r, c), &mut rng, 100.0),
        });
    }
    let (r0, r1) = Grid::downtown_span(spec.rows);
    let (c0, c1) = Grid::downtown_span(spec.cols);
    for r in 0..spec.rows {
        let line: Vec<String> = (0..spec.cols).map(|c| stop_id(r, c)).collect();
        add_route(&mut feed, &mut rng, format!("ROW{r:02}"), &line, spec.rural_headway);
        if (r0..=r1).contains(&r) {
            add_route(&mut feed, &mut rng, format!("DROW{r:02}"), &line[c0..=c1], spec.downtown_headway);
        }
    }
    for c in 0..spec.cols {
        let line: Vec<String> = (0..spec.rows).map(|r| stop_id(r, c)).collect();
        add_route(&mut feed, &mut rng, format!("COL{c:02}"), &line, spec.rural_headway);
        if (c0..=c1).contains(&c) {
            add_route(&mut feed, &mut rng, format!("DCOL{c:02}"), &line[r0..=r1], spec.downtown_headway);
        }
    }
    fs::create_dir_all(out).map_err(|e| PipelineError::stage("synth", format!("{}: {e}", out.display())))?;
    write_feed(&out.join("gtfs"), &feed).map_err(|e| PipelineError::stage("synth", e))?;

    // Walk network: a node per cell centre, 4-neighbour streets a quarter
    // longer than the straight line.
    let mut nodes = Table::new("walk_nodes.csv", ["node_id", "lat", "lon"]);
    let mut edges = Table::new("walk_edges.csv", ["from_node", "to_node", "length_m"]);
    for &(r, c) in &cells {
        let p = grid.centre(r, c);
        nodes.push(vec![format!("W{r:02}{c:02}"), p.lat.to_string(), p.lon.to_string()]);
        for (r2, c2) in [(r + 1, c), (r, c + 1)] {
            if r2 < spec.rows && c2 < spec.cols {
                let len = haversine(p, grid.centre(r2, c2)) * 1.25;
                edges.push(vec![format!("W{r:02}{c:02}"), format!("W{r2:02}{c2:02}"), format!("{len:.1}")]);
            }
        }
    }

    // Zones, deprivation and lookup.
    let mut zones = Table::new("zones.csv", ["zone_id", "lat", "lon", "lad_code", "settlement_class"]);
    let mut imd = Table::new("deprivation.csv", ["zone_id_old", "imd_score"]);
    let mut lookup = Table::new("lookup.csv", ["zone_id_old", "zone_id_new", "change_type"]);
    for &(r, c) in &cells {
        let id = format!("Z{r:02}{c:02}");
        let p = grid.offset(grid.centre(r, c), &mut rng, 300.0);
        let lad = 1 + usize::from(r >= spec.rows / 2) * 2 + usize::from(c >= spec.cols / 2);
        zones.push(vec![
            id.clone(),
            p.lat.to_string(),
            p.lon.to_string(),
            format!("LAD{lad}"),
            grid.settlement(r, c).code().into(),
        ]);
        imd.push(vec![id.clone(), format!("{:.2}", rng.random_range(5.0..60.0))]);
        lookup.push(vec![id.clone(), id, "unchanged".into()]);
    }

    // Facilities.
    let mut facilities = Table::new("facilities.csv", ["facility_id", "kind", "lat", "lon"]);
    let mid = grid.centre(spec.rows / 2, spec.cols / 2);
    facilities.push(vec!["H001".into(), "hospital".into(), mid.lat.to_string(), mid.lon.to_string()]);
    for g in 0..(n / 10).max(2) {
        let p = Coord::new(
            ORIGIN.lat + rng.random_range(0.0..(spec.rows - 1).max(1) as f64) * dlat,
            ORIGIN.lon + rng.random_range(0.0..(spec.cols - 1).max(1) as f64) * dlon,
        );
        facilities.push(vec![format!("GP{g:03}"), "gp".into(), p.lat.to_string(), p.lon.to_string()]);
    }

    for t in [&nodes, &edges, &zones, &imd, &lookup, &facilities] {
        t.write(out).map_err(|e| PipelineError::stage("synth", e))?;
    }
    let mut cfg = RunConfig::with_paths("gtfs", SERVICE_DATE, spec.seed);
    cfg.deprivation = Some("deprivation.csv".into());
    cfg.lookup = Some("lookup.csv".into());
    cfg.knn_k = spec.knn_k;
    fs::write(out.join("run.toml"), cfg.to_toml()).map_err(|e| PipelineError::stage("synth", e))?;
    cfg.set_base_dir(out);
    Ok(cfg)
}
