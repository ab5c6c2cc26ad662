//! Shared fixtures for integration tests: random timetables and an
//! independent time-expanded shortest-path oracle.

#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ttv::geo::{haversine, Coord, WalkGraph};
use ttv::gtfs::{
    build_network, CalendarEntry, RawFeed, RawRoute, RawStop, RawStopTime, RawTrip, Time,
    TransitNetwork, Transfer,
};
use ttv::router::{Egress, QueryConfig, StreetLinks, TRANSFER_CAP_M};

pub fn service_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2024, 3, 14).unwrap()
}

pub fn every_day(service_id: &str) -> CalendarEntry {
    CalendarEntry {
        service_id: service_id.into(),
        weekdays: [true; 7],
        start_date: NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(),
        end_date: NaiveDate::from_ymd_opt(2024, 12, 31).unwrap(),
    }
}

/// A random instance: feed, walk graph, and the indexed network with
/// transfers attached by the library.
pub struct Instance {
    pub feed: RawFeed,
    pub walk: WalkGraph,
    pub network: TransitNetwork,
    pub links: StreetLinks,
}

fn jitter(rng: &mut ChaCha8Rng, base: Coord, spread_deg: f64) -> Coord {
    Coord::new(
        base.lat + rng.random_range(-spread_deg..spread_deg),
        base.lon + rng.random_range(-spread_deg..spread_deg),
    )
}

pub fn random_feed(rng: &mut ChaCha8Rng, max_stops: usize, max_trips: usize) -> RawFeed {
    let center = Coord::new(52.0, -1.2);
    let n_stops = rng.random_range(5..=max_stops);
    let stops: Vec<RawStop> = (0..n_stops)
        .map(|i| RawStop {
            stop_id: format!("S{i}"),
            name: String::new(),
            coord: jitter(rng, center, 0.015),
        })
        .collect();
    let n_routes = rng.random_range(2..=10);
    let mut routes = Vec::new();
    let mut trips = Vec::new();
    let mut stop_times = Vec::new();
    let mut trip_budget = max_trips;
    for r in 0..n_routes {
        let route_id = format!("R{r}");
        routes.push(RawRoute {
            route_id: route_id.clone(),
            route_type: 3,
        });
        let len = rng.random_range(2..=8.min(n_stops));
        let mut seq: Vec<usize> = (0..n_stops).collect();
        for i in 0..len {
            let j = rng.random_range(i..n_stops);
            seq.swap(i, j);
        }
        seq.truncate(len);
        let share = (max_trips / n_routes).max(1);
        let n_trips = rng.random_range(1..=share).min(trip_budget);
        trip_budget -= n_trips;
        let base_hops: Vec<u32> = (1..len).map(|_| rng.random_range(60..600)).collect();
        for t in 0..n_trips {
            let trip_id = format!("{route_id}T{t}");
            trips.push(RawTrip {
                trip_id: trip_id.clone(),
                route_id: route_id.clone(),
                service_id: "ALL".into(),
            });
            let mut time: Time = rng.random_range(8 * 3600..10 * 3600);
            for (k, &stop) in seq.iter().enumerate() {
                let arrival = time;
                let departure = arrival + if rng.random_bool(0.3) { rng.random_range(0..90) } else { 0 };
                stop_times.push(RawStopTime {
                    trip_id: trip_id.clone(),
                    stop_sequence: (k as u32 + 1) * 10,
                    arrival,
                    departure,
                    stop_id: format!("S{stop}"),
                });
                if k + 1 < len {
                    // Occasional slow trips make overtaking happen.
                    let slow = if rng.random_bool(0.15) { rng.random_range(0..400) } else { 0 };
                    time = departure + base_hops[k] + slow;
                }
            }
        }
        if trip_budget == 0 {
            break;
        }
    }
    RawFeed {
        stops,
        routes,
        trips,
        stop_times,
        calendar: vec![every_day("ALL")],
        calendar_dates: vec![],
    }
}

pub fn random_walk_graph(rng: &mut ChaCha8Rng, n_nodes: usize) -> WalkGraph {
    let center = Coord::new(52.0, -1.2);
    let mut g = WalkGraph::new();
    let coords: Vec<Coord> = (0..n_nodes).map(|_| jitter(rng, center, 0.016)).collect();
    for (i, c) in coords.iter().enumerate() {
        g.add_node(format!("N{i}"), *c).unwrap();
    }
    for i in 0..n_nodes {
        let mut near: Vec<(f64, usize)> = (0..n_nodes)
            .filter(|&j| j != i)
            .map(|j| (haversine(coords[i], coords[j]), j))
            .collect();
        near.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &(d, j) in near.iter().take(3) {
            if rng.random_bool(0.8) {
                g.add_edge(i, j, d.max(1.0) * rng.random_range(1.0..1.3)).unwrap();
            }
        }
    }
    g
}

pub fn random_instance(seed: u64, max_stops: usize, max_trips: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let feed = random_feed(&mut rng, max_stops, max_trips);
    let n_nodes = rng.random_range(10..60);
    let walk = random_walk_graph(&mut rng, n_nodes);
    instance_from(feed, walk)
}

pub fn instance_from(feed: RawFeed, walk: WalkGraph) -> Instance {
    let mut network = build_network(&feed, service_date()).unwrap();
    let links = StreetLinks::new(&network, &walk);
    network.set_transfers(links.transfers(&walk, TRANSFER_CAP_M));
    Instance {
        feed,
        walk,
        network,
        links,
    }
}

pub fn random_point(rng: &mut ChaCha8Rng) -> Coord {
    jitter(rng, Coord::new(52.0, -1.2), 0.016)
}

pub fn random_config(rng: &mut ChaCha8Rng) -> QueryConfig {
    QueryConfig {
        departure: rng.random_range(8 * 3600..10 * 3600),
        max_duration: [1800, 3600, 7200][rng.random_range(0..3)],
        max_rides: rng.random_range(1..=8),
        walk_speed_kmh: [3.6, 5.0][rng.random_range(0..2)],
        max_walk_duration: [600, 1200, 7200][rng.random_range(0..3)],
        ..QueryConfig::default()
    }
}

// ---------------------------------------------------------------------------
// Oracle

/// All-pairs walk distances by Floyd–Warshall.
pub struct WalkOracle {
    dist: Vec<Vec<f64>>,
    stop_attach: Vec<(usize, f64)>,
}

fn nearest_node_brute(walk: &WalkGraph, p: Coord) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for i in 0..walk.len() {
        let d = haversine(p, walk.coord(i));
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

impl WalkOracle {
    pub fn new(walk: &WalkGraph, stops: &[Coord]) -> Self {
        let n = walk.len();
        let mut dist = vec![vec![f64::INFINITY; n]; n];
        for (i, row) in dist.iter_mut().enumerate() {
            row[i] = 0.0;
            for &(j, len) in walk.neighbors(i) {
                row[j] = row[j].min(len);
            }
        }
        for k in 0..n {
            for i in 0..n {
                let dik = dist[i][k];
                if dik.is_infinite() {
                    continue;
                }
                let (row_k, row_i) = if i < k {
                    let (a, b) = dist.split_at_mut(k);
                    (&b[0], &mut a[i])
                } else if i > k {
                    let (a, b) = dist.split_at_mut(i);
                    (&a[k], &mut b[0])
                } else {
                    continue;
                };
                for (dij, dkj) in row_i.iter_mut().zip(row_k) {
                    *dij = dij.min(dik + dkj);
                }
            }
        }
        let stop_attach = stops.iter().map(|&c| nearest_node_brute(walk, c)).collect();
        Self { dist, stop_attach }
    }

    pub fn transfers(&self) -> Vec<Vec<(usize, f64)>> {
        let n = self.stop_attach.len();
        (0..n)
            .map(|a| {
                let (na, da) = self.stop_attach[a];
                (0..n)
                    .filter(|&b| b != a)
                    .filter_map(|b| {
                        let (nb, db) = self.stop_attach[b];
                        let d = da + self.dist[na][nb] + db;
                        (d <= TRANSFER_CAP_M).then_some((b, d))
                    })
                    .collect()
            })
            .collect()
    }

    pub fn egress(&self, walk: &WalkGraph, point: Coord, max_m: f64) -> Vec<(usize, f64)> {
        let (nf, df) = nearest_node_brute(walk, point);
        self.stop_attach
            .iter()
            .enumerate()
            .filter_map(|(s, &(ns, ds))| {
                let d = df + self.dist[nf][ns] + ds;
                (d <= max_m).then_some((s, d))
            })
            .collect()
    }
}

fn secs(meters: f64, speed_kmh: f64) -> u32 {
    (meters / (speed_kmh / 3.6)).round() as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Node {
    Wait(usize, Time),
    Dep(usize, usize),
    Arr(usize, usize),
}

/// Earliest arrival and fewest rides via Dijkstra on an explicit
/// time-expanded graph built from the raw stop-time rows.
///
/// Nodes are departure and arrival events of each trip plus a waiting
/// chain per stop; every state also carries its ride count. Walking
/// transfers leave only from arrival events (or the origin), and the
/// destination is reached by walking from any waiting node.
pub fn oracle_earliest_arrival(
    feed: &RawFeed,
    stop_index: &HashMap<String, usize>,
    transfers: &[Vec<(usize, f64)>],
    egress: &[(usize, f64)],
    origin: usize,
    depart: Time,
    cfg: &QueryConfig,
) -> Option<(Time, u8)> {
    let mut trips: BTreeMap<&str, Vec<&RawStopTime>> = BTreeMap::new();
    for st in &feed.stop_times {
        trips.entry(&st.trip_id).or_default().push(st);
    }
    let trips: Vec<Vec<(usize, Time, Time)>> = trips
        .into_values()
        .map(|mut rows| {
            rows.sort_by_key(|r| r.stop_sequence);
            rows.iter()
                .map(|r| (stop_index[&r.stop_id], r.arrival, r.departure))
                .collect()
        })
        .collect();

    let walk_ok = |m: f64| {
        let s = secs(m, cfg.walk_speed_kmh);
        (s <= cfg.max_walk_duration).then_some(s)
    };

    // Waiting chain event times per stop.
    let n_stops = stop_index.len();
    let mut wait_times: Vec<Vec<Time>> = vec![Vec::new(); n_stops];
    wait_times[origin].push(depart);
    for &(to, m) in &transfers[origin] {
        if let Some(w) = walk_ok(m) {
            wait_times[to].push(depart + w);
        }
    }
    for trip in &trips {
        for &(s, arr, dep) in trip {
            wait_times[s].push(dep);
            wait_times[s].push(arr);
            for &(to, m) in &transfers[s] {
                if let Some(w) = walk_ok(m) {
                    wait_times[to].push(arr + w);
                }
            }
        }
    }
    for w in &mut wait_times {
        w.sort_unstable();
        w.dedup();
    }
    let mut boardings: HashMap<(usize, Time), Vec<(usize, usize)>> = HashMap::new();
    for (ti, trip) in trips.iter().enumerate() {
        for (pos, &(s, _, dep)) in trip.iter().enumerate() {
            boardings.entry((s, dep)).or_default().push((ti, pos));
        }
    }
    let node_time = |n: Node| match n {
        Node::Wait(_, t) => t,
        Node::Dep(ti, pos) => trips[ti][pos].2,
        Node::Arr(ti, pos) => trips[ti][pos].1,
    };

    let limit = depart + cfg.max_duration;
    let mut seen: HashMap<(Node, u8), ()> = HashMap::new();
    let mut heap = BinaryHeap::new();
    let push = |heap: &mut BinaryHeap<_>, n: Node, r: u8| {
        let t = node_time(n);
        if t <= limit {
            heap.push(Reverse((t, n, r)));
        }
    };
    push(&mut heap, Node::Wait(origin, depart), 0);
    for &(to, m) in &transfers[origin] {
        if let Some(w) = walk_ok(m) {
            push(&mut heap, Node::Wait(to, depart + w), 0);
        }
    }

    let egress_of: HashMap<usize, u32> = egress
        .iter()
        .filter_map(|&(s, m)| walk_ok(m).map(|w| (s, w)))
        .collect();
    let mut best: Option<(Time, u8)> = None;

    while let Some(Reverse((t, node, rides))) = heap.pop() {
        if seen.insert((node, rides), ()).is_some() {
            continue;
        }
        match node {
            Node::Wait(s, _) => {
                if let Some(&w) = egress_of.get(&s) {
                    let at = t + w;
                    if at <= limit && best.is_none_or(|b| (at, rides) < b) {
                        best = Some((at, rides));
                    }
                }
                let times = &wait_times[s];
                let idx = times.binary_search(&t).expect("wait node exists");
                if idx + 1 < times.len() {
                    push(&mut heap, Node::Wait(s, times[idx + 1]), rides);
                }
                if rides < cfg.max_rides {
                    if let Some(list) = boardings.get(&(s, t)) {
                        for &(ti, pos) in list {
                            push(&mut heap, Node::Dep(ti, pos), rides + 1);
                        }
                    }
                }
            }
            Node::Dep(ti, pos) => {
                if pos + 1 < trips[ti].len() {
                    push(&mut heap, Node::Arr(ti, pos + 1), rides);
                }
            }
            Node::Arr(ti, pos) => {
                let (s, arr, _) = trips[ti][pos];
                push(&mut heap, Node::Dep(ti, pos), rides);
                push(&mut heap, Node::Wait(s, arr), rides);
                for &(to, m) in &transfers[s] {
                    if let Some(w) = walk_ok(m) {
                        push(&mut heap, Node::Wait(to, arr + w), rides);
                    }
                }
            }
        }
    }
    best
}

/// Transfers in the library's representation, from the oracle's walk
/// distances.
pub fn as_transfers(list: &[Vec<(usize, f64)>]) -> Vec<Vec<Transfer>> {
    list.iter()
        .map(|l| l.iter().map(|&(to, distance_m)| Transfer { to, distance_m }).collect())
        .collect()
}

pub fn egress_from(entries: Vec<(usize, f64)>) -> Egress {
    Egress::new(entries)
}

// ---------------------------------------------------------------------------
// Hand-built fixtures

/// Stops spaced 0.01° of latitude apart (about 1.1 km, beyond the
/// transfer cap). Each stop has a walk node at the same position; `walk`
/// lists extra nodes as (id, coord) and edges as (from, to, meters).
pub struct Fixture {
    pub stops: Vec<&'static str>,
    pub trips: Vec<Vec<(&'static str, Time, Time)>>,
    pub extra_nodes: Vec<(&'static str, Coord)>,
    pub edges: Vec<(&'static str, &'static str, f64)>,
}

pub fn stop_coord(i: usize) -> Coord {
    Coord::new(52.0 + 0.01 * i as f64, -1.2)
}

impl Fixture {
    pub fn feed(&self) -> RawFeed {
        let stops = self
            .stops
            .iter()
            .enumerate()
            .map(|(i, id)| RawStop {
                stop_id: id.to_string(),
                name: String::new(),
                coord: stop_coord(i),
            })
            .collect();
        let mut trips = Vec::new();
        let mut stop_times = Vec::new();
        for (t, rows) in self.trips.iter().enumerate() {
            let trip_id = format!("T{t}");
            trips.push(RawTrip {
                trip_id: trip_id.clone(),
                route_id: "R".into(),
                service_id: "ALL".into(),
            });
            for (k, &(stop, arrival, departure)) in rows.iter().enumerate() {
                stop_times.push(RawStopTime {
                    trip_id: trip_id.clone(),
                    stop_sequence: k as u32 + 1,
                    arrival,
                    departure,
                    stop_id: stop.into(),
                });
            }
        }
        RawFeed {
            stops,
            routes: vec![RawRoute {
                route_id: "R".into(),
                route_type: 3,
            }],
            trips,
            stop_times,
            calendar: vec![every_day("ALL")],
            calendar_dates: vec![],
        }
    }

    pub fn walk(&self) -> WalkGraph {
        let mut g = WalkGraph::new();
        for (i, id) in self.stops.iter().enumerate() {
            g.add_node(format!("n_{id}"), stop_coord(i)).unwrap();
        }
        for (id, c) in &self.extra_nodes {
            g.add_node(id.to_string(), *c).unwrap();
        }
        let idx = |id: &str| {
            g.node_index(id)
                .or_else(|| g.node_index(&format!("n_{id}")))
                .unwrap()
        };
        let edges: Vec<_> = self.edges.iter().map(|&(a, b, m)| (idx(a), idx(b), m)).collect();
        for (a, b, m) in edges {
            g.add_edge(a, b, m).unwrap();
        }
        g
    }

    pub fn instance(&self) -> Instance {
        instance_from(self.feed(), self.walk())
    }
}

// ---------------------------------------------------------------------------
// Statistics oracles

/// Dense weight matrix from the sparse representation.
pub fn dense(w: &ttv::spatial::SpatialWeights) -> Vec<Vec<f64>> {
    let n = w.n();
    let mut m = vec![vec![0.0; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        for (&j, &wij) in w.neighbors(i).iter().zip(w.weights(i)) {
            row[j] += wij;
        }
    }
    m
}

/// Moran's I by the textbook double sum over a dense matrix.
pub fn moran_oracle(x: &[f64], w: &[Vec<f64>]) -> f64 {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let mut num = 0.0;
    let mut s0 = 0.0;
    for i in 0..n {
        for j in 0..n {
            num += w[i][j] * (x[i] - mean) * (x[j] - mean);
            s0 += w[i][j];
        }
    }
    let den: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    n as f64 * num / (den * s0)
}

/// k nearest by fully sorting every other unit.
pub fn knn_oracle(pts: &[Coord], k: usize) -> Vec<Vec<usize>> {
    (0..pts.len())
        .map(|i| {
            let mut all: Vec<(f64, usize)> = (0..pts.len())
                .filter(|&j| j != i)
                .map(|j| (haversine(pts[i], pts[j]), j))
                .collect();
            all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            all.into_iter().take(k).map(|p| p.1).collect()
        })
        .collect()
}

/// Benjamini–Hochberg by the O(m²) definition.
pub fn fdr_oracle(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut sorted: Vec<(f64, usize)> = p.iter().copied().zip(0..).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out = vec![0.0; m];
    for i in 0..m {
        let mut best = f64::INFINITY;
        for (j, &(pj, _)) in sorted.iter().enumerate().skip(i) {
            best = best.min((pj * m as f64 / (j + 1) as f64).min(1.0));
        }
        out[sorted[i].1] = best;
    }
    out
}

/// Gini as the mean absolute difference over all ordered pairs divided by
/// twice the mean.
pub fn gini_oracle(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return 0.0;
    }
    let mut s = 0.0;
    for a in x {
        for b in x {
            s += (a - b).abs();
        }
    }
    s / (2.0 * n * n * mean)
}

/// Cell centres of a rows × cols grid near the equator, row-major.
pub fn grid_points(rows: usize, cols: usize) -> Vec<Coord> {
    (0..rows)
        .flat_map(|r| (0..cols).map(move |c| Coord::new(r as f64 * 0.01, c as f64 * 0.01)))
        .collect()
}

pub fn normal_noise(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// 10×10 field of unit noise with a 3×3 block of +10 at rows/cols 3..6.
pub fn block_field(seed: u64) -> (Vec<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = normal_noise(&mut rng, 100);
    let mut block = Vec::new();
    for r in 3..6 {
        for c in 3..6 {
            x[r * 10 + c] += 10.0;
            block.push(r * 10 + c);
        }
    }
    (x, block)
}
