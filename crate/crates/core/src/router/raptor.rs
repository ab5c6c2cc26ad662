use super::{Egress, QueryConfig};
use crate::gtfs::{Time, TransitNetwork};

const UNREACHED: Time = Time::MAX;

/// Earliest arrival at a destination and the fewest rides achieving it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arrival {
    pub time: Time,
    pub rides: u8,
}

/// Reusable per-worker scratch space for round-based search.
///
/// Two labels are kept per stop: the best arrival by any means (which
/// gates boarding) and the best arrival off a vehicle (which gates
/// walking transfers). Walking never chains: a stop reached on foot can
/// be boarded from or walked to the destination from, but not walked on
/// from to a third stop.
#[derive(Debug, Default)]
pub struct RaptorWorkspace {
    best_any: Vec<Time>,
    best_vehicle: Vec<Time>,
    board_prev: Vec<Time>,
    any_flag: Vec<bool>,
    vehicle_flag: Vec<bool>,
    improved_any: Vec<usize>,
    improved_vehicle: Vec<usize>,
    pattern_start: Vec<u32>,
    queued: Vec<usize>,
}

impl RaptorWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    fn reset(&mut self, n_stops: usize, n_patterns: usize) {
        for v in [&mut self.best_any, &mut self.best_vehicle, &mut self.board_prev] {
            v.clear();
            v.resize(n_stops, UNREACHED);
        }
        for v in [&mut self.any_flag, &mut self.vehicle_flag] {
            v.clear();
            v.resize(n_stops, false);
        }
        self.pattern_start.clear();
        self.pattern_start.resize(n_patterns, u32::MAX);
        self.improved_any.clear();
        self.improved_vehicle.clear();
        self.queued.clear();
    }

    fn improve_any(&mut self, stop: usize, t: Time) -> bool {
        if t < self.best_any[stop] {
            self.best_any[stop] = t;
            if !self.any_flag[stop] {
                self.any_flag[stop] = true;
                self.improved_any.push(stop);
            }
            true
        } else {
            false
        }
    }

    /// Earliest arrivals at each target for one departure time. Targets
    /// that cannot be reached within `cfg.max_duration` come back `None`.
    pub fn earliest_arrivals(
        &mut self,
        network: &TransitNetwork,
        origin: usize,
        depart_at: Time,
        cfg: &QueryConfig,
        targets: &[&Egress],
    ) -> Vec<Option<Arrival>> {
        let n_stops = network.stops().len();
        assert!(origin < n_stops, "origin stop {origin} out of range");
        self.reset(n_stops, network.patterns().len());

        let limit = depart_at.saturating_add(cfg.max_duration);
        let mut target_best = vec![UNREACHED; targets.len()];
        let mut target_rides = vec![0u8; targets.len()];

        // Round 0: stand at the origin, optionally walk one transfer.
        self.improve_any(origin, depart_at);
        for tr in network.transfers(origin) {
            let w = cfg.walk_seconds(tr.distance_m);
            if w <= cfg.max_walk_duration {
                let t = depart_at.saturating_add(w);
                if t <= limit {
                    self.improve_any(tr.to, t);
                }
            }
        }
        self.settle_targets(cfg, limit, targets, &mut target_best, &mut target_rides, 0);

        for round in 1..=cfg.max_rides {
            if self.improved_any.is_empty() {
                break;
            }
            // Boarding in this round may only use labels from earlier rounds.
            for &s in &self.improved_any {
                self.any_flag[s] = false;
                for &(p, pos) in network.patterns_at(s) {
                    let p = p as usize;
                    if self.pattern_start[p] == u32::MAX {
                        self.queued.push(p);
                    }
                    self.pattern_start[p] = self.pattern_start[p].min(pos);
                }
            }
            for &s in &self.improved_any {
                self.board_prev[s] = self.best_any[s];
            }
            self.improved_any.clear();
            self.queued.sort_unstable();

            let bound = target_best.iter().copied().max().unwrap_or(UNREACHED);
            let useful = |t: Time| t <= limit && t < bound;

            let queued = std::mem::take(&mut self.queued);
            for &p in &queued {
                let start = std::mem::replace(&mut self.pattern_start[p], u32::MAX) as usize;
                let pattern = &network.patterns()[p];
                let mut trip: Option<usize> = None;
                for pos in start..pattern.num_stops() {
                    let stop = pattern.stops()[pos];
                    if let Some(tr) = trip {
                        let arr = pattern.arrival(tr, pos);
                        if useful(arr) {
                            if arr < self.best_vehicle[stop] {
                                self.best_vehicle[stop] = arr;
                                if !self.vehicle_flag[stop] {
                                    self.vehicle_flag[stop] = true;
                                    self.improved_vehicle.push(stop);
                                }
                            }
                            self.improve_any(stop, arr);
                        }
                    }
                    let ready = self.board_prev[stop];
                    if ready == UNREACHED {
                        continue;
                    }
                    let can_improve = match trip {
                        None => true,
                        Some(tr) => ready <= pattern.departure(tr, pos),
                    };
                    if can_improve {
                        if let Some(candidate) = pattern.earliest_trip(pos, ready) {
                            if trip.is_none_or(|tr| candidate < tr) {
                                trip = Some(candidate);
                            }
                        }
                    }
                }
            }
            self.queued = queued;
            self.queued.clear();

            let improved_vehicle = std::mem::take(&mut self.improved_vehicle);
            for &s in &improved_vehicle {
                self.vehicle_flag[s] = false;
                let t0 = self.best_vehicle[s];
                for tr in network.transfers(s) {
                    let w = cfg.walk_seconds(tr.distance_m);
                    if w > cfg.max_walk_duration {
                        continue;
                    }
                    let t = t0.saturating_add(w);
                    if useful(t) {
                        self.improve_any(tr.to, t);
                    }
                }
            }
            self.improved_vehicle = improved_vehicle;
            self.improved_vehicle.clear();

            self.settle_targets(cfg, limit, targets, &mut target_best, &mut target_rides, round);
        }

        target_best
            .into_iter()
            .zip(target_rides)
            .map(|(time, rides)| (time != UNREACHED).then_some(Arrival { time, rides }))
            .collect()
    }

    fn settle_targets(
        &self,
        cfg: &QueryConfig,
        limit: Time,
        targets: &[&Egress],
        best: &mut [Time],
        rides: &mut [u8],
        round: u8,
    ) {
        for (j, egress) in targets.iter().enumerate() {
            for &(stop, meters) in &egress.entries {
                if !self.any_flag[stop] {
                    continue;
                }
                let w = cfg.walk_seconds(meters);
                if w > cfg.max_walk_duration {
                    continue;
                }
                let t = self.best_any[stop].saturating_add(w);
                if t <= limit && t < best[j] {
                    best[j] = t;
                    rides[j] = round;
                }
            }
        }
    }
}

/// Earliest arrival at one destination departing `origin` no earlier than
/// `depart_at`, or `None` when nothing arrives within the caps.
pub fn earliest_arrival(
    network: &TransitNetwork,
    egress: &Egress,
    origin: usize,
    depart_at: Time,
    cfg: &QueryConfig,
) -> Option<Arrival> {
    RaptorWorkspace::new().earliest_arrivals(network, origin, depart_at, cfg, &[egress])[0]
}
