use std::collections::HashMap;

use rayon::prelude::*;

use crate::geo::{Coord, WalkGraph};
use crate::gtfs::{TransitNetwork, Transfer};

/// Longest stop-to-stop walk generated as a transfer.
pub const TRANSFER_CAP_M: f64 = 1000.0;

/// Walking distances from stops to one destination point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Egress {
    /// (stop index, meters), sorted by stop.
    pub entries: Vec<(usize, f64)>,
}

impl Egress {
    pub fn new(mut entries: Vec<(usize, f64)>) -> Self {
        entries.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        entries.dedup_by_key(|e| e.0);
        Self { entries }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Straight-line attachment of every stop to its nearest walk node.
#[derive(Debug, Clone)]
pub struct StreetLinks {
    stop_node: Vec<Option<(usize, f64)>>,
    node_stops: HashMap<usize, Vec<(usize, f64)>>,
}

impl StreetLinks {
    pub fn new(network: &TransitNetwork, walk: &WalkGraph) -> Self {
        let stop_node: Vec<Option<(usize, f64)>> = network
            .stops()
            .par_iter()
            .map(|s| walk.nearest_node(s.coord))
            .collect();
        let mut node_stops: HashMap<usize, Vec<(usize, f64)>> = HashMap::new();
        for (stop, link) in stop_node.iter().enumerate() {
            if let Some((node, attach)) = link {
                node_stops.entry(*node).or_default().push((stop, *attach));
            }
        }
        Self {
            stop_node,
            node_stops,
        }
    }

    pub fn stop_node(&self, stop: usize) -> Option<(usize, f64)> {
        self.stop_node[stop]
    }

    /// Stops reachable on foot from `node` within `budget_m`, including the
    /// node-to-stop attachment, as (stop, meters from node).
    fn stops_within(&self, walk: &WalkGraph, node: usize, budget_m: f64) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        if budget_m < 0.0 {
            return out;
        }
        for (n, d) in walk.distances_from(node, budget_m) {
            if let Some(stops) = self.node_stops.get(&n) {
                for &(stop, attach) in stops {
                    if d + attach <= budget_m {
                        out.push((stop, d + attach));
                    }
                }
            }
        }
        out
    }

    /// Walking links between distinct stops no longer than `cap_m`.
    pub fn transfers(&self, walk: &WalkGraph, cap_m: f64) -> Vec<Vec<Transfer>> {
        self.stop_node
            .par_iter()
            .enumerate()
            .map(|(from, link)| {
                let Some((node, attach)) = *link else {
                    return Vec::new();
                };
                let mut list: Vec<Transfer> = self
                    .stops_within(walk, node, cap_m - attach)
                    .into_iter()
                    .filter(|&(to, _)| to != from)
                    .map(|(to, d)| Transfer {
                        to,
                        distance_m: attach + d,
                    })
                    .collect();
                list.sort_by_key(|t| t.to);
                list
            })
            .collect()
    }

    /// Walking distances from every stop within `max_m` to `point`, which is
    /// attached to its nearest walk node.
    pub fn egress(&self, walk: &WalkGraph, point: Coord, max_m: f64) -> Egress {
        let Some((node, attach)) = walk.nearest_node(point) else {
            return Egress::default();
        };
        let entries = self
            .stops_within(walk, node, max_m - attach)
            .into_iter()
            .map(|(stop, d)| (stop, d + attach))
            .collect();
        Egress::new(entries)
    }
}
