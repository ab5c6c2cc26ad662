use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use super::{haversine, Coord};

#[derive(Debug, Error)]
pub enum WalkError {
    #[error("{file}: {source}")]
    Csv {
        file: String,
        #[source]
        source: csv::Error,
    },
    #[error("{file} line {line}: {message}")]
    Invalid {
        file: String,
        line: u64,
        message: String,
    },
}

/// Undirected pedestrian network. Edge lengths are meters.
#[derive(Debug, Clone, Default)]
pub struct WalkGraph {
    ids: Vec<String>,
    coords: Vec<Coord>,
    adjacency: Vec<Vec<(usize, f64)>>,
    index: HashMap<String, usize>,
}

impl WalkGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: impl Into<String>, coord: Coord) -> Result<usize, String> {
        let id = id.into();
        if !coord.is_valid() {
            return Err(format!("node {id} has out-of-range coordinates"));
        }
        if self.index.contains_key(&id) {
            return Err(format!("duplicate node {id}"));
        }
        let idx = self.ids.len();
        self.index.insert(id.clone(), idx);
        self.ids.push(id);
        self.coords.push(coord);
        self.adjacency.push(Vec::new());
        Ok(idx)
    }

    pub fn add_edge(&mut self, a: usize, b: usize, length_m: f64) -> Result<(), String> {
        if a == b {
            return Err(format!("self-loop on node {}", self.ids[a]));
        }
        if !(length_m.is_finite() && length_m > 0.0) {
            return Err(format!("edge length must be positive, got {length_m}"));
        }
        self.adjacency[a].push((b, length_m));
        self.adjacency[b].push((a, length_m));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn node_id(&self, idx: usize) -> &str {
        &self.ids[idx]
    }

    pub fn coord(&self, idx: usize) -> Coord {
        self.coords[idx]
    }

    pub fn neighbors(&self, idx: usize) -> &[(usize, f64)] {
        &self.adjacency[idx]
    }

    /// Nearest node by straight-line distance; ties go to the lower index.
    pub fn nearest_node(&self, p: Coord) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &c) in self.coords.iter().enumerate() {
            let d = haversine(p, c);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best
    }

    /// Shortest-path distances from `source` to every node within `max_m`,
    /// in settle order (non-decreasing distance).
    pub fn distances_from(&self, source: usize, max_m: f64) -> Vec<(usize, f64)> {
        let mut dist: HashMap<usize, f64> = HashMap::new();
        let mut settled = Vec::new();
        let mut heap = BinaryHeap::new();
        dist.insert(source, 0.0);
        heap.push(HeapItem { dist: 0.0, node: source });
        while let Some(HeapItem { dist: d, node }) = heap.pop() {
            if d > dist[&node] {
                continue;
            }
            settled.push((node, d));
            for &(next, len) in &self.adjacency[node] {
                let nd = d + len;
                if nd <= max_m && dist.get(&next).is_none_or(|&cur| nd < cur) {
                    dist.insert(next, nd);
                    heap.push(HeapItem { dist: nd, node: next });
                }
            }
        }
        settled
    }

    /// Shortest-path length in meters, `None` when disconnected.
    pub fn shortest_path(&self, from: usize, to: usize) -> Option<f64> {
        if from == to {
            return Some(0.0);
        }
        let mut dist = vec![f64::INFINITY; self.len()];
        let mut heap = BinaryHeap::new();
        dist[from] = 0.0;
        heap.push(HeapItem { dist: 0.0, node: from });
        while let Some(HeapItem { dist: d, node }) = heap.pop() {
            if node == to {
                return Some(d);
            }
            if d > dist[node] {
                continue;
            }
            for &(next, len) in &self.adjacency[node] {
                let nd = d + len;
                if nd < dist[next] {
                    dist[next] = nd;
                    heap.push(HeapItem { dist: nd, node: next });
                }
            }
        }
        None
    }
}

#[derive(Debug, PartialEq)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Converts a walking distance to whole seconds at `speed_kmh`.
pub fn walk_seconds(meters: f64, speed_kmh: f64) -> u32 {
    (meters / (speed_kmh / 3.6)).round() as u32
}

/// Walking time between two nodes in seconds, `None` when disconnected.
pub fn walk_time(graph: &WalkGraph, from: usize, to: usize, speed_kmh: f64) -> Option<f64> {
    graph
        .shortest_path(from, to)
        .map(|m| m / (speed_kmh / 3.6))
}

#[derive(Deserialize)]
struct NodeRow {
    node_id: String,
    lat: f64,
    lon: f64,
}

#[derive(Deserialize)]
struct EdgeRow {
    from_node: String,
    to_node: String,
    length_m: f64,
}

pub fn load_walk_graph(nodes: &Path, edges: &Path) -> Result<WalkGraph, WalkError> {
    let mut graph = WalkGraph::new();
    let nodes_name = nodes.display().to_string();
    let mut rdr = csv::Reader::from_path(nodes).map_err(|source| WalkError::Csv {
        file: nodes_name.clone(),
        source,
    })?;
    for row in rdr.deserialize::<NodeRow>() {
        let row = row.map_err(|source| WalkError::Csv {
            file: nodes_name.clone(),
            source,
        })?;
        let line = graph.len() as u64 + 2;
        graph
            .add_node(row.node_id, Coord::new(row.lat, row.lon))
            .map_err(|message| WalkError::Invalid {
                file: nodes_name.clone(),
                line,
                message,
            })?;
    }

    let edges_name = edges.display().to_string();
    let mut rdr = csv::Reader::from_path(edges).map_err(|source| WalkError::Csv {
        file: edges_name.clone(),
        source,
    })?;
    for (i, row) in rdr.deserialize::<EdgeRow>().enumerate() {
        let line = i as u64 + 2;
        let row = row.map_err(|source| WalkError::Csv {
            file: edges_name.clone(),
            source,
        })?;
        let invalid = |message: String| WalkError::Invalid {
            file: edges_name.clone(),
            line,
            message,
        };
        let a = graph
            .node_index(&row.from_node)
            .ok_or_else(|| invalid(format!("unknown node {}", row.from_node)))?;
        let b = graph
            .node_index(&row.to_node)
            .ok_or_else(|| invalid(format!("unknown node {}", row.to_node)))?;
        graph.add_edge(a, b, row.length_m).map_err(invalid)?;
    }
    Ok(graph)
}
