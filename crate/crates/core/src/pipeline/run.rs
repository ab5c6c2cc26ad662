use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use super::deprivation::identity_lookup;
use super::table::{f3, full, opt, Table};
use super::{
    categorize_quadrants, join_deprivation, load_deprivation, load_lookup, DeprivationJoin,
    PipelineError, RunConfig,
};
use crate::geo::{
    load_facilities, load_walk_graph, load_zones, nearest_facilities, snap_to_stop, Facility,
    FacilityKind, WalkGraph, Zone,
};
use crate::gtfs::{build_network, format_time, parse_feed, Time, TransitNetwork};
use crate::metrics::{
    aggregate_region, summarize_by_settlement, MetricError, SettlementGrouping, ZoneMetrics,
};
use crate::router::{hourly_travel_times, Egress, RaptorWorkspace, StreetLinks, TRANSFER_CAP_M};
use crate::spatial::{
    fdr_adjust, pearson_test, permutation_test_global, permutation_test_local, MetricVector,
    SpatialError, SpatialWeights,
};

const MARKER: &str = "_INCOMPLETE";

/// Files every successful run writes.
pub const OUTPUT_FILES: [&str; 11] = [
    "zone_metrics.csv",
    "region_aggregates.csv",
    "global_stats.csv",
    "lisa.csv",
    "correlations.csv",
    "quadrants.csv",
    "unreachable_report.csv",
    "settlement_summary.csv",
    "deprivation_exclusions.csv",
    "zones.geojson",
    "manifest.json",
];

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub output_dir: PathBuf,
    /// Analyses skipped or degraded, in the order they happened.
    pub notes: Vec<String>,
}

struct Inputs {
    network: TransitNetwork,
    walk: WalkGraph,
    zones: Vec<Zone>,
    facilities: Vec<Facility>,
    deprivation: Option<DeprivationJoin>,
    digests: BTreeMap<String, String>,
}

/// Runs every stage and writes the output directory.
///
/// An `_INCOMPLETE` marker sits in the output directory for the duration
/// of the run. It is removed on success; on failure it keeps the
/// stage-labelled error so partial outputs are never mistaken for a
/// finished run. `workers` sizes the thread pool (all cores when `None`)
/// and has no effect on the outputs.
pub fn run_pipeline(cfg: &RunConfig, workers: Option<usize>) -> Result<RunOutcome, PipelineError> {
    cfg.validate()?;
    let out = cfg.output_path();
    fs::create_dir_all(&out).map_err(|e| PipelineError::stage("export", format!("{}: {e}", out.display())))?;
    let marker = out.join(MARKER);
    fs::write(&marker, "run in progress\n").map_err(|e| PipelineError::stage("export", e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| PipelineError::stage("setup", e))?;
    match pool.install(|| execute(cfg, &out)) {
        Ok(notes) => {
            fs::remove_file(&marker).map_err(|e| PipelineError::stage("export", e))?;
            Ok(RunOutcome { output_dir: out, notes })
        }
        Err(e) => {
            // Best effort: the error itself matters more than the marker.
            let _ = fs::write(&marker, format!("{e}\n"));
            Err(e)
        }
    }
}

fn sha256_file(path: &Path) -> Result<String, PipelineError> {
    let bytes = fs::read(path).map_err(|e| PipelineError::input("load", format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn load_inputs(cfg: &RunConfig) -> Result<Inputs, PipelineError> {
    let input = |e: &dyn std::fmt::Display| PipelineError::input("load", e);
    let mut digests = BTreeMap::new();

    let gtfs_dir = cfg.resolve(&cfg.gtfs_dir);
    let mut names: Vec<_> = fs::read_dir(&gtfs_dir)
        .map_err(|e| PipelineError::input("load", format!("{}: {e}", gtfs_dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.file_name()))
        .filter(|n| n.to_string_lossy().ends_with(".txt"))
        .collect();
    names.sort();
    for name in names {
        let key = cfg.gtfs_dir.join(&name).to_string_lossy().replace('\\', "/");
        digests.insert(key, sha256_file(&gtfs_dir.join(&name))?);
    }
    let mut digest = |p: &Path| -> Result<PathBuf, PipelineError> {
        let full = cfg.resolve(p);
        digests.insert(p.to_string_lossy().replace('\\', "/"), sha256_file(&full)?);
        Ok(full)
    };
    let zones_path = digest(&cfg.zones)?;
    let facilities_path = digest(&cfg.facilities)?;
    let nodes_path = digest(&cfg.walk_nodes)?;
    let edges_path = digest(&cfg.walk_edges)?;
    let deprivation_path = cfg.deprivation.as_deref().map(&mut digest).transpose()?;
    let lookup_path = cfg.lookup.as_deref().map(&mut digest).transpose()?;

    let feed = parse_feed(&gtfs_dir).map_err(|e| input(&e))?;
    let network = build_network(&feed, cfg.service_date()?).map_err(|e| input(&e))?;
    let walk = load_walk_graph(&nodes_path, &edges_path).map_err(|e| input(&e))?;
    if walk.is_empty() {
        return Err(PipelineError::input("load", "walk graph has no nodes"));
    }
    let zones = load_zones(&zones_path).map_err(|e| input(&e))?;
    if zones.is_empty() {
        return Err(PipelineError::input("load", "no zones"));
    }
    let facilities = load_facilities(&facilities_path).map_err(|e| input(&e))?;

    let deprivation = match deprivation_path {
        None => None,
        Some(p) => {
            let scores = load_deprivation(&p)?;
            let ids: Vec<&str> = zones.iter().map(|z| z.zone_id.as_str()).collect();
            let lookup = match lookup_path {
                Some(l) => load_lookup(&l)?,
                None => identity_lookup(&ids),
            };
            Some(join_deprivation(&ids, &scores, &lookup)?)
        }
    };
    Ok(Inputs {
        network,
        walk,
        zones,
        facilities,
        deprivation,
        digests,
    })
}

/// Per-zone hourly travel times to the nearest `k` facilities of a kind.
fn route_kind(
    cfg: &RunConfig,
    inputs: &Inputs,
    links: &StreetLinks,
    kind: FacilityKind,
    hours: &[Time],
) -> Result<Vec<Vec<Option<u32>>>, PipelineError> {
    let qcfg = cfg.query_config();
    let max_m = qcfg.max_walk_duration as f64 * qcfg.walk_speed_kmh / 3.6;
    let index: HashMap<&str, usize> = inputs
        .facilities
        .iter()
        .enumerate()
        .map(|(i, f)| (f.facility_id.as_str(), i))
        .collect();
    let candidates: Vec<Vec<usize>> = inputs
        .zones
        .iter()
        .map(|z| {
            nearest_facilities(z, &inputs.facilities, kind, cfg.k_facilities)
                .map(|v| v.into_iter().map(|(f, _)| index[f.facility_id.as_str()]).collect())
                .map_err(|e| PipelineError::stage("route", e))
        })
        .collect::<Result<_, _>>()?;
    let mut needed: Vec<usize> = candidates.iter().flatten().copied().collect();
    needed.sort_unstable();
    needed.dedup();
    let egress: HashMap<usize, Egress> = needed
        .par_iter()
        .map(|&f| (f, links.egress(&inputs.walk, inputs.facilities[f].location, max_m)))
        .collect();
    Ok(inputs
        .zones
        .par_iter()
        .zip(candidates.par_iter())
        .map_init(RaptorWorkspace::new, |ws, (zone, cands)| {
            let origin = zone.snapped_stop.expect("zones are snapped").stop;
            let targets: Vec<&Egress> = cands.iter().map(|f| &egress[f]).collect();
            hourly_travel_times(&inputs.network, ws, origin, &targets, hours, &qcfg)
        })
        .collect())
}

fn hour_label(t: Time) -> String {
    let (h, m) = (t / 3600, t % 3600 / 60);
    if m == 0 {
        format!("{h:02}")
    } else {
        format!("{h:02}{m:02}")
    }
}

fn status_of(e: &SpatialError) -> &'static str {
    match e {
        SpatialError::ZeroVariance => "zero_variance",
        SpatialError::TooFewUnits { .. } | SpatialError::TooFewPairs(_) => "too_few_units",
        _ => "error",
    }
}

struct KindResults {
    kind: FacilityKind,
    metrics: Vec<ZoneMetrics>,
}

fn execute(cfg: &RunConfig, out: &Path) -> Result<Vec<String>, PipelineError> {
    let mut notes = Vec::new();
    let mut inputs = load_inputs(cfg)?;
    let hours = cfg.hour_seconds()?;

    // Snap and link.
    let links = StreetLinks::new(&inputs.network, &inputs.walk);
    inputs.network.set_transfers(links.transfers(&inputs.walk, TRANSFER_CAP_M));
    let network = &inputs.network;
    inputs.zones = inputs.zones.par_iter().map(|z| snap_to_stop(z, network)).collect();

    // Route.
    let mut results = Vec::new();
    for kind in FacilityKind::ALL {
        if !inputs.facilities.iter().any(|f| f.kind == kind) {
            notes.push(format!("no {kind} facilities: {kind} analysis skipped"));
            continue;
        }
        let hourly = route_kind(cfg, &inputs, &links, kind, &hours)?;
        let metrics = inputs
            .zones
            .iter()
            .zip(hourly)
            .map(|(z, h)| ZoneMetrics::from_hourly(z.zone_id.clone(), kind, h))
            .collect();
        results.push(KindResults { kind, metrics });
    }

    let zones = &inputs.zones;
    let imd = |i: usize| inputs.deprivation.as_ref().and_then(|d| d.scores.get(&zones[i].zone_id).copied());
    let hour_cols: Vec<String> = hours.iter().map(|&h| format!("tt_h{}", hour_label(h))).collect();

    // Zone metrics and unreachable report.
    let mut zone_table = Table::new(
        "zone_metrics.csv",
        ["zone_id", "kind", "lad_code", "settlement_class", "snapped_stop", "snap_distance_m"]
            .into_iter()
            .map(String::from)
            .chain(hour_cols.iter().cloned())
            .chain(["mean_tt_s", "ttv_s", "reachable", "n_unreachable_hours", "imd_score"].map(String::from)),
    );
    let mut unreachable = Table::new(
        "unreachable_report.csv",
        ["zone_id", "kind", "n_unreachable_hours", "unreachable_hours", "snapped_stop", "snap_distance_m"],
    );
    for r in &results {
        for (i, m) in r.metrics.iter().enumerate() {
            let z = &zones[i];
            let snap = z.snapped_stop.expect("zones are snapped");
            let stop_id = network.stops()[snap.stop].id.clone();
            let mut row = vec![
                z.zone_id.clone(),
                r.kind.to_string(),
                z.lad_code.clone(),
                z.settlement_class.to_string(),
                stop_id.clone(),
                f3(snap.distance_m),
            ];
            row.extend(m.hourly.iter().map(|h| opt(*h)));
            row.extend([
                opt(m.mean_tt.map(f3)),
                opt(m.ttv.map(f3)),
                m.reachable().to_string(),
                m.n_unreachable_hours().to_string(),
                opt(imd(i).map(full)),
            ]);
            zone_table.push(row);
            if !m.reachable() {
                let missing: Vec<String> = m
                    .hourly
                    .iter()
                    .zip(&hours)
                    .filter(|(v, _)| v.is_none())
                    .map(|(_, &h)| format_time(h)[..5].to_string())
                    .collect();
                unreachable.push(vec![
                    z.zone_id.clone(),
                    r.kind.to_string(),
                    m.n_unreachable_hours().to_string(),
                    missing.join(";"),
                    stop_id,
                    f3(snap.distance_m),
                ]);
            }
        }
    }

    // Regions and settlement summaries.
    let mut regions = Table::new(
        "region_aggregates.csv",
        [
            "lad_code", "kind", "n_zones", "n_reachable", "mean_of_means_s", "mean_ttv_s",
            "gini_mean_tt", "gini_ttv", "excluded",
        ],
    );
    let mut settlement = Table::new(
        "settlement_summary.csv",
        ["kind", "grouping", "group", "count", "mean_ttv_s", "median_ttv_s", "std_ttv_s", "iqr_ttv_s", "min_ttv_s", "max_ttv_s"],
    );
    // Per kind, LAD-level aggregates kept for the correlation battery.
    let mut lad_values: Vec<Vec<[f64; 4]>> = Vec::new();
    for r in &results {
        let mut by_lad: BTreeMap<&str, Vec<&ZoneMetrics>> = BTreeMap::new();
        for (i, m) in r.metrics.iter().enumerate() {
            by_lad.entry(&zones[i].lad_code).or_default().push(m);
        }
        let mut values = Vec::new();
        for (lad, members) in by_lad {
            match aggregate_region(&members, lad) {
                Ok(a) => {
                    regions.push(vec![
                        lad.to_string(),
                        r.kind.to_string(),
                        a.n_zones.to_string(),
                        a.n_reachable.to_string(),
                        f3(a.mean_of_means),
                        f3(a.mean_ttv),
                        full(a.gini_mean_tt),
                        full(a.gini_ttv),
                        "false".into(),
                    ]);
                    values.push([a.mean_of_means, a.mean_ttv, a.gini_mean_tt, a.gini_ttv]);
                }
                Err(MetricError::NoReachableZones { n_zones, .. }) => {
                    regions.push(vec![
                        lad.to_string(),
                        r.kind.to_string(),
                        n_zones.to_string(),
                        "0".into(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        "true".into(),
                    ]);
                }
                Err(e) => return Err(PipelineError::stage("metrics", e)),
            }
        }
        lad_values.push(values);

        let pairs: Vec<_> = zones.iter().map(|z| z.settlement_class).zip(&r.metrics).collect();
        for (grouping, label) in [(SettlementGrouping::Class, "class"), (SettlementGrouping::Binary, "binary")] {
            for s in summarize_by_settlement(&pairs, grouping) {
                settlement.push(vec![
                    r.kind.to_string(),
                    label.into(),
                    s.group,
                    s.count.to_string(),
                    f3(s.mean),
                    f3(s.median),
                    f3(s.std),
                    f3(s.iqr),
                    f3(s.min),
                    f3(s.max),
                ]);
            }
        }
    }

    // Spatial statistics over each kind's reachable zones.
    let mut global = Table::new(
        "global_stats.csv",
        ["kind", "metric", "n_units", "morans_i", "p_value", "z_score", "n_permutations", "status"],
    );
    let mut lisa = Table::new("lisa.csv", ["zone_id", "kind", "metric", "local_i", "p_value", "category"]);
    for r in &results {
        let reach: Vec<usize> = (0..zones.len()).filter(|&i| r.metrics[i].reachable()).collect();
        let centroids: Vec<_> = reach.iter().map(|&i| zones[i].centroid).collect();
        let weights = SpatialWeights::knn(&centroids, cfg.knn_k)
            .map(|w| if cfg.row_standardize { w.row_standardized() } else { w });
        for (metric, get) in [
            ("mean_tt", (|m: &ZoneMetrics| m.mean_tt) as fn(&ZoneMetrics) -> Option<f64>),
            ("ttv", |m: &ZoneMetrics| m.ttv),
        ] {
            let prefix = [r.kind.to_string(), metric.to_string(), reach.len().to_string()];
            let x = MetricVector::new(reach.iter().map(|&i| get(&r.metrics[i]).expect("reachable")).collect())
                .map_err(|e| PipelineError::stage("stats", e))?;
            let outcome = weights.as_ref().map_err(Clone::clone).and_then(|w| {
                let g = permutation_test_global(&x, w, cfg.n_perm, cfg.seed)?;
                let l = permutation_test_local(&x, w, cfg.n_perm, cfg.seed, cfg.alpha)?;
                Ok((g, l))
            });
            match outcome {
                Ok((g, local)) => {
                    global.push(
                        prefix
                            .into_iter()
                            .chain([full(g.statistic), full(g.p_value), full(g.z_score), g.n_permutations.to_string(), "ok".into()])
                            .collect(),
                    );
                    for rec in local {
                        lisa.push(vec![
                            zones[reach[rec.unit]].zone_id.clone(),
                            r.kind.to_string(),
                            metric.into(),
                            full(rec.local_i),
                            full(rec.p_value),
                            rec.category.as_str().into(),
                        ]);
                    }
                }
                Err(e) => {
                    notes.push(format!("{} {metric}: spatial statistics undefined ({e})", r.kind));
                    global.push(
                        prefix
                            .into_iter()
                            .chain([String::new(), String::new(), String::new(), cfg.n_perm.to_string(), status_of(&e).into()])
                            .collect(),
                    );
                }
            }
        }
    }

    // Correlation battery, FDR across every defined test.
    const LAD_NAMES: [&str; 4] = ["mean_of_means", "mean_ttv", "gini_mean_tt", "gini_ttv"];
    // (kind, level, label, x, y)
    type Pair = (String, &'static str, String, Vec<f64>, Vec<f64>);
    let mut tests: Vec<Pair> = Vec::new();
    for (r, lads) in results.iter().zip(&lad_values) {
        let kind = r.kind.to_string();
        let reach: Vec<usize> = (0..zones.len()).filter(|&i| r.metrics[i].reachable()).collect();
        let mean_tt: Vec<f64> = reach.iter().map(|&i| r.metrics[i].mean_tt.unwrap()).collect();
        let ttv: Vec<f64> = reach.iter().map(|&i| r.metrics[i].ttv.unwrap()).collect();
        tests.push((kind.clone(), "zone", "mean_tt~ttv".into(), mean_tt, ttv));
        if inputs.deprivation.is_some() {
            let with_imd: Vec<(usize, f64)> = reach.iter().filter_map(|&i| imd(i).map(|s| (i, s))).collect();
            let imd_v: Vec<f64> = with_imd.iter().map(|p| p.1).collect();
            let ttv_v: Vec<f64> = with_imd.iter().map(|p| r.metrics[p.0].ttv.unwrap()).collect();
            let mtt_v: Vec<f64> = with_imd.iter().map(|p| r.metrics[p.0].mean_tt.unwrap()).collect();
            tests.push((kind.clone(), "zone", "ttv~imd".into(), ttv_v, imd_v.clone()));
            tests.push((kind.clone(), "zone", "mean_tt~imd".into(), mtt_v, imd_v));
        }
        for a in 0..4 {
            for b in a + 1..4 {
                let xa = lads.iter().map(|v| v[a]).collect();
                let xb = lads.iter().map(|v| v[b]).collect();
                tests.push((kind.clone(), "lad", format!("{}~{}", LAD_NAMES[a], LAD_NAMES[b]), xa, xb));
            }
        }
    }
    let outcomes: Vec<Result<(f64, f64), SpatialError>> = tests.iter().map(|t| pearson_test(&t.3, &t.4)).collect();
    let raw: Vec<f64> = outcomes.iter().filter_map(|o| o.as_ref().ok().map(|v| v.1)).collect();
    let adjusted = fdr_adjust(&raw).map_err(|e| PipelineError::stage("stats", e))?;
    let mut adjusted = adjusted.into_iter();
    let mut correlations = Table::new("correlations.csv", ["kind", "level", "pair", "n", "r", "p_raw", "p_fdr", "status"]);
    for (t, o) in tests.iter().zip(&outcomes) {
        let head = [t.0.clone(), t.1.to_string(), t.2.clone(), t.3.len().to_string()];
        let tail = match o {
            Ok((r, p)) => [full(*r), full(*p), full(adjusted.next().expect("one per test")), "ok".into()],
            Err(e) => [String::new(), String::new(), String::new(), status_of(e).into()],
        };
        correlations.push(head.into_iter().chain(tail).collect());
    }

    // Quadrants.
    let mut quadrants = Table::new("quadrants.csv", ["zone_id", "kind", "ttv_rank_pct", "imd_rank_pct", "quadrant"]);
    if inputs.deprivation.is_some() {
        for r in &results {
            let members: Vec<(usize, f64)> = (0..zones.len())
                .filter(|&i| r.metrics[i].reachable())
                .filter_map(|i| imd(i).map(|s| (i, s)))
                .collect();
            let ids: Vec<&str> = members.iter().map(|p| zones[p.0].zone_id.as_str()).collect();
            let ttv: Vec<f64> = members.iter().map(|p| r.metrics[p.0].ttv.unwrap()).collect();
            let imd_v: Vec<f64> = members.iter().map(|p| p.1).collect();
            match categorize_quadrants(&ids, &ttv, &imd_v, cfg.quantile_threshold) {
                Ok(recs) => {
                    for q in recs {
                        quadrants.push(vec![
                            q.zone_id,
                            r.kind.to_string(),
                            full(q.ttv_rank_pct),
                            full(q.imd_rank_pct),
                            q.quadrant.as_str().into(),
                        ]);
                    }
                }
                Err(e) => notes.push(format!("{} quadrants skipped: {e}", r.kind)),
            }
        }
    } else {
        notes.push("no deprivation data: quadrant analysis skipped".into());
    }

    let mut exclusions = Table::new("deprivation_exclusions.csv", ["zone_id", "reason", "merged"]);
    if let Some(d) = &inputs.deprivation {
        for z in zones {
            if let Some(reason) = d.excluded.get(&z.zone_id) {
                exclusions.push(vec![z.zone_id.clone(), reason.to_string(), "false".into()]);
            } else if d.merged.contains(&z.zone_id) {
                exclusions.push(vec![z.zone_id.clone(), "merged_unweighted_mean".into(), "true".into()]);
            }
        }
    }

    // Export.
    let tables = [
        &zone_table, &regions, &global, &lisa, &correlations, &quadrants, &unreachable, &settlement, &exclusions,
    ];
    for t in tables {
        t.write(out)?;
    }
    let geojson = zones_geojson(zones, &zone_table, &lisa, &quadrants);
    write_json(out, "zones.geojson", &geojson)?;

    let mut outputs = BTreeMap::new();
    for name in &OUTPUT_FILES[..OUTPUT_FILES.len() - 1] {
        outputs.insert(name.to_string(), sha256_file(&out.join(name)).map_err(|e| PipelineError::stage("export", e))?);
    }
    let manifest = json!({
        "tool": "ttv",
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "config": serde_json::to_value(cfg).map_err(|e| PipelineError::stage("export", e))?,
        "inputs": inputs.digests,
        "outputs": outputs,
        "notes": notes,
    });
    write_json(out, "manifest.json", &manifest)?;
    Ok(notes)
}

fn write_json(dir: &Path, name: &str, value: &Value) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| PipelineError::stage("export", e))?;
    text.push('\n');
    fs::write(dir.join(name), text).map_err(|e| PipelineError::stage("export", format!("{name}: {e}")))
}

/// Columns whose cells stay strings in GeoJSON properties.
const TEXT_COLUMNS: [&str; 7] = ["zone_id", "kind", "lad_code", "settlement_class", "snapped_stop", "category", "quadrant"];

/// Typed JSON value for a CSV cell: empty is null, booleans and numbers
/// are parsed, everything else stays text.
pub(crate) fn cell_value(column: &str, cell: &str) -> Value {
    if TEXT_COLUMNS.contains(&column) {
        return Value::String(cell.into());
    }
    if cell.is_empty() {
        return Value::Null;
    }
    if let Ok(b) = cell.parse::<bool>() {
        return Value::Bool(b);
    }
    if let Ok(i) = cell.parse::<i64>() {
        return Value::from(i);
    }
    match cell.parse::<f64>() {
        Ok(f) if f.is_finite() => Value::from(f),
        _ => Value::String(cell.into()),
    }
}

/// One point feature per zone carrying every per-zone CSV attribute.
/// Kind-specific columns are prefixed with the kind (and metric for LISA).
fn zones_geojson(zones: &[Zone], zone_table: &Table, lisa: &Table, quadrants: &Table) -> Value {
    const SHARED: [&str; 6] = ["zone_id", "lad_code", "settlement_class", "snapped_stop", "snap_distance_m", "imd_score"];
    let mut props: HashMap<String, Map<String, Value>> = HashMap::new();
    let add = |props: &mut HashMap<String, Map<String, Value>>, table: &Table, prefix_cols: &[&str]| {
        let zone_col = table.column("zone_id").expect("zone_id column");
        let prefix_idx: Vec<usize> = prefix_cols.iter().map(|c| table.column(c).expect("prefix column")).collect();
        for row in &table.rows {
            let p = props.entry(row[zone_col].clone()).or_default();
            let prefix: Vec<&str> = prefix_idx.iter().map(|&i| row[i].as_str()).collect();
            for (h, cell) in table.header.iter().zip(row) {
                if prefix_cols.contains(&h.as_str()) {
                    continue;
                }
                let key = if SHARED.contains(&h.as_str()) {
                    h.clone()
                } else {
                    format!("{}_{h}", prefix.join("_"))
                };
                p.insert(key, cell_value(h, cell));
            }
        }
    };
    add(&mut props, zone_table, &["kind"]);
    add(&mut props, lisa, &["kind", "metric"]);
    add(&mut props, quadrants, &["kind"]);
    let features: Vec<Value> = zones
        .iter()
        .map(|z| {
            let mut p = props.remove(z.zone_id.as_str()).unwrap_or_default();
            p.entry("zone_id").or_insert_with(|| Value::String(z.zone_id.clone()));
            json!({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [z.centroid.lon, z.centroid.lat]},
                "properties": p,
            })
        })
        .collect();
    json!({"type": "FeatureCollection", "features": features})
}
