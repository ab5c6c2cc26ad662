use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use super::{PipelineError, Table};
use crate::spatial::pearson;

/// Pairwise Pearson correlation of zone TTV between finished runs, per
/// facility kind, over the zones reachable in every run.
pub fn compare_runs(dirs: &[PathBuf]) -> Result<Table, PipelineError> {
    if dirs.len() < 2 {
        return Err(PipelineError::input("compare", "need at least two run directories"));
    }
    // run -> kind -> zone -> ttv
    let mut runs: Vec<BTreeMap<String, BTreeMap<String, f64>>> = Vec::new();
    for dir in dirs {
        let t = Table::read(dir, "zone_metrics.csv")?;
        let col = |name: &str| {
            t.column(name)
                .ok_or_else(|| PipelineError::input("compare", format!("{}: no {name} column", dir.display())))
        };
        let (zone, kind, ttv) = (col("zone_id")?, col("kind")?, col("ttv_s")?);
        let mut by_kind: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for row in &t.rows {
            if row[ttv].is_empty() {
                continue;
            }
            let v: f64 = row[ttv]
                .parse()
                .map_err(|e| PipelineError::input("compare", format!("{}: ttv_s {:?}: {e}", dir.display(), row[ttv])))?;
            by_kind.entry(row[kind].clone()).or_default().insert(row[zone].clone(), v);
        }
        runs.push(by_kind);
    }
    let kinds: BTreeSet<&String> = runs.iter().flat_map(|r| r.keys()).collect();
    let mut out = Table::new("compare.csv", ["kind", "run_a", "run_b", "n_zones", "r", "status"]);
    for kind in kinds {
        let common: Vec<&String> = match runs[0].get(kind) {
            Some(first) => first
                .keys()
                .filter(|z| runs.iter().all(|r| r.get(kind).is_some_and(|m| m.contains_key(*z))))
                .collect(),
            None => Vec::new(),
        };
        let vectors: Vec<Vec<f64>> = runs
            .iter()
            .map(|r| common.iter().map(|z| r.get(kind).map_or(f64::NAN, |m| m[*z])).collect())
            .collect();
        for a in 0..dirs.len() {
            for b in a + 1..dirs.len() {
                let (r, status) = match pearson(&vectors[a], &vectors[b]) {
                    Ok(r) => (r.to_string(), "ok".to_string()),
                    Err(e) => (String::new(), e.to_string()),
                };
                out.push(vec![
                    kind.clone(),
                    dirs[a].display().to_string(),
                    dirs[b].display().to_string(),
                    common.len().to_string(),
                    r,
                    status,
                ]);
            }
        }
    }
    Ok(out)
}
