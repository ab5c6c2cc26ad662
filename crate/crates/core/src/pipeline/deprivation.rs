use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use super::PipelineError;

/// How a new-revision zone relates to the old revision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ChangeType {
    Unchanged,
    Split,
    Merged,
    Redrawn,
}

impl FromStr for ChangeType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "unchanged" | "u" => Ok(Self::Unchanged),
            "split" | "s" => Ok(Self::Split),
            "merged" | "m" => Ok(Self::Merged),
            "redrawn" | "x" => Ok(Self::Redrawn),
            other => Err(format!("unknown change type {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LookupRow {
    pub zone_id_old: String,
    pub zone_id_new: String,
    pub change_type: ChangeType,
}

/// Per-zone deprivation scores for the zones in the run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DeprivationJoin {
    pub scores: BTreeMap<String, f64>,
    /// Zones whose score is an unweighted mean over merged parents.
    pub merged: BTreeSet<String>,
    /// Zones left without a score, with the reason.
    pub excluded: BTreeMap<String, &'static str>,
}

#[derive(Deserialize)]
struct DeprivationRow {
    zone_id_old: String,
    imd_score: f64,
}

#[derive(Deserialize)]
struct RawLookupRow {
    zone_id_old: String,
    zone_id_new: String,
    change_type: String,
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<(u64, T)>, PipelineError> {
    let fail = |e: csv::Error| PipelineError::input("load", format!("{}: {e}", path.display()));
    let mut rdr = csv::Reader::from_path(path).map_err(fail)?;
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| r.map(|row| (i as u64 + 2, row)).map_err(fail))
        .collect()
}

/// Scores keyed by old zone id: one record per zone, finite and ≥ 0.
pub fn load_deprivation(path: &Path) -> Result<BTreeMap<String, f64>, PipelineError> {
    let mut out = BTreeMap::new();
    for (line, row) in read_rows::<DeprivationRow>(path)? {
        let invalid = |m: String| PipelineError::input("load", format!("{} line {line}: {m}", path.display()));
        if !(row.imd_score.is_finite() && row.imd_score >= 0.0) {
            return Err(invalid(format!("imd_score {} must be finite and non-negative", row.imd_score)));
        }
        if out.insert(row.zone_id_old.clone(), row.imd_score).is_some() {
            return Err(invalid(format!("duplicate zone_id_old {}", row.zone_id_old)));
        }
    }
    Ok(out)
}

pub fn load_lookup(path: &Path) -> Result<Vec<LookupRow>, PipelineError> {
    read_rows::<RawLookupRow>(path)?
        .into_iter()
        .map(|(line, r)| {
            let change_type = r
                .change_type
                .parse()
                .map_err(|m| PipelineError::input("load", format!("{} line {line}: {m}", path.display())))?;
            Ok(LookupRow {
                zone_id_old: r.zone_id_old,
                zone_id_new: r.zone_id_new,
                change_type,
            })
        })
        .collect()
}

/// Carries old-revision scores onto the run's zones.
///
/// Unchanged and split zones take their single parent's score; merged
/// zones take the unweighted mean of their parents; redrawn zones are
/// excluded. Zones absent from the lookup, or whose parents lack a score,
/// are excluded too and named with the reason.
pub fn join_deprivation(
    zone_ids: &[&str],
    scores: &BTreeMap<String, f64>,
    lookup: &[LookupRow],
) -> Result<DeprivationJoin, PipelineError> {
    let mut by_new: BTreeMap<&str, Vec<&LookupRow>> = BTreeMap::new();
    for row in lookup {
        by_new.entry(&row.zone_id_new).or_default().push(row);
    }
    let mut out = DeprivationJoin::default();
    for &zone in zone_ids {
        let Some(rows) = by_new.get(zone) else {
            out.excluded.insert(zone.to_string(), "missing_from_lookup");
            continue;
        };
        if rows.iter().any(|r| r.change_type == ChangeType::Redrawn) {
            out.excluded.insert(zone.to_string(), "redrawn");
            continue;
        }
        let merged = rows.iter().any(|r| r.change_type == ChangeType::Merged);
        if !merged && rows.len() > 1 {
            return Err(PipelineError::input(
                "deprivation",
                format!("zone {zone} has {} parents but is not marked merged", rows.len()),
            ));
        }
        let parents: Option<Vec<f64>> = rows.iter().map(|r| scores.get(&r.zone_id_old).copied()).collect();
        let Some(parents) = parents else {
            out.excluded.insert(zone.to_string(), "parent_score_missing");
            continue;
        };
        let score = parents.iter().sum::<f64>() / parents.len() as f64;
        out.scores.insert(zone.to_string(), score);
        if merged {
            out.merged.insert(zone.to_string());
        }
    }
    Ok(out)
}

/// Lookup treating every zone as unchanged.
pub(crate) fn identity_lookup(zone_ids: &[&str]) -> Vec<LookupRow> {
    zone_ids
        .iter()
        .map(|z| LookupRow {
            zone_id_old: z.to_string(),
            zone_id_new: z.to_string(),
            change_type: ChangeType::Unchanged,
        })
        .collect()
}
