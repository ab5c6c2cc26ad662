//! Per-zone travel-time summaries and the inequality measures derived
//! from them.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::geo::{FacilityKind, SettlementClass};

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("metric undefined: hour {0} is unreachable")]
    Unreachable(usize),
    #[error("metric undefined for an empty vector")]
    Empty,
    #[error("negative value {0} is outside the domain")]
    Negative(f64),
    #[error("region {lad_code} has no reachable zones ({n_zones} zones)")]
    NoReachableZones { lad_code: String, n_zones: usize },
}

fn finite_hours(hourly: &[Option<u32>]) -> Result<Vec<f64>, MetricError> {
    if hourly.is_empty() {
        return Err(MetricError::Empty);
    }
    hourly
        .iter()
        .enumerate()
        .map(|(i, h)| h.map(f64::from).ok_or(MetricError::Unreachable(i)))
        .collect()
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Standard deviation with divisor n.
pub fn population_std(values: &[f64]) -> f64 {
    let m = mean(values);
    (values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Travel-time variability: population standard deviation of the hourly
/// travel times. Every hour must be reachable.
pub fn ttv(hourly: &[Option<u32>]) -> Result<f64, MetricError> {
    Ok(population_std(&finite_hours(hourly)?))
}

/// Gini coefficient over sorted values,
/// `G = sum_i (2i - n - 1) x_i / (n sum_i x_i)` with 1-based `i`.
/// An all-zero vector is perfectly equal.
pub fn gini(values: &[f64]) -> Result<f64, MetricError> {
    if values.is_empty() {
        return Err(MetricError::Empty);
    }
    if let Some(&neg) = values.iter().find(|v| **v < 0.0 || v.is_nan()) {
        return Err(MetricError::Negative(neg));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let total: f64 = sorted.iter().sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * (i as f64 + 1.0) - n - 1.0) * x)
        .sum();
    Ok(weighted / (n * total))
}

/// Hourly travel times for one zone and facility kind, with the day-level
/// summaries. Any unreachable hour makes the zone unreachable for the
/// summaries, since a deviation over a censored vector understates spread.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneMetrics {
    pub zone_id: String,
    pub kind: FacilityKind,
    pub hourly: Vec<Option<u32>>,
    pub mean_tt: Option<f64>,
    pub ttv: Option<f64>,
}

impl ZoneMetrics {
    pub fn from_hourly(zone_id: impl Into<String>, kind: FacilityKind, hourly: Vec<Option<u32>>) -> Self {
        let finite = finite_hours(&hourly).ok();
        Self {
            zone_id: zone_id.into(),
            kind,
            mean_tt: finite.as_deref().map(mean),
            ttv: finite.as_deref().map(population_std),
            hourly,
        }
    }

    pub fn reachable(&self) -> bool {
        self.mean_tt.is_some()
    }

    pub fn n_unreachable_hours(&self) -> usize {
        self.hourly.iter().filter(|h| h.is_none()).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionAggregate {
    pub lad_code: String,
    pub n_zones: usize,
    pub n_reachable: usize,
    pub mean_of_means: f64,
    pub mean_ttv: f64,
    pub gini_mean_tt: f64,
    pub gini_ttv: f64,
}

/// District-level means and Gini coefficients over the reachable zones.
pub fn aggregate_region(zones: &[&ZoneMetrics], lad_code: &str) -> Result<RegionAggregate, MetricError> {
    let (means, ttvs): (Vec<f64>, Vec<f64>) = zones
        .iter()
        .filter_map(|z| Some((z.mean_tt?, z.ttv?)))
        .unzip();
    if means.is_empty() {
        return Err(MetricError::NoReachableZones {
            lad_code: lad_code.to_string(),
            n_zones: zones.len(),
        });
    }
    Ok(RegionAggregate {
        lad_code: lad_code.to_string(),
        n_zones: zones.len(),
        n_reachable: means.len(),
        mean_of_means: mean(&means),
        mean_ttv: mean(&ttvs),
        gini_mean_tt: gini(&means)?,
        gini_ttv: gini(&ttvs)?,
    })
}

/// Quantile by linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SettlementGrouping {
    /// One row per class on the rural–urban scale.
    Class,
    /// Urban versus rural.
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SettlementSummary {
    pub group: String,
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (divisor n - 1; 0 for a single zone).
    pub std: f64,
    pub iqr: f64,
    pub min: f64,
    pub max: f64,
}

pub fn summarize(group: impl Into<String>, values: &[f64]) -> Option<SettlementSummary> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let m = mean(&sorted);
    let std = if n > 1 {
        (sorted.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Some(SettlementSummary {
        group: group.into(),
        count: n,
        mean: m,
        median: quantile_sorted(&sorted, 0.5),
        std,
        iqr: quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25),
        min: sorted[0],
        max: sorted[n - 1],
    })
}

/// TTV order statistics per settlement group over reachable zones, most
/// urban group first. Groups with no reachable zone are omitted.
pub fn summarize_by_settlement(
    zones: &[(SettlementClass, &ZoneMetrics)],
    grouping: SettlementGrouping,
) -> Vec<SettlementSummary> {
    let mut groups: BTreeMap<(u8, &'static str), Vec<f64>> = BTreeMap::new();
    for (class, m) in zones {
        let Some(ttv) = m.ttv else { continue };
        let key = match grouping {
            SettlementGrouping::Class => (*class as u8, class.code()),
            SettlementGrouping::Binary if class.is_rural() => (1, "rural"),
            SettlementGrouping::Binary => (0, "urban"),
        };
        groups.entry(key).or_default().push(ttv);
    }
    groups
        .into_iter()
        .filter_map(|((_, label), values)| summarize(label, &values))
        .collect()
}
