use super::PipelineError;

/// Fewer zones than this and rank percentiles stop meaning much.
pub const MIN_ZONES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quadrant {
    HighTtvMoreDeprived,
    HighTtvLessDeprived,
    LowTtvMoreDeprived,
    LowTtvLessDeprived,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [
        Self::HighTtvMoreDeprived,
        Self::HighTtvLessDeprived,
        Self::LowTtvMoreDeprived,
        Self::LowTtvLessDeprived,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::HighTtvMoreDeprived => "HighTTV-MoreDeprived",
            Self::HighTtvLessDeprived => "HighTTV-LessDeprived",
            Self::LowTtvMoreDeprived => "LowTTV-MoreDeprived",
            Self::LowTtvLessDeprived => "LowTTV-LessDeprived",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadrantRecord {
    pub zone_id: String,
    pub ttv_rank_pct: f64,
    pub imd_rank_pct: f64,
    pub quadrant: Quadrant,
}

/// (rank − 1) / (n − 1) with tied values sharing their average rank.
/// Yields 0 for the smallest value and 1 for the largest.
pub fn rank_percentiles(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut pct = vec![0.0; n];
    let denom = (n.max(2) - 1) as f64;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // 1-based ranks start+1 ..= end share their mean.
        let avg_rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            pct[i] = (avg_rank - 1.0) / denom;
        }
        start = end;
    }
    pct
}

/// Labels each zone by whether it falls in the top `threshold` share of
/// TTV and of deprivation. "Top 30%" means a rank percentile of at least
/// 0.70.
pub fn categorize_quadrants(
    zone_ids: &[&str],
    ttv: &[f64],
    imd: &[f64],
    threshold: f64,
) -> Result<Vec<QuadrantRecord>, PipelineError> {
    let n = zone_ids.len();
    if ttv.len() != n || imd.len() != n {
        return Err(PipelineError::stage("quadrants", "metric vectors differ in length"));
    }
    if n < MIN_ZONES {
        return Err(PipelineError::stage(
            "quadrants",
            format!("{n} zones; at least {MIN_ZONES} are needed for rank percentiles"),
        ));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(PipelineError::input("quadrants", format!("threshold {threshold} not in (0, 1)")));
    }
    // Tolerance so that e.g. 1 − 0.3 still admits a percentile of exactly 0.7.
    let cut = 1.0 - threshold - 1e-12;
    let tp = rank_percentiles(ttv);
    let ip = rank_percentiles(imd);
    Ok((0..n)
        .map(|i| {
            let quadrant = match (tp[i] >= cut, ip[i] >= cut) {
                (true, true) => Quadrant::HighTtvMoreDeprived,
                (true, false) => Quadrant::HighTtvLessDeprived,
                (false, true) => Quadrant::LowTtvMoreDeprived,
                (false, false) => Quadrant::LowTtvLessDeprived,
            };
            QuadrantRecord {
                zone_id: zone_ids[i].to_string(),
                ttv_rank_pct: tp[i],
                imd_rank_pct: ip[i],
                quadrant,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn average_ranks_for_ties() {
        assert_eq!(rank_percentiles(&[3.0, 1.0, 2.0]), vec![1.0, 0.0, 0.5]);
        assert_eq!(rank_percentiles(&[1.0, 5.0, 5.0, 9.0, 0.0]), vec![0.25, 0.625, 0.625, 1.0, 0.0]);
    }

    #[test]
    fn labels_at_the_extremes() {
        let ids: Vec<String> = (0..21).map(|i| format!("Z{i}")).collect();
        let ids: Vec<&str> = ids.iter().map(String::as_str).collect();
        let ttv: Vec<f64> = (0..21).map(f64::from).collect();
        let mut imd = ttv.clone();
        imd[19] = -1.0; // second-highest TTV, least deprived
        let q = categorize_quadrants(&ids, &ttv, &imd, 0.3).unwrap();
        assert_eq!(q[20].quadrant, Quadrant::HighTtvMoreDeprived);
        assert_eq!(q[19].quadrant, Quadrant::HighTtvLessDeprived);
        assert_eq!(q[0].quadrant, Quadrant::LowTtvLessDeprived);
        // Percentile exactly 0.7 is in the top 30%.
        assert_eq!(q[14].ttv_rank_pct, 0.7);
        assert_ne!(q[14].quadrant, Quadrant::LowTtvLessDeprived);
        // Lowering zone 19 lifts zone 13 to the 0.7 deprivation cut.
        assert_eq!(q[13].quadrant, Quadrant::LowTtvMoreDeprived);
    }

    #[test]
    fn refuses_small_sets() {
        let ids = ["a"; 9];
        assert!(categorize_quadrants(&ids, &[1.0; 9], &[1.0; 9], 0.3).is_err());
    }
}
