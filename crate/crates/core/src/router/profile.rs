use super::{Egress, QueryConfig, RaptorWorkspace, TravelTimeResult};
use crate::gtfs::{Time, TransitNetwork};

/// 1-based nearest rank: the ceil(p/100 * n)-th smallest of n samples.
pub(crate) fn nearest_rank(percentile: u8, n: usize) -> usize {
    (percentile as usize * n).div_ceil(100).max(1)
}

/// Percentile travel time to each target over the departure window.
///
/// Every whole minute of the window is one sample; an unreachable sample
/// counts as an infinitely long trip. The selected sample must fall within
/// `cfg.max_duration` or the target is reported unreachable.
pub fn travel_time_percentiles(
    network: &TransitNetwork,
    workspace: &mut RaptorWorkspace,
    origin: usize,
    targets: &[&Egress],
    cfg: &QueryConfig,
) -> Vec<TravelTimeResult> {
    // samples[target] = (travel time or None, departure minute, rides)
    let mut samples: Vec<Vec<(Option<u32>, Time, u8)>> = vec![Vec::new(); targets.len()];
    for minute in cfg.sample_minutes() {
        let arrivals = workspace.earliest_arrivals(network, origin, minute, cfg, targets);
        for (acc, arrival) in samples.iter_mut().zip(arrivals) {
            match arrival {
                Some(a) => acc.push((Some(a.time - minute), minute, a.rides)),
                None => acc.push((None, minute, 0)),
            }
        }
    }
    samples
        .into_iter()
        .map(|mut s| {
            // None sorts as +infinity; ties keep the earlier minute.
            s.sort_by_key(|&(t, minute, _)| (t.is_none(), t, minute));
            let (t, minute, rides) = s[nearest_rank(cfg.percentile, s.len()) - 1];
            match t {
                Some(secs) if secs <= cfg.max_duration => TravelTimeResult {
                    seconds: Some(secs),
                    rides_used: Some(rides),
                    provenance: Some(minute),
                },
                _ => TravelTimeResult::UNREACHABLE,
            }
        })
        .collect()
}

pub fn travel_time_percentile(
    network: &TransitNetwork,
    egress: &Egress,
    origin: usize,
    cfg: &QueryConfig,
) -> TravelTimeResult {
    travel_time_percentiles(network, &mut RaptorWorkspace::new(), origin, &[egress], cfg)[0]
}

/// For each departure hour, the best percentile travel time over the
/// candidate destinations. `None` only when every candidate is unreachable.
pub fn hourly_travel_times(
    network: &TransitNetwork,
    workspace: &mut RaptorWorkspace,
    origin: usize,
    candidates: &[&Egress],
    hours: &[Time],
    cfg: &QueryConfig,
) -> Vec<Option<u32>> {
    hours
        .iter()
        .map(|&h| {
            let cfg = QueryConfig {
                departure: h,
                ..cfg.clone()
            };
            travel_time_percentiles(network, workspace, origin, candidates, &cfg)
                .into_iter()
                .filter_map(|r| r.seconds)
                .min()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_positions() {
        assert_eq!(nearest_rank(50, 10), 5);
        assert_eq!(nearest_rank(50, 1), 1);
        assert_eq!(nearest_rank(1, 10), 1);
        assert_eq!(nearest_rank(100, 10), 10);
        assert_eq!(nearest_rank(51, 10), 6);
        assert_eq!(nearest_rank(50, 9), 5);
    }
}
