use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{MetricVector, SpatialError, SpatialWeights};

pub const DEFAULT_ALPHA: f64 = 0.05;
const MIN_PERMUTATIONS: usize = 99;
// Local replicates draw from streams above this offset so they never share
// a stream with the global test under the same seed.
const LOCAL_STREAM_BASE: u64 = 1 << 40;

/// Global statistic with its permutation inference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatResult {
    pub statistic: f64,
    pub p_value: f64,
    pub z_score: f64,
    pub n_permutations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LisaCategory {
    HighHigh,
    LowLow,
    HighLow,
    LowHigh,
    NotSignificant,
}

impl LisaCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::HighHigh => "HH",
            Self::LowLow => "LL",
            Self::HighLow => "HL",
            Self::LowHigh => "LH",
            Self::NotSignificant => "ns",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LisaRecord {
    pub unit: usize,
    pub local_i: f64,
    pub p_value: f64,
    pub category: LisaCategory,
}

fn check(x: &MetricVector, w: &SpatialWeights) -> Result<Vec<f64>, SpatialError> {
    if x.len() != w.n() {
        return Err(SpatialError::LengthMismatch(x.len(), w.n()));
    }
    x.deviations()
}

fn check_perms(n_perm: usize) -> Result<(), SpatialError> {
    if n_perm < MIN_PERMUTATIONS {
        return Err(SpatialError::TooFewPermutations {
            min: MIN_PERMUTATIONS,
            got: n_perm,
        });
    }
    Ok(())
}

/// I from deviations z: n · Σ_i z_i Σ_j w_ij z_j / (Σ z² · S0).
fn moran_from_deviations(z: &[f64], w: &SpatialWeights, sum_sq: f64) -> f64 {
    let cross: f64 = (0..z.len()).map(|i| z[i] * w.lag(i, z)).sum();
    z.len() as f64 * cross / (sum_sq * w.s0())
}

/// Global Moran's I.
pub fn morans_i(x: &MetricVector, w: &SpatialWeights) -> Result<f64, SpatialError> {
    let z = check(x, w)?;
    let sum_sq: f64 = z.iter().map(|d| d * d).sum();
    Ok(moran_from_deviations(&z, w, sum_sq))
}

/// Local Moran's I_i = z_i / S² · Σ_j w_ij z_j with S² the population
/// variance, so that Σ_i I_i = I · S0.
pub fn local_morans_i(x: &MetricVector, w: &SpatialWeights) -> Result<Vec<f64>, SpatialError> {
    let z = check(x, w)?;
    let s2 = z.iter().map(|d| d * d).sum::<f64>() / z.len() as f64;
    Ok((0..z.len()).map(|i| z[i] / s2 * w.lag(i, &z)).collect())
}

fn replicate_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn pseudo_p(observed: f64, expected: f64, perms: impl Iterator<Item = f64>, n_perm: usize) -> f64 {
    let obs = (observed - expected).abs();
    let extreme = perms.filter(|v| (v - expected).abs() >= obs).count();
    (1 + extreme) as f64 / (n_perm + 1) as f64
}

/// Global Moran's I under full random relabelling.
///
/// Replicate r shuffles with its own ChaCha stream (seed, r), so the
/// result does not depend on how replicates are scheduled. The p-value is
/// two-sided around E[I] = −1/(n−1); the z-score uses the mean and
/// population standard deviation of the replicates.
pub fn permutation_test_global(
    x: &MetricVector,
    w: &SpatialWeights,
    n_perm: usize,
    seed: u64,
) -> Result<StatResult, SpatialError> {
    check_perms(n_perm)?;
    let z = check(x, w)?;
    let sum_sq: f64 = z.iter().map(|d| d * d).sum();
    let observed = moran_from_deviations(&z, w, sum_sq);
    let perms: Vec<f64> = (0..n_perm as u64)
        .into_par_iter()
        .map_init(
            || z.clone(),
            |buf, r| {
                buf.copy_from_slice(&z);
                buf.shuffle(&mut replicate_rng(seed, r));
                moran_from_deviations(buf, w, sum_sq)
            },
        )
        .collect();
    let expected = -1.0 / (z.len() as f64 - 1.0);
    let p_value = pseudo_p(observed, expected, perms.iter().copied(), n_perm);
    let mean = perms.iter().sum::<f64>() / n_perm as f64;
    let sd = (perms.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n_perm as f64).sqrt();
    let z_score = if sd > 0.0 { (observed - mean) / sd } else { 0.0 };
    Ok(StatResult {
        statistic: observed,
        p_value,
        z_score,
        n_permutations: n_perm,
    })
}

fn categorize(zi: f64, lag_mean: f64) -> LisaCategory {
    match (zi > 0.0, zi < 0.0, lag_mean > 0.0, lag_mean < 0.0) {
        (true, _, true, _) => LisaCategory::HighHigh,
        (_, true, _, true) => LisaCategory::LowLow,
        (true, _, _, true) => LisaCategory::HighLow,
        _ => LisaCategory::LowHigh,
    }
}

/// Local Moran's I with conditional permutation.
///
/// For unit i the value x_i stays fixed and its neighbours are refilled
/// with a draw without replacement from the other n−1 values. The
/// p-value is two-sided around the conditional expectation
/// E[I_i] = −w_i z_i² / ((n−1) S²). Units with p < `alpha` are labelled by
/// the sign of their own deviation and of their neighbours' weighted mean.
pub fn permutation_test_local(
    x: &MetricVector,
    w: &SpatialWeights,
    n_perm: usize,
    seed: u64,
    alpha: f64,
) -> Result<Vec<LisaRecord>, SpatialError> {
    check_perms(n_perm)?;
    let z = check(x, w)?;
    let n = z.len();
    let s2 = z.iter().map(|d| d * d).sum::<f64>() / n as f64;
    let records = (0..n)
        .into_par_iter()
        .map(|i| {
            let lag = w.lag(i, &z);
            let local_i = z[i] / s2 * lag;
            let nb_w = w.weights(i);
            let k = nb_w.len();
            let wi: f64 = nb_w.iter().sum();
            let expected = -wi * z[i] * z[i] / ((n as f64 - 1.0) * s2);
            let mut rng = replicate_rng(seed, LOCAL_STREAM_BASE + i as u64);
            let perms = (0..n_perm).map(|_| {
                let draw = index::sample(&mut rng, n - 1, k);
                let lag: f64 = draw
                    .iter()
                    .zip(nb_w)
                    .map(|(j, &wij)| wij * z[if j >= i { j + 1 } else { j }])
                    .sum();
                z[i] / s2 * lag
            });
            let p_value = pseudo_p(local_i, expected, perms, n_perm);
            let category = if p_value < alpha {
                categorize(z[i], lag / wi)
            } else {
                LisaCategory::NotSignificant
            };
            LisaRecord {
                unit: i,
                local_i,
                p_value,
                category,
            }
        })
        .collect();
    Ok(records)
}
