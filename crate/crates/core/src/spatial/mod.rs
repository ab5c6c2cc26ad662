//! Spatial autocorrelation (global and local Moran's I with permutation
//! inference) and the correlation battery with FDR control.

mod correlation;
mod moran;
mod weights;

pub use correlation::{fdr_adjust, pearson, pearson_test};
pub use moran::{
    local_morans_i, morans_i, permutation_test_global, permutation_test_local, LisaCategory,
    LisaRecord, StatResult, DEFAULT_ALPHA,
};
pub use weights::SpatialWeights;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SpatialError {
    #[error("need more units than neighbours: n = {n}, k = {k}")]
    TooFewUnits { n: usize, k: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("statistic undefined: values have zero variance")]
    ZeroVariance,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("at least {min} permutations required, got {got}")]
    TooFewPermutations { min: usize, got: usize },
    #[error("p-value {0} outside (0, 1]")]
    InvalidP(f64),
    #[error("correlation needs at least 3 pairs, got {0}")]
    TooFewPairs(usize),
}

/// A finite vector with its mean and population variance.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricVector {
    values: Vec<f64>,
    mean: f64,
    variance_pop: f64,
}

impl MetricVector {
    pub fn new(values: Vec<f64>) -> Result<Self, SpatialError> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SpatialError::NonFinite(i));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let variance_pop = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Ok(Self {
            values,
            mean,
            variance_pop,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance_pop(&self) -> f64 {
        self.variance_pop
    }

    /// Deviations from the mean, or an error when they are all zero.
    pub(crate) fn deviations(&self) -> Result<Vec<f64>, SpatialError> {
        let z: Vec<f64> = self.values.iter().map(|v| v - self.mean).collect();
        if self.values.is_empty() || z.iter().all(|&d| d == 0.0) {
            return Err(SpatialError::ZeroVariance);
        }
        Ok(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_vector_moments() {
        let v = MetricVector::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(v.mean(), 2.5);
        assert_eq!(v.variance_pop(), 1.25);
        assert_eq!(MetricVector::new(vec![1.0, f64::NAN]), Err(SpatialError::NonFinite(1)));
        assert_eq!(
            MetricVector::new(vec![3.0; 4]).unwrap().deviations(),
            Err(SpatialError::ZeroVariance)
        );
    }
}
