use rayon::prelude::*;

use super::SpatialError;
use crate::geo::{haversine, Coord};

/// Sparse spatial weights: for each unit, its neighbours and link weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialWeights {
    neighbors: Vec<Vec<usize>>,
    weights: Vec<Vec<f64>>,
    s0: f64,
}

impl SpatialWeights {
    /// Binary k-nearest-neighbour weights by great-circle distance.
    /// Equal distances are broken by the lower unit index. The relation is
    /// not symmetrised.
    pub fn knn(centroids: &[Coord], k: usize) -> Result<Self, SpatialError> {
        let n = centroids.len();
        if k == 0 {
            return Err(SpatialError::ZeroK);
        }
        if n <= k {
            return Err(SpatialError::TooFewUnits { n, k });
        }
        let neighbors: Vec<Vec<usize>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut d: Vec<(f64, usize)> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (haversine(centroids[i], centroids[j]), j))
                    .collect();
                let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
                d.select_nth_unstable_by(k - 1, cmp);
                d.truncate(k);
                d.sort_by(cmp);
                d.into_iter().map(|(_, j)| j).collect()
            })
            .collect();
        let weights = vec![vec![1.0; k]; n];
        Ok(Self {
            neighbors,
            weights,
            s0: (n * k) as f64,
        })
    }

    /// Weights from explicit adjacency lists.
    pub fn from_lists(neighbors: Vec<Vec<usize>>, weights: Vec<Vec<f64>>) -> Result<Self, SpatialError> {
        let n = neighbors.len();
        if weights.len() != n {
            return Err(SpatialError::LengthMismatch(n, weights.len()));
        }
        let mut s0 = 0.0;
        for (i, (nb, w)) in neighbors.iter().zip(&weights).enumerate() {
            if nb.len() != w.len() {
                return Err(SpatialError::InvalidWeights(format!("unit {i}: {} neighbours, {} weights", nb.len(), w.len())));
            }
            for (&j, &wij) in nb.iter().zip(w) {
                if j == i || j >= n {
                    return Err(SpatialError::InvalidWeights(format!("unit {i}: bad neighbour {j}")));
                }
                if !(wij.is_finite() && wij > 0.0) {
                    return Err(SpatialError::InvalidWeights(format!("unit {i}: weight {wij}")));
                }
                s0 += wij;
            }
        }
        Ok(Self { neighbors, weights, s0 })
    }

    /// The same links with each row scaled to sum to one.
    pub fn row_standardized(&self) -> Self {
        let weights: Vec<Vec<f64>> = self
            .weights
            .iter()
            .map(|row| {
                let s: f64 = row.iter().sum();
                row.iter().map(|w| w / s).collect()
            })
            .collect();
        let s0 = weights.iter().flatten().sum();
        Self {
            neighbors: self.neighbors.clone(),
            weights,
            s0,
        }
    }

    pub fn n(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn weights(&self, i: usize) -> &[f64] {
        &self.weights[i]
    }

    /// Sum of all weights.
    pub fn s0(&self) -> f64 {
        self.s0
    }

    /// Row sum for unit i.
    pub fn row_sum(&self, i: usize) -> f64 {
        self.weights[i].iter().sum()
    }

    /// Σ_j w_ij v_j.
    pub(crate) fn lag(&self, i: usize, v: &[f64]) -> f64 {
        self.neighbors[i]
            .iter()
            .zip(&self.weights[i])
            .map(|(&j, &w)| w * v[j])
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> Vec<Coord> {
        // Quarter degrees are exact in binary, so interior ties are genuine.
        (0..n).map(|i| Coord::new(0.0, i as f64 * 0.25)).collect()
    }

    #[test]
    fn collinear_k1() {
        let w = SpatialWeights::knn(&line(4), 1).unwrap();
        // Interior points are equidistant from both sides: lower index wins.
        assert_eq!(w.neighbors(0), &[1]);
        assert_eq!(w.neighbors(1), &[0]);
        assert_eq!(w.neighbors(2), &[1]);
        assert_eq!(w.neighbors(3), &[2]);
        assert_eq!(w.s0(), 4.0);
    }

    #[test]
    fn complete_graph_when_k_is_n_minus_1() {
        let w = SpatialWeights::knn(&line(5), 4).unwrap();
        for i in 0..5 {
            let mut nb = w.neighbors(i).to_vec();
            nb.sort();
            let want: Vec<usize> = (0..5).filter(|&j| j != i).collect();
            assert_eq!(nb, want);
        }
    }

    #[test]
    fn rejects_k_not_below_n() {
        assert_eq!(SpatialWeights::knn(&line(3), 3), Err(SpatialError::TooFewUnits { n: 3, k: 3 }));
        assert_eq!(SpatialWeights::knn(&line(3), 0), Err(SpatialError::ZeroK));
    }

    #[test]
    fn duplicate_points_tie_by_index() {
        let pts = vec![Coord::new(1.0, 1.0); 4];
        let w = SpatialWeights::knn(&pts, 2).unwrap();
        assert_eq!(w.neighbors(0), &[1, 2]);
        assert_eq!(w.neighbors(3), &[0, 1]);
    }

    #[test]
    fn from_lists_validation() {
        assert!(SpatialWeights::from_lists(vec![vec![0]], vec![vec![1.0]]).is_err());
        assert!(SpatialWeights::from_lists(vec![vec![1], vec![0]], vec![vec![0.0], vec![1.0]]).is_err());
        let w = SpatialWeights::from_lists(vec![vec![1], vec![0]], vec![vec![2.0], vec![1.0]]).unwrap();
        assert_eq!(w.s0(), 3.0);
        let r = w.row_standardized();
        assert_eq!(r.s0(), 2.0);
        assert_eq!(r.weights(0), &[1.0]);
    }
}
