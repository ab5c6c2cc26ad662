mod support;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ttv::geo::Coord;
use ttv::spatial::*;

use support::*;

#[test]
fn knn_matches_full_sort() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let pts: Vec<Coord> = (0..100)
            .map(|_| Coord::new(rng.random_range(50.0..55.0), rng.random_range(-4.0..1.0)))
            .collect();
        let w = SpatialWeights::knn(&pts, 10).unwrap();
        let want = knn_oracle(&pts, 10);
        for (i, nb) in want.iter().enumerate() {
            assert_eq!(w.neighbors(i), nb.as_slice());
            assert!(w.weights(i).iter().all(|&v| v == 1.0));
        }
        assert_eq!(w.s0(), 1000.0);
    }
}

#[test]
fn moran_matches_dense_double_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for trial in 0..30 {
        let n = rng.random_range(5..80);
        let pts: Vec<Coord> = (0..n)
            .map(|_| Coord::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)))
            .collect();
        let k = rng.random_range(1..n.min(12));
        let mut w = SpatialWeights::knn(&pts, k).unwrap();
        if trial % 2 == 1 {
            w = w.row_standardized();
        }
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..50.0)).collect();
        let mv = MetricVector::new(x.clone()).unwrap();
        let got = morans_i(&mv, &w).unwrap();
        assert!((got - moran_oracle(&x, &dense(&w))).abs() < 1e-12);

        let local = local_morans_i(&mv, &w).unwrap();
        let total: f64 = local.iter().sum();
        assert!((total - got * w.s0()).abs() <= 1e-9 * (got * w.s0()).abs().max(1e-12));
    }
}

#[test]
fn single_high_cell_is_high_low() {
    let pts = grid_points(10, 10);
    let w = SpatialWeights::knn(&pts, 8).unwrap();
    // Varied background; the high cell's eight neighbours are all low.
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut x: Vec<f64> = (0..100).map(|_| rng.random_range(0.0..10.0)).collect();
    for &j in w.neighbors(44) {
        x[j] = 0.0;
    }
    x[44] = 20.0;
    let recs = permutation_test_local(&MetricVector::new(x).unwrap(), &w, 999, 3, DEFAULT_ALPHA).unwrap();
    assert!(recs[44].local_i < 0.0);
    assert_eq!(recs[44].category, LisaCategory::HighLow);
}

#[test]
fn category_signs_agree_with_local_i() {
    for seed in 0..5 {
        let (x, _) = block_field(seed);
        let w = SpatialWeights::knn(&grid_points(10, 10), 8).unwrap();
        let recs = permutation_test_local(&MetricVector::new(x).unwrap(), &w, 499, seed, 0.05).unwrap();
        for r in recs {
            match r.category {
                LisaCategory::HighHigh | LisaCategory::LowLow => assert!(r.local_i > 0.0),
                LisaCategory::HighLow | LisaCategory::LowHigh => assert!(r.local_i < 0.0),
                LisaCategory::NotSignificant => assert!(r.p_value >= 0.05),
            }
        }
    }
}

#[test]
fn global_test_calibration() {
    // 200 i.i.d. fields: rejection rate at 0.05 near nominal.
    let w = SpatialWeights::knn(&grid_points(10, 10), 10).unwrap();
    let mut rejections = 0;
    for trial in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
        let x = MetricVector::new(normal_noise(&mut rng, 100)).unwrap();
        if permutation_test_global(&x, &w, 999, trial).unwrap().p_value < 0.05 {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / 200.0;
    assert!((0.03..=0.07).contains(&rate), "rejection rate {rate}");
}

#[test]
fn shuffled_moran_mean_is_expected() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let pts = grid_points(8, 8);
    let w = SpatialWeights::knn(&pts, 6).unwrap();
    let mut x: Vec<f64> = (0..64).map(|_| rng.random_range(0.0..10.0)).collect();
    let draws: Vec<f64> = (0..2000)
        .map(|_| {
            x.shuffle(&mut rng);
            morans_i(&MetricVector::new(x.clone()).unwrap(), &w).unwrap()
        })
        .collect();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let sd = (draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64).sqrt();
    let se = sd / (draws.len() as f64).sqrt();
    assert!((mean + 1.0 / 63.0).abs() < 3.0 * se);
}

#[test]
fn fdr_against_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let m = rng.random_range(1..30);
        let p: Vec<f64> = (0..m).map(|_| rng.random_range(1e-9..=1.0)).collect();
        let got = fdr_adjust(&p).unwrap();
        for (a, b) in got.iter().zip(fdr_oracle(&p)) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn pearson_matches_direct_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let n = rng.random_range(3..60);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| v * 0.3 + rng.random_range(-5.0..5.0)).collect();
        let nf = n as f64;
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        let syy: f64 = y.iter().map(|a| a * a).sum();
        let want = (nf * sxy - sx * sy) / ((nf * sxx - sx * sx).sqrt() * (nf * syy - sy * sy).sqrt());
        assert!((pearson(&x, &y).unwrap() - want).abs() < 1e-12);
    }
}
