use statrs::distribution::{ContinuousCDF, StudentsT};

use super::SpatialError;

fn check_pairs(x: &[f64], y: &[f64]) -> Result<(), SpatialError> {
    if x.len() != y.len() {
        return Err(SpatialError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(SpatialError::TooFewPairs(x.len()));
    }
    if let Some(i) = x.iter().chain(y).position(|v| !v.is_finite()) {
        return Err(SpatialError::NonFinite(i % x.len()));
    }
    Ok(())
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, SpatialError> {
    check_pairs(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(SpatialError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Correlation and its two-sided p-value from Student's t on n − 2
/// degrees of freedom. The p-value is kept strictly positive so it can be
/// fed to [`fdr_adjust`].
pub fn pearson_test(x: &[f64], y: &[f64]) -> Result<(f64, f64), SpatialError> {
    let r = pearson(x, y)?;
    let df = (x.len() - 2) as f64;
    let p = if r.abs() >= 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
        2.0 * dist.cdf(-t.abs())
    };
    Ok((r, p.clamp(f64::MIN_POSITIVE, 1.0)))
}

/// Benjamini–Hochberg step-up adjusted p-values, in input order.
pub fn fdr_adjust(p: &[f64]) -> Result<Vec<f64>, SpatialError> {
    if let Some(&bad) = p.iter().find(|&&v| !(v > 0.0 && v <= 1.0)) {
        return Err(SpatialError::InvalidP(bad));
    }
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let mut out = vec![0.0; m];
    let mut running = 1.0f64;
    for (rank, &i) in order.iter().enumerate().rev() {
        running = running.min(p[i] * m as f64 / (rank + 1) as f64).min(1.0);
        // Rounding in p·m/j can land an ulp below p.
        out[i] = running.max(p[i]);
    }
    Ok(out)
}
