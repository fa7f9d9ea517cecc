use super::family::DistFamily;
use super::DistError;

/// `(theoretical, empirical)` pairs: the i-th order statistic against the
/// quantile at plotting position `(i − ½)/n`.
pub fn qq_points(x: &[f64], dist: &DistFamily) -> Result<Vec<(f64, f64)>, DistError> {
    if x.len() < 2 {
        return Err(DistError::TooFewSamples { needed: 2, got: x.len() });
    }
    let density = dist.density()?;
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let levels: Vec<f64> = (0..sorted.len()).map(|i| (i as f64 + 0.5) / n).collect();
    let q = density.quantiles_sorted(&levels)?;
    Ok(q.into_iter().zip(sorted).collect())
}
