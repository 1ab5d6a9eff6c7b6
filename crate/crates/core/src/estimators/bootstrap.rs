//! Nonparametric percentile bootstrap with replicate-indexed seeds.

use rand::Rng;
use rayon::prelude::*;

use super::percentile;
use crate::seed;

/// 95% percentile interval of `statistic` over `reps` resamples of `data`.
///
/// Replicate `r` draws its indices from stream `r` of `seed`, so the interval
/// does not depend on how rayon schedules the work. Replicates where the
/// statistic is undefined (`None`) are dropped; `None` is returned if all
/// of them are.
pub fn percentile_ci<T, F>(data: &[T], reps: usize, seed: u64, statistic: F) -> Option<(f64, f64)>
where
    T: Clone + Send + Sync,
    F: Fn(&[T]) -> Option<f64> + Send + Sync,
{
    if data.is_empty() || reps == 0 {
        return None;
    }
    let n = data.len();
    let mut stats: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .filter_map(|r| {
            let mut rng = seed::stream(seed, r);
            let sample: Vec<T> = (0..n).map(|_| data[rng.random_range(0..n)].clone()).collect();
            statistic(&sample).filter(|s| s.is_finite())
        })
        .collect();
    if stats.is_empty() {
        return None;
    }
    stats.sort_by(f64::total_cmp);
    Some((percentile(&stats, 0.025), percentile(&stats, 0.975)))
}

/// Widens `ci` so it brackets `estimate`; falls back to a zero-width interval.
pub(crate) fn bracket(ci: Option<(f64, f64)>, estimate: f64) -> (f64, f64) {
    match ci {
        Some((lo, hi)) => (lo.min(estimate), hi.max(estimate)),
        None => (estimate, estimate),
    }
}
