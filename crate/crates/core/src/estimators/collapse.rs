//! Distribution collapse: rescale each day by its maximum activity, pool the
//! days, and regress the log-binned density on relative activity.
//!
//! Under a time-invariant power law every day follows
//! `n(f) = (f / f_max)^(-beta)`, so after rescaling all days share one line
//! of slope `-beta` through `(1, 1)` in log-log space.
//!
//! Binning: bin `k` holds relative activities in `(10^-(k+1)/b, 10^-k/b]`
//! for `b` bins per decade. A day's density in a bin is its user count
//! divided by the bin width measured in activity units: the number of
//! integer levels the bin covers for integer-valued days, or
//! `width * f_max` for continuous days. A day only contributes to bins lying
//! inside its observed support, so partially covered bins at the low end do
//! not bias the tail.

use std::collections::BTreeMap;

use super::bootstrap::{bracket, percentile_ci};
use super::{adjusted_r2, BetaFit, BetaMethod};
use crate::error::{Error, Result};
use crate::ingest::{ActivityHistogram, DailySnapshot, DayKey};

/// One day's histogram in relative-activity coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledHistogram {
    /// `(f / f_max, users)` ascending by relative activity.
    pub points: Vec<(f64, f64)>,
    pub source_day: DayKey,
    pub f_max: f64,
    /// Activities are whole numbers (counts), so bins are measured in levels.
    pub integer_levels: bool,
}

impl RescaledHistogram {
    /// Builds from already-rescaled points, e.g. noiseless model curves.
    pub fn new(points: Vec<(f64, f64)>, source_day: DayKey, f_max: f64, integer_levels: bool) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::insufficient("rescaled histogram has no points"));
        }
        if !(f_max.is_finite() && f_max >= 1.0) {
            return Err(Error::domain(format!("f_max must be >= 1, got {f_max}")));
        }
        if let Some(&(r, n)) = points.iter().find(|&&(r, n)| !(r > 0.0 && r <= 1.0) || !(n > 0.0)) {
            return Err(Error::domain(format!("invalid rescaled point ({r}, {n})")));
        }
        let mut points = points;
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(RescaledHistogram {
            points,
            source_day,
            f_max,
            integer_levels,
        })
    }

    /// Smallest activity the day could have produced, in activity units:
    /// level 1 for integer data, the smallest observation otherwise.
    fn support_floor(&self) -> f64 {
        if self.integer_levels {
            1.0
        } else {
            self.points[0].0 * self.f_max
        }
    }
}

/// Maps every level `f` to `f / f_max`.
pub fn rescale_histogram(day: DayKey, hist: &ActivityHistogram) -> Result<RescaledHistogram> {
    let f_max = hist
        .max_level()
        .ok_or_else(|| Error::insufficient(format!("day {day}: empty histogram")))?;
    let points = hist.bins().iter().map(|&(f, n)| (f / f_max, n as f64)).collect();
    Ok(RescaledHistogram {
        points,
        source_day: day,
        f_max,
        integer_levels: hist.is_integral(),
    })
}

/// Rescales every snapshot of a series.
pub fn rescale_series(days: &[DailySnapshot]) -> Result<Vec<RescaledHistogram>> {
    days.iter().map(|d| rescale_histogram(d.day, &d.histogram)).collect()
}

/// How days are combined within a bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DayWeighting {
    /// Mean of per-day densities over the days covering the bin.
    #[default]
    PerDay,
    /// Total count over total width, which weights days by population.
    PooledCounts,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseOptions {
    pub bins_per_decade: usize,
    pub weighting: DayWeighting,
    /// Bootstrap replicates over days; 0 gives a zero-width interval.
    pub bootstrap_reps: usize,
    pub seed: u64,
}

impl Default for CollapseOptions {
    fn default() -> Self {
        CollapseOptions {
            bins_per_decade: 5,
            weighting: DayWeighting::PerDay,
            bootstrap_reps: 1000,
            seed: 0,
        }
    }
}

/// One pooled bin of the collapsed curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// `log10` of the bin's representative relative activity.
    pub log_relative: f64,
    /// `log10` of the pooled density.
    pub log_density: f64,
    /// Days that covered the bin.
    pub days: usize,
}

#[derive(Debug, Clone, Copy)]
struct DayBin {
    bin: usize,
    count: f64,
    width: f64,
    log_center: f64,
}

fn bin_of(r: f64, bpd: f64) -> usize {
    let k = (-r.log10() * bpd).floor();
    if k <= 0.0 {
        0
    } else {
        k as usize
    }
}

fn bin_edges(k: usize, bpd: f64) -> (f64, f64) {
    (10f64.powf(-((k + 1) as f64) / bpd), 10f64.powf(-(k as f64) / bpd))
}

/// Per-day bins covered by the day's support, with zero-count bins kept.
fn day_bins(h: &RescaledHistogram, bpd: usize) -> Vec<DayBin> {
    let b = bpd as f64;
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for &(r, n) in &h.points {
        *counts.entry(bin_of(r, b)).or_insert(0.0) += n;
    }
    let floor = h.support_floor();
    let last = bin_of(floor / h.f_max, b);
    let mut out = Vec::with_capacity(last + 1);

    if h.integer_levels {
        // Levels m in [1, f_max] are assigned with the same rule as points;
        // bin_of(m / f_max) is non-increasing in m, so each bin is a
        // contiguous run of levels found by binary search.
        let top = h.f_max.floor() as u64;
        let first_level_in = |k: usize| -> u64 {
            // smallest m in [1, top] with bin_of(m / f_max) <= k
            let (mut lo, mut hi) = (1u64, top + 1);
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                if bin_of(mid as f64 / h.f_max, b) <= k {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            lo
        };
        let mut upper = top + 1;
        for k in 0..=last {
            let start = first_level_in(k);
            let levels = upper.saturating_sub(start);
            if levels > 0 {
                // geometric mean of the member levels, relative to f_max
                let log_sum: f64 = (start..upper).map(|m| (m as f64).log10()).sum();
                let log_center = log_sum / levels as f64 - h.f_max.log10();
                out.push(DayBin {
                    bin: k,
                    count: counts.get(&k).copied().unwrap_or(0.0),
                    width: levels as f64,
                    log_center,
                });
            }
            upper = start;
        }
    } else {
        for k in 0..=last {
            let (lo, hi) = bin_edges(k, b);
            if lo * h.f_max < floor {
                break;
            }
            out.push(DayBin {
                bin: k,
                count: counts.get(&k).copied().unwrap_or(0.0),
                width: (hi - lo) * h.f_max,
                log_center: -(k as f64 + 0.5) / b,
            });
        }
    }
    out
}

fn pool(days: &[&[DayBin]], weighting: DayWeighting) -> Vec<CurvePoint> {
    #[derive(Default)]
    struct Acc {
        density_sum: f64,
        count: f64,
        width: f64,
        center_sum: f64,
        days: usize,
    }
    let mut acc: BTreeMap<usize, Acc> = BTreeMap::new();
    for bins in days {
        for db in bins.iter() {
            let a = acc.entry(db.bin).or_default();
            a.density_sum += db.count / db.width;
            a.count += db.count;
            a.width += db.width;
            a.center_sum += db.log_center;
            a.days += 1;
        }
    }
    acc.into_values()
        .filter_map(|a| {
            let density = match weighting {
                DayWeighting::PerDay => a.density_sum / a.days as f64,
                DayWeighting::PooledCounts => a.count / a.width,
            };
            (density > 0.0).then(|| CurvePoint {
                log_relative: a.center_sum / a.days as f64,
                log_density: density.log10(),
                days: a.days,
            })
        })
        .collect()
}

struct Line {
    slope: f64,
    adjusted_r2: f64,
}

fn ols(curve: &[CurvePoint]) -> Option<Line> {
    if curve.len() < 3 {
        return None;
    }
    let n = curve.len() as f64;
    let mx = curve.iter().map(|c| c.log_relative).sum::<f64>() / n;
    let my = curve.iter().map(|c| c.log_density).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for c in curve {
        let (dx, dy) = (c.log_relative - mx, c.log_density - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let ss_res = (syy - slope * sxy).max(0.0);
    Some(Line {
        slope,
        adjusted_r2: adjusted_r2(ss_res, syy, curve.len()),
    })
}

fn check_inputs(rescaled: &[RescaledHistogram], opts: &CollapseOptions) -> Result<()> {
    if rescaled.is_empty() {
        return Err(Error::insufficient("no histograms to pool"));
    }
    if opts.bins_per_decade == 0 {
        return Err(Error::domain("bins_per_decade must be >= 1"));
    }
    let min_rel = rescaled
        .iter()
        .filter_map(|h| h.points.first().map(|p| p.0))
        .fold(f64::INFINITY, f64::min);
    if !(min_rel <= 0.1) {
        return Err(Error::insufficient(format!(
            "pooled relative activity spans {:.3} decades; need at least 1",
            -min_rel.log10()
        )));
    }
    Ok(())
}

/// The pooled, log-binned master curve.
pub fn pooled_curve(rescaled: &[RescaledHistogram], opts: &CollapseOptions) -> Result<Vec<CurvePoint>> {
    check_inputs(rescaled, opts)?;
    let per_day: Vec<Vec<DayBin>> = rescaled.iter().map(|h| day_bins(h, opts.bins_per_decade)).collect();
    let refs: Vec<&[DayBin]> = per_day.iter().map(Vec::as_slice).collect();
    Ok(pool(&refs, opts.weighting))
}

/// Pools rescaled days and fits `beta` as minus the OLS slope of
/// `log10 density` on `log10 (f / f_max)`; the interval resamples days.
pub fn pool_and_fit_beta(rescaled: &[RescaledHistogram], opts: &CollapseOptions) -> Result<BetaFit> {
    check_inputs(rescaled, opts)?;
    let per_day: Vec<Vec<DayBin>> = rescaled.iter().map(|h| day_bins(h, opts.bins_per_decade)).collect();
    let refs: Vec<&[DayBin]> = per_day.iter().map(Vec::as_slice).collect();
    let curve = pool(&refs, opts.weighting);
    let line = ols(&curve).ok_or_else(|| {
        Error::insufficient(format!("collapsed curve has {} usable bins; need at least 3", curve.len()))
    })?;
    let beta = -line.slope;
    if !(beta > 1.0) {
        return Err(Error::domain(format!("collapsed slope gives beta = {beta:.4}, not > 1")));
    }

    let ci = percentile_ci(&refs, opts.bootstrap_reps, opts.seed, |sample| {
        ols(&pool(sample, opts.weighting)).map(|l| -l.slope)
    });
    Ok(BetaFit {
        beta,
        ci95_beta: bracket(ci, beta),
        adjusted_r2: Some(line.adjusted_r2),
        method: BetaMethod::CollapseRegression,
        n_points_or_samples: curve.len(),
    })
}

/// Adjusted R² of the pooled curve about a line of fixed slope `-beta`
/// (intercept fitted).
pub fn score_hypothesis(curve: &[CurvePoint], beta: f64) -> Result<f64> {
    if curve.len() < 3 {
        return Err(Error::insufficient("need at least 3 bins to score a hypothesis"));
    }
    let n = curve.len() as f64;
    let my = curve.iter().map(|c| c.log_density).sum::<f64>() / n;
    let intercept = curve.iter().map(|c| c.log_density + beta * c.log_relative).sum::<f64>() / n;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for c in curve {
        ss_res += (c.log_density - (intercept - beta * c.log_relative)).powi(2);
        ss_tot += (c.log_density - my).powi(2);
    }
    Ok(adjusted_r2(ss_res, ss_tot, curve.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{synthesize_series, Protocol, SamplerConfig};

    fn no_boot() -> CollapseOptions {
        CollapseOptions {
            bootstrap_reps: 0,
            ..CollapseOptions::default()
        }
    }

    /// Noiseless `(m / f_max)^-beta` at every integer level.
    fn model_day(f_max: u64, beta: f64, day: i64) -> RescaledHistogram {
        let fm = f_max as f64;
        let pts = (1..=f_max).map(|m| (m as f64 / fm, (m as f64 / fm).powf(-beta))).collect();
        RescaledHistogram::new(pts, DayKey::Index(day), fm, true).unwrap()
    }

    #[test]
    fn rescale_examples() {
        let h = ActivityHistogram::from_counts([(5.0, 1)]).unwrap();
        let r = rescale_histogram(DayKey::Index(0), &h).unwrap();
        assert_eq!(r.points, vec![(1.0, 1.0)]);
        assert_eq!(r.f_max, 5.0);

        let h = ActivityHistogram::from_counts([(1.0, 9), (10.0, 1)]).unwrap();
        let r = rescale_histogram(DayKey::Index(0), &h).unwrap();
        assert_eq!(r.points, vec![(0.1, 9.0), (1.0, 1.0)]);

        assert!(rescale_histogram(DayKey::Index(0), &ActivityHistogram::default()).is_err());
    }

    #[test]
    fn noiseless_model_recovers_beta() {
        let fit = pool_and_fit_beta(&[model_day(1000, 1.58, 0)], &no_boot()).unwrap();
        assert!((fit.beta - 1.58).abs() < 0.01, "{}", fit.beta);
        assert!(fit.adjusted_r2.unwrap() >= 0.999);
        assert_eq!(fit.method, BetaMethod::CollapseRegression);
    }

    #[test]
    fn noiseless_model_over_three_decades_within_binning_error() {
        for &beta in &[1.2, 1.41, 1.58, 1.8, 2.5] {
            let days: Vec<_> = [1000, 1500, 4000].iter().enumerate().map(|(i, &f)| model_day(f, beta, i as i64)).collect();
            let fit = pool_and_fit_beta(&days, &no_boot()).unwrap();
            assert!((fit.beta - beta).abs() < 0.02, "beta {beta}: {}", fit.beta);
        }
    }

    #[test]
    fn continuous_model_bins() {
        // Continuous day: counts equal to the bin integral of the model.
        let f_max = 1000.0;
        let beta = 1.41;
        let (mut pts, b) = (Vec::new(), 5.0f64);
        for k in 0..15 {
            let (lo, hi) = bin_edges(k, b);
            let mass = f_max * (lo.powf(1.0 - beta) - hi.powf(1.0 - beta)) / (beta - 1.0);
            pts.push(((lo * hi).sqrt(), mass));
        }
        pts.push((1.0, 1.0));
        pts.push((0.001, 1.0));
        let h = RescaledHistogram::new(pts, DayKey::Index(0), f_max, false).unwrap();
        let fit = pool_and_fit_beta(&[h], &no_boot()).unwrap();
        assert!((fit.beta - beta).abs() < 0.01, "{}", fit.beta);
    }

    #[test]
    fn single_user_is_degenerate() {
        let h = ActivityHistogram::from_counts([(3.0, 1)]).unwrap();
        let r = rescale_histogram(DayKey::Index(0), &h).unwrap();
        assert!(matches!(pool_and_fit_beta(&[r], &no_boot()), Err(Error::InsufficientData(_))));
        assert!(pool_and_fit_beta(&[], &no_boot()).is_err());
    }

    #[test]
    fn duplicated_day_pools_like_one_day() {
        let cfg = SamplerConfig::new(1.58, 1.0).with_seed(3);
        let s = synthesize_series(&[20_000], &cfg, Protocol::CoupledTruncation).unwrap();
        let one = rescale_series(&s.days).unwrap();
        let ten: Vec<_> = std::iter::repeat_n(one[0].clone(), 10).collect();
        let opts = CollapseOptions { bootstrap_reps: 50, ..Default::default() };
        let a = pool_and_fit_beta(&one, &opts).unwrap();
        let b = pool_and_fit_beta(&ten, &opts).unwrap();
        assert!((a.beta - b.beta).abs() < 1e-12);
        assert!((a.adjusted_r2.unwrap() - b.adjusted_r2.unwrap()).abs() < 1e-12);
        assert_eq!(a.n_points_or_samples, b.n_points_or_samples);
    }

    #[test]
    fn synthetic_flickr_like_days() {
        let cfg = SamplerConfig::new(1.41, 1.0).with_seed(120);
        let schedule = crate::sampler::log_uniform_schedule(120, 1000, 100_000, 120).unwrap();
        let s = synthesize_series(&schedule, &cfg, Protocol::CoupledTruncation).unwrap();
        let fit = pool_and_fit_beta(&rescale_series(&s.days).unwrap(), &CollapseOptions { bootstrap_reps: 200, ..Default::default() }).unwrap();
        assert!((1.35..=1.47).contains(&fit.beta), "{fit:?}");
        assert!(fit.adjusted_r2.unwrap() >= 0.9);
        assert!(fit.ci95_beta.0 <= fit.beta && fit.beta <= fit.ci95_beta.1);
    }

    #[test]
    fn floored_days_are_biased_flat() {
        // Flooring puts the mass of [m, m+1) on level m, which depresses the
        // low levels relative to n(m) and flattens the fitted slope.
        let cfg = SamplerConfig::new(1.58, 1.0).with_seed(9).with_integerize(true);
        let schedule = crate::sampler::log_uniform_schedule(60, 1000, 100_000, 9).unwrap();
        let s = synthesize_series(&schedule, &cfg, Protocol::CoupledTruncation).unwrap();
        let fit = pool_and_fit_beta(&rescale_series(&s.days).unwrap(), &no_boot()).unwrap();
        assert!(fit.beta > 1.45 && fit.beta < 1.58, "{fit:?}");
    }

    #[test]
    fn pooled_counts_weighting_is_available() {
        let days: Vec<_> = [1000, 3000].iter().enumerate().map(|(i, &f)| model_day(f, 1.58, i as i64)).collect();
        let opts = CollapseOptions { weighting: DayWeighting::PooledCounts, ..no_boot() };
        let fit = pool_and_fit_beta(&days, &opts).unwrap();
        assert!((fit.beta - 1.58).abs() < 0.02);
    }

    #[test]
    fn hypothesis_scoring() {
        let days = [model_day(1000, 1.58, 0)];
        let curve = pooled_curve(&days, &no_boot()).unwrap();
        let right = score_hypothesis(&curve, 1.58).unwrap();
        let wrong = score_hypothesis(&curve, 2.5).unwrap();
        assert!(right > 0.999);
        assert!(wrong < right);
    }

    #[test]
    fn bin_assignment_is_closed_on_top() {
        assert_eq!(bin_of(1.0, 5.0), 0);
        assert_eq!(bin_of(0.7, 5.0), 0);
        assert_eq!(bin_of(0.5, 5.0), 1);
    }
}
