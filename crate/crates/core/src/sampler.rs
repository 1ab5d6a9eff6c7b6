//! Synthetic activity data from the power-law density
//! `p(x) = (beta - 1) C^(beta-1) x^(-beta)` on `[C, ∞)`, optionally truncated
//! at an upper cutoff.
//!
//! Draws use the inverse CDF. Each simulated day has its own RNG stream
//! derived from the configured seed and the day index (see [`crate::seed`]).

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ingest::{DailySnapshot, DayKey};
use crate::seed;
use crate::theory;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub beta: f64,
    /// Lower cutoff `C >= 1`.
    pub lower_cutoff: f64,
    /// Truncation point `U > C`; `None` leaves the support unbounded.
    pub upper_cutoff: Option<f64>,
    /// Floor every activity to an integer (minimum 1).
    pub integerize: bool,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(beta: f64, lower_cutoff: f64) -> Self {
        SamplerConfig {
            beta,
            lower_cutoff,
            upper_cutoff: None,
            integerize: false,
            seed: 0,
        }
    }

    pub fn with_upper_cutoff(mut self, upper: Option<f64>) -> Self {
        self.upper_cutoff = upper;
        self
    }

    pub fn with_integerize(mut self, on: bool) -> Self {
        self.integerize = on;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta > 1.0) {
            return Err(Error::domain(format!("beta must be > 1, got {}", self.beta)));
        }
        if !(self.lower_cutoff.is_finite() && self.lower_cutoff >= 1.0) {
            return Err(Error::domain(format!("lower cutoff must be >= 1, got {}", self.lower_cutoff)));
        }
        if let Some(u) = self.upper_cutoff {
            if !(u > self.lower_cutoff) || u.is_nan() {
                return Err(Error::domain(format!(
                    "upper cutoff {u} must exceed lower cutoff {}",
                    self.lower_cutoff
                )));
            }
        }
        Ok(())
    }
}

/// How each day's upper cutoff is chosen when synthesizing a series.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Protocol {
    #[default]
    /// Cutoff `((beta - 1) P)^(1/beta)` per day, so `n(f_max) = 1` holds at
    /// every population.
    CoupledTruncation,
    /// Same cutoff on every day.
    FixedTruncation { upper_cutoff: f64 },
    /// No cutoff.
    Unbounded,
}

/// Precomputed inverse-CDF transform for one configuration.
#[derive(Debug, Clone, Copy)]
pub struct InverseCdf {
    lower: f64,
    upper: Option<f64>,
    neg_inv_alpha: f64,
    /// `1 - (U/C)^(1-beta)`, the CDF mass of `[C, U]` under the untruncated law.
    mass: f64,
    integerize: bool,
}

impl InverseCdf {
    pub fn new(config: &SamplerConfig) -> Result<Self> {
        config.validate()?;
        let alpha = config.beta - 1.0;
        let mass = match config.upper_cutoff {
            Some(u) => -((-alpha) * (u / config.lower_cutoff).ln()).exp_m1(),
            None => 1.0,
        };
        Ok(InverseCdf {
            lower: config.lower_cutoff,
            upper: config.upper_cutoff,
            neg_inv_alpha: -1.0 / alpha,
            mass,
            integerize: config.integerize,
        })
    }

    /// Continuous variate for `u` in `[0, 1)`; strictly increasing in `u`.
    pub fn continuous(&self, u: f64) -> f64 {
        let x = self.lower * (1.0 - u * self.mass).powf(self.neg_inv_alpha);
        match self.upper {
            Some(upper) => x.min(upper),
            None => x,
        }
    }

    /// Variate with the configured integerization applied.
    pub fn draw(&self, u: f64) -> f64 {
        let x = self.continuous(u);
        if self.integerize {
            x.floor().max(1.0)
        } else {
            x
        }
    }

    /// Analytic CDF of the continuous variate.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lower {
            return 0.0;
        }
        if let Some(u) = self.upper {
            if x >= u {
                return 1.0;
            }
        }
        let alpha = -1.0 / self.neg_inv_alpha;
        -((-alpha) * (x / self.lower).ln()).exp_m1() / self.mass
    }
}

/// Inverse-CDF variate for a uniform `u` in `[0, 1)`.
pub fn sample_activity(config: &SamplerConfig, u: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&u) {
        return Err(Error::domain(format!("uniform variate must lie in [0, 1), got {u}")));
    }
    Ok(InverseCdf::new(config)?.draw(u))
}

/// RNG stream dedicated to `day_index` under `seed`.
pub fn day_rng(seed: u64, day_index: u64) -> ChaCha8Rng {
    seed::stream(seed, day_index)
}

/// Draws `population` independent activities for one day.
pub fn synthesize_day<R: Rng + ?Sized>(
    day_index: i64,
    population: u64,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<DailySnapshot> {
    if population == 0 {
        return Err(Error::domain("population must be >= 1"));
    }
    let inv = InverseCdf::new(config)?;
    let draws = (0..population).map(|_| inv.draw(rng.random::<f64>()));
    DailySnapshot::from_activities(DayKey::Index(day_index), draws)
}

/// A simulated day-by-day series with the inputs that produced it.
#[derive(Debug, Clone)]
pub struct SyntheticSeries {
    pub days: Vec<DailySnapshot>,
    pub generator_config: SamplerConfig,
    pub protocol: Protocol,
    pub population_schedule: Vec<u64>,
}

impl SyntheticSeries {
    /// `(P, F)` pairs in day order.
    pub fn growth_points(&self) -> Vec<(f64, f64)> {
        self.days
            .iter()
            .map(|d| (d.population as f64, d.total_activity))
            .collect()
    }
}

/// Upper cutoff a protocol assigns to a day of the given population.
pub fn day_cutoff(protocol: Protocol, population: u64, beta: f64) -> Result<Option<f64>> {
    match protocol {
        Protocol::CoupledTruncation => theory::cutoff_for_population(population as f64, beta).map(Some),
        Protocol::FixedTruncation { upper_cutoff } => Ok(Some(upper_cutoff)),
        Protocol::Unbounded => Ok(None),
    }
}

/// One snapshot per scheduled population. Day `i` uses stream `i` of the
/// configured seed, so the series is a pure function of its inputs.
pub fn synthesize_series(schedule: &[u64], config: &SamplerConfig, protocol: Protocol) -> Result<SyntheticSeries> {
    if schedule.is_empty() {
        return Err(Error::insufficient("population schedule is empty"));
    }
    let mut days = Vec::with_capacity(schedule.len());
    for (i, &population) in schedule.iter().enumerate() {
        let upper = day_cutoff(protocol, population, config.beta)
            .map_err(|e| Error::domain(format!("day {i}: {e}")))?;
        let day_config = config.with_upper_cutoff(upper);
        day_config
            .validate()
            .map_err(|e| Error::domain(format!("day {i} (P = {population}): {e}")))?;
        let mut rng = day_rng(config.seed, i as u64);
        days.push(synthesize_day(i as i64, population, &day_config, &mut rng)?);
    }
    Ok(SyntheticSeries {
        days,
        generator_config: *config,
        protocol,
        population_schedule: schedule.to_vec(),
    })
}

/// `days` populations drawn log-uniformly from `[p_min, p_max]` and rounded.
pub fn log_uniform_schedule(days: usize, p_min: u64, p_max: u64, seed: u64) -> Result<Vec<u64>> {
    if p_min == 0 || p_max < p_min {
        return Err(Error::domain(format!("invalid population range [{p_min}, {p_max}]")));
    }
    let mut rng = seed::stream(seed, u64::MAX);
    let (lo, hi) = ((p_min as f64).ln(), (p_max as f64).ln());
    Ok((0..days)
        .map(|_| {
            let p = (lo + (hi - lo) * rng.random::<f64>()).exp().round() as u64;
            p.clamp(p_min, p_max)
        })
        .collect())
}

/// `days` populations evenly spaced in log between `p_min` and `p_max`.
pub fn log_spaced_schedule(days: usize, p_min: u64, p_max: u64) -> Vec<u64> {
    if days == 1 {
        return vec![p_min];
    }
    let (lo, hi) = ((p_min as f64).ln(), (p_max as f64).ln());
    (0..days)
        .map(|i| (lo + (hi - lo) * i as f64 / (days - 1) as f64).exp().round() as u64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn ks_distance(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = cdf(x);
                (c - i as f64 / n).abs().max((c - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn inverse_cdf_examples() {
        let c = SamplerConfig::new(2.0, 1.0);
        assert_relative_eq!(sample_activity(&c, 0.5).unwrap(), 2.0, max_relative = 1e-15);
        for cfg in [
            SamplerConfig::new(1.3, 1.0),
            SamplerConfig::new(4.0, 7.0),
            SamplerConfig::new(1.7, 3.0).with_upper_cutoff(Some(50.0)),
        ] {
            assert_eq!(sample_activity(&cfg, 0.0).unwrap(), cfg.lower_cutoff);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let c = SamplerConfig::new(2.0, 1.0);
        assert!(sample_activity(&c, 1.0).is_err());
        assert!(sample_activity(&c, -0.1).is_err());
        assert!(sample_activity(&SamplerConfig::new(1.0, 1.0), 0.5).is_err());
        assert!(sample_activity(&SamplerConfig::new(2.0, 0.5), 0.5).is_err());
        assert!(sample_activity(&SamplerConfig::new(2.0, 5.0).with_upper_cutoff(Some(5.0)), 0.5).is_err());
    }

    #[test]
    fn truncated_draws_stay_in_support_and_increase() {
        let cfg = SamplerConfig::new(1.41, 2.0).with_upper_cutoff(Some(300.0));
        let inv = InverseCdf::new(&cfg).unwrap();
        let mut prev = 0.0;
        for k in 0..10_000 {
            let u = k as f64 / 10_000.0;
            let x = inv.continuous(u);
            assert!((2.0..=300.0).contains(&x));
            assert!(x > prev);
            prev = x;
        }
        assert!(inv.continuous(1.0 - 1e-16) <= 300.0);
    }

    #[test]
    fn pareto_mean_oracle() {
        let cfg = SamplerConfig::new(3.0, 1.0);
        let inv = InverseCdf::new(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let mean: f64 = (0..n).map(|_| inv.draw(rng.random())).sum::<f64>() / n as f64;
        assert!((mean - 2.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn ks_unbounded_and_truncated() {
        // 1% critical value for n = 1e5: 1.628 / sqrt(n)
        let n = 100_000;
        let crit = 1.628 / (n as f64).sqrt();
        for cfg in [
            SamplerConfig::new(1.58, 1.0),
            SamplerConfig::new(2.5, 4.0),
            SamplerConfig::new(1.41, 1.0).with_upper_cutoff(Some(200.0)),
        ] {
            let inv = InverseCdf::new(&cfg).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let xs: Vec<f64> = (0..n).map(|_| inv.draw(rng.random())).collect();
            if let Some(u) = cfg.upper_cutoff {
                assert!(xs.iter().all(|&x| x <= u));
            }
            let (c, b) = (cfg.lower_cutoff, cfg.beta);
            let d = match cfg.upper_cutoff {
                None => ks_distance(xs, |x| 1.0 - (x / c).powf(1.0 - b)),
                Some(u) => ks_distance(xs, |x| {
                    (1.0 - (x / c).powf(1.0 - b)) / (1.0 - (u / c).powf(1.0 - b))
                }),
            };
            assert!(d < crit, "KS {d} >= {crit} for {cfg:?}");
        }
    }

    #[test]
    fn one_user_day() {
        let cfg = SamplerConfig::new(1.5, 1.0).with_integerize(true);
        let d = synthesize_day(0, 1, &cfg, &mut day_rng(1, 0)).unwrap();
        assert_eq!(d.population, 1);
        assert!(d.total_activity >= 1.0);
        assert_eq!(d.histogram.bins().len(), 1);
        assert!(synthesize_day(0, 0, &cfg, &mut day_rng(1, 0)).is_err());
    }

    #[test]
    fn truncated_day_mean_tracks_theory() {
        let p = 10_000;
        let u = theory::cutoff_for_population(p as f64, 1.5).unwrap();
        let cfg = SamplerConfig::new(1.5, 1.0).with_upper_cutoff(Some(u));
        let d = synthesize_day(0, p, &cfg, &mut day_rng(3, 0)).unwrap();
        let m = theory::approx_moments(u, 1.5).unwrap();
        let ratio = (d.total_activity / d.population as f64) / (m.total_activity / m.population);
        assert!((0.5..2.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn days_are_deterministic() {
        let cfg = SamplerConfig::new(1.5, 1.0);
        let a = synthesize_day(4, 500, &cfg, &mut day_rng(9, 4)).unwrap();
        let b = synthesize_day(4, 500, &cfg, &mut day_rng(9, 4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn integerized_days_have_integer_levels() {
        let cfg = SamplerConfig::new(1.3, 1.0).with_integerize(true);
        let s = synthesize_series(&[50, 400, 3000], &cfg, Protocol::CoupledTruncation).unwrap();
        for (d, &p) in s.days.iter().zip(&s.population_schedule) {
            assert_eq!(d.population, p);
            assert!(d.histogram.is_integral());
            assert_eq!(d.total_activity.fract(), 0.0);
            assert!(d.histogram.min_level().unwrap() >= 1.0);
        }
    }

    #[test]
    fn series_shape_and_protocols() {
        let cfg = SamplerConfig::new(1.7, 1.0).with_seed(2);
        for protocol in [
            Protocol::CoupledTruncation,
            Protocol::FixedTruncation { upper_cutoff: 40.0 },
            Protocol::Unbounded,
        ] {
            let s = synthesize_series(&[10, 10, 10], &cfg, protocol).unwrap();
            assert_eq!(s.days.len(), 3);
            assert!(s.days.iter().all(|d| d.population == 10));
        }
        let fixed = synthesize_series(&[1000], &cfg, Protocol::FixedTruncation { upper_cutoff: 40.0 }).unwrap();
        assert!(fixed.days[0].f_max <= 40.0);
        assert!(synthesize_series(&[], &cfg, Protocol::Unbounded).is_err());
    }

    #[test]
    fn coupled_cutoff_for_one_thousand() {
        let u = day_cutoff(Protocol::CoupledTruncation, 1000, 1.5).unwrap().unwrap();
        assert_relative_eq!(u, 62.996_052_494_74, max_relative = 1e-10);
        let cfg = SamplerConfig::new(1.5, 1.0);
        let s = synthesize_series(&[1000], &cfg, Protocol::CoupledTruncation).unwrap();
        assert!(s.days[0].f_max <= u);
    }

    #[test]
    fn coupled_cutoff_below_lower_cutoff_fails_that_day() {
        let cfg = SamplerConfig::new(5.0, 10.0);
        let err = synthesize_series(&[1_000_000, 100], &cfg, Protocol::CoupledTruncation).unwrap_err();
        assert!(err.to_string().contains("day 1"), "{err}");
    }

    #[test]
    fn schedules() {
        let s = log_uniform_schedule(500, 1000, 100_000, 4).unwrap();
        assert_eq!(s, log_uniform_schedule(500, 1000, 100_000, 4).unwrap());
        assert!(s.iter().all(|&p| (1000..=100_000).contains(&p)));
        let spaced = log_spaced_schedule(3, 10, 1000);
        assert_eq!(spaced, vec![10, 100, 1000]);
        assert!(log_uniform_schedule(3, 0, 10, 0).is_err());
    }
}
