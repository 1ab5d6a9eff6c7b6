//! Continuous power-law maximum likelihood, used as an independent check on
//! the collapse regression.

use super::{BetaFit, BetaMethod};
use crate::error::{Error, Result};

const Z95: f64 = 1.959_963_984_540_054;

fn check_samples(samples: &[f64], x_min: f64) -> Result<()> {
    if !(x_min.is_finite() && x_min >= 1.0) {
        return Err(Error::domain(format!("x_min must be >= 1, got {x_min}")));
    }
    if let Some(bad) = samples.iter().find(|&&x| !(x >= x_min) || !x.is_finite()) {
        return Err(Error::domain(format!("sample {bad} lies below x_min = {x_min}")));
    }
    Ok(())
}

/// `beta = 1 + n / sum(ln(x / x_min))` for an untruncated power law on
/// `[x_min, ∞)`, with the asymptotic interval `beta ± 1.96 (beta - 1)/sqrt(n)`.
///
/// When every sample equals `x_min` the log-sum is zero and the estimate
/// diverges; that case is reported as [`Error::Domain`].
pub fn fit_beta_mle(samples: &[f64], x_min: f64) -> Result<BetaFit> {
    if samples.len() < 2 {
        return Err(Error::insufficient(format!("need at least 2 samples, got {}", samples.len())));
    }
    check_samples(samples, x_min)?;
    let log_sum: f64 = samples.iter().map(|&x| (x / x_min).ln()).sum();
    if log_sum <= 0.0 {
        return Err(Error::domain("all samples equal x_min; the estimate diverges"));
    }
    let n = samples.len() as f64;
    let beta = 1.0 + n / log_sum;
    let half = Z95 * (beta - 1.0) / n.sqrt();
    Ok(BetaFit {
        beta,
        ci95_beta: (beta - half, beta + half),
        adjusted_r2: None,
        method: BetaMethod::Mle,
        n_points_or_samples: samples.len(),
    })
}

/// Per-group sufficient statistics of a truncated fit.
struct Group {
    n: f64,
    log_sum: f64,
    /// `ln(upper / x_min)`
    span: f64,
}

/// `d/d beta` of `-ln Z` per sample, where `Z = ∫_{x_min}^{U} x^-beta dx`
/// in units of `x_min`, i.e. `E[ln(x / x_min)]` under the truncated law.
fn mean_log(alpha: f64, span: f64) -> f64 {
    // E[t] for density ∝ e^{-alpha t} on [0, span]
    let a = alpha * span;
    if a.abs() < 1e-8 {
        return span / 2.0;
    }
    1.0 / alpha - span / a.exp_m1()
}

/// Variance of `ln(x / x_min)` under the truncated law.
fn var_log(alpha: f64, span: f64) -> f64 {
    let a = alpha * span;
    if a.abs() < 1e-6 {
        return span * span / 12.0;
    }
    // 1/alpha^2 - span^2 e^a / (e^a - 1)^2
    let em1 = a.exp_m1();
    1.0 / (alpha * alpha) - span * span * (em1 + 1.0) / (em1 * em1)
}

/// Joint MLE of `beta` for several groups sharing one exponent, each drawn
/// from the power law truncated to `[x_min, upper]`. Typically each group is
/// one day with `upper` set to that day's maximum activity.
///
/// The log-likelihood is concave in `beta`, so the score root is found by
/// bisection; the interval uses the observed Fisher information.
pub fn fit_beta_mle_truncated(groups: &[(&[f64], f64)], x_min: f64) -> Result<BetaFit> {
    let mut stats = Vec::with_capacity(groups.len());
    let mut total = 0usize;
    for &(samples, upper) in groups {
        check_samples(samples, x_min)?;
        if let Some(bad) = samples.iter().find(|&&x| x > upper) {
            return Err(Error::domain(format!("sample {bad} exceeds its upper cutoff {upper}")));
        }
        if samples.is_empty() {
            continue;
        }
        total += samples.len();
        stats.push(Group {
            n: samples.len() as f64,
            log_sum: samples.iter().map(|&x| (x / x_min).ln()).sum(),
            span: (upper / x_min).ln(),
        });
    }
    if total < 2 {
        return Err(Error::insufficient(format!("need at least 2 samples, got {total}")));
    }
    if stats.iter().all(|g| g.span == 0.0) {
        return Err(Error::domain("every group has upper == x_min; the estimate is undefined"));
    }

    // score(alpha) = sum n * E_alpha[t] - sum t, decreasing in alpha = beta - 1
    let score = |alpha: f64| -> f64 { stats.iter().map(|g| g.n * mean_log(alpha, g.span) - g.log_sum).sum() };
    let (mut lo, mut hi) = (1e-9, 1.0);
    if score(lo) < 0.0 {
        return Err(Error::domain("likelihood is maximised at beta <= 1"));
    }
    while score(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::domain("likelihood has no finite maximiser"));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if score(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    let alpha = 0.5 * (lo + hi);
    let info: f64 = stats.iter().map(|g| g.n * var_log(alpha, g.span)).sum();
    let half = Z95 / info.sqrt();
    let beta = 1.0 + alpha;
    Ok(BetaFit {
        beta,
        ci95_beta: (beta - half, beta + half),
        adjusted_r2: None,
        method: BetaMethod::TruncatedMle,
        n_points_or_samples: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{InverseCdf, SamplerConfig};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn draws(cfg: &SamplerConfig, n: usize, seed: u64) -> Vec<f64> {
        let inv = InverseCdf::new(cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| inv.draw(rng.random())).collect()
    }

    #[test]
    fn closed_form_two_samples() {
        let e = std::f64::consts::E;
        let fit = fit_beta_mle(&[3.0 * e, 3.0 * e], 3.0).unwrap();
        assert_relative_eq!(fit.beta, 2.0, epsilon = 1e-12);
        assert_eq!(fit.method, BetaMethod::Mle);
        assert!(fit.adjusted_r2.is_none());
    }

    #[test]
    fn recovers_unbounded_beta() {
        let xs = draws(&SamplerConfig::new(1.58, 1.0), 100_000, 1);
        let fit = fit_beta_mle(&xs, 1.0).unwrap();
        assert!((fit.beta - 1.58).abs() < 0.01, "{}", fit.beta);
        assert!(fit.ci95_beta.0 < 1.58 && 1.58 < fit.ci95_beta.1);
    }

    #[test]
    fn error_paths() {
        assert!(matches!(fit_beta_mle(&[2.0], 1.0), Err(Error::InsufficientData(_))));
        assert!(matches!(fit_beta_mle(&[2.0, 0.5], 1.0), Err(Error::Domain(_))));
        assert!(matches!(fit_beta_mle(&[4.0, 4.0, 4.0], 4.0), Err(Error::Domain(_))));
        assert!(fit_beta_mle(&[2.0, 3.0], 0.5).is_err());
    }

    #[test]
    fn truncated_mle_recovers_beta_where_plain_mle_is_biased() {
        let cfg = SamplerConfig::new(1.3, 1.0).with_upper_cutoff(Some(300.0));
        let xs = draws(&cfg, 50_000, 2);
        let plain = fit_beta_mle(&xs, 1.0).unwrap();
        let trunc = fit_beta_mle_truncated(&[(&xs, 300.0)], 1.0).unwrap();
        assert!((trunc.beta - 1.3).abs() < 0.02, "{}", trunc.beta);
        assert!(plain.beta - 1.3 > 0.05, "{}", plain.beta);
        assert!(trunc.ci95_beta.0 < 1.3 && 1.3 < trunc.ci95_beta.1);
    }

    #[test]
    fn truncated_mle_with_many_groups() {
        let mut all = Vec::new();
        for (i, &u) in [50.0, 400.0, 3000.0].iter().enumerate() {
            let cfg = SamplerConfig::new(1.58, 1.0).with_upper_cutoff(Some(u));
            let xs = draws(&cfg, 20_000, 10 + i as u64);
            all.push((xs, u));
        }
        let groups: Vec<(&[f64], f64)> = all.iter().map(|(x, u)| (x.as_slice(), *u)).collect();
        let fit = fit_beta_mle_truncated(&groups, 1.0).unwrap();
        assert!((fit.beta - 1.58).abs() < 0.02, "{}", fit.beta);
    }

    #[test]
    fn truncated_moments_match_quadrature() {
        // E[t] and Var[t] for density ∝ e^{-a t} on [0, s] by midpoint rule
        for &(a, s) in &[(0.41, 6.0), (0.58, 2.0), (1.5, 9.0), (1e-9, 3.0)] {
            let n = 200_000;
            let h = s / n as f64;
            let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
            for i in 0..n {
                let t = (i as f64 + 0.5) * h;
                let w = (-a * t).exp() * h;
                z += w;
                m1 += w * t;
                m2 += w * t * t;
            }
            let mean = m1 / z;
            assert_relative_eq!(mean_log(a, s), mean, max_relative = 1e-6);
            assert_relative_eq!(var_log(a, s), m2 / z - mean * mean, max_relative = 1e-5);
        }
    }

    #[test]
    fn truncated_error_paths() {
        assert!(fit_beta_mle_truncated(&[(&[2.0, 500.0], 100.0)], 1.0).is_err());
        assert!(fit_beta_mle_truncated(&[(&[2.0], 100.0)], 1.0).is_err());
        assert!(fit_beta_mle_truncated(&[(&[1.0, 1.0], 1.0)], 1.0).is_err());
    }
}
