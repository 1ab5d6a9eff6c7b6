//! Orthogonal (total least squares) regression of `log10 F` on `log10 P`.

use super::bootstrap::{bracket, percentile_ci};
use super::adjusted_r2;
use crate::error::{Error, Result};

/// Fitted growth line `log10 F = slope * log10 P + intercept`.
#[derive(Debug, Clone, PartialEq)]
pub struct TlsFit {
    /// Growth exponent `gamma`.
    pub slope: f64,
    /// Intercept in base-10 log space.
    pub intercept: f64,
    pub ci95_slope: (f64, f64),
    /// From vertical residuals about the orthogonal line, one predictor.
    pub adjusted_r2: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TlsOptions {
    /// Bootstrap replicates over days; 0 gives a zero-width interval.
    pub bootstrap_reps: usize,
    pub seed: u64,
}

impl Default for TlsOptions {
    fn default() -> Self {
        TlsOptions {
            bootstrap_reps: 1000,
            seed: 0,
        }
    }
}

struct Moments {
    mean_x: f64,
    mean_y: f64,
    sxx: f64,
    syy: f64,
    sxy: f64,
}

fn moments(xs: &[f64], ys: &[f64]) -> Moments {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mean_x, y - mean_y);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    Moments {
        mean_x,
        mean_y,
        sxx,
        syy,
        sxy,
    }
}

fn check_xy(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::domain("x and y lengths differ"));
    }
    if xs.len() < 2 {
        return Err(Error::insufficient(format!("need at least 2 points, got {}", xs.len())));
    }
    Ok(())
}

/// `(slope, intercept)` of the line minimising perpendicular distances.
///
/// The slope is the direction of the principal eigenvector of the 2x2
/// scatter matrix and shares the sign of the covariance.
pub fn tls_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    check_xy(xs, ys)?;
    let m = moments(xs, ys);
    if m.sxx == 0.0 {
        return Err(Error::insufficient("x values are all equal"));
    }
    let slope = if m.sxy == 0.0 {
        if m.syy > m.sxx {
            return Err(Error::insufficient("orthogonal line is vertical"));
        }
        0.0
    } else {
        let d = m.syy - m.sxx;
        let root = d.hypot(2.0 * m.sxy);
        // pick the cancellation-free form of the same root
        if d >= 0.0 {
            (d + root) / (2.0 * m.sxy)
        } else {
            2.0 * m.sxy / (root - d)
        }
    };
    Ok((slope, m.mean_y - slope * m.mean_x))
}

/// Ordinary least squares `(slope, intercept)` of `y` on `x`.
pub fn ols_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    check_xy(xs, ys)?;
    let m = moments(xs, ys);
    if m.sxx == 0.0 {
        return Err(Error::insufficient("x values are all equal"));
    }
    let slope = m.sxy / m.sxx;
    Ok((slope, m.mean_y - slope * m.mean_x))
}

fn vertical_adjusted_r2(xs: &[f64], ys: &[f64], slope: f64, intercept: f64) -> f64 {
    let mean_y = ys.iter().sum::<f64>() / ys.len() as f64;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        ss_res += (y - (slope * x + intercept)).powi(2);
        ss_tot += (y - mean_y).powi(2);
    }
    adjusted_r2(ss_res, ss_tot, xs.len())
}

/// Fits `F ~ P^gamma` to `(P, F)` pairs by orthogonal regression in
/// base-10 log space, with a bootstrap-over-days 95% interval.
pub fn fit_gamma_tls(points: &[(f64, f64)], opts: &TlsOptions) -> Result<TlsFit> {
    if points.len() < 3 {
        return Err(Error::insufficient(format!("need at least 3 days, got {}", points.len())));
    }
    if let Some(&(p, f)) = points.iter().find(|&&(p, f)| !(p >= 1.0 && f >= 1.0) || !p.is_finite() || !f.is_finite()) {
        return Err(Error::domain(format!("P and F must be finite and >= 1, got P = {p}, F = {f}")));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(p, f)| (p.log10(), f.log10())).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = logs.iter().copied().unzip();
    let (slope, intercept) = tls_line(&xs, &ys)?;
    let r2 = vertical_adjusted_r2(&xs, &ys, slope, intercept);

    let ci = percentile_ci(&logs, opts.bootstrap_reps, opts.seed, |sample| {
        let (bx, by): (Vec<f64>, Vec<f64>) = sample.iter().copied().unzip();
        tls_line(&bx, &by).ok().map(|(s, _)| s)
    });
    Ok(TlsFit {
        slope,
        intercept,
        ci95_slope: bracket(ci, slope),
        adjusted_r2: r2,
        n_points: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn collinear(slope: f64, intercept: f64, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let lp = 2.0 + 3.0 * i as f64 / (n - 1) as f64;
                (10f64.powf(lp), 10f64.powf(slope * lp + intercept))
            })
            .collect()
    }

    #[test]
    fn noiseless_line_is_exact() {
        let fit = fit_gamma_tls(&collinear(1.3, 0.2, 10), &TlsOptions::default()).unwrap();
        assert!((fit.slope - 1.3).abs() < 1e-9);
        assert!((fit.intercept - 0.2).abs() < 1e-9);
        assert!((fit.adjusted_r2 - 1.0).abs() < 1e-9);
        assert!(fit.ci95_slope.0 <= fit.slope && fit.slope <= fit.ci95_slope.1);
        assert!(fit.ci95_slope.1 - fit.ci95_slope.0 < 1e-9);
    }

    #[test]
    fn three_point_minimum_has_zero_width_ci() {
        let fit = fit_gamma_tls(&collinear(1.39, 0.0, 3), &TlsOptions::default()).unwrap();
        assert!((fit.slope - 1.39).abs() < 1e-9);
        assert!(fit.ci95_slope.1 - fit.ci95_slope.0 < 1e-9);
    }

    #[test]
    fn error_paths() {
        let opts = TlsOptions::default();
        assert!(matches!(fit_gamma_tls(&collinear(1.1, 0.0, 2), &opts), Err(Error::InsufficientData(_))));
        assert!(matches!(
            fit_gamma_tls(&[(0.5, 2.0), (10.0, 20.0), (100.0, 300.0)], &opts),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            fit_gamma_tls(&[(10.0, 0.0), (10.0, 20.0), (100.0, 300.0)], &opts),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            fit_gamma_tls(&[(10.0, 2.0), (10.0, 20.0), (10.0, 300.0)], &opts),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn negative_and_flat_slopes() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let (s, b) = tls_line(&xs, &[3.0, 1.0, -1.0, -3.0]).unwrap();
        assert_relative_eq!(s, -2.0, epsilon = 1e-12);
        assert_relative_eq!(b, 3.0, epsilon = 1e-12);
        let (s, _) = tls_line(&xs, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn tls_beats_ols_under_isotropic_noise() {
        // Errors of equal variance on both axes attenuate OLS towards zero.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut wins = 0;
        let trials = 50;
        for _ in 0..trials {
            let n = 200;
            let mut xs = Vec::with_capacity(n);
            let mut ys = Vec::with_capacity(n);
            for i in 0..n {
                let t = 3.0 * i as f64 / n as f64;
                let noise = |rng: &mut ChaCha8Rng| 0.3 * (rng.random::<f64>() - 0.5) * 12f64.sqrt();
                xs.push(t + noise(&mut rng));
                ys.push(1.3 * t + 0.2 + noise(&mut rng));
            }
            let (tls, _) = tls_line(&xs, &ys).unwrap();
            let (ols, _) = ols_line(&xs, &ys).unwrap();
            if (tls - 1.3).abs() < (ols - 1.3).abs() {
                wins += 1;
            }
        }
        assert!(wins >= 45, "TLS closer in only {wins}/{trials} trials");
    }

    #[test]
    fn bootstrap_is_seed_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts: Vec<(f64, f64)> = (0..60)
            .map(|i| {
                let p = 10f64.powf(3.0 + 2.0 * i as f64 / 59.0);
                (p, p.powf(1.2) * (1.0 + 0.3 * rng.random::<f64>()))
            })
            .collect();
        let opts = TlsOptions { bootstrap_reps: 400, seed: 17 };
        let a = fit_gamma_tls(&pts, &opts).unwrap();
        let b = fit_gamma_tls(&pts, &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.ci95_slope.0 < a.slope && a.slope < a.ci95_slope.1);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn noisy_points() -> impl Strategy<Value = Vec<(f64, f64)>> {
            (prop::collection::vec((0.0f64..5.0, -0.3f64..0.3), 3..40), 0.5f64..2.0).prop_map(|(v, g)| {
                v.into_iter()
                    .map(|(lp, e)| (10f64.powf(lp), 10f64.powf(g * lp + e + 0.5)))
                    .collect()
            })
        }

        proptest! {
            #[test]
            fn scale_equivariance(pts in noisy_points(), lk in -2.0f64..2.0) {
                let opts = TlsOptions { bootstrap_reps: 0, seed: 0 };
                let Ok(a) = fit_gamma_tls(&pts, &opts) else { return Ok(()) };
                let k = 10f64.powf(lk);
                let scaled: Vec<_> = pts.iter().map(|&(p, f)| (p, f * k)).collect();
                prop_assume!(scaled.iter().all(|&(_, f)| f >= 1.0));
                let b = fit_gamma_tls(&scaled, &opts).unwrap();
                prop_assert!((a.slope - b.slope).abs() < 1e-9 * a.slope.abs().max(1.0));
                prop_assert!((b.intercept - a.intercept - lk).abs() < 1e-9);
            }

            #[test]
            fn log_base_invariance(pts in noisy_points()) {
                let (x10, y10): (Vec<f64>, Vec<f64>) = pts.iter().map(|&(p, f)| (p.log10(), f.log10())).unzip();
                let (xe, ye): (Vec<f64>, Vec<f64>) = pts.iter().map(|&(p, f)| (p.ln(), f.ln())).unzip();
                let Ok((s10, _)) = tls_line(&x10, &y10) else { return Ok(()) };
                let (se, _) = tls_line(&xe, &ye).unwrap();
                prop_assert!((s10 - se).abs() <= 1e-12 * s10.abs().max(1.0));
            }

            #[test]
            fn swapping_axes_inverts_collinear_slope(g in 0.2f64..5.0, b in -1.0f64..1.0, n in 3usize..30) {
                let xs: Vec<f64> = (0..n).map(|i| i as f64 * 0.37).collect();
                let ys: Vec<f64> = xs.iter().map(|x| g * x + b).collect();
                let (s, _) = tls_line(&xs, &ys).unwrap();
                let (t, _) = tls_line(&ys, &xs).unwrap();
                prop_assert!((s * t - 1.0).abs() < 1e-12);
            }
        }
    }
}
