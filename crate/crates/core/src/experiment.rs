//! End-to-end reproductions: the `(C, beta)` growth sweep, theory-vs-fit
//! comparison, and collapse-quality checks.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::collapse::{rescale_series, score_hypothesis};
use crate::estimators::{fit_gamma_tls, pool_and_fit_beta, pooled_curve, BetaFit, CollapseOptions, TlsFit, TlsOptions};
use crate::ingest::DailySnapshot;
use crate::sampler::{log_uniform_schedule, synthesize_series, Protocol, SamplerConfig};
use crate::seed;
use crate::theory::gamma_of_beta;

/// `n` exponents evenly spaced in `1/beta` over `[0.1, 1)`, i.e. `beta` in
/// `(1, 10]`, listed with increasing `beta`.
pub fn inverse_uniform_beta_grid(n: usize) -> Vec<f64> {
    let mut betas: Vec<f64> = (0..n).map(|k| 1.0 / (0.1 + 0.9 * k as f64 / n as f64)).collect();
    betas.reverse();
    betas
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub c_values: Vec<f64>,
    pub beta_values: Vec<f64>,
    pub days_per_cell: usize,
    pub population_range: (u64, u64),
    pub protocol: Protocol,
    pub bootstrap_reps: usize,
    pub seed: u64,
}

impl Default for SweepConfig {
    /// 10 x 40 = 400 cells, 100 days each with `P` in `[10^2, 10^4]`.
    fn default() -> Self {
        SweepConfig {
            c_values: (1..=10).map(f64::from).collect(),
            beta_values: inverse_uniform_beta_grid(40),
            days_per_cell: 100,
            population_range: (100, 10_000),
            protocol: Protocol::CoupledTruncation,
            bootstrap_reps: 200,
            seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.c_values.is_empty() || self.beta_values.is_empty() {
            return Err(Error::domain("sweep grid is empty"));
        }
        let (lo, hi) = self.population_range;
        if lo < 10 || hi <= lo {
            return Err(Error::domain(format!("population range [{lo}, {hi}] must satisfy 10 <= P_min < P_max")));
        }
        if self.days_per_cell < 10 {
            return Err(Error::domain(format!("days_per_cell must be >= 10, got {}", self.days_per_cell)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFit {
    pub gamma_fit: f64,
    pub ci95_gamma: (f64, f64),
    /// Adjusted R² of the growth line.
    pub fit_quality: f64,
}

/// One `(C, beta)` point of the sweep. A failed cell carries its error
/// message instead of a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub c: f64,
    pub beta: f64,
    pub inverse_beta: f64,
    pub gamma_theory: f64,
    pub result: Result<CellFit, String>,
}

/// Seed of the cell at `(c, beta)`; depends only on the values, not the
/// cell's position in the grid.
pub fn cell_seed(seed: u64, c: f64, beta: f64) -> u64 {
    seed::derive(seed::derive(seed, c.to_bits()), beta.to_bits())
}

/// Simulates and fits a single cell.
pub fn run_cell(c: f64, beta: f64, cfg: &SweepConfig) -> Result<CellFit> {
    let s = cell_seed(cfg.seed, c, beta);
    let (lo, hi) = cfg.population_range;
    let schedule = log_uniform_schedule(cfg.days_per_cell, lo, hi, s)?;
    let sampler = SamplerConfig::new(beta, c).with_seed(s);
    let series = synthesize_series(&schedule, &sampler, cfg.protocol)?;
    let fit = fit_gamma_tls(
        &series.growth_points(),
        &TlsOptions {
            bootstrap_reps: cfg.bootstrap_reps,
            seed: seed::derive(s, 1),
        },
    )?;
    Ok(CellFit {
        gamma_fit: fit.slope,
        ci95_gamma: fit.ci95_slope,
        fit_quality: fit.adjusted_r2,
    })
}

/// Runs every `(C, beta)` cell in parallel, ordered by `C` then `beta`.
/// Cell failures are recorded, not propagated.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepCell>> {
    cfg.validate()?;
    let grid: Vec<(f64, f64)> = cfg
        .c_values
        .iter()
        .flat_map(|&c| cfg.beta_values.iter().map(move |&b| (c, b)))
        .collect();
    Ok(grid
        .into_par_iter()
        .map(|(c, beta)| {
            let result = gamma_of_beta(beta).and_then(|g| run_cell(c, beta, cfg).map(|f| (g, f)));
            match result {
                Ok((gamma_theory, fit)) => SweepCell {
                    c,
                    beta,
                    inverse_beta: 1.0 / beta,
                    gamma_theory,
                    result: Ok(fit),
                },
                Err(e) => SweepCell {
                    c,
                    beta,
                    inverse_beta: 1.0 / beta,
                    gamma_theory: gamma_of_beta(beta).unwrap_or(f64::NAN),
                    result: Err(e.to_string()),
                },
            }
        })
        .collect())
}

/// Estimated `beta`, the growth exponent it implies, and the fitted one.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthPrediction {
    pub beta_fit: BetaFit,
    /// `gamma' = gamma_of_beta(beta_hat)`.
    pub gamma_theory: f64,
    pub gamma_fit: TlsFit,
    /// `gamma_theory` lies inside the fitted 95% interval.
    pub consistent: bool,
}

impl GrowthPrediction {
    pub fn is_consistent(&self) -> bool {
        let (lo, hi) = self.gamma_fit.ci95_slope;
        lo <= self.gamma_theory && self.gamma_theory <= hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PredictionOptions {
    pub collapse: CollapseOptions,
    pub tls: TlsOptions,
}

pub fn compare_prediction(series: &[DailySnapshot], opts: &PredictionOptions) -> Result<GrowthPrediction> {
    if series.len() < 3 {
        return Err(Error::insufficient(format!("need at least 3 days, got {}", series.len())));
    }
    let beta_fit = pool_and_fit_beta(&rescale_series(series)?, &opts.collapse)?;
    let points: Vec<(f64, f64)> = series.iter().map(|d| (d.population as f64, d.total_activity)).collect();
    let gamma_fit = fit_gamma_tls(&points, &opts.tls)?;
    let gamma_theory = gamma_of_beta(beta_fit.beta)?;
    let mut out = GrowthPrediction {
        beta_fit,
        gamma_theory,
        gamma_fit,
        consistent: false,
    };
    out.consistent = out.is_consistent();
    Ok(out)
}

/// Collapse quality of a series.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseReport {
    /// Adjusted R² of the free fit, or of the supplied hypothesis.
    pub adjusted_r2: f64,
    pub beta_fit: BetaFit,
    pub n_days: usize,
}

/// Rescales and pools the days, fits `beta`, and scores either the fit or
/// `beta_hypothesis` against the pooled curve.
pub fn collapse_check(series: &[DailySnapshot], beta_hypothesis: Option<f64>, opts: &CollapseOptions) -> Result<CollapseReport> {
    if series.len() < 2 {
        return Err(Error::insufficient(format!("need at least 2 days, got {}", series.len())));
    }
    let rescaled = rescale_series(series)?;
    let beta_fit = pool_and_fit_beta(&rescaled, opts)?;
    let adjusted_r2 = match beta_hypothesis {
        None => beta_fit.adjusted_r2.expect("regression fits carry R²"),
        Some(b) => score_hypothesis(&pooled_curve(&rescaled, opts)?, b)?,
    };
    Ok(CollapseReport {
        adjusted_r2,
        beta_fit,
        n_days: series.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_four_hundred_cells() {
        let cfg = SweepConfig::default();
        assert_eq!(cfg.c_values.len() * cfg.beta_values.len(), 400);
        let g = &cfg.beta_values;
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g[0] > 1.0 && (g[39] - 10.0).abs() < 1e-12);
        let inv: Vec<f64> = g.iter().rev().map(|b| 1.0 / b).collect();
        let steps: Vec<f64> = inv.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(steps.iter().all(|s| (s - 0.0225).abs() < 1e-12));
    }

    #[test]
    fn validation() {
        let mut cfg = SweepConfig::default();
        cfg.beta_values.clear();
        assert!(run_sweep(&cfg).is_err());
        let cfg = SweepConfig { population_range: (5, 100), ..SweepConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = SweepConfig { days_per_cell: 9, ..SweepConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn degenerate_cell_does_not_abort_sweep() {
        let cfg = SweepConfig {
            c_values: vec![1.0, 10.0],
            beta_values: vec![1.5, 9.0],
            days_per_cell: 10,
            bootstrap_reps: 20,
            ..SweepConfig::default()
        };
        let cells = run_sweep(&cfg).unwrap();
        assert_eq!(cells.len(), 4);
        // C = 10, beta = 9 at P = 100: cutoff (8 * 100)^(1/9) ~ 2.1 < 10
        assert!(cells[3].result.is_err());
        assert!(cells[0].result.is_ok());
        assert_eq!(cells[3].gamma_theory, 1.0);
    }

    #[test]
    fn cells_do_not_depend_on_grid_position() {
        let base = SweepConfig { days_per_cell: 20, bootstrap_reps: 10, ..SweepConfig::default() };
        let a = run_sweep(&SweepConfig { c_values: vec![2.0], beta_values: vec![1.7, 3.0], ..base.clone() }).unwrap();
        let b = run_sweep(&SweepConfig { c_values: vec![2.0], beta_values: vec![3.0], ..base }).unwrap();
        assert_eq!(a[1], b[0]);
    }

    #[test]
    fn two_day_series_is_rejected() {
        let cfg = SamplerConfig::new(1.5, 1.0);
        let s = synthesize_series(&[1000, 2000], &cfg, Protocol::CoupledTruncation).unwrap();
        assert!(matches!(compare_prediction(&s.days, &PredictionOptions::default()), Err(Error::InsufficientData(_))));
        assert!(collapse_check(&s.days[..1], None, &CollapseOptions::default()).is_err());
    }
}
