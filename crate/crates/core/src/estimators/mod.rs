//! Fitting machinery for the growth exponent `gamma` and the heterogeneity
//! exponent `beta`.

pub mod bootstrap;
pub mod collapse;
pub mod mle;
pub mod tls;

pub use collapse::{pool_and_fit_beta, pooled_curve, rescale_histogram, CollapseOptions, DayWeighting, RescaledHistogram};
pub use mle::{fit_beta_mle, fit_beta_mle_truncated};
pub use tls::{fit_gamma_tls, ols_line, tls_line, TlsFit, TlsOptions};

/// How a [`BetaFit`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaMethod {
    CollapseRegression,
    Mle,
    TruncatedMle,
}

impl std::fmt::Display for BetaMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BetaMethod::CollapseRegression => "collapse-regression",
            BetaMethod::Mle => "mle",
            BetaMethod::TruncatedMle => "truncated-mle",
        })
    }
}

/// Estimate of the activity exponent with a 95% interval.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaFit {
    pub beta: f64,
    pub ci95_beta: (f64, f64),
    /// Adjusted R² of the regression; `None` for likelihood fits.
    pub adjusted_r2: Option<f64>,
    pub method: BetaMethod,
    /// Bins used by a regression, or samples used by a likelihood fit.
    pub n_points_or_samples: usize,
}

/// Linear-interpolated percentile (`q` in `[0, 1]`) of sorted data.
pub(crate) fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// `1 - (1 - r2)(n - 1)/(n - 2)` for a single-predictor fit.
pub(crate) fn adjusted_r2(ss_res: f64, ss_tot: f64, n: usize) -> f64 {
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };
    1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n as f64 - 2.0)
}
