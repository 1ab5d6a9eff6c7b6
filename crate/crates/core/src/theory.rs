//! Closed-form consequences of a time-invariant power-law activity
//! distribution.
//!
//! A day with maximum activity `f_max` is modelled by the density
//! `n(f) = (f / f_max)^(-beta)` on `[1, f_max]`, normalised so that exactly
//! one user sits at the maximum (`n(f_max) = 1`). Integrating gives the
//! expected population `P = ∫ n(f) df` and total activity `F = ∫ f n(f) df`;
//! eliminating `f_max` between the two yields `F ~ P^gamma(beta)`.
//!
//! An alternative normalisation puts one user in the tail,
//! `∫_{f_max}^∞ C f^(-beta) df = 1`, giving `C = (beta - 1) f_max^(beta - 1)`
//! instead of `f_max^beta`. That convention changes the cutoff scaling to
//! `f_max ~ P^(1/(beta-1))` and is not used anywhere in this crate.

use crate::error::{Error, Result};

/// Exponents of one system: activity heterogeneity `beta`, growth `gamma`
/// and per-capita growth `theta = gamma - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponents {
    pub beta: f64,
    pub gamma: f64,
    pub theta: f64,
}

impl Exponents {
    pub fn from_beta(beta: f64) -> Result<Self> {
        let gamma = gamma_of_beta(beta)?;
        Ok(Exponents {
            beta,
            gamma,
            theta: theta_of_gamma(gamma),
        })
    }
}

/// Expected population and total activity of one day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentPair {
    pub population: f64,
    pub total_activity: f64,
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta > 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("beta must be finite and > 1, got {beta}")))
    }
}

fn check_cutoff(f_max: f64) -> Result<()> {
    if f_max.is_finite() && f_max >= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("f_max must be finite and >= 1, got {f_max}")))
    }
}

/// Growth exponent implied by a time-invariant power law with exponent `beta`.
///
/// `2 / beta` for `1 < beta < 2`, `1` for `beta >= 2`.
pub fn gamma_of_beta(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(if beta < 2.0 { 2.0 / beta } else { 1.0 })
}

/// Exponent of average activity `F / P ~ P^theta`.
pub fn theta_of_gamma(gamma: f64) -> f64 {
    gamma - 1.0
}

/// Growth exponent of a sum of `P` iid *untruncated* power-law activities.
///
/// For `1 < beta < 2` the sum is dominated by its largest term and grows as
/// `P^(1/(beta-1))`; with a finite mean (`beta >= 2`) it is linear. This is
/// what literal unbounded sampling produces, and it differs from
/// [`gamma_of_beta`] everywhere below `beta = 2`.
pub fn unbounded_sum_exponent(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(if beta < 2.0 { 1.0 / (beta - 1.0) } else { 1.0 })
}

/// `(e^(a l) - 1) / a`, continuous through `a = 0` where it equals `l`.
fn expm1_ratio(a: f64, l: f64) -> f64 {
    if a == 0.0 {
        l
    } else {
        (a * l).exp_m1() / a
    }
}

/// Exact `P` and `F` integrals of `(f / f_max)^(-beta)` over `[1, f_max]`.
///
/// `P = (f_max^beta - f_max) / (beta - 1)` and
/// `F = (f_max^2 - f_max^beta) / (2 - beta)`; at `beta = 2` the latter takes
/// its limit `f_max^2 ln f_max`. Both are evaluated through `expm1` so the
/// neighbourhood of `beta = 2` loses no precision.
pub fn exact_moments(f_max: f64, beta: f64) -> Result<MomentPair> {
    check_cutoff(f_max)?;
    check_beta(beta)?;
    let l = f_max.ln();
    let population = f_max * expm1_ratio(beta - 1.0, l);
    let total_activity = if beta == 2.0 {
        f_max * f_max * l
    } else {
        // (f_max^2 - f_max^beta)/(2-beta) = f_max^beta * expm1((2-beta) l)/(2-beta)
        f_max.powf(beta) * expm1_ratio(2.0 - beta, l)
    };
    Ok(MomentPair {
        population,
        total_activity,
    })
}

/// Large-`f_max` approximations of [`exact_moments`].
///
/// | regime        | `P`                      | `F`                      |
/// |---------------|--------------------------|--------------------------|
/// | `1 < beta < 2`| `f_max^beta / (beta-1)`  | `f_max^2 / (2-beta)`     |
/// | `beta = 2`    | `f_max^2`                | `f_max^2`                |
/// | `beta > 2`    | `f_max^beta / (beta-1)`  | `f_max^beta / (beta-2)`  |
///
/// The relative error against the exact integrals is `f_max^-(beta-1)` for
/// `P` and `f_max^-|2-beta|` for `F` (and `1 - 1/ln f_max` for `F` at
/// `beta = 2`), so the approximation is poor close to `beta = 1` and
/// `beta = 2`.
pub fn approx_moments(f_max: f64, beta: f64) -> Result<MomentPair> {
    check_cutoff(f_max)?;
    check_beta(beta)?;
    let scale = f_max.powf(beta);
    let population = if beta == 2.0 {
        f_max * f_max
    } else {
        scale / (beta - 1.0)
    };
    let total_activity = if beta < 2.0 {
        f_max * f_max / (2.0 - beta)
    } else if beta == 2.0 {
        f_max * f_max
    } else {
        scale / (beta - 2.0)
    };
    Ok(MomentPair {
        population,
        total_activity,
    })
}

/// Cutoff `f_max = ((beta - 1) P)^(1/beta)` at which the approximate
/// population equals `population`.
pub fn cutoff_for_population(population: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if !(population.is_finite() && population > 0.0) {
        return Err(Error::domain(format!(
            "population must be finite and > 0, got {population}"
        )));
    }
    let f_max = ((beta - 1.0) * population).powf(1.0 / beta);
    if f_max < 1.0 {
        return Err(Error::domain(format!(
            "population {population} too small for beta {beta}: cutoff {f_max} < 1"
        )));
    }
    Ok(f_max)
}
