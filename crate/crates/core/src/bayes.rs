//! Posterior of the correlation ρ under a uniform prior on `[-1, 1]`, given
//! one standardized bivariate observation, and the Bayes factor for `ρ = 0`.
//!
//! The marginal density of the observation is the closed form
//! `½(1 - Φ(‖x‖∞))`, so the posterior is the explicit ratio
//! `½ f(x | ρ) / f(x)`. Evaluation is done in log space so that points far
//! in the tails do not underflow to `0/0`.

use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use serde::Serialize;

use crate::density::{self, Correlation, DensityError, Point2};
use crate::mixture;
use crate::quadrature::{self, IntegrandSpec, QuadratureError, QuadratureResult};
use crate::specfun;

pub const MIN_GRID_SIZE: usize = 16;

/// Tolerance for the normalization integral of a posterior curve.
const NORMALIZATION_TOL: f64 = 1e-12;

const LN_2PI: f64 = 1.837_877_066_409_345_483_560_659_472_811_235_3;

/// `ln f(x) = ln ½ + ln(1 - Φ(‖x‖∞))`
fn log_marginal(x: Point2) -> f64 {
    -LN_2 + specfun::log_std_normal_sf(x.max_norm())
}

/// `π(ρ | x) = ½ f(x | ρ) / f(x)`.
pub fn posterior_rho_density(x: Point2, rho: Correlation) -> Result<f64, DensityError> {
    let g = density::exponent_g(x, rho)?;
    let r = rho.value();
    let log_one_minus_sq = ((1.0 - r) * (1.0 + r)).ln();
    Ok((-LN_2 - LN_2PI - 0.5 * log_one_minus_sq - g - log_marginal(x)).exp())
}

/// `f(x | ρ = 0) / f(x)`.
pub fn bayes_factor_rho0(x: Point2) -> f64 {
    let log_null = -LN_2PI - 0.5 * (x.x1 * x.x1 + x.x2 * x.x2);
    (log_null - log_marginal(x)).exp()
}

/// `∫_{-1}^{1} π(ρ | x) dρ`, taken in `θ` with `ρ = sin θ`.
pub fn posterior_normalization(x: Point2, tol: f64) -> Result<QuadratureResult, DensityError> {
    let log_norm = (4.0 * PI).ln() + log_marginal(x);
    let integrand = |theta: f64| (-mixture::exponent_at_angle(x, theta) - log_norm).exp();
    Ok(quadrature::integrate(
        &IntegrandSpec::finite(integrand, -FRAC_PI_2, FRAC_PI_2),
        tol,
    )?)
}

/// Posterior density on a Chebyshev grid in `(-1, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorCurve {
    pub x1: f64,
    pub x2: f64,
    pub rho_grid: Vec<f64>,
    pub density_values: Vec<f64>,
    /// Quadrature of the posterior over `(-1, 1)` minus one.
    pub normalization_residual: f64,
    pub normalization_converged: bool,
}

/// Ascending Chebyshev nodes `-cos((2i + 1)π / 2n)`, all strictly inside
/// `(-1, 1)` and clustered toward the ends.
pub fn chebyshev_grid(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| -((2 * i + 1) as f64 * PI / (2 * n) as f64).cos())
        .collect()
}

pub fn posterior_curve(x: Point2, grid_size: usize) -> Result<PosteriorCurve, DensityError> {
    if grid_size < MIN_GRID_SIZE {
        return Err(DensityError::InvalidArgument(format!(
            "grid size {grid_size} is below the minimum {MIN_GRID_SIZE}"
        )));
    }
    let rho_grid = chebyshev_grid(grid_size);
    let density_values = rho_grid
        .iter()
        .map(|&r| posterior_rho_density(x, Correlation::new(r)?))
        .collect::<Result<Vec<_>, _>>()?;

    let (normalization_residual, normalization_converged) = match posterior_normalization(x, NORMALIZATION_TOL) {
        Ok(r) => (r.value - 1.0, true),
        Err(DensityError::Quadrature(QuadratureError::NotConverged { best })) => (best.value - 1.0, false),
        Err(_) => (f64::NAN, false),
    };

    Ok(PosteriorCurve {
        x1: x.x1,
        x2: x.x2,
        rho_grid,
        density_values,
        normalization_residual,
        normalization_converged,
    })
}
