//! Direct quadrature of the uniform correlation mixture
//! `∫_{-1}^{1} ½ f(x₁, x₂ | ρ) dρ`, used as an independent check of the
//! closed form `½(1 - Φ(‖x‖∞))`.
//!
//! All ρ-integrals are taken in `θ` with `ρ = sin θ`, which cancels the
//! `1/√(1 - ρ²)` factor at both ends: the integrand becomes
//! `e^{-g(sin θ)} / (4π)` on `[-π/2, π/2]`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::Serialize;

use crate::density::{self, DensityError, Point2};
use crate::quadrature::{self, IntegrandSpec, QuadratureResult};
use crate::specfun;

/// Beyond this max norm both sides are below 1e-15 and the oracle
/// comparison is reported as trivially passed.
pub const SHORT_CIRCUIT_MAX_NORM: f64 = 8.0;

/// Splitting at the exponent minimiser is skipped when `|a|` reaches this.
const SPLIT_LIMIT: f64 = 0.999;

/// Quadrature tolerance for [`split_point_consistency`].
const SPLIT_CHECK_TOL: f64 = 1e-12;

fn check_tol(tol: f64) -> Result<(), DensityError> {
    if tol.is_finite() && tol >= 1e-12 {
        Ok(())
    } else {
        Err(DensityError::InvalidArgument(format!(
            "tolerance {tol} must be >= 1e-12"
        )))
    }
}

/// Exponent `g(sin θ)` written so that neither `1 - ρ` nor `1 + ρ` loses
/// precision near `θ = ±π/2`.
pub(crate) fn exponent_at_angle(x: Point2, theta: f64) -> f64 {
    let (x1, x2) = (x.x1, x.x2);
    if theta >= 0.0 {
        // 1 - sin θ = 2 sin²(π/4 - θ/2)
        let s = (FRAC_PI_4 - 0.5 * theta).sin();
        let one_minus = 2.0 * s * s;
        let one_plus = 1.0 + theta.sin();
        let d = x1 - x2;
        d * d / (2.0 * one_minus * one_plus) + x1 * x2 / one_plus
    } else {
        let s = (FRAC_PI_4 + 0.5 * theta).sin();
        let one_plus = 2.0 * s * s;
        let one_minus = 1.0 - theta.sin();
        let d = x1 + x2;
        d * d / (2.0 * one_minus * one_plus) - x1 * x2 / one_minus
    }
}

/// `∫ ½ f(x | ρ) dρ` over `ρ ∈ [sin lo, sin hi]`.
fn rho_integral(x: Point2, lo: f64, hi: f64, tol: f64) -> Result<QuadratureResult, DensityError> {
    let integrand = |theta: f64| (-exponent_at_angle(x, theta)).exp() / (4.0 * PI);
    Ok(quadrature::integrate(&IntegrandSpec::finite(integrand, lo, hi), tol)?)
}

/// The mixture density at `x` by quadrature over ρ, split at the exponent
/// minimiser when it is well inside `(-1, 1)`.
pub fn mixture_density_by_quadrature(x: Point2, tol: f64) -> Result<QuadratureResult, DensityError> {
    check_tol(tol)?;
    let split = match density::exponent_argmin(x) {
        Ok(a) if a.value().abs() < SPLIT_LIMIT => Some(a.value().asin()),
        _ => None,
    };
    match split {
        Some(theta_a) => {
            let lower = rho_integral(x, -FRAC_PI_2, theta_a, tol / 2.0)?;
            let upper = rho_integral(x, theta_a, FRAC_PI_2, tol / 2.0)?;
            Ok(lower.combine(upper))
        }
        None => rho_integral(x, -FRAC_PI_2, FRAC_PI_2, tol),
    }
}

/// Both sides of
/// `∫_{1/2}^∞ e^{-x₁² z} / (4π z √(2z - 1)) dz = ½(1 - Φ(x₁))`.
///
/// The left side is integrated after `z = ½(1 + u²)` and `v = x₁u`, giving
/// `e^{-x₁²/2} ∫_0^∞ x₁ e^{-v²/2} / (2π(x₁² + v²)) dv`.
pub fn laplace_identity_check(x1: f64, tol: f64) -> Result<(f64, f64), DensityError> {
    if !(x1.is_finite() && x1 > 0.0) {
        return Err(DensityError::InvalidArgument(format!("x1 = {x1} must be positive")));
    }
    if !(tol.is_finite() && tol >= quadrature::MIN_TOLERANCE) {
        return Err(DensityError::InvalidArgument(format!("tolerance {tol} too small")));
    }
    let integrand = |v: f64| x1 * (-0.5 * v * v).exp() / (2.0 * PI * (x1 * x1 + v * v));
    let r = quadrature::integrate(&IntegrandSpec::semi_infinite(integrand, 0.0), tol)?;
    let lhs = (-0.5 * x1 * x1).exp() * r.value;
    let rhs = 0.5 * specfun::std_normal_sf(x1);
    Ok((lhs, rhs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleComparison {
    pub x1: f64,
    pub x2: f64,
    pub mixture: f64,
    pub closed_form: f64,
    pub abs_error: f64,
    pub error_estimate: f64,
    pub short_circuited: bool,
}

/// Mixture quadrature against the closed form at one point.
pub fn compare_with_closed_form(x: Point2, tol: f64) -> Result<OracleComparison, DensityError> {
    let closed_form = density::closed_form_density2(x);
    if x.max_norm() > SHORT_CIRCUIT_MAX_NORM {
        return Ok(OracleComparison {
            x1: x.x1,
            x2: x.x2,
            mixture: closed_form,
            closed_form,
            abs_error: 0.0,
            error_estimate: 0.0,
            short_circuited: true,
        });
    }
    let r = mixture_density_by_quadrature(x, tol)?;
    Ok(OracleComparison {
        x1: x.x1,
        x2: x.x2,
        mixture: r.value,
        closed_form,
        abs_error: (r.value - closed_form).abs(),
        error_estimate: r.abs_error_estimate,
        short_circuited: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitReport {
    pub argmin: f64,
    /// `∫_{-1}^{a}`; zero-width (and zero) when `a = -1`.
    pub lower: QuadratureResult,
    /// `∫_{a}^{1}`; zero-width when `a = 1`.
    pub upper: QuadratureResult,
    pub full: QuadratureResult,
    pub combined_error: f64,
    /// The pieces add up to the full integral within `combined_error`.
    pub consistent: bool,
    /// `g` is nonincreasing on the lower piece and nondecreasing on the upper
    /// piece at five interior points each.
    pub monotone: bool,
}

impl SplitReport {
    pub fn sum(&self) -> f64 {
        self.lower.value + self.upper.value
    }

    pub fn passed(&self) -> bool {
        self.consistent && self.monotone
    }
}

/// Checks that splitting the ρ-integral at the exponent minimiser `a`
/// reproduces the unsplit integral.
pub fn split_point_consistency(x: Point2) -> Result<SplitReport, DensityError> {
    let a = density::exponent_argmin(x)?.value();
    let theta_a = a.asin();
    let empty = QuadratureResult {
        value: 0.0,
        abs_error_estimate: 0.0,
        evaluations: 1,
        converged: true,
    };

    let full = rho_integral(x, -FRAC_PI_2, FRAC_PI_2, SPLIT_CHECK_TOL)?;
    let lower = if a > -1.0 {
        rho_integral(x, -FRAC_PI_2, theta_a, SPLIT_CHECK_TOL)?
    } else {
        empty
    };
    let upper = if a < 1.0 {
        rho_integral(x, theta_a, FRAC_PI_2, SPLIT_CHECK_TOL)?
    } else {
        empty
    };

    let combined_error = lower.abs_error_estimate
        + upper.abs_error_estimate
        + full.abs_error_estimate
        + 8.0 * f64::EPSILON * full.value.abs();
    let consistent = (lower.value + upper.value - full.value).abs() <= combined_error;

    let monotone = monotone_on(x, -1.0, a, false)? && monotone_on(x, a, 1.0, true)?;

    Ok(SplitReport {
        argmin: a,
        lower,
        upper,
        full,
        combined_error,
        consistent,
        monotone,
    })
}

fn monotone_on(x: Point2, lo: f64, hi: f64, increasing: bool) -> Result<bool, DensityError> {
    if hi <= lo {
        return Ok(true);
    }
    let values = (1..=5)
        .map(|i| {
            let rho = density::Correlation::new(lo + (hi - lo) * f64::from(i) / 6.0)?;
            density::exponent_g(x, rho)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(values.windows(2).all(|w| {
        let slack = 1e-12 * w[0].abs().max(1.0);
        if increasing {
            w[1] >= w[0] - slack
        } else {
            w[1] <= w[0] + slack
        }
    }))
}
