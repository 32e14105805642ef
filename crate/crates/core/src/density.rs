//! The max-norm contoured density family and the exponent profile of the
//! unit-variance bivariate normal as a function of the correlation.
//!
//! In dimension `p` the density is
//! `f_p(x) = 2^{1-p} (2π)^{-1/2} ∫_{‖x‖∞}^∞ y^{2-p} e^{-y²/2} dy`,
//! which reduces to `φ(x₁)` for `p = 1` and to `½(1 - Φ(‖x‖∞))` for `p = 2`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::quadrature::{self, IntegrandSpec, QuadratureError};
use crate::specfun::{self, SpecfunError, TailOrder, FRAC_1_SQRT_2PI};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DensityError {
    #[error("point must have at least one coordinate")]
    EmptyPoint,
    #[error("point coordinates must be finite")]
    NonFinitePoint,
    #[error("correlation {0} is outside [-1, 1]")]
    InvalidCorrelation(f64),
    #[error("correlation {0} is singular (|rho| = 1)")]
    SingularCorrelation(f64),
    #[error("exponent minimiser is undefined at x = (0, 0)")]
    UndefinedArgmin,
    #[error("dimension {0} is not supported here")]
    InvalidDimension(usize),
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

impl From<SpecfunError> for DensityError {
    fn from(e: SpecfunError) -> Self {
        match e {
            SpecfunError::Quadrature(q) => DensityError::Quadrature(q),
            other => DensityError::InvalidArgument(other.to_string()),
        }
    }
}

/// A point in `ℝ^p` with its max norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
    max_norm: f64,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self, DensityError> {
        if coords.is_empty() {
            return Err(DensityError::EmptyPoint);
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(DensityError::NonFinitePoint);
        }
        let max_norm = coords.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        Ok(Self { coords, max_norm })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn max_norm(&self) -> f64 {
        self.max_norm
    }
}

impl From<Point2> for Point {
    fn from(x: Point2) -> Self {
        Point {
            coords: vec![x.x1, x.x2],
            max_norm: x.max_norm(),
        }
    }
}

/// A point in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x1: f64,
    pub x2: f64,
}

impl Point2 {
    pub fn new(x1: f64, x2: f64) -> Result<Self, DensityError> {
        if x1.is_finite() && x2.is_finite() {
            Ok(Self { x1, x2 })
        } else {
            Err(DensityError::NonFinitePoint)
        }
    }

    pub fn max_norm(&self) -> f64 {
        self.x1.abs().max(self.x2.abs())
    }

    pub fn is_origin(&self) -> bool {
        self.x1 == 0.0 && self.x2 == 0.0
    }

    pub fn swapped(&self) -> Self {
        Self {
            x1: self.x2,
            x2: self.x1,
        }
    }
}

/// Correlation coefficient in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Correlation(f64);

impl Correlation {
    pub fn new(rho: f64) -> Result<Self, DensityError> {
        if (-1.0..=1.0).contains(&rho) {
            Ok(Self(rho))
        } else {
            Err(DensityError::InvalidCorrelation(rho))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `1 - ρ²`, rejecting the degenerate endpoints.
    fn one_minus_sq(self) -> Result<f64, DensityError> {
        if self.0.abs() < 1.0 {
            Ok((1.0 - self.0) * (1.0 + self.0))
        } else {
            Err(DensityError::SingularCorrelation(self.0))
        }
    }
}

/// Density value; `InfiniteAtOrigin` only arises for `p >= 3` at `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityValue {
    Finite(f64),
    InfiniteAtOrigin,
}

impl DensityValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            DensityValue::Finite(v) => Some(v),
            DensityValue::InfiniteAtOrigin => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, DensityValue::InfiniteAtOrigin)
    }

    /// `f64::INFINITY` for the origin marker.
    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

/// Unit-variance bivariate normal density with correlation `rho`.
pub fn conditional_density(x: Point2, rho: Correlation) -> Result<f64, DensityError> {
    let q = rho.one_minus_sq()?;
    let g = quadratic_exponent(x, rho.value(), q);
    Ok((-g).exp() / (2.0 * PI * q.sqrt()))
}

/// `½(1 - Φ(‖x‖∞))`
pub fn closed_form_density2(x: Point2) -> f64 {
    0.5 * specfun::std_normal_sf(x.max_norm())
}

/// Density of the `p`-dimensional family as a function of `m = ‖x‖∞`.
pub fn density_at_max_norm(p: usize, m: f64) -> Result<DensityValue, DensityError> {
    if p == 0 {
        return Err(DensityError::InvalidDimension(p));
    }
    if !(m.is_finite() && m >= 0.0) {
        return Err(DensityError::InvalidArgument(format!(
            "max norm {m} must be finite and nonnegative"
        )));
    }
    match p {
        1 => return Ok(DensityValue::Finite(specfun::std_normal_pdf(m))),
        2 => return Ok(DensityValue::Finite(0.5 * specfun::std_normal_sf(m))),
        _ => {}
    }
    let order = TailOrder::for_dimension(p);
    let prefactor = 2f64.powi(1 - p as i32) * FRAC_1_SQRT_2PI;
    match specfun::gaussian_power_tail(order, m) {
        Ok(tail) => Ok(DensityValue::Finite(prefactor * tail)),
        Err(SpecfunError::DivergentAtOrigin { .. }) => Ok(DensityValue::InfiniteAtOrigin),
        Err(e) => Err(e.into()),
    }
}

/// `f_p(x)`; depends on `x` only through its max norm.
pub fn density_p(x: &Point) -> Result<DensityValue, DensityError> {
    density_at_max_norm(x.dim(), x.max_norm())
}

/// `g(ρ) = (x₁² + x₂² - 2ρx₁x₂) / (2(1 - ρ²))`
pub fn exponent_g(x: Point2, rho: Correlation) -> Result<f64, DensityError> {
    let q = rho.one_minus_sq()?;
    Ok(quadratic_exponent(x, rho.value(), q))
}

/// `g'(ρ) = -(ρx₁ - x₂)(ρx₂ - x₁) / (1 - ρ²)²`
pub fn exponent_g_derivative(x: Point2, rho: Correlation) -> Result<f64, DensityError> {
    let q = rho.one_minus_sq()?;
    let r = rho.value();
    Ok(-(r * x.x1 - x.x2) * (r * x.x2 - x.x1) / (q * q))
}

/// Minimiser of `g` over `[-1, 1]`:
/// `sgn(x₁x₂)·min(|x₁|,|x₂|)/max(|x₁|,|x₂|)`, with `sgn(0) = 0`.
pub fn exponent_argmin(x: Point2) -> Result<Correlation, DensityError> {
    if x.is_origin() {
        return Err(DensityError::UndefinedArgmin);
    }
    let (a1, a2) = (x.x1.abs(), x.x2.abs());
    let ratio = a1.min(a2) / a1.max(a2);
    let sign = if x.x1 == 0.0 || x.x2 == 0.0 {
        0.0
    } else if (x.x1 > 0.0) == (x.x2 > 0.0) {
        1.0
    } else {
        -1.0
    };
    Correlation::new(sign * ratio)
}

fn quadratic_exponent(x: Point2, rho: f64, one_minus_sq: f64) -> f64 {
    (x.x1 * x.x1 + x.x2 * x.x2 - 2.0 * rho * x.x1 * x.x2) / (2.0 * one_minus_sq)
}

/// Integrates the last coordinate out of `f_p` at `x_prefix ∈ ℝ^{p-1}`:
/// `2·m·h_p(m) + 2∫_m^∞ h_p(u) du` with `m = ‖x_prefix‖∞`, where `h_p` is
/// evaluated through [`density_p`] at full `p`-dimensional points.
///
/// The result should reproduce `f_{p-1}(x_prefix)`.
pub fn marginalize_last(p: usize, x_prefix: &Point, tol: f64) -> Result<DensityValue, DensityError> {
    if p < 2 {
        return Err(DensityError::InvalidDimension(p));
    }
    if x_prefix.dim() != p - 1 {
        return Err(DensityError::InvalidArgument(format!(
            "prefix has {} coordinates, expected {}",
            x_prefix.dim(),
            p - 1
        )));
    }
    if tol.is_nan() || tol < 1e-12 {
        return Err(DensityError::InvalidArgument(format!("tolerance {tol} below 1e-12")));
    }
    let m = x_prefix.max_norm();
    if m == 0.0 && p >= 4 {
        // ∫_0 h_p diverges for p >= 4 (h_p(u) ~ u^{3-p}).
        return Ok(DensityValue::InfiniteAtOrigin);
    }

    let mut full = x_prefix.coords().to_vec();
    full.push(0.0);
    let h = |u: f64| -> Result<f64, DensityError> {
        let mut coords = full.clone();
        coords[p - 1] = u;
        let point = Point::new(coords)?;
        match density_p(&point)? {
            DensityValue::Finite(v) => Ok(v),
            DensityValue::InfiniteAtOrigin => Ok(f64::INFINITY),
        }
    };

    // The flat part |x_p| <= m; at m = 0 (p = 3) the product m·h(m) → 0.
    let flat = if m > 0.0 { 2.0 * m * h(m)? } else { 0.0 };

    // Errors from inner evaluations are surfaced after the outer call.
    let inner_error = std::cell::RefCell::new(None);
    let integrand = |u: f64| match h(u) {
        Ok(v) => v,
        Err(e) => {
            inner_error.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let outer = quadrature::integrate(&IntegrandSpec::semi_infinite(integrand, m), tol / 2.0);
    if let Some(e) = inner_error.into_inner() {
        return Err(e);
    }
    let tail = outer?;
    Ok(DensityValue::Finite(flat + 2.0 * tail.value))
}

/// `P(‖X‖∞ <= a)` for `X ~ f_p`, from the shell measure
/// `∫_0^a p·2^p·m^{p-1}·h_p(m) dm`.
pub fn maxnorm_cdf(p: usize, a: f64, tol: f64) -> Result<f64, DensityError> {
    if p == 0 {
        return Err(DensityError::InvalidDimension(p));
    }
    if !(a.is_finite() && a >= 0.0) {
        return Err(DensityError::InvalidArgument(format!(
            "radius {a} must be finite and nonnegative"
        )));
    }
    if a == 0.0 {
        return Ok(0.0);
    }
    let shell = (p as f64) * 2f64.powi(p as i32);
    let inner_error = std::cell::RefCell::new(None);
    let integrand = |m: f64| match density_at_max_norm(p, m) {
        Ok(v) => shell * m.powi(p as i32 - 1) * v.as_f64(),
        Err(e) => {
            inner_error.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let r = quadrature::integrate(&IntegrandSpec::finite(integrand, 0.0, a), tol);
    if let Some(e) = inner_error.into_inner() {
        return Err(e);
    }
    Ok(r?.value)
}
