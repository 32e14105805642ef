//! Standard normal pdf/cdf/quantile and the Gaussian power-tail integrals
//! `∫_t^∞ y^k e^{-y²/2} dy`.

use std::f64::consts::FRAC_1_SQRT_2;

use thiserror::Error;

use crate::quadrature::{self, IntegrandSpec, QuadratureError};

/// `1 / √(2π)`
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_677_939_946_059_934_381_87;
/// `√(2π)`
pub const SQRT_2PI: f64 = 2.506_628_274_631_000_502_415_765_284_811_045_3;
/// `ln √(2π)`
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_741_780_329_736_405_617_6;

/// Absolute tolerance on the normalized power-tail integral (see
/// [`gaussian_power_tail`]); the result is accurate to roughly this relative
/// error.
const POWER_TAIL_TOL: f64 = 5e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecfunError {
    #[error("tail order k = {0} is not supported (requires k <= 1)")]
    InvalidOrder(i32),
    #[error("tail start t = {0} must be finite and nonnegative")]
    InvalidArgument(f64),
    #[error("integral of y^{k} e^(-y^2/2) diverges at t = 0")]
    DivergentAtOrigin { k: i32 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Exponent `k` of `∫_t^∞ y^k e^{-y²/2} dy`; for the `p`-dimensional density
/// `k = 2 - p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TailOrder(i32);

impl TailOrder {
    pub fn new(k: i32) -> Result<Self, SpecfunError> {
        if k <= 1 {
            Ok(Self(k))
        } else {
            Err(SpecfunError::InvalidOrder(k))
        }
    }

    /// Order used by the density in dimension `p` (`p >= 1`).
    pub fn for_dimension(p: usize) -> Self {
        assert!(p >= 1, "dimension must be at least 1");
        Self(2 - p as i32)
    }

    pub fn k(self) -> i32 {
        self.0
    }

    /// Whether the integral diverges as `t → 0⁺`.
    pub fn diverges_at_origin(self) -> bool {
        self.0 <= -1
    }
}

pub fn std_normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Φ(x), computed as `½·erfc(-x/√2)`.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Φ(x)` without cancellation for large `x`.
pub fn std_normal_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// `ln(1 - Φ(x))`, finite for all finite `x`.
pub fn log_std_normal_sf(x: f64) -> f64 {
    if x < 35.0 {
        return std_normal_sf(x).ln();
    }
    // Asymptotic series; the first omitted term is below 5e-15 for x >= 35.
    let z = 1.0 / (x * x);
    let series = 1.0 - z * (1.0 - z * (3.0 - z * (15.0 - z * (105.0 - z * 945.0))));
    -0.5 * x * x - LN_SQRT_2PI - x.ln() + series.ln()
}

/// Φ⁻¹(p): Acklam's rational approximation refined by one Halley step
/// against [`std_normal_cdf`].
pub fn std_normal_quantile(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    if p > 0.5 {
        // 1 - p is exact here.
        return -lower_quantile(1.0 - p);
    }
    lower_quantile(p)
}

#[allow(clippy::excessive_precision)]
fn lower_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };

    let e = std_normal_cdf(x) - p;
    let u = e * SQRT_2PI * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// `∫_t^∞ y^k e^{-y²/2} dy` for `k <= 1`.
///
/// `k = 1` and `k = 0` use closed forms. For `k <= -1` the integral is
/// rewritten with `y = t + s` as
/// `e^{-t²/2} t^k ∫_0^∞ (1 + s/t)^k e^{-ts - s²/2} ds`, which keeps the
/// quadrature well scaled for every `t > 0`. Underflow to zero at large `t`
/// is accepted.
pub fn gaussian_power_tail(order: TailOrder, t: f64) -> Result<f64, SpecfunError> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(SpecfunError::InvalidArgument(t));
    }
    let k = order.k();
    match k {
        1 => Ok((-0.5 * t * t).exp()),
        0 => Ok(SQRT_2PI * std_normal_sf(t)),
        _ if t == 0.0 => Err(SpecfunError::DivergentAtOrigin { k }),
        _ => {
            // Rough size of the s-integral, so the absolute tolerance acts
            // as a relative one.
            let scale = t + f64::from(-k) / t + 1.0;
            let integrand = |s: f64| scale * (1.0 + s / t).powi(k) * (-(t * s) - 0.5 * s * s).exp();
            let r = quadrature::integrate(&IntegrandSpec::semi_infinite(integrand, 0.0), POWER_TAIL_TOL)?;
            Ok((-0.5 * t * t).exp() * t.powi(k) / scale * r.value)
        }
    }
}

// Complementary error function after FreeBSD's s_erf.c (Sun Microsystems,
// freely redistributable); relative error below one ulp over the real line.
#[allow(clippy::excessive_precision, clippy::unreadable_literal)]
pub fn erfc(x: f64) -> f64 {
    const ERX: f64 = 8.45062911510467529297e-01;
    const PP: [f64; 5] = [
        1.28379167095512558561e-01,
        -3.25042107247001499370e-01,
        -2.84817495755985104766e-02,
        -5.77027029648944159157e-03,
        -2.37630166566501626084e-05,
    ];
    const QQ: [f64; 5] = [
        3.97917223959155352819e-01,
        6.50222499887672944485e-02,
        5.08130628187576562776e-03,
        1.32494738004321644526e-04,
        -3.96022827877536812320e-06,
    ];
    const PA: [f64; 7] = [
        -2.36211856075265944077e-03,
        4.14856118683748331666e-01,
        -3.72207876035701323847e-01,
        3.18346619901161753674e-01,
        -1.10894694282396677476e-01,
        3.54783043256182359371e-02,
        -2.16637559486879084300e-03,
    ];
    const QA: [f64; 6] = [
        1.06420880400844228286e-01,
        5.40397917702171048937e-01,
        7.18286544141962662868e-02,
        1.26171219808761642112e-01,
        1.36370839120290507362e-02,
        1.19844998467991074170e-02,
    ];
    const RA: [f64; 8] = [
        -9.86494403484714822705e-03,
        -6.93858572707181764372e-01,
        -1.05586262253232909814e+01,
        -6.23753324503260060396e+01,
        -1.62396669462573470355e+02,
        -1.84605092906711035994e+02,
        -8.12874355063065934246e+01,
        -9.81432934416914548592e+00,
    ];
    const SA: [f64; 8] = [
        1.96512716674392571292e+01,
        1.37657754143519042600e+02,
        4.34565877475229228821e+02,
        6.45387271733267880336e+02,
        4.29008140027567833386e+02,
        1.08635005541779435134e+02,
        6.57024977031928170135e+00,
        -6.04244152148580987438e-02,
    ];
    const RB: [f64; 7] = [
        -9.86494292470009928597e-03,
        -7.99283237680523006574e-01,
        -1.77579549177547519889e+01,
        -1.60636384855821916062e+02,
        -6.37566443368389627722e+02,
        -1.02509513161107724954e+03,
        -4.83519191608651397019e+02,
    ];
    const SB: [f64; 7] = [
        3.03380607434824582924e+01,
        3.25792512996573918826e+02,
        1.53672958608443695994e+03,
        3.19985821950859553908e+03,
        2.55305040643316442583e+03,
        4.74528541206955367215e+02,
        -2.24409524465858183362e+01,
    ];
    const TINY: f64 = 1.387_778_780_781_445_675_529_539_585_113_525_390_625e-17; // 2^-56

    fn poly(c: &[f64], z: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, &ci| acc * z + ci)
    }
    // 1 + c[0] z + c[1] z² + ...
    fn poly1(c: &[f64], z: f64) -> f64 {
        1.0 + z * poly(c, z)
    }

    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::INFINITY {
        return 0.0;
    }
    if x == f64::NEG_INFINITY {
        return 2.0;
    }
    let negative = x < 0.0;
    let ax = x.abs();

    if ax < 0.84375 {
        let t = if ax < TINY {
            ax
        } else {
            let z = ax * ax;
            let y = poly(&PP, z) / poly1(&QQ, z);
            if ax < 0.25 {
                ax + ax * y
            } else {
                0.5 + (ax * y + (ax - 0.5))
            }
        };
        return if negative { 1.0 + t } else { 1.0 - t };
    }
    if ax < 1.25 {
        let s = ax - 1.0;
        let ratio = poly(&PA, s) / poly1(&QA, s);
        return if negative { 1.0 + ERX + ratio } else { 1.0 - ERX - ratio };
    }
    if ax >= 28.0 {
        return if negative { 2.0 } else { 0.0 };
    }
    if negative && ax > 6.0 {
        return 2.0;
    }
    let s = 1.0 / (ax * ax);
    let (r, q) = if ax < 1.0 / 0.35 {
        (poly(&RA, s), poly1(&SA, s))
    } else {
        (poly(&RB, s), poly1(&SB, s))
    };
    // Split x² into an exactly representable head and a small tail.
    let head = f64::from_bits(ax.to_bits() & 0xffff_ffff_0000_0000);
    let e = (-head * head - 0.5625).exp() * ((head - ax) * (head + ax) + r / q).exp();
    if negative {
        2.0 - e / ax
    } else {
        e / ax
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pdf_values() {
        assert_eq!(std_normal_pdf(0.0), 0.398_942_280_401_432_7);
        assert_eq!(std_normal_pdf(1.0), std_normal_pdf(-1.0));
        assert!((std_normal_pdf(2.0) - 0.053_990_966_513_188_06).abs() < 1e-17);
    }

    #[test]
    fn cdf_anchor_values() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((std_normal_cdf(8.0) - 1.0).abs() <= 1e-14);
        assert!((std_normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() <= 1e-15);
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn erfc_reference_values() {
        // Values from a 50-digit series evaluation.
        let cases = [
            (0.1, 0.887_537_083_981_715_1),
            (0.5, 0.479_500_122_186_953_5),
            (1.0, 0.157_299_207_050_285_13),
            (2.0, 4.677_734_981_047_265_8e-3),
            (5.0, 1.537_459_794_428_034_9e-12),
            (10.0, 2.088_487_583_762_544_8e-45),
            (-1.0, 1.842_700_792_949_714_9),
        ];
        for (x, expected) in cases {
            let got = erfc(x);
            assert!(
                ((got - expected) / expected).abs() < 4e-16,
                "erfc({x}) = {got}, expected {expected}"
            );
        }
    }

    #[test]
    fn log_sf_matches_direct_below_switch_and_is_continuous() {
        for x in [-3.0, 0.0, 2.0, 10.0, 30.0] {
            assert!((log_std_normal_sf(x) - std_normal_sf(x).ln()).abs() < 1e-12);
        }
        let below = std_normal_sf(34.999_999).ln();
        let above = log_std_normal_sf(35.0);
        assert!((below - above).abs() < 1e-3);
        let direct_at_35 = std_normal_sf(35.0).ln();
        assert!((direct_at_35 - above).abs() < 1e-12);
        assert!(log_std_normal_sf(100.0).is_finite());
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-300, 1e-12, 1e-5, 0.02, 0.1, 0.3, 0.5, 0.7, 0.975, 1.0 - 1e-10] {
            let x = std_normal_quantile(p);
            let back = if p < 0.5 {
                std_normal_cdf(x)
            } else {
                1.0 - std_normal_sf(x)
            };
            assert!(
                ((back - p) / p.min(1.0 - p).max(1e-300)).abs() < 1e-13 || (back - p).abs() < 1e-16,
                "p={p}"
            );
        }
        assert_eq!(std_normal_quantile(0.5), 0.0);
        assert_eq!(std_normal_quantile(0.0), f64::NEG_INFINITY);
        assert!(std_normal_quantile(1.5).is_nan());
        assert!((std_normal_quantile(0.25) + std_normal_quantile(0.75)).abs() < 1e-16);
    }

    #[test]
    fn tail_order_bounds() {
        assert!(TailOrder::new(2).is_err());
        assert_eq!(TailOrder::for_dimension(1).k(), 1);
        assert_eq!(TailOrder::for_dimension(5).k(), -3);
        assert!(TailOrder::for_dimension(3).diverges_at_origin());
        assert!(!TailOrder::for_dimension(2).diverges_at_origin());
    }

    #[test]
    fn power_tail_closed_forms() {
        let a = 1.3;
        let k1 = gaussian_power_tail(TailOrder::new(1).unwrap(), a).unwrap();
        assert!((k1 - (-0.5 * a * a).exp()).abs() < 1e-16);
        let k0 = gaussian_power_tail(TailOrder::new(0).unwrap(), 1.0).unwrap();
        assert!((k0 - SQRT_2PI * (1.0 - std_normal_cdf(1.0))).abs() < 1e-15);
        assert_eq!(
            gaussian_power_tail(TailOrder::new(0).unwrap(), 0.0).unwrap(),
            SQRT_2PI / 2.0
        );
    }

    #[test]
    fn power_tail_diverges_at_zero() {
        for k in [-1, -2, -4] {
            assert_eq!(
                gaussian_power_tail(TailOrder::new(k).unwrap(), 0.0),
                Err(SpecfunError::DivergentAtOrigin { k })
            );
        }
        assert!(matches!(
            gaussian_power_tail(TailOrder::new(-1).unwrap(), -0.5),
            Err(SpecfunError::InvalidArgument(_))
        ));
    }

    #[test]
    fn power_tail_underflows_quietly() {
        let v = gaussian_power_tail(TailOrder::new(-2).unwrap(), 60.0).unwrap();
        assert_eq!(v, 0.0);
    }
}
