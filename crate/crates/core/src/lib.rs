//! Densities on `ℝ^p` whose contours are concentric hypercubes and whose
//! one-dimensional marginals are standard normal.
//!
//! In two dimensions the density is the uniform mixture over the
//! correlation of unit-variance bivariate normals and equals
//! `½(1 - Φ(‖x‖∞))`. In general dimension it is the law of `Y·(U₁,…,U_p)`
//! with `Y ~ χ₃` and `U_i ~ Uniform[-1, 1]`.
//!
//! * [`specfun`]: φ, Φ, Φ⁻¹, erfc and the power-tail integrals behind `f_p`.
//! * [`quadrature`]: adaptive Gauss–Kronrod with endpoint substitutions.
//! * [`density`]: `f_p`, the bivariate conditional density and the exponent
//!   profile in ρ.
//! * [`mixture`]: the ρ-integral computed directly, as an oracle.
//! * [`khintchine`]: reproducible sampling and KS statistics.
//! * [`bayes`]: posterior of ρ and the Bayes factor for `ρ = 0`.
//! * [`cli`]: the `maxnorm` command-line tool.

pub mod bayes;
pub mod cli;
pub mod density;
pub mod khintchine;
pub mod mixture;
pub mod quadrature;
pub mod specfun;

pub use density::{Correlation, DensityValue, Point, Point2};
pub use quadrature::QuadratureResult;
