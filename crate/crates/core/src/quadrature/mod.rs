//! Numerical kernels: Gauss-Hermite quadrature and natural cubic splines.

mod hermite;
mod spline;

pub use hermite::{gauss_hermite, GaussHermiteRule, MAX_ORDER};
pub use spline::{fit_natural_spline, CubicSpline, SplineKnots, SplineWeights};
