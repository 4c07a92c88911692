use std::sync::Arc;

use crate::error::{Error, Result};

/// Knot vector of a natural cubic spline together with the factorised
/// tridiagonal system for the second derivatives.
///
/// The factorisation depends only on the knots, so one `SplineKnots` serves
/// every spline fitted on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineKnots {
    xs: Vec<f64>,
    h: Vec<f64>,
    /// Reciprocal pivots of the forward sweep, one per interior knot.
    inv_pivot: Vec<f64>,
    /// Super-diagonal after elimination, one per interior knot.
    upper: Vec<f64>,
    /// Length of the uniformly spaced prefix, used for O(1) lookup.
    uniform_prefix: usize,
    uniform_step: f64,
}

impl SplineKnots {
    pub fn new(xs: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "spline needs at least 2 knots, got {}",
                xs.len()
            )));
        }
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("spline knots must be finite".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("spline knots must be strictly increasing".into()));
        }
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let interior = xs.len() - 2;
        let mut inv_pivot = Vec::with_capacity(interior);
        let mut upper = Vec::with_capacity(interior);
        // Rows i = 1..=M-1: h[i-1] m[i-1] + 2(h[i-1]+h[i]) m[i] + h[i] m[i+1] = rhs
        for i in 1..=interior {
            let sub = h[i - 1];
            let diag = 2.0 * (h[i - 1] + h[i]);
            let pivot = if i == 1 { diag } else { diag - sub * upper[i - 2] };
            inv_pivot.push(1.0 / pivot);
            upper.push(h[i] / pivot);
        }

        let step = h[0];
        let tol = 1e-12 * step;
        let mut prefix = 1;
        while prefix < h.len() && (h[prefix] - step).abs() <= tol {
            prefix += 1;
        }
        // prefix intervals are uniform; make sure direct indexing lands right
        let uniform_prefix = prefix;
        Ok(Self {
            xs,
            h,
            inv_pivot,
            upper,
            uniform_prefix,
            uniform_step: step,
        })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Solves for natural-spline second derivatives of `ys`, writing them into
    /// `m` (same length as the knots).
    pub fn second_derivatives_into(&self, ys: &[f64], m: &mut [f64]) {
        let n = self.xs.len();
        debug_assert_eq!(ys.len(), n);
        debug_assert_eq!(m.len(), n);
        m[0] = 0.0;
        m[n - 1] = 0.0;
        if n == 2 {
            return;
        }
        let h = &self.h;
        // forward sweep, storing intermediate solution in m[1..n-1]
        let mut prev = 0.0;
        for i in 1..n - 1 {
            let rhs = 6.0 * ((ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1]);
            let v = (rhs - h[i - 1] * prev) * self.inv_pivot[i - 1];
            m[i] = v;
            prev = v;
        }
        for i in (1..n - 2).rev() {
            m[i] -= self.upper[i - 1] * m[i + 1];
        }
    }

    /// Index `i` of the interval `[x_i, x_{i+1}]` containing `x`, clamped to
    /// the valid interval range. Callers handle extrapolation separately.
    #[inline]
    pub fn interval(&self, x: f64) -> usize {
        let last = self.xs.len() - 2;
        let uniform_end = self.xs[self.uniform_prefix];
        if x < uniform_end {
            let i = ((x - self.xs[0]) / self.uniform_step) as usize;
            // guard against rounding at interval edges
            let i = i.min(self.uniform_prefix - 1);
            if x < self.xs[i] && i > 0 {
                i - 1
            } else if x >= self.xs[i + 1] {
                (i + 1).min(last)
            } else {
                i
            }
        } else {
            let tail = &self.xs[self.uniform_prefix..];
            let k = tail.partition_point(|&t| t <= x);
            (self.uniform_prefix + k).saturating_sub(1).min(last)
        }
    }

    /// Evaluates the spline with knot values `ys` and second derivatives `m`.
    ///
    /// Outside the knot range the spline continues linearly with the end
    /// slope (zero curvature).
    #[inline]
    pub fn eval(&self, ys: &[f64], m: &[f64], x: f64) -> f64 {
        let xs = &self.xs;
        let n = xs.len();
        if x <= xs[0] {
            let h = self.h[0];
            let slope = (ys[1] - ys[0]) / h - h * (2.0 * m[0] + m[1]) / 6.0;
            return ys[0] + slope * (x - xs[0]);
        }
        if x >= xs[n - 1] {
            let h = self.h[n - 2];
            let slope = (ys[n - 1] - ys[n - 2]) / h + h * (2.0 * m[n - 1] + m[n - 2]) / 6.0;
            return ys[n - 1] + slope * (x - xs[n - 1]);
        }
        let i = self.interval(x);
        let h = self.h[i];
        let a = (xs[i + 1] - x) / h;
        let b = 1.0 - a;
        a * ys[i] + b * ys[i + 1] + ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * (h * h) / 6.0
    }

    /// Coefficients expressing the spline value at `x` as a combination of
    /// two neighbouring knot values and second derivatives. Useful when the
    /// same points are evaluated for many splines on these knots.
    pub fn weights(&self, x: f64) -> SplineWeights {
        let xs = &self.xs;
        let n = xs.len();
        if x <= xs[0] {
            let h = self.h[0];
            let dx = x - xs[0];
            return SplineWeights {
                idx: 0,
                c: [1.0 - dx / h, dx / h, -dx * h / 3.0, -dx * h / 6.0],
            };
        }
        if x >= xs[n - 1] {
            let h = self.h[n - 2];
            let dx = x - xs[n - 1];
            return SplineWeights {
                idx: (n - 2) as u32,
                c: [-dx / h, 1.0 + dx / h, dx * h / 6.0, dx * h / 3.0],
            };
        }
        let i = self.interval(x);
        let h = self.h[i];
        let a = (xs[i + 1] - x) / h;
        let b = 1.0 - a;
        let s = h * h / 6.0;
        SplineWeights {
            idx: i as u32,
            c: [a, b, (a * a * a - a) * s, (b * b * b - b) * s],
        }
    }

    /// Fits a spline to `ys` on these knots.
    pub fn fit(self: &Arc<Self>, ys: Vec<f64>) -> Result<CubicSpline> {
        if ys.len() != self.xs.len() {
            return Err(Error::InvalidInput(format!(
                "{} values for {} knots",
                ys.len(),
                self.xs.len()
            )));
        }
        let mut m = vec![0.0; ys.len()];
        self.second_derivatives_into(&ys, &mut m);
        Ok(CubicSpline {
            knots: Arc::clone(self),
            ys,
            m,
        })
    }
}

/// Precomputed evaluation of a spline at one point, see
/// [`SplineKnots::weights`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplineWeights {
    idx: u32,
    c: [f64; 4],
}

impl SplineWeights {
    /// Weights that pick the knot value at index `i`.
    pub fn node(i: usize) -> Self {
        Self {
            idx: i as u32,
            c: [1.0, 0.0, 0.0, 0.0],
        }
    }

    #[inline]
    pub fn apply(&self, ys: &[f64], m: &[f64]) -> f64 {
        let i = self.idx as usize;
        self.c[0] * ys[i] + self.c[1] * ys[i + 1] + self.c[2] * m[i] + self.c[3] * m[i + 1]
    }
}

/// Natural cubic spline: C² through the knots, zero curvature at both ends
/// and in the extrapolation regions.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    knots: Arc<SplineKnots>,
    ys: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn eval(&self, x: f64) -> f64 {
        self.knots.eval(&self.ys, &self.m, x)
    }

    pub fn knots(&self) -> &[f64] {
        self.knots.xs()
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    pub fn second_derivatives(&self) -> &[f64] {
        &self.m
    }
}

/// Fits a natural cubic spline through `(xs[i], ys[i])`.
pub fn fit_natural_spline(xs: &[f64], ys: &[f64]) -> Result<CubicSpline> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidInput(format!(
            "{} knots but {} values",
            xs.len(),
            ys.len()
        )));
    }
    Arc::new(SplineKnots::new(xs.to_vec())?).fit(ys.to_vec())
}
