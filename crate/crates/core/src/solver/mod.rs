//! Backward induction for the contract value under static or optimal
//! (dynamic) withdrawals, and the perfect-forecast upper estimator.
//!
//! Surfaces hold `Q(W_m, A_j)` on the wealth × guarantee grid, stored column
//! by column together with the spline second derivatives in `W` for each
//! column.

mod engine;
mod grid;
mod upper;

use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::SplineKnots;

pub use engine::{expectation_step, jump_step, maturity_surface, price, price_with_policy};
pub use grid::{static_levels, GridConfig, GridSpec, WSpacing};
pub use upper::{upper_estimator, UpperEstimate};

/// Withdrawal strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Always withdraw the contractual amount.
    Static,
    /// Withdraw the amount that maximises the contract value.
    Dynamic,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "static" => Ok(Mode::Static),
            "dynamic" => Ok(Mode::Dynamic),
            other => Err(Error::InvalidInput(format!("unknown mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Static => "static",
            Mode::Dynamic => "dynamic",
        })
    }
}

/// Contract values on the grid at one date, either just before (`t_n^-`) or
/// just after (`t_n^+`) the withdrawal.
#[derive(Debug, Clone)]
pub struct ValueSurface {
    date: usize,
    knots: Arc<SplineKnots>,
    cols: usize,
    values: Vec<f64>,
    curvature: Vec<f64>,
}

impl ValueSurface {
    /// Surface at date index `date` from column-major `values`.
    pub fn new(date: usize, knots: Arc<SplineKnots>, cols: usize, values: Vec<f64>) -> Result<Self> {
        let rows = knots.len();
        if values.len() != rows * cols {
            return Err(Error::Grid(format!(
                "{} values for a {rows} x {cols} surface",
                values.len()
            )));
        }
        let mut curvature = vec![0.0; values.len()];
        curvature
            .par_chunks_mut(rows)
            .zip(values.par_chunks(rows))
            .for_each(|(m, ys)| knots.second_derivatives_into(ys, m));
        Ok(Self {
            date,
            knots,
            cols,
            values,
            curvature,
        })
    }

    pub fn date(&self) -> usize {
        self.date
    }

    pub fn rows(&self) -> usize {
        self.knots.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Values at the wealth nodes for guarantee index `j`.
    pub fn column(&self, j: usize) -> &[f64] {
        let r = self.rows();
        &self.values[j * r..(j + 1) * r]
    }

    pub(super) fn curvature(&self, j: usize) -> &[f64] {
        let r = self.rows();
        &self.curvature[j * r..(j + 1) * r]
    }

    pub fn value(&self, m: usize, j: usize) -> f64 {
        self.values[j * self.rows() + m]
    }

    /// Spline interpolant in wealth for guarantee index `j`.
    #[inline]
    pub fn eval(&self, j: usize, w: f64) -> f64 {
        self.knots.eval(self.column(j), self.curvature(j), w)
    }
}

/// Optimal withdrawal choices at one date: for each `(W_m, A_j)` the index
/// `k*` of the post-withdrawal guarantee `A_{k*}`, so the withdrawal is
/// `A_j - A_{k*}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySlice {
    date: usize,
    rows: usize,
    choice: Vec<u16>,
}

impl PolicySlice {
    pub fn date(&self) -> usize {
        self.date
    }

    pub fn choice(&self, m: usize, j: usize) -> usize {
        self.choice[j * self.rows + m] as usize
    }
}

/// Policy slices for the withdrawal dates `t_1..t_{N-1}`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolicyRecord {
    slices: Vec<PolicySlice>,
}

impl PolicyRecord {
    pub fn slice(&self, date: usize) -> Option<&PolicySlice> {
        self.slices.iter().find(|s| s.date == date)
    }

    pub fn slices(&self) -> &[PolicySlice] {
        &self.slices
    }
}

/// Summary of the grid used by a pricing run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub w_intervals: usize,
    pub a_points: usize,
    pub quad_order: usize,
    pub periods: usize,
    pub w_max: f64,
}

#[derive(Debug, Clone)]
pub struct PricingResult {
    /// Value at `t_0` for wealth and guarantee equal to the premium.
    pub price: f64,
    pub policy: Option<PolicyRecord>,
    pub diagnostics: Diagnostics,
}
