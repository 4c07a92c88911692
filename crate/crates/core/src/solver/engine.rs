use std::f64::consts::PI;

use rayon::prelude::*;

use super::{Diagnostics, GridSpec, Mode, PolicyRecord, PolicySlice, PricingResult, ValueSurface};
use crate::contract::{withdrawal_cashflow, ContractSpec, DeathBenefit};
use crate::error::{Error, Result};
use crate::market::MarketTermStructure;
use crate::mortality::DeathSchedule;
use crate::quadrature::SplineWeights;

/// Quadrature data for one period: growth factors `exp(mu + s √2 ξ_i)`,
/// weights `B λ_i / √π`, and the spline weights at every `W_m e^{X_i}`.
pub(super) struct PeriodKernel {
    growth: Vec<f64>,
    weights: Vec<f64>,
    q: f64,
    plan: Vec<SplineWeights>,
}

impl PeriodKernel {
    pub(super) fn new(market: &MarketTermStructure, grid: &GridSpec, n: usize, q: f64) -> Result<Self> {
        let step = market.wealth_step_params(n)?;
        let disc = market.discount(n - 1, n)?;
        let rule = grid.rule();
        let scale = step.vol * std::f64::consts::SQRT_2;
        let growth: Vec<f64> = rule.nodes().iter().map(|x| (step.drift + scale * x).exp()).collect();
        let norm = disc / PI.sqrt();
        let weights = rule.weights().iter().map(|l| l * norm).collect();
        let knots = grid.knots();
        let mut plan = Vec::with_capacity(grid.rows() * growth.len());
        for &w in grid.w() {
            plan.extend(growth.iter().map(|g| knots.weights(w * g)));
        }
        Ok(Self {
            growth,
            weights,
            q,
            plan,
        })
    }

    /// Discounted expectation of `(1-q) S(W e^X) + q P_D(W e^X)`.
    #[inline]
    pub(super) fn expect(&self, w: f64, spline: impl Fn(f64) -> f64, death: impl Fn(f64) -> f64) -> f64 {
        let q = self.q;
        let mut acc = 0.0;
        for (g, l) in self.growth.iter().zip(&self.weights) {
            let x = w * g;
            let d = if q > 0.0 { death(x) } else { 0.0 };
            acc += l * ((1.0 - q) * spline(x) + q * d);
        }
        acc
    }

    /// As [`expect`](Self::expect) at the wealth node `m`, for the spline with
    /// knot values `ys` and second derivatives `curv`.
    #[inline]
    fn expect_node(&self, m: usize, w: f64, ys: &[f64], curv: &[f64], death: impl Fn(f64) -> f64) -> f64 {
        let nq = self.growth.len();
        let plan = &self.plan[m * nq..(m + 1) * nq];
        let mut s = 0.0;
        for (p, l) in plan.iter().zip(&self.weights) {
            s += l * p.apply(ys, curv);
        }
        if self.q > 0.0 {
            let mut d = 0.0;
            for (g, l) in self.growth.iter().zip(&self.weights) {
                d += l * death(w * g);
            }
            (1.0 - self.q) * s + self.q * d
        } else {
            s
        }
    }
}

pub(super) fn check_inputs(
    spec: &ContractSpec,
    market: &MarketTermStructure,
    schedule: &DeathSchedule,
    grid: &GridSpec,
) -> Result<()> {
    let n = spec.periods();
    if market.periods() != n || schedule.len() != n {
        return Err(Error::InvalidInput(format!(
            "contract has {n} periods, market {} and death schedule {}",
            market.periods(),
            schedule.len()
        )));
    }
    let tol = 1e-9 * spec.maturity();
    if spec
        .times()
        .iter()
        .zip(market.times())
        .any(|(a, b)| (a - b).abs() > tol)
    {
        return Err(Error::InvalidInput("market dates differ from withdrawal dates".into()));
    }
    let top = *grid.a().last().unwrap();
    if (top - spec.premium()).abs() > 1e-12 * spec.premium() {
        return Err(Error::Grid(format!(
            "top guarantee node {top} must equal the premium {}",
            spec.premium()
        )));
    }
    Ok(())
}

/// Death probability actually applied in period `n`.
pub(super) fn effective_q(spec: &ContractSpec, schedule: &DeathSchedule, n: usize) -> f64 {
    if spec.death_benefit() == DeathBenefit::None {
        0.0
    } else {
        schedule.q(n)
    }
}

/// Surface at `t_N^-` holding the maturity payoff `max(C_N(A), W)`.
pub fn maturity_surface(spec: &ContractSpec, grid: &GridSpec) -> ValueSurface {
    let big_n = spec.periods();
    let g_n = spec.contractual_amount(big_n);
    let beta = spec.penalty();
    surface_from(big_n, grid, |w, a| withdrawal_cashflow(a, g_n, beta).max(w))
}

pub(super) fn surface_from(date: usize, grid: &GridSpec, f: impl Fn(f64, f64) -> f64) -> ValueSurface {
    let mut values = Vec::with_capacity(grid.rows() * grid.cols());
    for &a in grid.a() {
        values.extend(grid.w().iter().map(|&w| f(w, a)));
    }
    ValueSurface::new(date, grid.knots().clone(), grid.cols(), values).expect("surface shape")
}

/// Takes the surface at `t_n^-` back to `t_{n-1}^+` by quadrature, mixing in
/// the death benefit with the period's conditional death probability.
pub fn expectation_step(
    surface: &ValueSurface,
    spec: &ContractSpec,
    market: &MarketTermStructure,
    schedule: &DeathSchedule,
    grid: &GridSpec,
    n: usize,
) -> Result<ValueSurface> {
    if surface.date() != n {
        return Err(Error::InvalidInput(format!(
            "surface is at date {} but the step starts at {n}",
            surface.date()
        )));
    }
    let kernel = PeriodKernel::new(market, grid, n, effective_q(spec, schedule, n))?;
    expect_surface(surface, spec, grid, &kernel)
}

pub(super) fn expect_surface(
    surface: &ValueSurface,
    spec: &ContractSpec,
    grid: &GridSpec,
    kernel: &PeriodKernel,
) -> Result<ValueSurface> {
    let rows = grid.rows();
    let db = spec.death_benefit();
    let premium = spec.premium();
    let w = grid.w();
    let a = grid.a();
    let mut values = vec![0.0; rows * grid.cols()];
    values.par_chunks_mut(rows).enumerate().for_each(|(j, out)| {
        let aj = a[j];
        let ys = surface.column(j);
        let curv = surface.curvature(j);
        for (m, (o, &wm)) in out.iter_mut().zip(w).enumerate() {
            *o = kernel.expect_node(m, wm, ys, curv, |x| db.payout(x, aj, premium));
        }
    });
    ValueSurface::new(surface.date() - 1, grid.knots().clone(), grid.cols(), values)
}

/// Applies the jump condition at date `t_n`, taking the surface at `t_n^+`
/// to `t_n^-`. In dynamic mode the optimal choice is returned as well.
///
/// Static mode withdraws `min(G_n, A_j)`; when the resulting balance falls
/// between guarantee nodes the value is interpolated linearly in `A`.
pub fn jump_step(
    surface: &ValueSurface,
    spec: &ContractSpec,
    grid: &GridSpec,
    n: usize,
    mode: Mode,
) -> Result<(ValueSurface, Option<PolicySlice>)> {
    if n == 0 || n >= spec.periods() {
        return Err(Error::IndexOutOfRange {
            index: n,
            min: 1,
            max: spec.periods().saturating_sub(1),
        });
    }
    if surface.date() != n {
        return Err(Error::InvalidInput(format!(
            "surface is at date {} but the jump is at {n}",
            surface.date()
        )));
    }
    match mode {
        Mode::Dynamic => {
            let (s, p) = jump_dynamic(surface, spec, grid, n, true);
            Ok((s, p))
        }
        Mode::Static => Ok((jump_static(surface, spec, grid, n), None)),
    }
}

pub(super) fn jump_dynamic(
    surface: &ValueSurface,
    spec: &ContractSpec,
    grid: &GridSpec,
    n: usize,
    record: bool,
) -> (ValueSurface, Option<PolicySlice>) {
    let rows = grid.rows();
    let cols = grid.cols();
    let g_n = spec.contractual_amount(n);
    let beta = spec.penalty();
    let a = grid.a();
    let mut values = vec![0.0; rows * cols];
    let mut choice = if record { vec![0u16; rows * cols] } else { Vec::new() };

    let column = |j: usize, out: &mut [f64], arg: Option<&mut [u16]>| {
        out.copy_from_slice(surface.column(j));
        let mut arg = arg;
        if let Some(arg) = arg.as_deref_mut() {
            arg.fill(j as u16);
        }
        // Scanning towards larger withdrawals with `>=` lets the largest
        // withdrawal win ties.
        for k in (0..j).rev() {
            let gamma = a[j] - a[k];
            let c = withdrawal_cashflow(gamma, g_n, beta);
            let ys = surface.column(k);
            let curv = surface.curvature(k);
            let fresh;
            let ws = match grid.jump_weights(j, k) {
                Some(ws) => ws,
                None => {
                    fresh = grid.shift_weights(gamma);
                    &fresh
                }
            };
            for (m, wt) in ws.iter().enumerate() {
                let v = wt.apply(ys, curv) + c;
                if v >= out[m] {
                    out[m] = v;
                    if let Some(arg) = arg.as_deref_mut() {
                        arg[m] = k as u16;
                    }
                }
            }
        }
    };

    if record {
        values
            .par_chunks_mut(rows)
            .zip(choice.par_chunks_mut(rows))
            .enumerate()
            .for_each(|(j, (out, arg))| column(j, out, Some(arg)));
    } else {
        values
            .par_chunks_mut(rows)
            .enumerate()
            .for_each(|(j, out)| column(j, out, None));
    }
    let s = ValueSurface::new(n, grid.knots().clone(), cols, values).expect("surface shape");
    let p = record.then_some(PolicySlice { date: n, rows, choice });
    (s, p)
}

fn jump_static(surface: &ValueSurface, spec: &ContractSpec, grid: &GridSpec, n: usize) -> ValueSurface {
    let rows = grid.rows();
    let g_n = spec.contractual_amount(n);
    let w = grid.w();
    let a = grid.a();
    let tol = 1e-9 * spec.premium();
    let mut values = vec![0.0; rows * grid.cols()];
    values.par_chunks_mut(rows).enumerate().for_each(|(j, out)| {
        let gamma = g_n.min(a[j]);
        let target = a[j] - gamma;
        let k = a.partition_point(|&x| x < target - tol);
        let exact = (a[k] - target).abs() <= tol;
        for (o, &wm) in out.iter_mut().zip(w) {
            let x = (wm - gamma).max(0.0);
            let v = if exact {
                surface.eval(k, x)
            } else {
                let t = (target - a[k - 1]) / (a[k] - a[k - 1]);
                (1.0 - t) * surface.eval(k - 1, x) + t * surface.eval(k, x)
            };
            *o = v + gamma;
        }
    });
    ValueSurface::new(n, grid.knots().clone(), grid.cols(), values).expect("surface shape")
}

/// Contract value at `t_0` with `W = A = W(0)`.
pub fn price(
    spec: &ContractSpec,
    market: &MarketTermStructure,
    schedule: &DeathSchedule,
    grid: &GridSpec,
    mode: Mode,
) -> Result<PricingResult> {
    run(spec, market, schedule, grid, mode, false)
}

/// As [`price`], also recording the optimal withdrawal at every date.
pub fn price_with_policy(
    spec: &ContractSpec,
    market: &MarketTermStructure,
    schedule: &DeathSchedule,
    grid: &GridSpec,
) -> Result<PricingResult> {
    run(spec, market, schedule, grid, Mode::Dynamic, true)
}

fn run(
    spec: &ContractSpec,
    market: &MarketTermStructure,
    schedule: &DeathSchedule,
    grid: &GridSpec,
    mode: Mode,
    record: bool,
) -> Result<PricingResult> {
    check_inputs(spec, market, schedule, grid)?;
    let diagnostics = Diagnostics {
        w_intervals: grid.w_intervals(),
        a_points: grid.cols(),
        quad_order: grid.rule().order(),
        periods: spec.periods(),
        w_max: grid.w_max(),
    };
    let (price, policy) = match mode {
        Mode::Static => (price_static(spec, market, schedule, grid)?, None),
        Mode::Dynamic => {
            let start = maturity_surface(spec, grid);
            let mut policy = record.then(PolicyRecord::default);
            let v = roll_back(
                start,
                spec,
                market,
                grid,
                |n| effective_q(spec, schedule, n),
                policy.as_mut(),
            )?;
            (v, policy)
        }
    };
    Ok(PricingResult {
        price,
        policy,
        diagnostics,
    })
}

/// Rolls a `t_d^-` surface back to `t_0` under optimal withdrawals and returns
/// the value at `(W(0), A_J)`.
pub(super) fn roll_back(
    start: ValueSurface,
    spec: &ContractSpec,
    market: &MarketTermStructure,
    grid: &GridSpec,
    q: impl Fn(usize) -> f64,
    mut policy: Option<&mut PolicyRecord>,
) -> Result<f64> {
    let mut surface = start;
    for n in (2..=surface.date()).rev() {
        let kernel = PeriodKernel::new(market, grid, n, q(n))?;
        let after = expect_surface(&surface, spec, grid, &kernel)?;
        let (before, slice) = jump_dynamic(&after, spec, grid, n - 1, policy.is_some());
        if let (Some(p), Some(s)) = (policy.as_deref_mut(), slice) {
            p.slices.push(s);
        }
        surface = before;
    }
    if let Some(p) = policy {
        p.slices.reverse();
    }
    let kernel = PeriodKernel::new(market, grid, 1, q(1))?;
    let top = grid.cols() - 1;
    let premium = spec.premium();
    let db = spec.death_benefit();
    let a_top = grid.a()[top];
    Ok(kernel.expect(premium, |x| surface.eval(top, x), |x| db.payout(x, a_top, premium)))
}

/// Static strategy: only the contractual balance path matters, so each date
/// needs a single column at the balance left before that date's withdrawal.
fn price_static(
    spec: &ContractSpec,
    market: &MarketTermStructure,
    schedule: &DeathSchedule,
    grid: &GridSpec,
) -> Result<f64> {
    let big_n = spec.periods();
    let premium = spec.premium();
    let beta = spec.penalty();
    let db = spec.death_benefit();
    let knots = grid.knots();
    let w = grid.w();
    let rows = w.len();

    // balance[n] = A(t_n^+) = W(0) - G_1 - ... - G_n
    let mut balance = vec![premium; big_n + 1];
    for n in 1..=big_n {
        balance[n] = balance[n - 1] - spec.contractual_amount(n);
    }
    let a_last = balance[big_n - 1];
    let g_last = spec.contractual_amount(big_n);
    let mut ys: Vec<f64> = w
        .iter()
        .map(|&wm| withdrawal_cashflow(a_last, g_last, beta).max(wm))
        .collect();
    let mut m = vec![0.0; rows];
    let mut next = vec![0.0; rows];
    for n in (2..=big_n).rev() {
        knots.second_derivatives_into(&ys, &mut m);
        let kernel = PeriodKernel::new(market, grid, n, effective_q(spec, schedule, n))?;
        let a_n = balance[n - 1];
        // t_{n-1}^+ values on the grid
        for (i, (o, &wm)) in next.iter_mut().zip(w).enumerate() {
            *o = kernel.expect_node(i, wm, &ys, &m, |x| db.payout(x, a_n, premium));
        }
        // jump at t_{n-1}: withdraw the contractual amount
        let g = spec.contractual_amount(n - 1);
        knots.second_derivatives_into(&next, &mut m);
        for (o, &wm) in ys.iter_mut().zip(w) {
            *o = knots.eval(&next, &m, (wm - g).max(0.0)) + g;
        }
    }
    knots.second_derivatives_into(&ys, &mut m);
    let kernel = PeriodKernel::new(market, grid, 1, effective_q(spec, schedule, 1))?;
    let a0 = balance[0];
    Ok(kernel.expect(premium, |x| knots.eval(&ys, &m, x), |x| db.payout(x, a0, premium)))
}
