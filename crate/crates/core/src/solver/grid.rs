use std::sync::{Arc, OnceLock};

use crate::contract::ContractSpec;
use crate::error::{Error, Result};
use crate::market::MarketTermStructure;
use crate::quadrature::{gauss_hermite, GaussHermiteRule, SplineKnots, SplineWeights};

/// Placement of the wealth-grid nodes on `[0, W_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WSpacing {
    /// Equal spacing over the whole range.
    Uniform,
    /// Equal spacing on `[0, core_max * W(0)]` using `core_fraction` of the
    /// intervals, then geometrically growing spacing out to `W_max`.
    CoreTail { core_max: f64, core_fraction: f64 },
}

impl Default for WSpacing {
    fn default() -> Self {
        WSpacing::CoreTail {
            core_max: 3.0,
            core_fraction: 0.8,
        }
    }
}

/// Resolution settings from which a [`GridSpec`] is built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    /// Number of wealth intervals `M`.
    pub w_intervals: usize,
    /// Number of guarantee-account intervals `J`, so the step is `W(0) / J`.
    pub a_intervals: usize,
    /// Gauss-Hermite order `q`.
    pub quad_order: usize,
    pub spacing: WSpacing,
    /// Upper wealth boundary as a multiple of the premium. Defaults to
    /// `exp(5 σ_max T)`.
    pub w_max_factor: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            w_intervals: 400,
            a_intervals: 100,
            quad_order: 64,
            spacing: WSpacing::default(),
            w_max_factor: None,
        }
    }
}

impl GridConfig {
    pub fn with_resolution(mut self, w_intervals: usize, a_intervals: usize, quad_order: usize) -> Self {
        self.w_intervals = w_intervals;
        self.a_intervals = a_intervals;
        self.quad_order = quad_order;
        self
    }
}

/// Wealth grid `0 = W_0 < ... < W_M`, guarantee grid `0 = A_1 < ... < A_J`
/// and the quadrature rule used between withdrawal dates.
#[derive(Debug, Clone)]
pub struct GridSpec {
    knots: Arc<SplineKnots>,
    a: Vec<f64>,
    rule: GaussHermiteRule,
    shifts: Arc<OnceLock<ShiftTables>>,
}

/// Spline weights for `Q(max(W_m - γ, 0), ·)` at every wealth node, one
/// table per withdrawal that connects two guarantee nodes. Built on first
/// use and shared by every jump on the grid.
#[derive(Debug)]
struct ShiftTables {
    /// Table `d - 1` serves withdrawals of `d` steps between positive nodes,
    /// present when those nodes are evenly spaced.
    by_steps: Option<Vec<Vec<SplineWeights>>>,
    /// Table `j` serves withdrawing the whole balance `A_j`.
    to_zero: Vec<Vec<SplineWeights>>,
}

impl GridSpec {
    /// Grid from explicit node vectors.
    pub fn new(w: Vec<f64>, a: Vec<f64>, quad_order: usize) -> Result<Self> {
        if w.first() != Some(&0.0) {
            return Err(Error::Grid("wealth grid must start at 0".into()));
        }
        if a.first() != Some(&0.0) {
            return Err(Error::Grid("guarantee grid must start at 0".into()));
        }
        if a.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::Grid("guarantee grid must be strictly increasing".into()));
        }
        if a.len() > u16::MAX as usize {
            return Err(Error::Grid("guarantee grid too large".into()));
        }
        let knots = SplineKnots::new(w).map_err(|e| Error::Grid(e.to_string()))?;
        Ok(Self {
            knots: Arc::new(knots),
            a,
            rule: gauss_hermite(quad_order)?,
            shifts: Arc::new(OnceLock::new()),
        })
    }

    /// Weights for evaluating at `max(W_m - γ, 0)`, all `m`.
    pub fn shift_weights(&self, gamma: f64) -> Vec<SplineWeights> {
        self.w()
            .iter()
            .map(|&w| {
                let x = w - gamma;
                if x <= 0.0 {
                    SplineWeights::node(0)
                } else {
                    self.knots.weights(x)
                }
            })
            .collect()
    }

    /// Cached weights for the withdrawal `A_j - A_k`, when available.
    pub(super) fn jump_weights(&self, j: usize, k: usize) -> Option<&[SplineWeights]> {
        let t = self.shifts.get_or_init(|| self.build_shift_tables());
        if k == 0 {
            return Some(&t.to_zero[j]);
        }
        t.by_steps.as_ref().map(|v| v[j - k - 1].as_slice())
    }

    fn build_shift_tables(&self) -> ShiftTables {
        let a = &self.a;
        let to_zero = a.iter().map(|&x| self.shift_weights(x)).collect();
        let tol = 1e-9 * a.last().unwrap();
        let even = a.len() >= 3 && {
            let h = a[2] - a[1];
            a.iter()
                .enumerate()
                .skip(1)
                .all(|(k, &x)| (x - a[1] - (k - 1) as f64 * h).abs() <= tol)
        };
        let by_steps = even.then(|| {
            let h = a[2] - a[1];
            (1..a.len() - 1).map(|d| self.shift_weights(d as f64 * h)).collect()
        });
        ShiftTables { by_steps, to_zero }
    }

    /// Grid for a contract under a market.
    ///
    /// The guarantee grid steps down from `W(0)` with a spacing close to
    /// `W(0) / J` that divides the contractual amount, so the contractual
    /// withdrawal and its multiples connect grid nodes exactly.
    pub fn build(config: &GridConfig, spec: &ContractSpec, market: &MarketTermStructure) -> Result<Self> {
        let premium = spec.premium();
        let factor = config
            .w_max_factor
            .unwrap_or_else(|| (5.0 * market.max_vol() * spec.maturity()).exp());
        let w = wealth_nodes(premium, premium * factor, config.w_intervals, config.spacing)?;
        let a = guarantee_nodes(premium, spec.contractual_amount(1), config.a_intervals)?;
        Self::new(w, a, config.quad_order)
    }

    /// Grid whose guarantee levels are exactly the balances left after each
    /// contractual withdrawal, as needed by the static strategy.
    pub fn build_static(config: &GridConfig, spec: &ContractSpec, market: &MarketTermStructure) -> Result<Self> {
        let premium = spec.premium();
        let factor = config
            .w_max_factor
            .unwrap_or_else(|| (5.0 * market.max_vol() * spec.maturity()).exp());
        let w = wealth_nodes(premium, premium * factor, config.w_intervals, config.spacing)?;
        Self::new(w, static_levels(spec), config.quad_order)
    }

    pub fn w(&self) -> &[f64] {
        self.knots.xs()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn w_max(&self) -> f64 {
        *self.w().last().unwrap()
    }

    /// Number of wealth intervals `M`.
    pub fn w_intervals(&self) -> usize {
        self.w().len() - 1
    }

    pub fn rows(&self) -> usize {
        self.w().len()
    }

    pub fn cols(&self) -> usize {
        self.a.len()
    }

    pub fn rule(&self) -> &GaussHermiteRule {
        &self.rule
    }

    pub fn knots(&self) -> &Arc<SplineKnots> {
        &self.knots
    }

    /// Index of the guarantee node equal to `level`, within `tol`.
    pub fn find_a(&self, level: f64, tol: f64) -> Option<usize> {
        let i = self.a.partition_point(|&x| x < level - tol);
        (i < self.a.len() && (self.a[i] - level).abs() <= tol).then_some(i)
    }
}

/// Guarantee balances `W(0) - (G_1 + ... + G_n)` for `n = N..0`, ascending.
pub fn static_levels(spec: &ContractSpec) -> Vec<f64> {
    let n = spec.periods();
    let mut levels = Vec::with_capacity(n + 1);
    let mut remaining = spec.premium();
    levels.push(remaining);
    for k in 1..=n {
        remaining -= spec.contractual_amount(k);
        levels.push(remaining.max(0.0));
    }
    levels[n] = 0.0;
    levels.reverse();
    levels
}

fn guarantee_nodes(premium: f64, g: f64, intervals: usize) -> Result<Vec<f64>> {
    if intervals == 0 {
        return Err(Error::Grid("need at least 1 guarantee interval".into()));
    }
    let per_g = ((g * intervals as f64 / premium).round() as usize).max(1);
    let h = g / per_g as f64;
    let steps = (premium / h * (1.0 - 1e-12)).floor() as usize;
    let mut v: Vec<f64> = (0..=steps).map(|k| premium - k as f64 * h).collect();
    if *v.last().unwrap() > 1e-9 * premium {
        v.push(0.0);
    } else {
        *v.last_mut().unwrap() = 0.0;
    }
    v.reverse();
    Ok(v)
}

fn wealth_nodes(premium: f64, w_max: f64, intervals: usize, spacing: WSpacing) -> Result<Vec<f64>> {
    if intervals < 2 {
        return Err(Error::Grid(format!(
            "need at least 2 wealth intervals, got {intervals}"
        )));
    }
    if !(w_max > premium) {
        return Err(Error::Grid(format!("W_max {w_max} must exceed the premium {premium}")));
    }
    match spacing {
        WSpacing::Uniform => Ok((0..=intervals).map(|i| w_max * i as f64 / intervals as f64).collect()),
        WSpacing::CoreTail {
            core_max,
            core_fraction,
        } => {
            if !(core_fraction > 0.0 && core_fraction <= 1.0) || !(core_max > 0.0) {
                return Err(Error::Grid("invalid core/tail spacing parameters".into()));
            }
            let core_hi = core_max * premium;
            if core_hi >= w_max {
                return wealth_nodes(premium, w_max, intervals, WSpacing::Uniform);
            }
            let core_n = ((intervals as f64 * core_fraction).round() as usize).clamp(1, intervals);
            let tail_n = intervals - core_n;
            let h = core_hi / core_n as f64;
            let mut w: Vec<f64> = (0..=core_n).map(|i| h * i as f64).collect();
            w[core_n] = core_hi;
            if tail_n == 0 {
                return Err(Error::Grid("no tail intervals left to reach W_max".into()));
            }
            let span = w_max - core_hi;
            let ratio = tail_ratio(h, span, tail_n);
            let mut x = core_hi;
            let mut step = h;
            for i in 1..=tail_n {
                step *= ratio;
                x += step;
                w.push(if i == tail_n { w_max } else { x });
            }
            Ok(w)
        }
    }
}

/// Growth ratio `ρ ≥ 1` with `Σ_{i=1}^{n} h ρ^i = span`, or the uniform
/// ratio if the span is short enough that no growth is needed.
fn tail_ratio(h: f64, span: f64, n: usize) -> f64 {
    let total = |rho: f64| -> f64 {
        let mut s = 0.0;
        let mut t = h;
        for _ in 0..n {
            t *= rho;
            s += t;
        }
        s
    };
    if total(1.0) >= span {
        return span / (n as f64 * h);
    }
    let (mut lo, mut hi) = (1.0, 2.0);
    while total(hi) < span {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) < span {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::DeathBenefit;

    fn contract(g: f64) -> ContractSpec {
        ContractSpec::with_contract_rate(100.0, g, 4, 0.1, DeathBenefit::None).unwrap()
    }

    #[test]
    fn default_grid_shape() {
        let c = contract(0.1);
        let m = MarketTermStructure::flat(0.05, 0.2, 0.0, c.times()).unwrap();
        let g = GridSpec::build(&GridConfig::default(), &c, &m).unwrap();
        assert_eq!(g.w_intervals(), 400);
        // quarterly G = 2.5 is split into three steps
        assert_eq!(g.cols(), 121);
        assert_eq!(g.w()[0], 0.0);
        assert_eq!(g.a()[0], 0.0);
        assert_eq!(*g.a().last().unwrap(), 100.0);
        assert!(g.w_max() >= 100.0 * (5.0f64 * 0.2 * 10.0).exp() * (1.0 - 1e-12));
        assert!(g.w().windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn guarantee_grid_divides_contractual_amount() {
        for (rate, per_year) in [(0.1, 4), (0.06, 4), (0.15, 4), (0.1, 2)] {
            let c = ContractSpec::with_contract_rate(100.0, rate, per_year, 0.1, DeathBenefit::None).unwrap();
            let m = MarketTermStructure::flat(0.05, 0.2, 0.0, c.times()).unwrap();
            let g = GridSpec::build(&GridConfig::default(), &c, &m).unwrap();
            let a = g.a();
            assert_eq!(a[0], 0.0);
            assert_eq!(*a.last().unwrap(), 100.0);
            assert!(a.len() >= 80 && a.len() <= 140, "{} nodes", a.len());
            let g1 = c.contractual_amount(1);
            // every node above G_1 has a node exactly G_1 below it
            for &x in a.iter().filter(|&&x| x >= g1) {
                assert!(g.find_a(x - g1, 1e-9).is_some(), "{x} - {g1}");
            }
        }
    }

    #[test]
    fn uniform_spacing() {
        let c = contract(0.1);
        let m = MarketTermStructure::flat(0.05, 0.2, 0.0, c.times()).unwrap();
        let cfg = GridConfig {
            spacing: WSpacing::Uniform,
            w_max_factor: Some(4.0),
            ..GridConfig::default()
        };
        let g = GridSpec::build(&cfg, &c, &m).unwrap();
        assert_eq!(g.w()[400], 400.0);
        assert!((g.w()[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn static_levels_cover_contractual_path() {
        let c = contract(0.09);
        let levels = static_levels(&c);
        assert_eq!(levels.len(), c.periods() + 1);
        assert_eq!(levels[0], 0.0);
        assert_eq!(*levels.last().unwrap(), 100.0);
        assert!(levels.windows(2).all(|p| p[1] > p[0]));
        // the short last period leaves a balance of 1.0 before maturity
        assert!((levels[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn find_a_tolerance() {
        let g = GridSpec::new(vec![0.0, 1.0, 2.0], vec![0.0, 0.5, 1.0], 3).unwrap();
        assert_eq!(g.find_a(0.5 + 1e-13, 1e-12), Some(1));
        assert_eq!(g.find_a(0.6, 1e-12), None);
    }

    #[test]
    fn invalid_grids() {
        assert!(GridSpec::new(vec![0.1, 1.0], vec![0.0, 1.0], 3).is_err());
        assert!(GridSpec::new(vec![0.0, 1.0], vec![0.0, 0.0], 3).is_err());
        assert!(GridSpec::new(vec![0.0, 1.0], vec![0.0, 1.0], 0).is_err());
    }
}
