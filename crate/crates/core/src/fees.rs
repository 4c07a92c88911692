//! Fee calibration: the fair proportional fee, and fixed instalments that pay
//! for a death benefit.

use crate::contract::{ContractSpec, DeathBenefit};
use crate::error::{Error, Result};
use crate::market::MarketTermStructure;
use crate::mortality::DeathSchedule;
use crate::solver::{price, upper_estimator, GridSpec, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeeStatus {
    Found,
    /// The contract is worth more than the premium even at the largest fee
    /// tried.
    NoSolution,
    /// No sign change found, or the iteration budget ran out.
    NotBracketed,
}

impl FeeStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            FeeStatus::Found => "FOUND",
            FeeStatus::NoSolution => "NO_SOLUTION",
            FeeStatus::NotBracketed => "NOT_BRACKETED",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeeSolveResult {
    pub status: FeeStatus,
    /// Fee per year, when found.
    pub alpha: Option<f64>,
    /// `price(alpha) - W(0)` at the last fee evaluated.
    pub residual: f64,
    /// Number of price evaluations.
    pub iterations: usize,
    /// Last bracket probed.
    pub bracket: (f64, f64),
}

/// Bracketing and convergence settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeeSolverConfig {
    /// Absolute tolerance on `price - W(0)`.
    pub tol: f64,
    pub initial_hi: f64,
    /// Largest fee tried before declaring that no solution exists.
    pub max_alpha: f64,
    /// Most negative fee tried when the zero-fee price is below the premium.
    pub min_alpha: f64,
    pub max_evals: usize,
}

impl FeeSolverConfig {
    /// Defaults for premium `w0`: tolerance of one millionth of the premium.
    pub fn for_premium(w0: f64) -> Self {
        Self {
            tol: 1e-6 * w0,
            initial_hi: 0.10,
            max_alpha: 1.0,
            min_alpha: -1.0,
            max_evals: 100,
        }
    }
}

struct Probe<F> {
    f: F,
    evals: usize,
}

impl<F: FnMut(f64) -> Result<f64>> Probe<F> {
    fn at(&mut self, alpha: f64) -> Result<f64> {
        self.evals += 1;
        (self.f)(alpha)
    }
}

fn monotone_check(lo: f64, f_lo: f64, hi: f64, f_hi: f64, slack: f64) -> Result<()> {
    if f_hi > f_lo + slack {
        return Err(Error::NonMonotoneFee {
            lo_alpha: lo,
            lo_value: f_lo,
            hi_alpha: hi,
            hi_value: f_hi,
        });
    }
    Ok(())
}

/// Finds `alpha` with `f(alpha) = 0` for a non-increasing `f`, where
/// `f(alpha) = price(alpha) - W(0)`.
///
/// The bracket starts at `[0, initial_hi]` and doubles up to `max_alpha`;
/// if the zero-fee value is already below the premium it extends to
/// negative fees instead. Inside the bracket Brent's method combines
/// inverse quadratic interpolation, secant steps and bisection.
pub fn solve_fair_fee<F>(f: F, cfg: FeeSolverConfig) -> Result<FeeSolveResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance {} must be positive", cfg.tol)));
    }
    let mut probe = Probe { f, evals: 0 };
    let slack = cfg.tol;
    let not_bracketed = |bracket, residual, evals| FeeSolveResult {
        status: FeeStatus::NotBracketed,
        alpha: None,
        residual,
        iterations: evals,
        bracket,
    };

    let f0 = probe.at(0.0)?;
    if f0.abs() <= cfg.tol {
        return Ok(FeeSolveResult {
            status: FeeStatus::Found,
            alpha: Some(0.0),
            residual: f0,
            iterations: probe.evals,
            bracket: (0.0, 0.0),
        });
    }

    let (mut lo, mut f_lo, mut hi, mut f_hi);
    if f0 > 0.0 {
        lo = 0.0;
        f_lo = f0;
        hi = cfg.initial_hi.min(cfg.max_alpha);
        f_hi = probe.at(hi)?;
        monotone_check(lo, f_lo, hi, f_hi, slack)?;
        while f_hi > 0.0 {
            if hi >= cfg.max_alpha {
                return Ok(FeeSolveResult {
                    status: FeeStatus::NoSolution,
                    alpha: None,
                    residual: f_hi,
                    iterations: probe.evals,
                    bracket: (lo, hi),
                });
            }
            if probe.evals >= cfg.max_evals {
                return Ok(not_bracketed((lo, hi), f_hi, probe.evals));
            }
            lo = hi;
            f_lo = f_hi;
            hi = (2.0 * hi).min(cfg.max_alpha);
            f_hi = probe.at(hi)?;
            monotone_check(lo, f_lo, hi, f_hi, slack)?;
        }
    } else {
        hi = 0.0;
        f_hi = f0;
        lo = (-0.01f64).max(cfg.min_alpha);
        f_lo = probe.at(lo)?;
        monotone_check(lo, f_lo, hi, f_hi, slack)?;
        while f_lo < 0.0 {
            if lo <= cfg.min_alpha || probe.evals >= cfg.max_evals {
                return Ok(not_bracketed((lo, hi), f_lo, probe.evals));
            }
            hi = lo;
            f_hi = f_lo;
            lo = (2.0 * lo).max(cfg.min_alpha);
            f_lo = probe.at(lo)?;
            monotone_check(lo, f_lo, hi, f_hi, slack)?;
        }
    }

    // Brent's method on [lo, hi] with f(lo) >= 0 >= f(hi).
    let (mut a, mut fa) = (lo, f_lo);
    let (mut b, mut fb) = (hi, f_hi);
    let (mut c, mut fc) = (b, fb);
    let (mut d, mut e) = (b - a, b - a);
    loop {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol_x = 4.0 * f64::EPSILON * b.abs() + 1e-14;
        let xm = 0.5 * (c - b);
        if fb.abs() <= cfg.tol || xm.abs() <= tol_x {
            let found = fb.abs() <= cfg.tol;
            return Ok(FeeSolveResult {
                status: if found {
                    FeeStatus::Found
                } else {
                    FeeStatus::NotBracketed
                },
                alpha: found.then_some(b),
                residual: fb,
                iterations: probe.evals,
                bracket: (b.min(c), b.max(c)),
            });
        }
        if probe.evals >= cfg.max_evals {
            return Ok(not_bracketed((b.min(c), b.max(c)), fb, probe.evals));
        }
        if e.abs() >= tol_x && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol_x * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol_x { d } else { tol_x.copysign(xm) };
        fb = probe.at(b)?;
        // b lies inside the bracket, so f(b) must lie between its end values
        let (l, fl_, h, fh) = if c < a { (c, fc, a, fa) } else { (a, fa, c, fc) };
        if b > l && b < h {
            monotone_check(l, fl_, b, fb, slack)?;
            monotone_check(b, fb, h, fh, slack)?;
        }
    }
}

/// Fair proportional fee: the `alpha` at which the contract is worth the
/// premium. The grid is shared by every evaluation.
pub fn fair_fee(
    spec: &ContractSpec,
    market: &MarketTermStructure,
    schedule: &DeathSchedule,
    grid: &GridSpec,
    mode: Mode,
    tol: f64,
) -> Result<FeeSolveResult> {
    let w0 = spec.premium();
    let cfg = FeeSolverConfig {
        tol,
        ..FeeSolverConfig::for_premium(w0)
    };
    solve_fair_fee(
        |alpha| Ok(price(spec, &market.with_fee(alpha), schedule, grid, mode)?.price - w0),
        cfg,
    )
}

/// Fee at which the perfect-forecast upper estimator equals the premium.
/// Since the estimator bounds the dynamic price from above, this fee bounds
/// the fair dynamic fee from above.
pub fn upper_bound_fee(
    spec: &ContractSpec,
    market: &MarketTermStructure,
    schedule: &DeathSchedule,
    grid: &GridSpec,
    tol: f64,
) -> Result<FeeSolveResult> {
    let w0 = spec.premium();
    let cfg = FeeSolverConfig {
        tol,
        ..FeeSolverConfig::for_premium(w0)
    };
    solve_fair_fee(
        |alpha| Ok(upper_estimator(spec, &market.with_fee(alpha), schedule, grid)?.value - w0),
        cfg,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstallmentResult {
    /// Fixed instalment per withdrawal period paying for the death benefit.
    pub lambda: f64,
    /// Instalment of a separate term-life policy paying `W(0)` on death.
    pub lambda_life: f64,
    /// Upfront value of the death benefit, `Q(alpha*) - W(0)`.
    pub upfront: f64,
    /// `rho_n = B_{0,0} + ... + B_{0,n-1}` for `n = 1..=N`.
    pub annuity: Vec<f64>,
}

/// `rho_n` for `n = 1..=N`.
pub fn annuity_factors(market: &MarketTermStructure) -> Result<Vec<f64>> {
    let mut rho = Vec::with_capacity(market.periods());
    let mut acc = 0.0;
    for n in 1..=market.periods() {
        acc += market.discount(0, n - 1)?;
        rho.push(acc);
    }
    Ok(rho)
}

/// Expected present value of one unit paid at the start of every period
/// while alive: `pS rho_N + Σ p_n rho_n`.
fn instalment_annuity(schedule: &DeathSchedule, rho: &[f64]) -> f64 {
    let n = rho.len();
    let mut den = schedule.p_survive() * rho[n - 1];
    for (i, r) in rho.iter().enumerate() {
        den += schedule.p(i + 1) * r;
    }
    den
}

/// Instalment equivalent of the death benefit, given the fair fee `alpha*`
/// of the same contract without it (the fee carried by `market`).
pub fn installment_fee(
    spec: &ContractSpec,
    market: &MarketTermStructure,
    schedule: &DeathSchedule,
    grid: &GridSpec,
    mode: Mode,
) -> Result<InstallmentResult> {
    if !matches!(spec.death_benefit(), DeathBenefit::Db1 | DeathBenefit::Db2) {
        return Err(Error::InvalidInput(format!(
            "instalment fee needs DB1 or DB2, got {}",
            spec.death_benefit()
        )));
    }
    let w0 = spec.premium();
    let q = price(spec, market, schedule, grid, mode)?.price;
    let upfront = q - w0;
    if upfront < -1e-6 * w0 {
        return Err(Error::InconsistentFee(upfront));
    }
    let annuity = annuity_factors(market)?;
    let den = instalment_annuity(schedule, &annuity);
    Ok(InstallmentResult {
        lambda: upfront / den,
        lambda_life: life_insurance_installment(market, schedule, w0)?,
        upfront,
        annuity,
    })
}

/// Instalment of a term-life policy paying `w0` at the end of the period of
/// death: `w0 Σ p_n B_{0,n} / (pS rho_N + Σ p_n rho_n)`.
pub fn life_insurance_installment(market: &MarketTermStructure, schedule: &DeathSchedule, w0: f64) -> Result<f64> {
    if market.periods() != schedule.len() {
        return Err(Error::InvalidInput("period counts disagree".into()));
    }
    let mut num = 0.0;
    for n in 1..=market.periods() {
        num += schedule.p(n) * market.discount(0, n)?;
    }
    let rho = annuity_factors(market)?;
    Ok(w0 * num / instalment_annuity(schedule, &rho))
}
