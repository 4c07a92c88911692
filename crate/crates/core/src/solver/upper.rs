use super::engine::{check_inputs, roll_back, surface_from};
use super::GridSpec;
use crate::contract::{withdrawal_cashflow, ContractSpec, DeathBenefit};
use crate::error::Result;
use crate::market::MarketTermStructure;
use crate::mortality::DeathSchedule;

/// Perfect-forecast estimate: the mortality-weighted average of optimal
/// values when the date of death is known in advance.
#[derive(Debug, Clone, PartialEq)]
pub struct UpperEstimate {
    pub value: f64,
    /// Value conditional on death in period `d`, for `d = 1..=N`. Periods
    /// with zero death probability are skipped and hold `None`.
    pub by_death_period: Vec<Option<f64>>,
    /// Value conditional on surviving to maturity.
    pub survival: f64,
}

/// Upper estimator of the dynamic price.
///
/// For each death period `d` the holder faces a deterministic horizon: the
/// contract ends at `t_d` with the death benefit on the pre-withdrawal state.
/// Survivors receive the maturity payoff. Each conditional problem is solved
/// without mortality and the results are weighted by the unconditional death
/// probabilities.
pub fn upper_estimator(
    spec: &ContractSpec,
    market: &MarketTermStructure,
    schedule: &DeathSchedule,
    grid: &GridSpec,
) -> Result<UpperEstimate> {
    check_inputs(spec, market, schedule, grid)?;
    let big_n = spec.periods();
    let premium = spec.premium();
    let db = spec.death_benefit();
    let no_death = |_: usize| 0.0;

    let g_last = spec.contractual_amount(big_n);
    let beta = spec.penalty();
    let terminal = surface_from(big_n, grid, |w, a| withdrawal_cashflow(a, g_last, beta).max(w));
    let survival = roll_back(terminal, spec, market, grid, no_death, None)?;
    if db == DeathBenefit::None {
        return Ok(UpperEstimate {
            value: survival,
            by_death_period: vec![None; big_n],
            survival,
        });
    }

    let mut by_death_period = Vec::with_capacity(big_n);
    let mut value = schedule.p_survive() * survival;
    for d in 1..=big_n {
        let p = schedule.p(d);
        if p <= 0.0 {
            by_death_period.push(None);
            continue;
        }
        let start = surface_from(d, grid, |w, a| db.payout(w, a, premium));
        let v = roll_back(start, spec, market, grid, no_death, None)?;
        value += p * v;
        by_death_period.push(Some(v));
    }
    Ok(UpperEstimate {
        value,
        by_death_period,
        survival,
    })
}
