//! Contract terms and the cashflows they generate.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Benefit paid to the beneficiaries at the first withdrawal date on or after
/// death.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeathBenefit {
    /// No death benefit; death is ignored and the contract is a plain
    /// withdrawal guarantee.
    None,
    /// `max(A, W)`: the remaining guarantee or the account, whichever is larger.
    Db0,
    /// The premium `W(0)`.
    Db1,
    /// `max(W(0), W)`.
    Db2,
}

impl DeathBenefit {
    /// Payout for wealth `w`, guarantee balance `a` and premium `premium`.
    /// Zero when there is no death benefit.
    #[inline]
    pub fn payout(self, w: f64, a: f64, premium: f64) -> f64 {
        match self {
            DeathBenefit::None => 0.0,
            DeathBenefit::Db0 => a.max(w),
            DeathBenefit::Db1 => premium,
            DeathBenefit::Db2 => premium.max(w),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DeathBenefit::None => "NONE",
            DeathBenefit::Db0 => "DB0",
            DeathBenefit::Db1 => "DB1",
            DeathBenefit::Db2 => "DB2",
        }
    }
}

impl fmt::Display for DeathBenefit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DeathBenefit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NONE" | "" => Ok(DeathBenefit::None),
            "DB0" => Ok(DeathBenefit::Db0),
            "DB1" => Ok(DeathBenefit::Db1),
            "DB2" => Ok(DeathBenefit::Db2),
            other => Err(Error::InvalidInput(format!("unknown death benefit '{other}'"))),
        }
    }
}

/// Wealth and guarantee account balances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccountState {
    pub wealth: f64,
    pub guarantee: f64,
}

impl AccountState {
    pub fn new(wealth: f64, guarantee: f64) -> Self {
        Self { wealth, guarantee }
    }
}

/// Terms of a GMWDB contract.
///
/// Withdrawals happen at `t_n = n / N_w` for `n < N` and at maturity
/// `t_N = T`, with `N = ceil(N_w T)`. The contractual amount for period `n`
/// is `G_n = W(0) (t_n - t_{n-1}) / T`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractSpec {
    premium: f64,
    maturity: f64,
    withdrawals_per_year: u32,
    penalty: f64,
    death_benefit: DeathBenefit,
    db_expiry_age: Option<f64>,
    times: Vec<f64>,
}

impl ContractSpec {
    pub fn new(
        premium: f64,
        maturity: f64,
        withdrawals_per_year: u32,
        penalty: f64,
        death_benefit: DeathBenefit,
    ) -> Result<Self> {
        if !(premium > 0.0 && premium.is_finite()) {
            return Err(Error::InvalidInput(format!("premium {premium} must be positive")));
        }
        if !(maturity > 0.0 && maturity.is_finite()) {
            return Err(Error::InvalidInput(format!("maturity {maturity} must be positive")));
        }
        if withdrawals_per_year == 0 {
            return Err(Error::InvalidInput("need at least one withdrawal per year".into()));
        }
        if !(0.0..=1.0).contains(&penalty) {
            return Err(Error::InvalidInput(format!("penalty {penalty} outside [0, 1]")));
        }
        let times = withdrawal_times(maturity, withdrawals_per_year);
        Ok(Self {
            premium,
            maturity,
            withdrawals_per_year,
            penalty,
            death_benefit,
            db_expiry_age: None,
            times,
        })
    }

    /// Contract with maturity `1/g` for contractual rate `g`.
    pub fn with_contract_rate(
        premium: f64,
        rate: f64,
        withdrawals_per_year: u32,
        penalty: f64,
        death_benefit: DeathBenefit,
    ) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(Error::InvalidInput(format!("contractual rate {rate} must be positive")));
        }
        Self::new(premium, 1.0 / rate, withdrawals_per_year, penalty, death_benefit)
    }

    pub fn with_death_benefit(&self, death_benefit: DeathBenefit) -> Self {
        Self {
            death_benefit,
            ..self.clone()
        }
    }

    pub fn with_db_expiry_age(mut self, age: Option<f64>) -> Self {
        self.db_expiry_age = age;
        self
    }

    pub fn premium(&self) -> f64 {
        self.premium
    }

    pub fn maturity(&self) -> f64 {
        self.maturity
    }

    pub fn withdrawals_per_year(&self) -> u32 {
        self.withdrawals_per_year
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    pub fn death_benefit(&self) -> DeathBenefit {
        self.death_benefit
    }

    pub fn db_expiry_age(&self) -> Option<f64> {
        self.db_expiry_age
    }

    /// Annual contractual withdrawal rate `g = 1/T`.
    pub fn contract_rate(&self) -> f64 {
        1.0 / self.maturity
    }

    /// Number of withdrawal dates `N`.
    pub fn periods(&self) -> usize {
        self.times.len() - 1
    }

    /// Dates `t_0 = 0, t_1, ..., t_N = T`.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Contractual amount `G_n` for period `n` in `1..=N`.
    pub fn contractual_amount(&self, n: usize) -> f64 {
        self.premium * (self.times[n] - self.times[n - 1]) / self.maturity
    }

    fn check_period(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.periods() {
            return Err(Error::IndexOutOfRange {
                index: n,
                min: 1,
                max: self.periods(),
            });
        }
        Ok(())
    }

    /// Cashflow received at date `n` for a withdrawal `gamma`, net of the
    /// penalty on the part above the contractual amount.
    pub fn cashflow(&self, n: usize, gamma: f64) -> Result<f64> {
        self.check_period(n)?;
        if !(gamma >= 0.0) {
            return Err(Error::NegativeWithdrawal(gamma));
        }
        Ok(withdrawal_cashflow(gamma, self.contractual_amount(n), self.penalty))
    }

    /// Benefit paid on death in state `state`.
    pub fn death_payout(&self, state: AccountState) -> Result<f64> {
        if self.death_benefit == DeathBenefit::None {
            return Err(Error::NoDeathBenefit);
        }
        Ok(self.death_benefit.payout(state.wealth, state.guarantee, self.premium))
    }

    /// Maturity payoff: the larger of the account and the remaining guarantee
    /// withdrawn net of penalty.
    pub fn terminal_payoff(&self, state: AccountState) -> f64 {
        let n = self.periods();
        withdrawal_cashflow(state.guarantee, self.contractual_amount(n), self.penalty).max(state.wealth)
    }
}

/// Account balances after withdrawing `gamma`. Wealth is floored at zero.
pub fn apply_withdrawal(state: AccountState, gamma: f64) -> Result<AccountState> {
    if !(gamma >= 0.0) {
        return Err(Error::NegativeWithdrawal(gamma));
    }
    if gamma > state.guarantee {
        return Err(Error::ExceedsGuarantee {
            gamma,
            balance: state.guarantee,
        });
    }
    Ok(AccountState {
        wealth: (state.wealth - gamma).max(0.0),
        guarantee: state.guarantee - gamma,
    })
}

/// `C(gamma)` for contractual amount `g_n` and penalty `beta`.
#[inline]
pub fn withdrawal_cashflow(gamma: f64, g_n: f64, beta: f64) -> f64 {
    if gamma <= g_n {
        gamma
    } else {
        g_n + (1.0 - beta) * (gamma - g_n)
    }
}

fn withdrawal_times(maturity: f64, per_year: u32) -> Vec<f64> {
    let per_year_f = per_year as f64;
    // Guard against 1/g style maturities landing a hair above an integer count.
    let n = ((per_year_f * maturity) - 1e-9).ceil().max(1.0) as usize;
    let mut times: Vec<f64> = (0..=n).map(|i| i as f64 / per_year_f).collect();
    times[n] = maturity;
    times
}
