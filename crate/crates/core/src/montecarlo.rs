//! Forward simulation of the static strategy and the closed-form payoff of
//! the surrender-at-first-date strategy.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::contract::{withdrawal_cashflow, ContractSpec, DeathBenefit};
use crate::error::{Error, Result};
use crate::market::MarketTermStructure;
use crate::mortality::DeathSchedule;

/// Paths per work unit. Results do not depend on the thread count because
/// the chunking is fixed.
const CHUNK: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub paths: usize,
    pub seed: u64,
    /// Pair every path with its mirrored normal draws. `paths` then counts
    /// pairs.
    pub antithetic: bool,
}

impl SimConfig {
    pub fn new(paths: usize, seed: u64) -> Self {
        Self {
            paths,
            seed,
            antithetic: false,
        }
    }

    pub fn with_antithetic(mut self, on: bool) -> Self {
        self.antithetic = on;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// Independent samples behind the estimate (pairs when antithetic).
    pub samples: usize,
}

/// Discounted payoff along one path of normal draws with death mixed in
/// analytically.
struct PathPricer<'a> {
    spec: &'a ContractSpec,
    drift: Vec<f64>,
    vol: Vec<f64>,
    disc: Vec<f64>,
    /// Probability of being alive at `t_n`, `n = 0..=N`.
    alive: Vec<f64>,
    /// Unconditional probability of death in period `n`, index `n - 1`.
    death: Vec<f64>,
}

impl<'a> PathPricer<'a> {
    fn new(spec: &'a ContractSpec, market: &MarketTermStructure, schedule: &DeathSchedule) -> Result<Self> {
        let big_n = spec.periods();
        if market.periods() != big_n || schedule.len() != big_n {
            return Err(Error::InvalidInput(format!(
                "contract has {big_n} periods, market {} and death schedule {}",
                market.periods(),
                schedule.len()
            )));
        }
        let mortal = spec.death_benefit() != DeathBenefit::None;
        let mut drift = Vec::with_capacity(big_n);
        let mut vol = Vec::with_capacity(big_n);
        let mut disc = Vec::with_capacity(big_n + 1);
        disc.push(1.0);
        let mut alive = vec![1.0];
        let mut death = Vec::with_capacity(big_n);
        for n in 1..=big_n {
            let s = market.wealth_step_params(n)?;
            drift.push(s.drift);
            vol.push(s.vol);
            disc.push(market.discount(0, n)?);
            let q = if mortal { schedule.q(n) } else { 0.0 };
            let prev = alive[n - 1];
            death.push(prev * q);
            alive.push(prev * (1.0 - q));
        }
        Ok(Self {
            spec,
            drift,
            vol,
            disc,
            alive,
            death,
        })
    }

    fn value(&self, z: impl Iterator<Item = f64>) -> f64 {
        let spec = self.spec;
        let big_n = spec.periods();
        let premium = spec.premium();
        let db = spec.death_benefit();
        let mut w = premium;
        let mut a = premium;
        let mut total = 0.0;
        for (i, z) in z.enumerate().take(big_n) {
            let n = i + 1;
            w *= (self.drift[i] + self.vol[i] * z).exp();
            if self.death[i] > 0.0 {
                total += self.death[i] * self.disc[n] * db.payout(w, a, premium);
            }
            let g = spec.contractual_amount(n);
            if n < big_n {
                total += self.alive[n] * self.disc[n] * g;
                w = (w - g).max(0.0);
                a -= g;
            } else {
                let payoff = withdrawal_cashflow(a, g, spec.penalty()).max(w);
                total += self.alive[n] * self.disc[n] * payoff;
            }
        }
        total
    }
}

fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Monte Carlo price of the static strategy with the death benefit applied
/// through the schedule's probabilities on every path.
pub fn mc_price_static(
    spec: &ContractSpec,
    market: &MarketTermStructure,
    schedule: &DeathSchedule,
    sim: SimConfig,
) -> Result<McEstimate> {
    if sim.paths == 0 {
        return Err(Error::InvalidInput("need at least one path".into()));
    }
    let pricer = PathPricer::new(spec, market, schedule)?;
    let big_n = spec.periods();
    let chunks = sim.paths.div_ceil(CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(sim.paths);
            let mut z = vec![0.0; big_n];
            let mut vals = Vec::with_capacity(hi - lo);
            for path in lo..hi {
                let mut rng = path_rng(sim.seed, path as u64);
                for x in &mut z {
                    *x = StandardNormal.sample(&mut rng);
                }
                let mut v = pricer.value(z.iter().copied());
                if sim.antithetic {
                    v = 0.5 * (v + pricer.value(z.iter().map(|x| -x)));
                }
                vals.push(v);
            }
            let sum = pairwise_sum(&vals);
            for v in &mut vals {
                *v *= *v;
            }
            (sum, pairwise_sum(&vals))
        })
        .collect();
    let sums: Vec<f64> = partial.iter().map(|p| p.0).collect();
    let squares: Vec<f64> = partial.iter().map(|p| p.1).collect();
    let n = sim.paths as f64;
    let mean = pairwise_sum(&sums) / n;
    let var = if sim.paths > 1 {
        ((pairwise_sum(&squares) - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        std_error: (var / n).sqrt(),
        samples: sim.paths,
    })
}

fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Lower bound on the value of withdrawing the whole guarantee at `t_1` and
/// then waiting for the death benefit:
/// `(1 - p_1) C_1(W(0)) B_{0,1} + W(0) Σ p_n B_{0,n}`.
///
/// The bound depends on neither the fee nor the volatility.
pub fn lower_bound_simple_strategy(
    spec: &ContractSpec,
    market: &MarketTermStructure,
    schedule: &DeathSchedule,
) -> Result<f64> {
    if !matches!(spec.death_benefit(), DeathBenefit::Db1 | DeathBenefit::Db2) {
        return Err(Error::InvalidInput(format!(
            "simple-strategy bound needs DB1 or DB2, got {}",
            spec.death_benefit()
        )));
    }
    let big_n = spec.periods();
    if market.periods() != big_n || schedule.len() != big_n {
        return Err(Error::InvalidInput("period counts disagree".into()));
    }
    let premium = spec.premium();
    let c1 = withdrawal_cashflow(premium, spec.contractual_amount(1), spec.penalty());
    let mut bound = (1.0 - schedule.p(1)) * c1 * market.discount(0, 1)?;
    for n in 1..=big_n {
        bound += premium * schedule.p(n) * market.discount(0, n)?;
    }
    Ok(bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mortality::{death_schedule, LifeTable, Sex};

    fn male60(c: &ContractSpec) -> DeathSchedule {
        death_schedule(&LifeTable::australian(Sex::Male), 60, c.times(), None).unwrap()
    }

    #[test]
    fn deterministic_paths_return_premium() {
        let c = ContractSpec::with_contract_rate(100.0, 0.1, 4, 0.1, DeathBenefit::None).unwrap();
        let m = MarketTermStructure::flat(0.0, 1e-12, 0.0, c.times()).unwrap();
        let s = DeathSchedule::zero(c.times());
        let est = mc_price_static(&c, &m, &s, SimConfig::new(1000, 1)).unwrap();
        assert!((est.mean - 100.0).abs() < 1e-8, "{}", est.mean);
        assert!(est.std_error < 1e-8);
    }

    #[test]
    fn seed_reproduces_bitwise() {
        let c = ContractSpec::with_contract_rate(100.0, 0.2, 4, 0.1, DeathBenefit::Db0).unwrap();
        let m = MarketTermStructure::flat(0.05, 0.2, 0.01, c.times()).unwrap();
        let s = male60(&c);
        let sim = SimConfig::new(40_000, 99);
        let a = mc_price_static(&c, &m, &s, sim).unwrap();
        let b = mc_price_static(&c, &m, &s, sim).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
        let other = mc_price_static(&c, &m, &s, SimConfig::new(40_000, 100)).unwrap();
        assert_ne!(a.mean, other.mean);
    }

    #[test]
    fn antithetic_reduces_variance() {
        let c = ContractSpec::with_contract_rate(100.0, 0.2, 4, 0.1, DeathBenefit::None).unwrap();
        let m = MarketTermStructure::flat(0.05, 0.2, 0.01, c.times()).unwrap();
        let s = DeathSchedule::zero(c.times());
        let plain = mc_price_static(&c, &m, &s, SimConfig::new(20_000, 5)).unwrap();
        let anti = mc_price_static(&c, &m, &s, SimConfig::new(10_000, 5).with_antithetic(true)).unwrap();
        // equal numbers of payoff evaluations
        assert!(
            anti.std_error < plain.std_error,
            "{} vs {}",
            anti.std_error,
            plain.std_error
        );
        assert!((anti.mean - plain.mean).abs() < 4.0 * plain.std_error);
    }

    #[test]
    fn zero_fee_guarantee_has_value() {
        let c = ContractSpec::with_contract_rate(100.0, 0.1, 4, 0.1, DeathBenefit::Db0).unwrap();
        let m = MarketTermStructure::flat(0.05, 0.2, 0.0, c.times()).unwrap();
        let est = mc_price_static(&c, &m, &male60(&c), SimConfig::new(50_000, 3)).unwrap();
        assert!(est.mean > 100.0 + 3.0 * est.std_error);
    }

    #[test]
    fn lower_bound_hand_values() {
        let c = ContractSpec::with_contract_rate(100.0, 0.04, 4, 0.1, DeathBenefit::Db2).unwrap();
        let m = MarketTermStructure::flat(0.05, 0.2, 0.0, c.times()).unwrap();
        assert!((c.contractual_amount(1) - 1.0).abs() < 1e-12);
        let s = male60(&c);
        let b = lower_bound_simple_strategy(&c, &m, &s).unwrap();
        let mut expect = (1.0 - s.p(1)) * 90.1 * (-0.05f64 * 0.25).exp();
        for n in 1..=c.periods() {
            expect += 100.0 * s.p(n) * (-0.05 * c.times()[n]).exp();
        }
        assert!((b - expect).abs() < 1e-10);
        assert!(b > 100.0);
        let none = DeathSchedule::zero(c.times());
        let b0 = lower_bound_simple_strategy(&c, &m, &none).unwrap();
        assert!((b0 - 90.1 * (-0.0125f64).exp()).abs() < 1e-12);
        let db0 = c.with_death_benefit(DeathBenefit::Db0);
        assert!(lower_bound_simple_strategy(&db0, &m, &s).is_err());
    }

    #[test]
    fn lower_bound_is_fee_independent() {
        let c = ContractSpec::with_contract_rate(100.0, 0.05, 4, 0.1, DeathBenefit::Db1).unwrap();
        let m = MarketTermStructure::flat(0.05, 0.2, 0.0, c.times()).unwrap();
        let s = male60(&c);
        let a = lower_bound_simple_strategy(&c, &m, &s).unwrap();
        let b = lower_bound_simple_strategy(&c, &m.with_fee(0.5), &s).unwrap();
        assert_eq!(a, b);
    }
}
