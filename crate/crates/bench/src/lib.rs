//! Shared setup for the benchmarks.

use gmwdb_core::mortality::death_schedule;
use gmwdb_core::{
    ContractSpec, DeathBenefit, DeathSchedule, GridConfig, GridSpec, LifeTable, MarketTermStructure, Sex,
};

/// Quarterly contract with contractual rate `g`, male aged 60, `r = 5%`,
/// `sigma = 20%`, 10% penalty.
pub fn quarterly(g: f64, db: DeathBenefit, fee: f64) -> (ContractSpec, MarketTermStructure, DeathSchedule) {
    let c = ContractSpec::with_contract_rate(100.0, g, 4, 0.1, db).expect("valid contract");
    let m = MarketTermStructure::flat(0.05, 0.2, fee, c.times()).expect("valid market");
    let s = death_schedule(&LifeTable::australian(Sex::Male), 60, c.times(), None).expect("table covers term");
    (c, m, s)
}

pub fn grid(c: &ContractSpec, m: &MarketTermStructure, w: usize, a: usize, q: usize) -> GridSpec {
    GridSpec::build(&GridConfig::default().with_resolution(w, a, q), c, m).expect("valid grid")
}
