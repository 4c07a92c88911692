use gmwdb_core::montecarlo::mc_price_static;
use gmwdb_core::mortality::death_schedule;
use gmwdb_core::solver::price;
use gmwdb_core::{
    ContractSpec, DeathBenefit, DeathSchedule, GridConfig, GridSpec, LifeTable, MarketTermStructure, Mode, Sex,
    SimConfig, BP,
};
use proptest::prelude::*;

fn setup(
    premium: f64,
    g: f64,
    penalty: f64,
    db: DeathBenefit,
    fee_bp: f64,
    res: (usize, usize, usize),
) -> (ContractSpec, MarketTermStructure, DeathSchedule, GridSpec) {
    let spec = ContractSpec::with_contract_rate(premium, g, 4, penalty, db).unwrap();
    let market = MarketTermStructure::flat(0.05, 0.2, fee_bp * BP, spec.times()).unwrap();
    let schedule = death_schedule(&LifeTable::australian(Sex::Male), 60, spec.times(), None).unwrap();
    let grid = GridSpec::build(
        &GridConfig::default().with_resolution(res.0, res.1, res.2),
        &spec,
        &market,
    )
    .unwrap();
    (spec, market, schedule, grid)
}

const COARSE: (usize, usize, usize) = (120, 30, 16);

fn value(premium: f64, g: f64, penalty: f64, db: DeathBenefit, fee_bp: f64, mode: Mode) -> f64 {
    let (s, m, d, grid) = setup(premium, g, penalty, db, fee_bp, COARSE);
    price(&s, &m, &d, &grid, mode).unwrap().price
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 6,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn higher_fee_lowers_price(g in 0.08f64..0.2, fee in 20.0f64..300.0, bump in 5.0f64..100.0) {
        for mode in [Mode::Static, Mode::Dynamic] {
            let lo = value(100.0, g, 0.1, DeathBenefit::Db0, fee, mode);
            let hi = value(100.0, g, 0.1, DeathBenefit::Db0, fee + bump, mode);
            prop_assert!(hi < lo, "{mode:?}: {hi} >= {lo}");
        }
    }

    #[test]
    fn larger_death_payout_is_worth_more(g in 0.08f64..0.2, fee in 20.0f64..300.0) {
        for mode in [Mode::Static, Mode::Dynamic] {
            let db0 = value(100.0, g, 0.1, DeathBenefit::Db0, fee, mode);
            let db1 = value(100.0, g, 0.1, DeathBenefit::Db1, fee, mode);
            let db2 = value(100.0, g, 0.1, DeathBenefit::Db2, fee, mode);
            prop_assert!(db2 >= db0 - 1e-9 && db2 >= db1 - 1e-9, "{mode:?}: {db0} {db1} {db2}");
        }
    }

    #[test]
    fn heavier_penalty_never_helps(g in 0.08f64..0.2, fee in 20.0f64..300.0, p in 0.0f64..0.5) {
        let soft = value(100.0, g, p, DeathBenefit::Db2, fee, Mode::Dynamic);
        let hard = value(100.0, g, p + 0.2, DeathBenefit::Db2, fee, Mode::Dynamic);
        // Spline error on the coarse grid is a few 1e-5 of the premium.
        prop_assert!(hard <= soft + 1e-3, "{hard} > {soft}");
    }

    #[test]
    fn price_scales_with_premium(g in 0.08f64..0.2, fee in 20.0f64..300.0, k in 0.5f64..20.0) {
        for mode in [Mode::Static, Mode::Dynamic] {
            let one = value(100.0, g, 0.1, DeathBenefit::Db2, fee, mode);
            let scaled = value(100.0 * k, g, 0.1, DeathBenefit::Db2, fee, mode);
            prop_assert!((scaled / k - one).abs() < 1e-8 * one, "{mode:?}: {scaled} vs {k} x {one}");
        }
    }
}

#[test]
fn static_price_agrees_with_simulation() {
    for (g, db, fee) in [(0.1, DeathBenefit::Db1, 80.0), (0.15, DeathBenefit::Db2, 300.0)] {
        let (s, m, d, grid) = setup(100.0, g, 0.1, db, fee, (400, 100, 64));
        let pde = price(&s, &m, &d, &grid, Mode::Static).unwrap().price;
        let mc = mc_price_static(&s, &m, &d, SimConfig::new(100_000, 7)).unwrap();
        let z = (mc.mean - pde) / mc.std_error;
        assert!(
            z.abs() < 4.0,
            "g={g} {db}: pde {pde} mc {} se {}",
            mc.mean,
            mc.std_error
        );
    }
}
