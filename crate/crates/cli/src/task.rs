//! Turning a scenario into core inputs and running one task on it.

use std::env;
use std::fmt;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gmwdb_core::fees::{fair_fee, installment_fee, upper_bound_fee};
use gmwdb_core::montecarlo::{lower_bound_simple_strategy, mc_price_static};
use gmwdb_core::mortality::{death_schedule, load_life_table, AUSTRALIAN_2009_2011_FILE};
use gmwdb_core::solver::price;
use gmwdb_core::{
    ContractSpec, DeathBenefit, DeathSchedule, FeeStatus, GridConfig, GridSpec, LifeTable, MarketTermStructure, Mode,
    SimConfig, BP,
};

use crate::config::{Scenario, Term};
use crate::error::CliError;

/// Environment variable naming the directory life tables are read from.
pub const LIFE_TABLE_DIR_ENV: &str = "GMWDB_LIFE_TABLE_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Task {
    Price,
    FairFee,
    Installment,
    UpperBound,
    LowerBound,
    McCheck,
}

impl Task {
    pub const ALL: [Task; 6] = [
        Task::Price,
        Task::FairFee,
        Task::Installment,
        Task::UpperBound,
        Task::LowerBound,
        Task::McCheck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Price => "price",
            Task::FairFee => "fair-fee",
            Task::Installment => "installment",
            Task::UpperBound => "upper-bound",
            Task::LowerBound => "lower-bound",
            Task::McCheck => "mc-check",
        }
    }

    /// Column names of the task's CSV, after the shared scenario columns.
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Task::Price => &["fee_bp", "price", "price_minus_premium"],
            Task::FairFee => &["status", "fee_bp", "residual", "iterations"],
            Task::Installment => &[
                "alpha_star_bp",
                "lambda_db1_bp_per_period",
                "lambda_db2_bp_per_period",
                "lambda_life_bp_per_period",
                "upfront_db1",
                "upfront_db2",
            ],
            Task::UpperBound => &["status", "fee_bp", "residual", "iterations"],
            Task::LowerBound => &["lower_bound", "lower_bound_minus_premium", "exceeds_premium"],
            Task::McCheck => &[
                "fee_bp",
                "reference_price",
                "mc_price",
                "mc_std_error",
                "mc_paths",
                "mc_seed",
                "z_score",
                "within_3se",
            ],
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim().to_ascii_lowercase().replace('_', "-");
        Task::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown task '{s}'"))
    }
}

/// Columns shared by every task, prefixed to the task's own.
pub const SCENARIO_COLUMNS: &[&str] = &[
    "scenario",
    "sex",
    "start_age",
    "death_benefit",
    "mode",
    "maturity_years",
    "withdrawals_per_year",
    "penalty",
    "rate",
    "sigma",
];

/// Result of one task on one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub task: Task,
    pub scenario: String,
    /// Values for [`SCENARIO_COLUMNS`] followed by [`Task::columns`].
    pub values: Vec<String>,
    /// One human-readable line.
    pub summary: String,
}

/// Core inputs built from a scenario, with the fee taken from `fee_bp`
/// (zero when absent).
pub struct Inputs {
    pub spec: ContractSpec,
    pub market: MarketTermStructure,
    pub schedule: DeathSchedule,
    pub grid: GridSpec,
}

impl Inputs {
    pub fn build(s: &Scenario) -> Result<Self, CliError> {
        let err = |e| CliError::solver(&s.name, e);
        let spec = match s.term {
            Term::Years(t) => ContractSpec::new(s.premium, t, s.withdrawals_per_year, s.penalty, s.death_benefit),
            Term::Rate(g) => {
                ContractSpec::with_contract_rate(s.premium, g, s.withdrawals_per_year, s.penalty, s.death_benefit)
            }
        }
        .map_err(err)?
        .with_db_expiry_age(s.db_expiry_age);
        let n = spec.periods();
        let per_period = |key: &str, xs: &[f64]| -> Result<Vec<f64>, CliError> {
            match xs.len() {
                1 => Ok(vec![xs[0]; n]),
                k if k == n => Ok(xs.to_vec()),
                k => Err(CliError::config(
                    &s.source,
                    0,
                    format!("[{}] {key} has {k} values for {n} periods", s.name),
                )),
            }
        };
        let market = MarketTermStructure::new(
            per_period("rate", &s.rate)?,
            per_period("sigma", &s.sigma)?,
            s.fee_bp.unwrap_or(0.0) * BP,
            spec.times().to_vec(),
        )
        .map_err(err)?;
        let (table, origin) = life_table(s)?;
        let schedule = death_schedule(&table, s.start_age, spec.times(), s.db_expiry_age)
            .map_err(|e| CliError::data(&origin, e.to_string()).in_scenario(&s.name))?;
        let cfg = GridConfig::default().with_resolution(s.grid_m, s.grid_j, s.quad_order);
        let grid = GridSpec::build(&cfg, &spec, &market).map_err(err)?;
        Ok(Self {
            spec,
            market,
            schedule,
            grid,
        })
    }
}

/// Life table for the scenario and where it came from.
fn life_table(s: &Scenario) -> Result<(LifeTable, PathBuf), CliError> {
    let dir = env::var_os(LIFE_TABLE_DIR_ENV).map(PathBuf::from);
    let path = match (&s.life_table, dir) {
        (None, None) => return Ok((LifeTable::australian(s.sex), PathBuf::from("bundled"))),
        (None, Some(d)) => d.join(AUSTRALIAN_2009_2011_FILE),
        (Some(f), dir) => {
            let f = Path::new(f);
            if f.is_absolute() {
                f.to_path_buf()
            } else if let Some(d) = dir {
                d.join(f)
            } else {
                s.source.parent().unwrap_or(Path::new(".")).join(f)
            }
        }
    };
    let file = File::open(&path).map_err(|e| CliError::io(&path, e).in_scenario(&s.name))?;
    let table = load_life_table(file, s.sex.as_str())
        .map_err(|e| CliError::data(&path, e.to_string()).in_scenario(&s.name))?
        .with_source(path.display().to_string());
    Ok((table, path))
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), num)
}

fn bp_text(x: Option<f64>) -> String {
    x.map_or_else(|| "N/A".to_string(), |v| format!("{v:.1} bp"))
}

fn scenario_values(s: &Scenario, inputs: &Inputs, db: DeathBenefit, mode: &str) -> Vec<String> {
    let join = |xs: &[f64]| xs.iter().map(|x| num(*x)).collect::<Vec<_>>().join(",");
    vec![
        s.name.clone(),
        s.sex.to_string(),
        s.start_age.to_string(),
        db.to_string(),
        mode.to_string(),
        num(inputs.spec.maturity()),
        s.withdrawals_per_year.to_string(),
        num(s.penalty),
        join(&s.rate),
        join(&s.sigma),
    ]
}

/// Runs `task` on `s`.
pub fn execute(task: Task, s: &Scenario) -> Result<Outcome, CliError> {
    let inputs = Inputs::build(s)?;
    let err = |e| CliError::solver(&s.name, e);
    let Inputs {
        spec,
        market,
        schedule,
        grid,
    } = &inputs;
    let w0 = spec.premium();
    let tol = 1e-6 * w0;
    let db = spec.death_benefit();
    let mut mode = s.mode.to_string();
    let (values, summary) = match task {
        Task::Price => {
            let p = price(spec, market, schedule, grid, s.mode).map_err(err)?.price;
            let fee = market.fee() / BP;
            (
                vec![num(fee), num(p), num(p - w0)],
                format!("price {p:.4} at fee {fee:.1} bp"),
            )
        }
        Task::FairFee => {
            let r = fair_fee(spec, market, schedule, grid, s.mode, tol).map_err(err)?;
            let fee = (r.status == FeeStatus::Found).then(|| r.alpha.unwrap() / BP);
            (
                vec![
                    r.status.as_str().to_string(),
                    opt(fee),
                    num(r.residual),
                    r.iterations.to_string(),
                ],
                format!("fair fee {} ({})", bp_text(fee), r.status.as_str()),
            )
        }
        Task::UpperBound => {
            mode = Mode::Dynamic.to_string();
            let r = upper_bound_fee(spec, market, schedule, grid, tol).map_err(err)?;
            let fee = (r.status == FeeStatus::Found).then(|| r.alpha.unwrap() / BP);
            (
                vec![
                    r.status.as_str().to_string(),
                    opt(fee),
                    num(r.residual),
                    r.iterations.to_string(),
                ],
                format!("upper-bound fee {} ({})", bp_text(fee), r.status.as_str()),
            )
        }
        Task::LowerBound => {
            mode = Mode::Dynamic.to_string();
            let lb = lower_bound_simple_strategy(spec, market, schedule).map_err(err)?;
            let above = lb > w0;
            (
                vec![num(lb), num(lb - w0), above.to_string()],
                format!(
                    "simple-strategy lower bound {lb:.4} ({} premium)",
                    if above { "above" } else { "not above" }
                ),
            )
        }
        Task::McCheck => mc_check(s, &inputs, &mut mode)?,
        Task::Installment => installment(s, &inputs)?,
    };
    let shown_db = if task == Task::Installment && !matches!(db, DeathBenefit::Db1 | DeathBenefit::Db2) {
        DeathBenefit::None
    } else {
        db
    };
    let mut row = scenario_values(s, &inputs, shown_db, &mode);
    row.extend(values);
    Ok(Outcome {
        task,
        scenario: s.name.clone(),
        values: row,
        summary: format!(
            "{:<28} {:<11} {:<4} {:<7} T={:>5.2} {}",
            s.name,
            task.as_str(),
            shown_db.as_str(),
            mode,
            spec.maturity(),
            summary
        ),
    })
}

/// Static Monte Carlo price at `fee_bp`, or at the static fair fee when no
/// fee is given, against the quadrature price at the same fee.
fn mc_check(s: &Scenario, inputs: &Inputs, mode: &mut String) -> Result<(Vec<String>, String), CliError> {
    let err = |e| CliError::solver(&s.name, e);
    let Inputs {
        spec,
        market,
        schedule,
        grid,
    } = inputs;
    *mode = Mode::Static.to_string();
    let w0 = spec.premium();
    let alpha = match s.fee_bp {
        Some(f) => f * BP,
        None => {
            let r = fair_fee(spec, market, schedule, grid, Mode::Static, 1e-6 * w0).map_err(err)?;
            r.alpha.ok_or_else(|| {
                CliError::solver(
                    &s.name,
                    gmwdb_core::Error::InvalidInput(format!("no static fair fee ({})", r.status.as_str())),
                )
            })?
        }
    };
    let market = market.with_fee(alpha);
    let reference = price(spec, &market, schedule, grid, Mode::Static).map_err(err)?.price;
    let sim = SimConfig::new(s.mc_paths, s.mc_seed).with_antithetic(s.mc_antithetic);
    let mc = mc_price_static(spec, &market, schedule, sim).map_err(err)?;
    let z = (mc.mean - reference) / mc.std_error;
    let ok = z.abs() <= 3.0;
    Ok((
        vec![
            num(alpha / BP),
            num(reference),
            num(mc.mean),
            num(mc.std_error),
            s.mc_paths.to_string(),
            s.mc_seed.to_string(),
            num(z),
            ok.to_string(),
        ],
        format!(
            "fee {:.1} bp: mc {:.4} +/- {:.4} vs {:.4} (z = {z:.2})",
            alpha / BP,
            mc.mean,
            mc.std_error,
            reference
        ),
    ))
}

/// Instalments for DB1 and DB2 (or just the scenario's own benefit) on top
/// of the plain withdrawal guarantee's fair fee.
fn installment(s: &Scenario, inputs: &Inputs) -> Result<(Vec<String>, String), CliError> {
    let err = |e| CliError::solver(&s.name, e);
    let Inputs {
        spec,
        market,
        schedule,
        grid,
    } = inputs;
    let w0 = spec.premium();
    let alpha = match s.fee_bp {
        Some(f) => f * BP,
        None => {
            let plain = spec.with_death_benefit(DeathBenefit::None);
            let r = fair_fee(&plain, market, schedule, grid, s.mode, 1e-6 * w0).map_err(err)?;
            r.alpha.ok_or_else(|| {
                CliError::solver(
                    &s.name,
                    gmwdb_core::Error::InvalidInput(format!("no fair fee without death ({})", r.status.as_str())),
                )
            })?
        }
    };
    let market = market.with_fee(alpha);
    let targets: Vec<DeathBenefit> = match spec.death_benefit() {
        d @ (DeathBenefit::Db1 | DeathBenefit::Db2) => vec![d],
        _ => vec![DeathBenefit::Db1, DeathBenefit::Db2],
    };
    let mut lambda = [None, None];
    let mut upfront = [None, None];
    let mut life = gmwdb_core::fees::life_insurance_installment(&market, schedule, w0).map_err(err)?;
    for db in targets {
        let r = installment_fee(&spec.with_death_benefit(db), &market, schedule, grid, s.mode).map_err(err)?;
        let i = usize::from(db == DeathBenefit::Db2);
        lambda[i] = Some(r.lambda / w0 / BP);
        upfront[i] = Some(r.upfront);
        life = r.lambda_life;
    }
    let life_bp = life / w0 / BP;
    Ok((
        vec![
            num(alpha / BP),
            opt(lambda[0]),
            opt(lambda[1]),
            num(life_bp),
            opt(upfront[0]),
            opt(upfront[1]),
        ],
        format!(
            "alpha* {:.1} bp, lambda DB1 {} DB2 {}, life {:.2} bp per period",
            alpha / BP,
            lambda[0].map_or("N/A".into(), |v| format!("{v:.2} bp")),
            lambda[1].map_or("N/A".into(), |v| format!("{v:.2} bp")),
            life_bp
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_names_round_trip() {
        for t in Task::ALL {
            assert_eq!(t.as_str().parse::<Task>().unwrap(), t);
        }
        assert_eq!("FAIR_FEE".parse::<Task>().unwrap(), Task::FairFee);
        assert!("solve".parse::<Task>().is_err());
    }

    #[test]
    fn na_for_missing_values() {
        assert_eq!(opt(None), "NA");
        assert_eq!(opt(Some(1.5)), "1.5");
        assert_eq!(bp_text(Some(140.64)), "140.6 bp");
    }
}
