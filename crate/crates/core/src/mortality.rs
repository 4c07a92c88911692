//! Life tables and the death probabilities derived from them.
//!
//! Survivor counts are tabulated at integer ages. Counts at fractional ages
//! are obtained by linear interpolation, which corresponds to a uniform
//! distribution of deaths within each year of age.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// The bundled Australian life table (2009-2011), ages 60 to 85.
pub const AUSTRALIAN_2009_2011_CSV: &str = include_str!("../../../data/australian_life_table_2009_2011.csv");

/// File name of the bundled life table.
pub const AUSTRALIAN_2009_2011_FILE: &str = "australian_life_table_2009_2011.csv";

const SCHEDULE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sex {
    Male,
    Female,
}

impl Sex {
    pub fn as_str(self) -> &'static str {
        match self {
            Sex::Male => "male",
            Sex::Female => "female",
        }
    }
}

impl fmt::Display for Sex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "male" | "m" => Ok(Sex::Male),
            "female" | "f" => Ok(Sex::Female),
            other => Err(Error::InvalidInput(format!("unknown sex '{other}'"))),
        }
    }
}

/// Survivor counts by contiguous integer age.
#[derive(Debug, Clone, PartialEq)]
pub struct LifeTable {
    first_age: u32,
    survivors: Vec<f64>,
    sex: String,
    source: String,
}

impl LifeTable {
    /// Builds a table from counts starting at `first_age`.
    pub fn new(first_age: u32, survivors: Vec<f64>, sex: impl Into<String>, source: impl Into<String>) -> Result<Self> {
        if survivors.is_empty() {
            return Err(Error::InvalidTable("no rows".into()));
        }
        for (i, &count) in survivors.iter().enumerate() {
            if !count.is_finite() || count < 0.0 {
                return Err(Error::InvalidTable(format!(
                    "survivor count {count} at age {} is not a non-negative number",
                    first_age as usize + i
                )));
            }
        }
        if let Some(i) = survivors.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::InvalidTable(format!(
                "survivor counts increase from age {} to {}",
                first_age as usize + i,
                first_age as usize + i + 1
            )));
        }
        Ok(Self {
            first_age,
            survivors,
            sex: sex.into(),
            source: source.into(),
        })
    }

    /// The bundled Australian table for the given sex.
    pub fn australian(sex: Sex) -> Self {
        load_life_table(AUSTRALIAN_2009_2011_CSV.as_bytes(), sex.as_str())
            .expect("bundled life table is valid")
            .with_source("ABS Life Tables, Australia 2009-2011")
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }

    pub fn first_age(&self) -> u32 {
        self.first_age
    }

    pub fn last_age(&self) -> u32 {
        self.first_age + self.survivors.len() as u32 - 1
    }

    pub fn sex(&self) -> &str {
        &self.sex
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Survivor count at an integer age, if tabulated.
    pub fn entry(&self, age: u32) -> Option<f64> {
        age.checked_sub(self.first_age)
            .and_then(|i| self.survivors.get(i as usize).copied())
    }

    /// Survivor count at a real age, interpolated linearly between ages.
    pub fn survivors_at(&self, age: f64) -> Result<f64> {
        let min = self.first_age as f64;
        let max = self.last_age() as f64;
        if !(age >= min && age <= max) {
            return Err(Error::AgeOutOfRange { age, min, max });
        }
        let offset = age - min;
        let k = (offset.floor() as usize).min(self.survivors.len().saturating_sub(2));
        if self.survivors.len() == 1 {
            return Ok(self.survivors[0]);
        }
        let frac = offset - k as f64;
        Ok((1.0 - frac) * self.survivors[k] + frac * self.survivors[k + 1])
    }
}

/// Reads a life table in `age,male,female` CSV form and keeps the column for
/// `sex`.
pub fn load_life_table<R: std::io::Read>(reader: R, sex: &str) -> Result<LifeTable> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = csv
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.is_empty() || headers.get(0).map(str::is_empty).unwrap_or(true) {
        return Err(Error::Parse {
            line: 1,
            message: "missing header row".into(),
        });
    }
    if !headers.get(0).unwrap().eq_ignore_ascii_case("age") {
        return Err(Error::Parse {
            line: 1,
            message: format!("first column must be 'age', found '{}'", &headers[0]),
        });
    }
    let wanted = sex.trim();
    let column = headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case(wanted))
        .filter(|&c| c > 0)
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("no column named '{wanted}'"),
        })?;

    let mut first_age = None;
    let mut survivors = Vec::new();
    for (row, record) in csv.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let field = |c: usize| {
            record.get(c).ok_or_else(|| Error::Parse {
                line,
                message: format!("missing column {}", c + 1),
            })
        };
        let age: u32 = field(0)?.parse().map_err(|_| Error::Parse {
            line,
            message: format!("age '{}' is not a non-negative integer", &record[0]),
        })?;
        let count: f64 = field(column)?.parse().map_err(|_| Error::Parse {
            line,
            message: format!("survivor count '{}' is not a number", &record[column]),
        })?;
        match first_age {
            None => first_age = Some(age),
            Some(first) => {
                let expected = first + survivors.len() as u32;
                if age != expected {
                    return Err(Error::InvalidTable(format!(
                        "ages not contiguous: expected {expected}, found {age} at line {line}"
                    )));
                }
            }
        }
        survivors.push(count);
    }
    let first_age = first_age.ok_or_else(|| Error::Parse {
        line: 2,
        message: "no data rows".into(),
    })?;
    LifeTable::new(first_age, survivors, wanted.to_ascii_lowercase(), "")
}

/// Per-period death probabilities for a policyholder of a given start age.
///
/// `q[n-1]` is the probability of dying in period `n` given survival to its
/// start, `p[n-1]` the unconditional probability of dying in period `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeathSchedule {
    q: Vec<f64>,
    p: Vec<f64>,
    p_survive: f64,
    start_age: u32,
    times: Vec<f64>,
}

impl DeathSchedule {
    /// A schedule with no mortality over the given dates.
    pub fn zero(times: &[f64]) -> Self {
        let n = times.len().saturating_sub(1);
        Self {
            q: vec![0.0; n],
            p: vec![0.0; n],
            p_survive: 1.0,
            start_age: 0,
            times: times.to_vec(),
        }
    }

    /// Builds a schedule from conditional death probabilities.
    pub fn from_conditional(q: Vec<f64>, times: &[f64]) -> Result<Self> {
        if q.len() + 1 != times.len() {
            return Err(Error::InvalidInput(format!(
                "{} probabilities for {} periods",
                q.len(),
                times.len().saturating_sub(1)
            )));
        }
        if let Some(bad) = q.iter().find(|&&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::InvalidInput(format!(
                "conditional death probability {bad} outside [0, 1]"
            )));
        }
        let mut alive = 1.0;
        let p = q
            .iter()
            .map(|&qn| {
                let pn = alive * qn;
                alive *= 1.0 - qn;
                pn
            })
            .collect();
        Ok(Self {
            q,
            p,
            p_survive: alive,
            start_age: 0,
            times: times.to_vec(),
        })
    }

    /// Number of periods.
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Conditional death probabilities, one per period.
    pub fn conditional(&self) -> &[f64] {
        &self.q
    }

    /// Unconditional death probabilities, one per period.
    pub fn unconditional(&self) -> &[f64] {
        &self.p
    }

    /// `q_n` for period `n` in `1..=N`.
    pub fn q(&self, n: usize) -> f64 {
        self.q[n - 1]
    }

    /// `p_n` for period `n` in `1..=N`.
    pub fn p(&self, n: usize) -> f64 {
        self.p[n - 1]
    }

    /// Probability of surviving past the last date.
    pub fn p_survive(&self) -> f64 {
        self.p_survive
    }

    pub fn start_age(&self) -> u32 {
        self.start_age
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Whether every conditional probability is zero.
    pub fn is_deathless(&self) -> bool {
        self.q.iter().all(|&q| q == 0.0)
    }
}

/// Death probabilities over the dates `times` (with `times[0] == 0`) for a
/// policyholder aged `start_age` at time zero.
///
/// When `expiry_age` is given, periods ending after that age carry no
/// mortality: the contract then behaves as a plain withdrawal guarantee.
pub fn death_schedule(
    table: &LifeTable,
    start_age: u32,
    times: &[f64],
    expiry_age: Option<f64>,
) -> Result<DeathSchedule> {
    if times.len() < 2 {
        return Err(Error::InvalidInput("need at least one period".into()));
    }
    if times[0] != 0.0 {
        return Err(Error::InvalidInput(format!("first date must be 0, got {}", times[0])));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("dates must be strictly increasing".into()));
    }
    let k0 = start_age as f64;
    let alive: Vec<f64> = times
        .iter()
        .map(|&t| table.survivors_at(k0 + t))
        .collect::<Result<_>>()?;
    let base = alive[0];
    if !(base > 0.0) {
        return Err(Error::InvalidTable(format!("no survivors at start age {start_age}")));
    }

    let n = times.len() - 1;
    let mut q = Vec::with_capacity(n);
    let mut p = Vec::with_capacity(n);
    for i in 1..=n {
        let expired = expiry_age.is_some_and(|e| k0 + times[i] > e);
        if expired || alive[i - 1] <= 0.0 {
            q.push(0.0);
            p.push(0.0);
        } else {
            let deaths = alive[i - 1] - alive[i];
            q.push(deaths / alive[i - 1]);
            p.push(deaths / base);
        }
    }
    let p_survive = 1.0 - p.iter().sum::<f64>();
    debug_assert!(p_survive >= -SCHEDULE_TOL);
    Ok(DeathSchedule {
        q,
        p,
        p_survive: p_survive.max(0.0),
        start_age,
        times: times.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn male() -> LifeTable {
        LifeTable::australian(Sex::Male)
    }

    fn quarterly(years: usize) -> Vec<f64> {
        (0..=4 * years).map(|i| i as f64 / 4.0).collect()
    }

    #[test]
    fn bundled_table_rows() {
        let t = male();
        assert_eq!(t.first_age(), 60);
        assert_eq!(t.last_age(), 85);
        assert_eq!(t.entry(60), Some(91305.0));
        assert_eq!(t.entry(85), Some(42415.0));
        let f = LifeTable::australian(Sex::Female);
        assert_eq!(f.entry(60), Some(94817.0));
        assert_eq!(f.entry(73), Some(85836.0));
    }

    #[test]
    fn load_selects_column() {
        let t = load_life_table("age,male,female\n60,91305,94817\n".as_bytes(), "male").unwrap();
        assert_eq!(t.entry(60), Some(91305.0));
        let t = load_life_table("age,male,female\n60,91305,94817\n".as_bytes(), "Female").unwrap();
        assert_eq!(t.entry(60), Some(94817.0));
    }

    #[test]
    fn load_accepts_decimals() {
        let t = load_life_table("age,male,female\n60,10.5,11\n61,10.25,10\n".as_bytes(), "male").unwrap();
        assert_eq!(t.entry(61), Some(10.25));
    }

    #[test]
    fn empty_stream_is_parse_error() {
        let err = load_life_table("".as_bytes(), "male").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err:?}");
        let err = load_life_table("age,male,female\n".as_bytes(), "male").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err:?}");
    }

    #[test]
    fn malformed_row_is_parse_error() {
        let err = load_life_table("age,male,female\n60,abc,1\n".as_bytes(), "male").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn age_gap_rejected() {
        let err = load_life_table("age,male,female\n60,100,100\n62,90,90\n".as_bytes(), "male").unwrap_err();
        assert!(matches!(err, Error::InvalidTable(_)), "{err:?}");
    }

    #[test]
    fn increasing_counts_rejected() {
        let err = load_life_table("age,male,female\n60,100,100\n61,101,90\n".as_bytes(), "male").unwrap_err();
        assert!(matches!(err, Error::InvalidTable(_)), "{err:?}");
    }

    #[test]
    fn interpolation() {
        let t = male();
        assert_eq!(t.survivors_at(60.0).unwrap(), 91305.0);
        assert_abs_diff_eq!(t.survivors_at(60.25).unwrap(), 91149.75, epsilon = 1e-9);
        for age in 60..=85 {
            assert_eq!(t.survivors_at(age as f64).unwrap(), t.entry(age).unwrap());
        }
        assert!(matches!(t.survivors_at(59.9), Err(Error::AgeOutOfRange { .. })));
        assert!(t.survivors_at(85.01).is_err());
    }

    #[test]
    fn first_quarter_death_probability() {
        let s = death_schedule(&male(), 60, &quarterly(10), None).unwrap();
        assert_abs_diff_eq!(s.q(1), (91305.0 - 91149.75) / 91305.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.q(1), 1.700e-3, epsilon = 1e-6);
        assert_abs_diff_eq!(s.p(1), s.q(1), epsilon = 1e-15);
    }

    #[test]
    fn constant_counts_mean_no_deaths() {
        let t = LifeTable::new(60, vec![100.0; 30], "x", "").unwrap();
        let s = death_schedule(&t, 60, &quarterly(20), None).unwrap();
        assert!(s.is_deathless());
        assert_eq!(s.p_survive(), 1.0);
    }

    #[test]
    fn immediate_expiry_removes_mortality() {
        let s = death_schedule(&male(), 60, &quarterly(10), Some(60.0)).unwrap();
        assert!(s.is_deathless());
        assert_abs_diff_eq!(s.p_survive(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn expiry_mid_contract() {
        let full = death_schedule(&male(), 60, &quarterly(10), None).unwrap();
        let s = death_schedule(&male(), 60, &quarterly(10), Some(65.0)).unwrap();
        for n in 1..=20 {
            assert_eq!(s.q(n), full.q(n));
        }
        for n in 21..=40 {
            assert_eq!(s.q(n), 0.0);
        }
        assert_abs_diff_eq!(s.p_survive(), 87601.0 / 91305.0, epsilon = 1e-12);
    }

    #[test]
    fn out_of_range_horizon() {
        let err = death_schedule(&male(), 60, &quarterly(26), None).unwrap_err();
        assert!(matches!(err, Error::AgeOutOfRange { .. }));
    }

    #[test]
    fn from_conditional_consistency() {
        let times = [0.0, 1.0, 2.0, 3.0];
        let s = DeathSchedule::from_conditional(vec![0.1, 0.2, 0.5], &times).unwrap();
        assert_abs_diff_eq!(s.p(2), 0.9 * 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(s.p_survive(), 0.9 * 0.8 * 0.5, epsilon = 1e-15);
    }

    fn check_consistency(s: &DeathSchedule) {
        let total: f64 = s.unconditional().iter().sum::<f64>() + s.p_survive();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        let mut alive = 1.0;
        for n in 1..=s.len() {
            assert!((0.0..1.0).contains(&s.q(n)));
            assert_abs_diff_eq!(s.p(n), s.q(n) * alive, epsilon = 1e-12);
            alive *= 1.0 - s.q(n);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn schedule_probabilities_consistent(
                start in 60u32..70,
                per_year in 1usize..=12,
                years in 1usize..=15,
                female in any::<bool>(),
                expiry in proptest::option::of(60.0f64..85.0),
            ) {
                let sex = if female { Sex::Female } else { Sex::Male };
                let years = years.min((85 - start) as usize);
                let times: Vec<f64> = (0..=per_year * years)
                    .map(|i| i as f64 / per_year as f64)
                    .collect();
                let s = death_schedule(&LifeTable::australian(sex), start, &times, expiry).unwrap();
                check_consistency(&s);
            }

            #[test]
            fn survivors_monotone(a in 60.0f64..85.0, b in 60.0f64..85.0) {
                let t = LifeTable::australian(Sex::Male);
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                prop_assert!(t.survivors_at(lo).unwrap() >= t.survivors_at(hi).unwrap());
            }

            #[test]
            fn refinement_preserves_interval_mass(
                years in 1usize..=20,
                split in 1usize..=6,
            ) {
                let t = LifeTable::australian(Sex::Female);
                let coarse: Vec<f64> = (0..=years).map(|i| i as f64).collect();
                let fine: Vec<f64> = (0..=years * split)
                    .map(|i| i as f64 / split as f64)
                    .collect();
                let c = death_schedule(&t, 60, &coarse, None).unwrap();
                let f = death_schedule(&t, 60, &fine, None).unwrap();
                for y in 0..years {
                    let fine_mass: f64 = f.unconditional()[y * split..(y + 1) * split].iter().sum();
                    prop_assert!((fine_mass - c.unconditional()[y]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn dense_age_sweep_is_monotone() {
        let t = male();
        let mut prev = f64::INFINITY;
        for i in 0..=25_000 {
            let v = t.survivors_at(60.0 + i as f64 * 1e-3).unwrap();
            assert!(v <= prev);
            prev = v;
        }
    }
}
