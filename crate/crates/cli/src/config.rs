//! Scenario files: flat `key = value` lines with optional `[name]` sections.
//!
//! Keys before the first section are defaults shared by every section. A
//! file without sections describes a single scenario named after the file.
//! `#` starts a comment.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use gmwdb_core::{DeathBenefit, Mode, Sex};

use crate::error::CliError;
use crate::task::Task;

const KEYS: &[&str] = &[
    "premium",
    "maturity_years",
    "contract_rate",
    "withdrawals_per_year",
    "penalty",
    "death_benefit",
    "db_expiry_age",
    "rate",
    "sigma",
    "fee_bp",
    "sex",
    "start_age",
    "life_table",
    "grid_M",
    "grid_J",
    "quad_order",
    "mode",
    "task",
    "mc_paths",
    "mc_seed",
    "mc_antithetic",
];

/// How the contract length is given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Term {
    Years(f64),
    /// Contractual rate `g`, maturity `1/g`.
    Rate(f64),
}

/// One fully resolved scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    /// File the scenario came from, used to resolve relative paths.
    pub source: PathBuf,
    pub task: Option<Task>,
    pub premium: f64,
    pub term: Term,
    pub withdrawals_per_year: u32,
    pub penalty: f64,
    pub death_benefit: DeathBenefit,
    pub db_expiry_age: Option<f64>,
    pub rate: Vec<f64>,
    pub sigma: Vec<f64>,
    pub fee_bp: Option<f64>,
    pub sex: Sex,
    pub start_age: u32,
    pub life_table: Option<String>,
    pub grid_m: usize,
    pub grid_j: usize,
    pub quad_order: usize,
    pub mode: Mode,
    pub mc_paths: usize,
    pub mc_seed: u64,
    pub mc_antithetic: bool,
}

type Entries = BTreeMap<String, (String, usize)>;

/// Reads every scenario under `path`: a single file, or all `*.cfg` files
/// of a directory in name order.
pub fn load(path: &Path) -> Result<Vec<Scenario>, CliError> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| CliError::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "cfg"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(CliError::config(path, 0, "directory holds no .cfg files"));
        }
        let mut all = Vec::new();
        for f in files {
            all.extend(load_file(&f)?);
        }
        check_unique(path, &all)?;
        Ok(all)
    } else {
        load_file(path)
    }
}

fn load_file(path: &Path) -> Result<Vec<Scenario>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into());
    let scenarios = parse(&text, &stem, path)?;
    check_unique(path, &scenarios)?;
    Ok(scenarios)
}

fn check_unique(path: &Path, scenarios: &[Scenario]) -> Result<(), CliError> {
    let mut seen = std::collections::HashSet::new();
    for s in scenarios {
        if !seen.insert(s.name.as_str()) {
            return Err(CliError::config(
                path,
                0,
                format!("duplicate scenario name '{}'", s.name),
            ));
        }
    }
    Ok(())
}

/// Parses config text. `default_name` names the scenario of a file without
/// sections; `source` is recorded on each scenario and used in errors.
pub fn parse(text: &str, default_name: &str, source: &Path) -> Result<Vec<Scenario>, CliError> {
    let mut defaults = Entries::new();
    let mut sections: Vec<(String, usize, Entries)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .map(str::trim)
                .filter(|n| valid_name(n))
                .ok_or_else(|| CliError::config(source, line_no, format!("bad section header '{line}'")))?;
            sections.push((name.to_string(), line_no, Entries::new()));
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::config(source, line_no, format!("expected 'key = value', found '{line}'")))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(CliError::config(source, line_no, format!("unknown key '{key}'")));
        }
        let target = match sections.last_mut() {
            Some((_, _, e)) => e,
            None => &mut defaults,
        };
        if target
            .insert(key.to_string(), (value.trim().to_string(), line_no))
            .is_some()
        {
            return Err(CliError::config(source, line_no, format!("key '{key}' given twice")));
        }
    }
    if sections.is_empty() {
        return Ok(vec![resolve(default_name, &defaults, source)?]);
    }
    sections
        .into_iter()
        .map(|(name, _, own)| {
            let mut merged = defaults.clone();
            merged.extend(own);
            resolve(&name, &merged, source)
        })
        .collect()
}

fn valid_name(n: &str) -> bool {
    !n.is_empty()
        && n.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

struct Lookup<'a> {
    entries: &'a Entries,
    source: &'a Path,
}

impl Lookup<'_> {
    fn raw(&self, key: &str) -> Option<(&str, usize)> {
        self.entries.get(key).map(|(v, l)| (v.as_str(), *l))
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| CliError::config(self.source, line, format!("{key} = '{v}': {e}"))),
        }
    }

    fn or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    fn list(&self, key: &str, default: f64) -> Result<Vec<f64>, CliError> {
        match self.raw(key) {
            None => Ok(vec![default]),
            Some((v, line)) => v
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|e| CliError::config(self.source, line, format!("{key} = '{v}': {e}")))
                })
                .collect(),
        }
    }

    fn line(&self, key: &str) -> usize {
        self.raw(key).map_or(0, |(_, l)| l)
    }
}

fn resolve(name: &str, entries: &Entries, source: &Path) -> Result<Scenario, CliError> {
    let l = Lookup { entries, source };
    let term = match (l.parsed::<f64>("maturity_years")?, l.parsed::<f64>("contract_rate")?) {
        (Some(t), None) => Term::Years(t),
        (None, Some(g)) => Term::Rate(g),
        (Some(_), Some(_)) => {
            return Err(CliError::config(
                source,
                l.line("contract_rate"),
                format!("[{name}] give maturity_years or contract_rate, not both"),
            ))
        }
        (None, None) => {
            return Err(CliError::config(
                source,
                0,
                format!("[{name}] needs maturity_years or contract_rate"),
            ))
        }
    };
    let life_table = l
        .raw("life_table")
        .map(|(v, _)| v.to_string())
        .filter(|v| !v.eq_ignore_ascii_case("bundled"));
    Ok(Scenario {
        name: name.to_string(),
        source: source.to_path_buf(),
        task: l.parsed("task")?,
        premium: l.or("premium", 100.0)?,
        term,
        withdrawals_per_year: l.or("withdrawals_per_year", 1)?,
        penalty: l.or("penalty", 0.1)?,
        death_benefit: l.or("death_benefit", DeathBenefit::None)?,
        db_expiry_age: l.parsed("db_expiry_age")?,
        rate: l.list("rate", 0.05)?,
        sigma: l.list("sigma", 0.2)?,
        fee_bp: l.parsed("fee_bp")?,
        sex: l.or("sex", Sex::Male)?,
        start_age: l.or("start_age", 60)?,
        life_table,
        grid_m: l.or("grid_M", 400)?,
        grid_j: l.or("grid_J", 100)?,
        quad_order: l.or("quad_order", 64)?,
        mode: l.or("mode", Mode::Dynamic)?,
        mc_paths: l.or("mc_paths", 1_000_000)?,
        mc_seed: l.or("mc_seed", 42)?,
        mc_antithetic: l.or("mc_antithetic", false)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(text: &str) -> Result<Vec<Scenario>, CliError> {
        parse(text, "base", Path::new("test.cfg"))
    }

    #[test]
    fn single_scenario_takes_file_name() {
        let s = p("maturity_years = 10\nfee_bp = 25 # comment\n").unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].name, "base");
        assert_eq!(s[0].term, Term::Years(10.0));
        assert_eq!(s[0].fee_bp, Some(25.0));
        assert_eq!(s[0].mode, Mode::Dynamic);
        assert_eq!(s[0].rate, vec![0.05]);
    }

    #[test]
    fn sections_inherit_defaults() {
        let s = p("withdrawals_per_year = 4\nsigma = 0.2\n[a]\ncontract_rate = 0.1\n[b]\ncontract_rate = 0.05\nsigma = 0.3, 0.25\n")
            .unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].withdrawals_per_year, 4);
        assert_eq!(s[1].withdrawals_per_year, 4);
        assert_eq!(s[0].sigma, vec![0.2]);
        assert_eq!(s[1].sigma, vec![0.3, 0.25]);
        assert_eq!(s[1].term, Term::Rate(0.05));
    }

    #[test]
    fn errors_name_the_line() {
        let e = p("maturity_years = 10\nbogus = 1\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = p("maturity_years = ten\n").unwrap_err();
        assert_eq!(e.line, Some(1));
        assert!(p("fee_bp = 1\n").is_err());
        assert!(p("maturity_years = 1\ncontract_rate = 1\n").is_err());
        assert!(p("maturity_years = 1\n[bad name]\n").is_err());
        assert!(p("maturity_years = 1\nmaturity_years = 2\n").is_err());
        assert!(p("maturity_years = 1\ndeath_benefit = DB9\n").is_err());
    }

    #[test]
    fn bundled_table_keyword() {
        let s = p("maturity_years = 1\nlife_table = bundled\n").unwrap();
        assert_eq!(s[0].life_table, None);
        let s = p("maturity_years = 1\nlife_table = my.csv\n").unwrap();
        assert_eq!(s[0].life_table.as_deref(), Some("my.csv"));
    }
}
