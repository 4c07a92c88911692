//! Batch runner behind the `gmwdb` binary: reads scenario files, runs
//! pricing tasks on them and writes CSV tables plus a text summary.

pub mod config;
pub mod error;
pub mod report;
pub mod task;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use config::Scenario;
pub use error::CliError;
pub use task::{Outcome, Task};

/// What to run: one task for every scenario, or each scenario's own `task`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    All(Task),
    PerScenario,
}

impl std::str::FromStr for Selection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim().eq_ignore_ascii_case("run") {
            Ok(Selection::PerScenario)
        } else {
            s.parse().map(Selection::All)
        }
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub outcomes: Vec<Outcome>,
    pub files: Vec<PathBuf>,
}

/// Runs the selection over every scenario in `config` using up to `jobs`
/// worker threads and writes the results below `out`.
pub fn run(selection: Selection, config: &Path, out: &Path, jobs: usize) -> Result<Report, CliError> {
    let scenarios = config::load(config)?;
    let work: Vec<(Task, &Scenario)> = scenarios
        .iter()
        .map(|s| match selection {
            Selection::All(t) => Ok((t, s)),
            Selection::PerScenario => s.task.map(|t| (t, s)).ok_or_else(|| {
                CliError::config(&s.source, 0, format!("[{}] has no task key", s.name)).in_scenario(&s.name)
            }),
        })
        .collect::<Result<_, _>>()?;
    report::ensure_dir(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::usage(e.to_string()))?;
    let results: Vec<Result<(Outcome, PathBuf), CliError>> = pool.install(|| {
        work.par_iter()
            .map(|(t, s)| {
                let o = task::execute(*t, s)?;
                let p = report::write_scenario(out, &o)?;
                Ok((o, p))
            })
            .collect()
    });
    let mut outcomes = Vec::with_capacity(results.len());
    let mut files = Vec::new();
    for r in results {
        let (o, p) = r?;
        outcomes.push(o);
        files.push(p);
    }
    files.extend(report::write_tables(out, &outcomes)?);
    Ok(Report { outcomes, files })
}
