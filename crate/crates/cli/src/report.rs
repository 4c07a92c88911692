//! CSV and text output. Every file is written to a temporary sibling and
//! renamed into place, so readers never see a partial file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::CliError;
use crate::task::{Outcome, Task, SCENARIO_COLUMNS};

/// Header row for `task`.
pub fn header(task: Task) -> Vec<&'static str> {
    SCENARIO_COLUMNS.iter().chain(task.columns()).copied().collect()
}

/// CSV text with a header and one line per outcome, `\n`-terminated.
pub fn csv_text(task: Task, rows: &[&Outcome]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header(task)).expect("write to memory");
    for r in rows {
        w.write_record(&r.values).expect("write to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 fields")
}

/// Writes `contents` to `path` by way of a temporary file in the same
/// directory.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// File holding a single scenario's result.
pub fn scenario_path(out: &Path, o: &Outcome) -> PathBuf {
    out.join(format!("{}.{}.csv", o.scenario, o.task.as_str()))
}

pub fn write_scenario(out: &Path, o: &Outcome) -> Result<PathBuf, CliError> {
    let path = scenario_path(out, o);
    write_atomic(&path, &csv_text(o.task, &[o]))?;
    Ok(path)
}

/// Writes one combined CSV per task (rows in input order) and
/// `summary.txt`. Returns the paths written.
pub fn write_tables(out: &Path, outcomes: &[Outcome]) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    for task in Task::ALL {
        let rows: Vec<&Outcome> = outcomes.iter().filter(|o| o.task == task).collect();
        if rows.is_empty() {
            continue;
        }
        let path = out.join(format!("{}.csv", task.as_str()));
        write_atomic(&path, &csv_text(task, &rows))?;
        written.push(path);
    }
    let path = out.join("summary.txt");
    write_atomic(&path, &summary_text(outcomes))?;
    written.push(path);
    Ok(written)
}

pub fn summary_text(outcomes: &[Outcome]) -> String {
    let mut s = String::new();
    for o in outcomes {
        s.push_str(&o.summary);
        s.push('\n');
    }
    s
}

pub fn ensure_dir(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(values: &[&str]) -> Outcome {
        Outcome {
            task: Task::LowerBound,
            scenario: "s".into(),
            values: values.iter().map(|v| v.to_string()).collect(),
            summary: "line".into(),
        }
    }

    #[test]
    fn csv_quotes_lists_and_uses_newlines() {
        let o = outcome(&[
            "s",
            "male",
            "60",
            "DB1",
            "dynamic",
            "10",
            "4",
            "0.1",
            "0.05,0.04",
            "0.2",
            "101",
            "1",
            "true",
        ]);
        let text = csv_text(Task::LowerBound, &[&o]);
        let lines: Vec<&str> = text.split('\n').collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("scenario,sex,"));
        assert!(lines[0].ends_with("lower_bound,lower_bound_minus_premium,exceeds_premium"));
        assert!(lines[1].contains(",\"0.05,0.04\","));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write_atomic(&p, "one\n").unwrap();
        write_atomic(&p, "two\n").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two\n");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
