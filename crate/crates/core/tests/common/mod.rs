#![allow(dead_code)]

use std::path::PathBuf;

/// Rows of a comma-separated table under `tests/data`, `#` lines skipped.
pub fn table(name: &str) -> Vec<Vec<f64>> {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "data", name].iter().collect();
    std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.split(',').map(|v| v.trim().parse().expect("numeric cell")).collect())
        .collect()
}

/// Largest `|f(row) − expected|` over a table, with the worst row.
pub fn worst<F: Fn(&[f64]) -> (f64, f64)>(rows: &[Vec<f64>], f: F) -> (f64, Vec<f64>) {
    rows.iter().fold((0.0, vec![]), |(w, r), row| {
        let (got, want) = f(row);
        let e = (got - want).abs();
        if e > w || e.is_nan() {
            (e, row.clone())
        } else {
            (w, r)
        }
    })
}
