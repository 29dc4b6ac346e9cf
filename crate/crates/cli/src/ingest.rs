//! CSV samples and their empirical joints.

use std::path::Path;

use decomp_core::measures::{make_joint_pmf, DiscreteJoint, Grid};

use crate::error::{CliError, CliResult, CoreContext};

/// Rows of selected numeric columns, plus an optional response column.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub response: Option<Vec<f64>>,
}

impl Sample {
    /// Observed frequencies on the grid of deduplicated, sorted per-column
    /// values. Unobserved combinations carry zero mass.
    pub fn empirical_joint(&self) -> CliResult<DiscreteJoint> {
        let d = self.columns.len();
        let axes: Vec<Vec<f64>> = (0..d)
            .map(|j| {
                let mut a: Vec<f64> = self.rows.iter().map(|r| r[j]).collect();
                a.sort_by(f64::total_cmp);
                a.dedup();
                a
            })
            .collect();
        let grid = Grid::new(axes).context("empirical support")?;
        let mut weights = vec![0.0; grid.len()];
        let share = 1.0 / self.rows.len() as f64;
        for r in &self.rows {
            let flat = grid.locate(r).expect("row lies on its own support");
            weights[flat] += share;
        }
        make_joint_pmf(grid, weights).context("empirical joint")
    }
}

/// Reads `columns` (and `response`, when given) from a headed CSV file.
pub fn read_sample(path: &Path, columns: &[String], response: Option<&str>) -> CliResult<Sample> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let bad = |e: csv::Error| CliError::Config(format!("{}: {e}", path.display()));
    let header = reader.headers().map_err(bad)?.clone();
    let find = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Config(format!("{}: missing column `{name}`", path.display()))
        })
    };
    if columns.is_empty() {
        return Err(CliError::Config(format!("{}: no covariate columns selected", path.display())));
    }
    let idx: Vec<usize> = columns.iter().map(|c| find(c)).collect::<CliResult<_>>()?;
    let ridx = response.map(find).transpose()?;

    let mut rows = Vec::new();
    let mut ys = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record.map_err(bad)?;
        // Header is line 1.
        let line = n + 2;
        let cell = |i: usize, name: &str| -> CliResult<f64> {
            let text = record.get(i).unwrap_or("");
            text.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    CliError::Config(format!(
                        "{}: line {line}: column `{name}` has non-numeric value `{text}`",
                        path.display()
                    ))
                })
        };
        rows.push(
            idx.iter()
                .zip(columns)
                .map(|(&i, name)| cell(i, name))
                .collect::<CliResult<Vec<f64>>>()?,
        );
        if let (Some(i), Some(name)) = (ridx, response) {
            ys.push(cell(i, name)?);
        }
    }
    if rows.is_empty() {
        return Err(CliError::Config(format!("{}: file has no data rows", path.display())));
    }
    Ok(Sample {
        columns: columns.to_vec(),
        rows,
        response: ridx.map(|_| ys),
    })
}

/// Reads both populations with the same column schema.
pub fn ingest_populations(path_h: &Path, path_k: &Path, columns: &[String]) -> CliResult<(Sample, Sample)> {
    Ok((read_sample(path_h, columns, None)?, read_sample(path_k, columns, None)?))
}
