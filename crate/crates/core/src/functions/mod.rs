//! Evaluable models `f: X → R`.

mod expr;

pub use expr::{parse as parse_expr, Expr, Func};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::measures::Grid;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Expression(Expr),
    Linear { intercept: f64, coefficients: Vec<f64> },
    Tabulated { grid: Grid, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionModel {
    arity: usize,
    kind: ModelKind,
}

impl FunctionModel {
    pub fn expression(expr: Expr, arity: usize) -> Result<FunctionModel> {
        if arity == 0 {
            return Err(Error::InvalidArgument("arity must be positive".into()));
        }
        if let Some(v) = expr.max_var() {
            if v >= arity {
                return Err(Error::UnknownVariable { index: v + 1, arity });
            }
        }
        Ok(FunctionModel {
            arity,
            kind: ModelKind::Expression(expr),
        })
    }

    pub fn linear(intercept: f64, coefficients: Vec<f64>) -> FunctionModel {
        FunctionModel {
            arity: coefficients.len().max(1),
            kind: ModelKind::Linear {
                intercept,
                coefficients,
            },
        }
    }

    pub fn constant(value: f64, arity: usize) -> FunctionModel {
        FunctionModel::linear(value, vec![0.0; arity])
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.arity {
            return Err(Error::DimensionMismatch {
                expected: self.arity,
                got: x.len(),
            });
        }
        match &self.kind {
            ModelKind::Expression(e) => e.eval(x),
            ModelKind::Linear {
                intercept,
                coefficients,
            } => Ok(intercept + coefficients.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()),
            ModelKind::Tabulated { grid, values } => grid
                .locate(x)
                .map(|i| values[i])
                .ok_or_else(|| Error::OffGrid(x.to_vec())),
        }
    }

    /// Values at every point of `grid`, row-major.
    pub fn tabulate(&self, grid: &Grid) -> Result<Vec<f64>> {
        grid.points().map(|p| self.evaluate(&p)).collect()
    }

    /// Exact partial derivative along the zero-based axis `dim`.
    pub fn differentiate(&self, dim: usize) -> Result<FunctionModel> {
        if dim >= self.arity {
            return Err(Error::InvalidArgument(format!(
                "axis {} out of range for arity {}",
                dim + 1,
                self.arity
            )));
        }
        let expr = match &self.kind {
            ModelKind::Expression(e) => e.derivative(dim),
            ModelKind::Linear { coefficients, .. } => {
                Expr::Const(coefficients.get(dim).copied().unwrap_or(0.0))
            }
            ModelKind::Tabulated { .. } => {
                return Err(Error::Unsupported(
                    "tabulated models have no symbolic derivative; use finite differences".into(),
                ))
            }
        };
        FunctionModel::expression(expr, self.arity)
    }
}

impl std::fmt::Display for FunctionModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            ModelKind::Expression(e) => write!(f, "{e}"),
            ModelKind::Linear {
                intercept,
                coefficients,
            } => {
                write!(f, "{intercept}")?;
                for (i, b) in coefficients.iter().enumerate() {
                    write!(f, " + {b}*x{}", i + 1)?;
                }
                Ok(())
            }
            ModelKind::Tabulated { grid, .. } => write!(f, "<table on {:?} grid>", grid.shape()),
        }
    }
}

/// Parses an expression model over `x1 … x{arity}`.
pub fn parse_expression(text: &str, arity: usize) -> Result<FunctionModel> {
    FunctionModel::expression(expr::parse(text, arity)?, arity)
}

/// A function given by its value at every point of `grid` (row-major).
pub fn tabulated_model(grid: Grid, values: Vec<f64>) -> Result<FunctionModel> {
    if values.len() != grid.len() {
        return Err(Error::InvalidArgument(format!(
            "table has {} values for {} grid points",
            values.len(),
            grid.len()
        )));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "table value at {:?} is not finite",
            grid.point(i)
        )));
    }
    Ok(FunctionModel {
        arity: grid.dims(),
        kind: ModelKind::Tabulated { grid, values },
    })
}

/// Ordinary least squares with an intercept column.
pub fn fit_linear(xs: &[Vec<f64>], ys: &[f64]) -> Result<FunctionModel> {
    let n = xs.len();
    if n != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: ys.len(),
        });
    }
    let d = xs.first().map_or(0, Vec::len);
    if d == 0 {
        return Err(Error::InvalidArgument("no covariate columns".into()));
    }
    if let Some(row) = xs.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: row.len(),
        });
    }
    if n < d + 1 {
        return Err(Error::RankDeficient(format!(
            "{n} rows cannot identify {} coefficients",
            d + 1
        )));
    }
    let design = DMatrix::from_fn(n, d + 1, |i, j| if j == 0 { 1.0 } else { xs[i][j - 1] });
    let y = DVector::from_column_slice(ys);
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin.is_nan() || smin <= smax * 1e-10 {
        return Err(Error::RankDeficient(format!(
            "design matrix condition exceeds 1e10 (singular values {smax:e} .. {smin:e}); covariates are collinear"
        )));
    }
    let beta = svd
        .solve(&y, 0.0)
        .map_err(|e| Error::RankDeficient(e.to_string()))?;
    Ok(FunctionModel::linear(beta[0], beta.iter().skip(1).copied().collect()))
}
