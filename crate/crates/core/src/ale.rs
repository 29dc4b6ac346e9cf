//! Accumulated local effects for two covariates.
//!
//! The main effect along axis `dim` integrates the expected partial derivative
//! (averaged over the other axis's marginal) from the lowest support point,
//! using the trapezoid rule on the grid nodes, and is then centered to mean
//! zero under the measure's own marginal. The `{1,2}` term is not computed;
//! whatever the main effects leave unexplained shows up as the decomposition's
//! residual.

use std::collections::BTreeMap;

use crate::decomposition::{Backend, Decomposition, Reference};
use crate::error::{Error, Result};
use crate::functions::{FunctionModel, ModelKind};
use crate::measures::DiscreteJoint;
use crate::subset::Subset;

fn check_inputs(f: &FunctionModel, k: &DiscreteJoint) -> Result<()> {
    if k.dims() != 2 {
        return Err(Error::Unsupported(format!(
            "ALE is implemented for two covariates, got {}",
            k.dims()
        )));
    }
    if f.arity() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: f.arity(),
        });
    }
    Ok(())
}

/// Centered ALE main effect along the zero-based axis `dim`, one value per
/// grid node of that axis.
///
/// Expression and linear models use their exact partial derivative. Tabulated
/// models cannot be evaluated between nodes, so each trapezoid panel is
/// replaced by the exact integral of the derivative of the piecewise-linear
/// interpolant, `E_other[f(z_j, X) − f(z_{j−1}, X)]`.
pub fn ale_main_effect(f: &FunctionModel, k: &DiscreteJoint, dim: usize) -> Result<Vec<f64>> {
    check_inputs(f, k)?;
    if dim > 1 {
        return Err(Error::InvalidArgument(format!("axis {} out of range for ALE", dim + 1)));
    }
    let grid = k.grid();
    let axis = grid.axis(dim);
    if axis.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "axis {} has a single point; ALE needs at least two",
            dim + 1
        )));
    }
    let other = 1 - dim;
    let other_points = grid.axis(other);
    let other_masses = k.axis_masses(other);
    let own_masses = k.axis_masses(dim);

    let at = |z: f64, o: f64| -> [f64; 2] {
        let mut x = [0.0; 2];
        x[dim] = z;
        x[other] = o;
        x
    };
    let expect_other = |g: &dyn Fn(f64) -> Result<f64>| -> Result<f64> {
        let mut total = 0.0;
        for (&o, &m) in other_points.iter().zip(&other_masses) {
            if m > 0.0 {
                total += m * g(o)?;
            }
        }
        Ok(total)
    };

    let mut accumulated = vec![0.0; axis.len()];
    match f.kind() {
        ModelKind::Tabulated { .. } => {
            for j in 1..axis.len() {
                let inc = expect_other(&|o| {
                    Ok(f.evaluate(&at(axis[j], o))? - f.evaluate(&at(axis[j - 1], o))?)
                })?;
                accumulated[j] = accumulated[j - 1] + inc;
            }
        }
        _ => {
            let df = f.differentiate(dim)?;
            let slope: Vec<f64> = axis
                .iter()
                .map(|&z| expect_other(&|o| df.evaluate(&at(z, o))))
                .collect::<Result<_>>()?;
            for j in 1..axis.len() {
                accumulated[j] =
                    accumulated[j - 1] + 0.5 * (axis[j] - axis[j - 1]) * (slope[j] + slope[j - 1]);
            }
        }
    }

    let anchor = own_masses
        .iter()
        .position(|&m| m > 0.0)
        .ok_or_else(|| Error::InvalidDistribution("axis carries no mass".into()))?;
    let base = accumulated[anchor];
    accumulated.iter_mut().for_each(|v| *v -= base);
    let center: f64 = accumulated.iter().zip(&own_masses).map(|(v, m)| v * m).sum();
    Ok(accumulated.into_iter().map(|v| v - center).collect())
}

/// Constant term plus both centered main effects.
pub fn ale_decomposition(f: &FunctionModel, k: &DiscreteJoint) -> Result<Decomposition> {
    check_inputs(f, k)?;
    let target = f.tabulate(k.grid())?;
    let mut components = BTreeMap::new();
    components.insert(Subset::EMPTY, vec![k.expectation(f)?]);
    components.insert(Subset::single(0), ale_main_effect(f, k, 0)?);
    components.insert(Subset::single(1), ale_main_effect(f, k, 1)?);
    Ok(Decomposition::new(
        Backend::Ale,
        k.grid().clone(),
        components,
        target,
        Reference::Measure(k.clone()),
    ))
}
