//! Additive decompositions `f(x) = Σ_S L(f, K, S)(x)` and the backends that
//! produce them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ale::ale_decomposition;
use crate::error::{Error, Result};
use crate::fanova::{fanova_generalized, fanova_recursive, fanova_uniform};
use crate::functions::FunctionModel;
use crate::measures::{DiscreteJoint, Grid};
use crate::subset::Subset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    FanovaGeneralized,
    FanovaRecursive,
    FanovaUniform,
    Ale,
}

impl Backend {
    pub const ALL: [Backend; 4] = [
        Backend::FanovaGeneralized,
        Backend::FanovaRecursive,
        Backend::FanovaUniform,
        Backend::Ale,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Backend::FanovaGeneralized => "fanova_generalized",
            Backend::FanovaRecursive => "fanova_recursive",
            Backend::FanovaUniform => "fanova_uniform",
            Backend::Ale => "ale",
        }
    }

    /// Whether the backend produces every component up to order `d`.
    pub fn full_order(self, max_order: usize, dims: usize) -> bool {
        match self {
            Backend::Ale => dims == 1,
            _ => max_order >= dims,
        }
    }

    /// Decomposes `f` with respect to `k`. `max_order` is ignored by ALE,
    /// which always returns the constant and the two main effects.
    pub fn decompose(self, f: &FunctionModel, k: &DiscreteJoint, max_order: usize) -> Result<Decomposition> {
        match self {
            Backend::FanovaGeneralized => fanova_generalized(f, k, max_order),
            Backend::FanovaRecursive => fanova_recursive(f, k, max_order),
            Backend::FanovaUniform => fanova_uniform(f, k.grid(), max_order),
            Backend::Ale => ale_decomposition(f, k),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Backend> {
        Backend::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown backend `{s}` (expected one of fanova_generalized, fanova_recursive, fanova_uniform, ale)"
                ))
            })
    }
}

/// The measure a decomposition was computed against.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    Measure(DiscreteJoint),
    /// Uniform product measure on the grid, independent of any population.
    Uniform,
}

/// Components tabulated on the sub-grid of their subset.
///
/// Component values for `S` are stored row-major over the axes of `S`; the
/// empty subset holds a single constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    backend: Backend,
    grid: Grid,
    components: BTreeMap<Subset, Vec<f64>>,
    target: Vec<f64>,
    reference: Reference,
}

impl Decomposition {
    pub(crate) fn new(
        backend: Backend,
        grid: Grid,
        components: BTreeMap<Subset, Vec<f64>>,
        target: Vec<f64>,
        reference: Reference,
    ) -> Decomposition {
        Decomposition {
            backend,
            grid,
            components,
            target,
            reference,
        }
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn reference(&self) -> &Reference {
        &self.reference
    }

    pub fn subsets(&self) -> impl Iterator<Item = Subset> + '_ {
        self.components.keys().copied()
    }

    pub fn component(&self, s: Subset) -> Option<&[f64]> {
        self.components.get(&s).map(Vec::as_slice)
    }

    /// Replaces one component, e.g. to inject a fault for testing a verifier.
    pub fn set_component(&mut self, s: Subset, values: Vec<f64>) -> Result<()> {
        if values.len() != self.grid.sub_len(s) {
            return Err(Error::DimensionMismatch {
                expected: self.grid.sub_len(s),
                got: values.len(),
            });
        }
        self.components.insert(s, values);
        Ok(())
    }

    /// Component `S` expanded to every point of the full grid.
    pub fn component_on_grid(&self, s: Subset) -> Option<Vec<f64>> {
        let values = self.components.get(&s)?;
        Some(
            self.grid
                .projection_map(s)
                .into_iter()
                .map(|i| values[i])
                .collect(),
        )
    }

    /// Value of component `S` at a full-grid point.
    pub fn value_at(&self, s: Subset, flat: usize) -> Option<f64> {
        let values = self.components.get(&s)?;
        Some(values[self.grid.project(&self.grid.multi_index(flat), s)])
    }

    /// `Σ_S L(S)(x)` at every grid point.
    pub fn reconstruction(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for &s in self.components.keys() {
            let map = self.grid.projection_map(s);
            let values = &self.components[&s];
            for (o, i) in out.iter_mut().zip(map) {
                *o += values[i];
            }
        }
        out
    }

    /// `f(x) − Σ_S L(S)(x)`: the part of `f` not carried by any component.
    pub fn residual(&self) -> Vec<f64> {
        self.reconstruction()
            .iter()
            .zip(&self.target)
            .map(|(r, f)| f - r)
            .collect()
    }

    pub fn max_reconstruction_residual(&self) -> f64 {
        self.residual().iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    /// `E_p[L(S)(X)]` for a measure on the same grid.
    pub fn expectation_under(&self, s: Subset, p: &DiscreteJoint) -> Result<f64> {
        if p.grid() != &self.grid {
            return Err(Error::GridMismatch(
                "measure and decomposition live on different grids".into(),
            ));
        }
        let values = self.components.get(&s).ok_or_else(|| {
            Error::InvalidArgument(format!("decomposition has no component for {s}"))
        })?;
        Ok(p.subset_masses(s)
            .iter()
            .zip(values)
            .map(|(m, v)| m * v)
            .sum())
    }

    /// `E_p[f − Σ_S L(S)]`.
    pub fn residual_expectation(&self, p: &DiscreteJoint) -> Result<f64> {
        if p.grid() != &self.grid {
            return Err(Error::GridMismatch(
                "measure and decomposition live on different grids".into(),
            ));
        }
        Ok(p.expectation_of_table(&self.residual()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backend_names_round_trip() {
        for b in Backend::ALL {
            assert_eq!(b.name().parse::<Backend>().unwrap(), b);
        }
        assert!("partial_dependence".parse::<Backend>().is_err());
    }
}
