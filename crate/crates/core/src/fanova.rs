//! Functional ANOVA decompositions.
//!
//! Three routes to the same object:
//!
//! * [`fanova_generalized`]: the measure-weighted least-squares problem with
//!   the weak annihilating conditions as linear constraints, solved as a single
//!   saddle-point system. Works for dependent joints with full support.
//! * [`fanova_recursive`]: the Hoeffding–Sobol recursion
//!   `L(S) = E[f | X_S] − Σ_{V ⊊ S} L(V)`, valid for product measures.
//! * [`fanova_uniform`]: the recursion against the uniform product measure on
//!   the grid, so the result ignores every population measure.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::decomposition::{Backend, Decomposition, Reference};
use crate::error::{Error, Result};
use crate::functions::FunctionModel;
use crate::measures::{DiscreteJoint, Grid};
use crate::subset::Subset;

/// Rows of a constraint block whose Gram–Schmidt remainder falls below this
/// (relative to the row norm) are dropped as redundant.
const REDUNDANCY_TOL: f64 = 1e-10;

fn check_order(f: &FunctionModel, grid: &Grid, max_order: usize) -> Result<()> {
    if f.arity() != grid.dims() {
        return Err(Error::DimensionMismatch {
            expected: grid.dims(),
            got: f.arity(),
        });
    }
    if max_order > grid.dims() {
        return Err(Error::InvalidArgument(format!(
            "max_order {max_order} exceeds {} covariates",
            grid.dims()
        )));
    }
    Ok(())
}

/// Index in the sub-grid of `to` (⊆ `from`) of a position in the sub-grid of `from`.
fn restrict(grid: &Grid, from: Subset, pos: usize, to: Subset) -> usize {
    let idx = grid.sub_multi_index(from, pos);
    from.axes()
        .iter()
        .zip(idx)
        .filter(|(a, _)| to.contains(**a))
        .fold(0, |acc, (&a, i)| acc * grid.axis(a).len() + i)
}

/// Generalized FANOVA against an interior joint `k`.
pub fn fanova_generalized(f: &FunctionModel, k: &DiscreteJoint, max_order: usize) -> Result<Decomposition> {
    let grid = k.grid();
    check_order(f, grid, max_order)?;
    k.require_interior()?;
    let target = f.tabulate(grid)?;
    let d = grid.dims();

    let subsets = Subset::all_up_to(d, max_order);
    // Components touching a single-point axis are pinned to zero: the
    // annihilating condition along that axis leaves no other solution.
    let free: Vec<Subset> = subsets
        .iter()
        .copied()
        .filter(|s| s.axes().iter().all(|&a| grid.axis(a).len() > 1))
        .collect();

    let mut offsets = BTreeMap::new();
    let mut n = 0;
    for &s in &free {
        offsets.insert(s, n);
        n += grid.sub_len(s);
    }

    let maps: Vec<(usize, Vec<usize>)> = free
        .iter()
        .map(|&s| (offsets[&s], grid.projection_map(s)))
        .collect();
    let wmax = k.weights().iter().fold(0.0f64, |m, &w| m.max(w));
    let mut gram = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    let mut active = Vec::with_capacity(maps.len());
    for (p, &w) in k.weights().iter().enumerate() {
        let w = w / wmax;
        active.clear();
        active.extend(maps.iter().map(|(off, map)| off + map[p]));
        for &u in &active {
            rhs[u] += w * target[p];
            for &v in &active {
                gram[(u, v)] += w;
            }
        }
    }

    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for &s in free.iter().filter(|s| !s.is_empty()) {
        rows.extend(
            annihilating_rows(grid, k, s)
                .into_iter()
                .map(|r| (offsets[&s], r)),
        );
    }
    let m = rows.len();
    let size = n + m;
    let mut kkt = DMatrix::<f64>::zeros(size, size);
    kkt.view_mut((0, 0), (n, n)).copy_from(&gram);
    for (r, (off, row)) in rows.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            kkt[(n + r, off + j)] = c;
            kkt[(off + j, n + r)] = c;
        }
    }
    let mut b = DVector::<f64>::zeros(size);
    b.rows_mut(0, n).copy_from(&rhs);

    let lu = kkt.clone().full_piv_lu();
    if !lu.is_invertible() {
        return Err(Error::Singular(
            "FANOVA saddle-point system is singular; check for degenerate grid axes".into(),
        ));
    }
    let mut z = lu
        .solve(&b)
        .ok_or_else(|| Error::Singular("FANOVA saddle-point solve failed".into()))?;
    for _ in 0..2 {
        let r = &b - &kkt * &z;
        if let Some(dz) = lu.solve(&r) {
            z += dz;
        }
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("FANOVA solve produced non-finite values".into()));
    }

    let mut components = BTreeMap::new();
    for &s in &subsets {
        let len = grid.sub_len(s);
        let values = match offsets.get(&s) {
            Some(&off) => z.rows(off, len).iter().copied().collect(),
            None => vec![0.0; len],
        };
        components.insert(s, values);
    }
    Ok(Decomposition::new(
        Backend::FanovaGeneralized,
        grid.clone(),
        components,
        target,
        Reference::Measure(k.clone()),
    ))
}

/// Weak annihilating conditions for block `s`, one row per (axis, slice),
/// scaled to conditional masses and with linearly dependent rows removed.
fn annihilating_rows(grid: &Grid, k: &DiscreteJoint, s: Subset) -> Vec<Vec<f64>> {
    let len = grid.sub_len(s);
    let masses = k.subset_masses(s);
    let mut kept: Vec<Vec<f64>> = Vec::new();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for i in s.axes() {
        let rest = s.without(i);
        let mut slices = vec![vec![0.0; len]; grid.sub_len(rest)];
        for c in 0..len {
            slices[restrict(grid, s, c, rest)][c] = masses[c];
        }
        for mut row in slices {
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= total);
            let norm = dot(&row, &row).sqrt();
            let mut rem = row.clone();
            for q in &basis {
                let proj = dot(&rem, q);
                rem.iter_mut().zip(q).for_each(|(r, qv)| *r -= proj * qv);
            }
            let rn = dot(&rem, &rem).sqrt();
            if rn > REDUNDANCY_TOL * norm {
                rem.iter_mut().for_each(|v| *v /= rn);
                basis.push(rem);
                kept.push(row);
            }
        }
    }
    kept
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Hoeffding–Sobol recursion against the product measure given by `factors`.
fn recursive_with_factors(
    grid: &Grid,
    target: &[f64],
    factors: &[Vec<f64>],
    max_order: usize,
) -> BTreeMap<Subset, Vec<f64>> {
    let d = grid.dims();
    let mut components: BTreeMap<Subset, Vec<f64>> = BTreeMap::new();
    for s in Subset::all_up_to(d, max_order) {
        let mut cond = vec![0.0; grid.sub_len(s)];
        for (p, &fv) in target.iter().enumerate() {
            let idx = grid.multi_index(p);
            let w: f64 = (0..d)
                .filter(|a| !s.contains(*a))
                .map(|a| factors[a][idx[a]])
                .product();
            if w != 0.0 {
                cond[grid.project(&idx, s)] += w * fv;
            }
        }
        for v in s.proper_subsets() {
            let lower = &components[&v];
            for (c, value) in cond.iter_mut().enumerate() {
                *value -= lower[restrict(grid, s, c, v)];
            }
        }
        components.insert(s, cond);
    }
    components
}

/// FANOVA for a product-form joint via the recursive formula.
pub fn fanova_recursive(f: &FunctionModel, k: &DiscreteJoint, max_order: usize) -> Result<Decomposition> {
    let grid = k.grid();
    check_order(f, grid, max_order)?;
    let factors = k.factors().ok_or_else(|| {
        Error::NotProduct("recursive FANOVA needs independent covariates".into())
    })?;
    let target = f.tabulate(grid)?;
    let components = recursive_with_factors(grid, &target, factors, max_order);
    Ok(Decomposition::new(
        Backend::FanovaRecursive,
        grid.clone(),
        components,
        target,
        Reference::Measure(k.clone()),
    ))
}

/// Non-generalized FANOVA: the recursion against the uniform product measure
/// on `grid`.
pub fn fanova_uniform(f: &FunctionModel, grid: &Grid, max_order: usize) -> Result<Decomposition> {
    check_order(f, grid, max_order)?;
    let target = f.tabulate(grid)?;
    let factors: Vec<Vec<f64>> = grid
        .axes()
        .iter()
        .map(|axis| vec![1.0 / axis.len() as f64; axis.len()])
        .collect();
    let components = recursive_with_factors(grid, &target, &factors, max_order);
    Ok(Decomposition::new(
        Backend::FanovaUniform,
        grid.clone(),
        components,
        target,
        Reference::Uniform,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetResidual {
    pub subset: Subset,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnihilatingResidual {
    pub subset: Subset,
    /// One-based axis integrated out.
    pub axis: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub backend: Backend,
    pub mean_residuals: Vec<SubsetResidual>,
    pub annihilating_residuals: Vec<AnnihilatingResidual>,
    pub reconstruction_residual: f64,
}

impl ConstraintReport {
    pub fn max_mean_residual(&self) -> f64 {
        self.mean_residuals.iter().fold(0.0, |m, r| m.max(r.value))
    }

    pub fn max_annihilating_residual(&self) -> f64 {
        self.annihilating_residuals
            .iter()
            .fold(0.0, |m, r| m.max(r.value))
    }

    pub fn all_within(&self, tol: f64) -> bool {
        self.max_mean_residual() <= tol
            && self.max_annihilating_residual() <= tol
            && self.reconstruction_residual <= tol
    }
}

/// Checks mean-zero, weak annihilating and reconstruction conditions of `dec`
/// against the measure `k`.
///
/// Annihilating residuals integrate `L(S)` over one axis `i ∈ S` with the
/// conditional mass `k(x_i | x_{S∖i})` and take the worst slice; slices with
/// zero marginal mass are skipped.
pub fn verify_fanova_constraints(
    dec: &Decomposition,
    k: &DiscreteJoint,
    f: &FunctionModel,
) -> Result<ConstraintReport> {
    let grid = dec.grid();
    if grid != k.grid() {
        return Err(Error::GridMismatch(
            "decomposition and measure live on different grids".into(),
        ));
    }
    let mut mean_residuals = Vec::new();
    let mut annihilating_residuals = Vec::new();
    for s in dec.subsets().filter(|s| !s.is_empty()) {
        let values = dec.component(s).expect("listed subset");
        let masses = k.subset_masses(s);
        let mean: f64 = masses.iter().zip(values).map(|(m, v)| m * v).sum();
        mean_residuals.push(SubsetResidual {
            subset: s,
            value: mean.abs(),
        });
        for i in s.axes() {
            let rest = s.without(i);
            let slices = grid.sub_len(rest);
            let mut num = vec![0.0; slices];
            let mut den = vec![0.0; slices];
            for (c, (&m, &v)) in masses.iter().zip(values).enumerate() {
                let r = restrict(grid, s, c, rest);
                num[r] += m * v;
                den[r] += m;
            }
            let worst = num
                .iter()
                .zip(&den)
                .filter(|(_, d)| **d > 0.0)
                .fold(0.0f64, |acc, (n, d)| acc.max((n / d).abs()));
            annihilating_residuals.push(AnnihilatingResidual {
                subset: s,
                axis: i + 1,
                value: worst,
            });
        }
    }
    let target = f.tabulate(grid)?;
    let reconstruction_residual = dec
        .reconstruction()
        .iter()
        .zip(&target)
        .fold(0.0f64, |m, (r, t)| m.max((r - t).abs()));
    Ok(ConstraintReport {
        backend: dec.backend(),
        mean_residuals,
        annihilating_residuals,
        reconstruction_residual,
    })
}
