//! Finite-support covariate distributions on tensor grids.
//!
//! Every population is represented by dense masses over the full tensor grid,
//! stored row-major (the last axis varies fastest). Continuous populations are
//! brought to this form through Gauss–Hermite quadrature before anything else
//! touches them.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::FunctionModel;
use crate::subset::{Subset, MAX_DIMS};

/// Total mass must be within this of one at construction.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Absolute tolerance for recognising a joint as the product of its marginals.
pub const PRODUCT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    axes: Vec<Vec<f64>>,
}

impl Grid {
    pub fn new(axes: Vec<Vec<f64>>) -> Result<Grid> {
        if axes.is_empty() {
            return Err(Error::InvalidGrid("grid needs at least one axis".into()));
        }
        if axes.len() > MAX_DIMS {
            return Err(Error::InvalidGrid(format!("at most {MAX_DIMS} axes supported")));
        }
        for (i, axis) in axes.iter().enumerate() {
            if axis.is_empty() {
                return Err(Error::InvalidGrid(format!("axis {} is empty", i + 1)));
            }
            if axis.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidGrid(format!("axis {} has non-finite points", i + 1)));
            }
            if axis.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidGrid(format!(
                    "axis {} is not strictly increasing",
                    i + 1
                )));
            }
        }
        Ok(Grid { axes })
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn axis(&self, i: usize) -> &[f64] {
        &self.axes[i]
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    /// Number of points in the full tensor grid.
    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Multi-index of a flat row-major position.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims()];
        for a in (0..self.dims()).rev() {
            let n = self.axes[a].len();
            idx[a] = flat % n;
            flat /= n;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.axes)
            .fold(0, |acc, (&i, axis)| acc * axis.len() + i)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .zip(&self.axes)
            .map(|(&i, axis)| axis[i])
            .collect()
    }

    /// Iterates over all grid points in row-major order.
    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// Flat index of an exact grid point, if it lies on the grid.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.dims() {
            return None;
        }
        let mut idx = Vec::with_capacity(x.len());
        for (v, axis) in x.iter().zip(&self.axes) {
            idx.push(axis.binary_search_by(|p| p.total_cmp(v)).ok()?);
        }
        Some(self.flat_index(&idx))
    }

    /// Number of cells in the sub-grid spanned by the axes of `s`.
    pub fn sub_len(&self, s: Subset) -> usize {
        s.axes().iter().map(|&a| self.axes[a].len()).product()
    }

    /// Row-major index into the sub-grid of `s` of the projection of a full
    /// multi-index.
    pub fn project(&self, idx: &[usize], s: Subset) -> usize {
        s.axes()
            .iter()
            .fold(0, |acc, &a| acc * self.axes[a].len() + idx[a])
    }

    /// Multi-index (over the axes of `s`, ascending) of a sub-grid position.
    pub fn sub_multi_index(&self, s: Subset, mut flat: usize) -> Vec<usize> {
        let axes = s.axes();
        let mut out = vec![0; axes.len()];
        for (n, &a) in axes.iter().enumerate().rev() {
            let len = self.axes[a].len();
            out[n] = flat % len;
            flat /= len;
        }
        out
    }

    pub fn sub_point(&self, s: Subset, flat: usize) -> Vec<f64> {
        s.axes()
            .iter()
            .zip(self.sub_multi_index(s, flat))
            .map(|(&a, i)| self.axes[a][i])
            .collect()
    }

    /// For every full-grid point, its position in the sub-grid of `s`.
    pub fn projection_map(&self, s: Subset) -> Vec<usize> {
        (0..self.len())
            .map(|f| self.project(&self.multi_index(f), s))
            .collect()
    }

    pub fn sub_grid(&self, dims: &[usize]) -> Result<Grid> {
        if dims.is_empty() || dims.iter().any(|&d| d >= self.dims()) {
            return Err(Error::InvalidArgument(format!(
                "axes {dims:?} are not a non-empty subset of 0..{}",
                self.dims()
            )));
        }
        Grid::new(dims.iter().map(|&d| self.axes[d].clone()).collect())
    }

    /// Axis-wise union of supports.
    pub fn union(&self, other: &Grid) -> Result<Grid> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                got: other.dims(),
            });
        }
        let axes = self
            .axes
            .iter()
            .zip(&other.axes)
            .map(|(a, b)| {
                let mut merged: Vec<f64> = a.iter().chain(b).copied().collect();
                merged.sort_by(f64::total_cmp);
                merged.dedup();
                merged
            })
            .collect();
        Grid::new(axes)
    }
}

/// A one-dimensional marginal with strictly positive masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marginal1D {
    points: Vec<f64>,
    masses: Vec<f64>,
}

impl Marginal1D {
    pub fn new(points: Vec<f64>, masses: Vec<f64>) -> Result<Marginal1D> {
        if points.len() != masses.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: masses.len(),
            });
        }
        Grid::new(vec![points.clone()])?;
        if masses.iter().any(|&m| m <= 0.0 || !m.is_finite()) {
            return Err(Error::InvalidDistribution(
                "marginal masses must be positive and finite".into(),
            ));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDistribution(format!(
                "marginal masses sum to {total}, not 1"
            )));
        }
        let masses = masses.iter().map(|m| m / total).collect();
        Ok(Marginal1D { points, masses })
    }

    /// Equal masses on the given points.
    pub fn uniform(points: Vec<f64>) -> Result<Marginal1D> {
        let n = points.len().max(1);
        Marginal1D::new(points, vec![1.0 / n as f64; n])
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    pub fn moment(&self, k: i32) -> f64 {
        self.points
            .iter()
            .zip(&self.masses)
            .map(|(x, m)| m * x.powi(k))
            .sum()
    }
}

/// Gauss–Hermite discretization of `N(mean, sd²)` with `nodes` support points.
///
/// Polynomial moments up to degree `2·nodes − 1` are reproduced exactly (up to
/// rounding). Nodes come from the eigenvalues of the probabilists' Jacobi
/// matrix, are polished by Newton steps on the orthonormal recurrence and then
/// symmetrized; masses are the Christoffel numbers `1 / Σ_k φ_k(x)²`.
pub fn gauss_hermite_marginal(mean: f64, sd: f64, nodes: usize) -> Result<Marginal1D> {
    if nodes == 0 {
        return Err(Error::InvalidArgument("quadrature needs at least one node".into()));
    }
    if sd <= 0.0 || !sd.is_finite() || !mean.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need finite mean and positive sd, got mean {mean}, sd {sd}"
        )));
    }
    let n = nodes;
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64).sqrt()
        } else {
            0.0
        }
    });
    let mut z: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    z.sort_by(f64::total_cmp);

    for x in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = orthonormal_hermite(n, *x);
            if dp == 0.0 {
                break;
            }
            *x -= p / dp;
        }
    }
    for i in 0..n / 2 {
        let half = 0.5 * (z[n - 1 - i] - z[i]);
        z[i] = -half;
        z[n - 1 - i] = half;
    }
    if n % 2 == 1 {
        z[n / 2] = 0.0;
    }

    let raw: Vec<f64> = z.iter().map(|&x| 1.0 / christoffel_sum(n, x)).collect();
    let total: f64 = raw.iter().sum();
    let masses = raw.iter().map(|w| w / total).collect();
    let points = z.iter().map(|x| mean + sd * x).collect();
    Marginal1D::new(points, masses)
}

/// Value and derivative of the degree-`n` orthonormal probabilists' Hermite
/// polynomial.
fn orthonormal_hermite(n: usize, x: f64) -> (f64, f64) {
    let (mut p_prev, mut p) = (0.0, 1.0);
    let (mut d_prev, mut d) = (0.0, 0.0);
    for k in 0..n {
        let kf = k as f64;
        let next = (x * p - kf.sqrt() * p_prev) / (kf + 1.0).sqrt();
        let dnext = (p + x * d - kf.sqrt() * d_prev) / (kf + 1.0).sqrt();
        p_prev = p;
        p = next;
        d_prev = d;
        d = dnext;
    }
    (p, d)
}

fn christoffel_sum(n: usize, x: f64) -> f64 {
    let (mut p_prev, mut p) = (0.0, 1.0);
    let mut sum = 1.0;
    for k in 0..n - 1 {
        let kf = k as f64;
        let next = (x * p - kf.sqrt() * p_prev) / (kf + 1.0).sqrt();
        p_prev = p;
        p = next;
        sum += p * p;
    }
    sum
}

/// A joint probability mass function over a tensor grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteJoint {
    grid: Grid,
    weights: Vec<f64>,
    /// Per-axis masses when the joint is the product of its marginals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    factors: Option<Vec<Vec<f64>>>,
}

impl DiscreteJoint {
    /// Validates and normalizes a dense mass table (row-major over `grid`).
    ///
    /// Zero masses are allowed; [`DiscreteJoint::is_interior`] reports whether
    /// every point carries positive mass.
    pub fn from_weights(grid: Grid, weights: Vec<f64>) -> Result<DiscreteJoint> {
        if weights.len() != grid.len() {
            return Err(Error::InvalidDistribution(format!(
                "mass table has {} entries but the grid has {} points",
                weights.len(),
                grid.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "mass {} at {:?} is negative or not finite",
                weights[i],
                grid.point(i)
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDistribution(format!(
                "masses sum to {total}, not 1"
            )));
        }
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut joint = DiscreteJoint {
            grid,
            weights,
            factors: None,
        };
        joint.factors = joint.detect_factors();
        Ok(joint)
    }

    /// Tensor product of one-dimensional marginals.
    pub fn product(marginals: &[Marginal1D]) -> Result<DiscreteJoint> {
        if marginals.is_empty() {
            return Err(Error::InvalidDistribution("no marginals given".into()));
        }
        let grid = Grid::new(marginals.iter().map(|m| m.points.clone()).collect())?;
        let factors: Vec<Vec<f64>> = marginals.iter().map(|m| m.masses.clone()).collect();
        Ok(Self::from_factors(grid, factors))
    }

    fn from_factors(grid: Grid, factors: Vec<Vec<f64>>) -> DiscreteJoint {
        let weights = (0..grid.len())
            .map(|f| {
                grid.multi_index(f)
                    .iter()
                    .zip(&factors)
                    .map(|(&i, m)| m[i])
                    .product()
            })
            .collect();
        DiscreteJoint {
            grid,
            weights,
            factors: Some(factors),
        }
    }

    fn detect_factors(&self) -> Option<Vec<Vec<f64>>> {
        let factors: Vec<Vec<f64>> = (0..self.grid.dims())
            .map(|a| self.summed_axis_masses(a))
            .collect();
        let matches = (0..self.grid.len()).all(|f| {
            let p: f64 = self
                .grid
                .multi_index(f)
                .iter()
                .zip(&factors)
                .map(|(&i, m)| m[i])
                .product();
            (p - self.weights[f]).abs() <= PRODUCT_TOL
        });
        matches.then_some(factors)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dims(&self) -> usize {
        self.grid.dims()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, flat: usize) -> f64 {
        self.weights[flat]
    }

    /// Mass at an exact grid point (zero off the grid).
    pub fn mass_at(&self, x: &[f64]) -> f64 {
        self.grid.locate(x).map_or(0.0, |f| self.weights[f])
    }

    pub fn is_product(&self) -> bool {
        self.factors.is_some()
    }

    pub fn factors(&self) -> Option<&[Vec<f64>]> {
        self.factors.as_deref()
    }

    pub fn is_interior(&self) -> bool {
        self.weights.iter().all(|&w| w > 0.0)
    }

    /// Errors with the first zero-mass point unless the joint is interior.
    pub fn require_interior(&self) -> Result<()> {
        match self.weights.iter().position(|&w| w <= 0.0) {
            Some(f) => Err(Error::NotInterior(self.grid.point(f))),
            None => Ok(()),
        }
    }

    fn summed_axis_masses(&self, axis: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.axis(axis).len()];
        for (f, &w) in self.weights.iter().enumerate() {
            out[self.grid.multi_index(f)[axis]] += w;
        }
        out
    }

    /// Marginal masses along one axis, aligned with the grid axis.
    pub fn axis_masses(&self, axis: usize) -> Vec<f64> {
        match &self.factors {
            Some(f) => f[axis].clone(),
            None => self.summed_axis_masses(axis),
        }
    }

    /// Marginal masses on the sub-grid of `s`, row-major over its axes.
    /// The empty subset yields the single total mass.
    pub fn subset_masses(&self, s: Subset) -> Vec<f64> {
        if let Some(factors) = &self.factors {
            return (0..self.grid.sub_len(s))
                .map(|c| {
                    s.axes()
                        .iter()
                        .zip(self.grid.sub_multi_index(s, c))
                        .map(|(&a, i)| factors[a][i])
                        .product()
                })
                .collect();
        }
        let mut out = vec![0.0; self.grid.sub_len(s)];
        for (f, &w) in self.weights.iter().enumerate() {
            out[self.grid.project(&self.grid.multi_index(f), s)] += w;
        }
        out
    }

    /// Marginal distribution over the given zero-based axes (kept in
    /// ascending order).
    pub fn marginal_of(&self, dims: &[usize]) -> Result<DiscreteJoint> {
        let s = Subset::from_axes(dims)?;
        if s.is_empty() || s.axes().iter().any(|&a| a >= self.dims()) {
            return Err(Error::InvalidArgument(format!(
                "axes {dims:?} are not a non-empty subset of 0..{}",
                self.dims()
            )));
        }
        let axes = s.axes();
        let grid = self.grid.sub_grid(&axes)?;
        if let Some(factors) = &self.factors {
            let sub = axes.iter().map(|&a| factors[a].clone()).collect();
            return Ok(Self::from_factors(grid, sub));
        }
        let weights = self.subset_masses(s);
        let mut joint = DiscreteJoint {
            grid,
            weights,
            factors: None,
        };
        joint.factors = joint.detect_factors();
        Ok(joint)
    }

    /// `Σ_x p(x)·f(x)` over points of positive mass.
    pub fn expectation(&self, f: &FunctionModel) -> Result<f64> {
        if f.arity() != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                got: f.arity(),
            });
        }
        let mut total = 0.0;
        for (i, &w) in self.weights.iter().enumerate() {
            if w > 0.0 {
                total += w * f.evaluate(&self.grid.point(i))?;
            }
        }
        Ok(total)
    }

    /// Expectation of a function tabulated on the full grid.
    pub fn expectation_of_table(&self, values: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(values)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, v)| w * v)
            .sum()
    }

    /// Re-expresses the joint on a larger grid whose axes contain this grid's
    /// axes; new points carry zero mass.
    pub fn embed(&self, target: &Grid) -> Result<DiscreteJoint> {
        if target.dims() != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: target.dims(),
                got: self.dims(),
            });
        }
        let mut maps = Vec::with_capacity(self.dims());
        for a in 0..self.dims() {
            let map: Option<Vec<usize>> = self
                .grid
                .axis(a)
                .iter()
                .map(|v| target.axis(a).binary_search_by(|p| p.total_cmp(v)).ok())
                .collect();
            maps.push(map.ok_or_else(|| {
                Error::GridMismatch(format!("axis {} is not contained in the target grid", a + 1))
            })?);
        }
        if let Some(factors) = &self.factors {
            let embedded = factors
                .iter()
                .zip(&maps)
                .enumerate()
                .map(|(a, (m, map))| {
                    let mut out = vec![0.0; target.axis(a).len()];
                    for (i, &j) in map.iter().enumerate() {
                        out[j] = m[i];
                    }
                    out
                })
                .collect();
            return Ok(Self::from_factors(target.clone(), embedded));
        }
        let mut weights = vec![0.0; target.len()];
        for (f, &w) in self.weights.iter().enumerate() {
            let idx: Vec<usize> = self
                .grid
                .multi_index(f)
                .iter()
                .zip(&maps)
                .map(|(&i, map)| map[i])
                .collect();
            weights[target.flat_index(&idx)] = w;
        }
        Ok(DiscreteJoint {
            grid: target.clone(),
            weights,
            factors: None,
        })
    }

    /// Total-variation style check for "same distribution".
    pub fn same_as(&self, other: &DiscreteJoint, tol: f64) -> bool {
        self.grid == other.grid
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .all(|(a, b)| (a - b).abs() <= tol)
    }
}

/// Tensor-product joint (`make_product_distribution`).
pub fn make_product_distribution(marginals: &[Marginal1D]) -> Result<DiscreteJoint> {
    DiscreteJoint::product(marginals)
}

/// Joint from an explicit mass table (`make_joint_pmf`).
pub fn make_joint_pmf(grid: Grid, weights: Vec<f64>) -> Result<DiscreteJoint> {
    DiscreteJoint::from_weights(grid, weights)
}

/// Places two populations on the axis-wise union of their supports.
pub fn align_supports(h: &DiscreteJoint, k: &DiscreteJoint) -> Result<(DiscreteJoint, DiscreteJoint)> {
    if h.grid == k.grid {
        return Ok((h.clone(), k.clone()));
    }
    let grid = h.grid.union(&k.grid)?;
    Ok((h.embed(&grid)?, k.embed(&grid)?))
}

/// The partially swapped measure `K(x_{1:j} | x_{j+1:d}) · H(x_{j+1:d})`.
///
/// `j` counts the leading axes taken from `k`: `j = 0` returns `h` and
/// `j = d` returns `k`. Where `h` puts mass on a trailing configuration that
/// `k` does not, the conditional is undefined and an error is returned, except
/// when `k` is product-form, in which case the conditional is `k`'s leading
/// marginal everywhere.
pub fn hybrid_distribution(k: &DiscreteJoint, h: &DiscreteJoint, j: usize) -> Result<DiscreteJoint> {
    if k.grid != h.grid {
        return Err(Error::GridMismatch("hybrid needs both populations on one grid".into()));
    }
    let d = k.dims();
    if j > d {
        return Err(Error::InvalidArgument(format!("swap count {j} exceeds {d} axes")));
    }
    if j == 0 {
        return Ok(h.clone());
    }
    if j == d {
        return Ok(k.clone());
    }
    if let (Some(kf), Some(hf)) = (&k.factors, &h.factors) {
        let factors = kf[..j].iter().chain(&hf[j..]).cloned().collect();
        return Ok(DiscreteJoint::from_factors(k.grid.clone(), factors));
    }

    let lead = Subset::full(j);
    let trail = Subset::full(d).without_all(lead);
    let lead_len = k.grid.sub_len(lead);
    let trail_len = k.grid.sub_len(trail);
    let k_trail = k.subset_masses(trail);
    let h_trail = h.subset_masses(trail);
    let k_lead = k.factors.as_ref().map(|_| k.subset_masses(lead));

    let mut weights = vec![0.0; k.grid.len()];
    for t in 0..trail_len {
        if h_trail[t] <= 0.0 {
            continue;
        }
        if k_trail[t] > 0.0 {
            for l in 0..lead_len {
                let f = l * trail_len + t;
                weights[f] = k.weights[f] / k_trail[t] * h_trail[t];
            }
        } else if let Some(k_lead) = &k_lead {
            for l in 0..lead_len {
                weights[l * trail_len + t] = k_lead[l] * h_trail[t];
            }
        } else {
            return Err(Error::UndefinedConditional {
                point: k.grid.sub_point(trail, t),
                message: format!(
                    "K has no mass on trailing axes {trail} where H does; populations must share support"
                ),
            });
        }
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let mut joint = DiscreteJoint {
        grid: k.grid.clone(),
        weights,
        factors: None,
    };
    joint.factors = joint.detect_factors();
    Ok(joint)
}

impl Subset {
    fn without_all(self, other: Subset) -> Subset {
        other.axes().into_iter().fold(self, |s, a| s.without(a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bern(p: f64) -> Marginal1D {
        Marginal1D::new(vec![0.0, 1.0], vec![1.0 - p, p]).unwrap()
    }

    fn dependent_2x2() -> DiscreteJoint {
        let grid = Grid::new(vec![vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        DiscreteJoint::from_weights(grid, vec![0.4, 0.1, 0.1, 0.4]).unwrap()
    }

    #[test]
    fn product_of_bernoullis() {
        let j = make_product_distribution(&[bern(0.3), bern(0.7)]).unwrap();
        assert!((j.mass_at(&[0.0, 0.0]) - 0.21).abs() < 1e-15);
        assert!((j.mass_at(&[1.0, 1.0]) - 0.21).abs() < 1e-15);
        assert!((j.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(j.is_product());
    }

    #[test]
    fn single_point_marginal() {
        let j = make_product_distribution(&[Marginal1D::new(vec![0.0], vec![1.0]).unwrap()]).unwrap();
        assert_eq!(j.weights(), &[1.0]);
    }

    #[test]
    fn uniform_pm_one_square_has_zero_means() {
        let u = Marginal1D::uniform(vec![-1.0, 1.0]).unwrap();
        let j = make_product_distribution(&[u.clone(), u]).unwrap();
        assert_eq!(j.weights(), &[0.25; 4]);
        let x1 = FunctionModel::linear(0.0, vec![1.0, 0.0]);
        let x2 = FunctionModel::linear(0.0, vec![0.0, 1.0]);
        assert_eq!(j.expectation(&x1).unwrap(), 0.0);
        assert_eq!(j.expectation(&x2).unwrap(), 0.0);
    }

    #[test]
    fn product_rejects_empty_and_unnormalized() {
        assert!(make_product_distribution(&[]).is_err());
        assert!(Marginal1D::new(vec![0.0, 1.0], vec![0.5, 0.6]).is_err());
    }

    #[test]
    fn joint_pmf_validation() {
        let j = dependent_2x2();
        assert!(!j.is_product());
        assert!(j.is_interior());

        let grid3 = Grid::new(vec![vec![0.0, 1.0, 2.0]; 2]).unwrap();
        let u = make_joint_pmf(grid3.clone(), vec![1.0 / 9.0; 9]).unwrap();
        assert!(u.is_product());

        let mut w = vec![0.25; 4];
        w[0] = 0.0;
        w[1] = 0.5;
        let g = Grid::new(vec![vec![0.0, 1.0]; 2]).unwrap();
        let boundary = make_joint_pmf(g.clone(), w).unwrap();
        assert!(!boundary.is_interior());
        assert!(matches!(boundary.require_interior(), Err(Error::NotInterior(p)) if p == vec![0.0, 0.0]));

        assert!(make_joint_pmf(g.clone(), vec![0.5, 0.5, 0.5]).is_err());
        assert!(make_joint_pmf(g.clone(), vec![-0.1, 0.5, 0.3, 0.3]).is_err());
        assert!(make_joint_pmf(g, vec![0.3, 0.3, 0.3, 0.3]).is_err());
    }

    #[test]
    fn gauss_hermite_moments() {
        let m = gauss_hermite_marginal(0.0, 1.0, 21).unwrap();
        assert!(m.mean().abs() < 1e-12);
        assert!((m.moment(2) - 1.0).abs() < 1e-10);
        assert!((m.moment(4) - 3.0).abs() < 1e-10);
        assert!((m.moment(6) - 15.0).abs() < 1e-9);

        let m1 = gauss_hermite_marginal(1.0, 1.0, 21).unwrap();
        assert!((m1.mean() - 1.0).abs() < 1e-12);

        let one = gauss_hermite_marginal(3.0, 2.0, 1).unwrap();
        assert_eq!(one.points(), &[3.0]);
        assert_eq!(one.masses(), &[1.0]);

        assert!(gauss_hermite_marginal(0.0, 1.0, 0).is_err());
        assert!(gauss_hermite_marginal(0.0, 0.0, 5).is_err());
        assert!(gauss_hermite_marginal(0.0, -1.0, 5).is_err());
    }

    #[test]
    fn gauss_hermite_mean_matches_numeric_integration() {
        // Midpoint rule on the N(0.5, 1) density over ±12 sd.
        let (mu, n) = (0.5, 400_000);
        let (lo, hi) = (mu - 12.0, mu + 12.0);
        let h = (hi - lo) / n as f64;
        let numeric: f64 = (0..n)
            .map(|i| {
                let x = lo + (i as f64 + 0.5) * h;
                x * (-(x - mu) * (x - mu) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt() * h
            })
            .sum();
        let gh = gauss_hermite_marginal(mu, 1.0, 21).unwrap();
        assert!((numeric - 0.5).abs() < 1e-9);
        assert!((gh.mean() - numeric).abs() < 1e-9);
    }

    #[test]
    fn marginals() {
        let p = make_product_distribution(&[bern(0.3), bern(0.7)]).unwrap();
        let m = p.marginal_of(&[0]).unwrap();
        assert_eq!(m.weights(), bern(0.3).masses());

        let d = dependent_2x2();
        let m = d.marginal_of(&[0]).unwrap();
        assert!((m.weights()[0] - 0.5).abs() < 1e-15);
        assert!((m.weights()[1] - 0.5).abs() < 1e-15);

        let all = d.marginal_of(&[0, 1]).unwrap();
        assert_eq!(all.weights(), d.weights());

        assert!(d.marginal_of(&[]).is_err());
        assert!(d.marginal_of(&[2]).is_err());
    }

    #[test]
    fn hybrid_endpoints_and_products() {
        let k = make_product_distribution(&[bern(0.2), bern(0.6)]).unwrap();
        let h = make_product_distribution(&[bern(0.5), bern(0.9)]).unwrap();
        assert_eq!(hybrid_distribution(&k, &h, 0).unwrap(), h);
        assert_eq!(hybrid_distribution(&k, &h, 2).unwrap(), k);
        let mid = hybrid_distribution(&k, &h, 1).unwrap();
        let expected = make_product_distribution(&[bern(0.2), bern(0.9)]).unwrap();
        for (a, b) in mid.weights().iter().zip(expected.weights()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn hybrid_of_dependent_joints_uses_conditionals() {
        let k = dependent_2x2();
        let g = k.grid().clone();
        let h = make_joint_pmf(g, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let mid = hybrid_distribution(&k, &h, 1).unwrap();
        // k(x1 | x2) * h(x2): h(x2=0) = 0.4, h(x2=1) = 0.6; k(x1|x2=0) = (0.8, 0.2)
        let expected = [0.8 * 0.4, 0.2 * 0.6, 0.2 * 0.4, 0.8 * 0.6];
        for (a, b) in mid.weights().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn hybrid_rejects_undefined_conditional() {
        let g = Grid::new(vec![vec![0.0, 1.0]; 3]).unwrap();
        // Dependent k with no mass on trailing configuration (x2, x3) = (1, 1).
        let k = make_joint_pmf(g.clone(), vec![0.2, 0.1, 0.1, 0.0, 0.05, 0.15, 0.4, 0.0]).unwrap();
        let h = make_joint_pmf(g.clone(), vec![0.125; 8]).unwrap();
        assert!(!k.is_product());
        match hybrid_distribution(&k, &h, 1) {
            Err(Error::UndefinedConditional { point, .. }) => assert_eq!(point, vec![1.0, 1.0]),
            other => panic!("expected undefined conditional, got {other:?}"),
        }

        // A product-form k falls back to its own leading marginal.
        let kp = make_product_distribution(&[
            bern(0.3),
            Marginal1D::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap(),
        ])
        .unwrap();
        let g2 = Grid::new(vec![vec![0.0, 1.0], vec![0.0, 1.0, 2.0]]).unwrap();
        let kp = kp.embed(&g2).unwrap();
        let h2 = make_joint_pmf(g2, vec![1.0 / 6.0; 6]).unwrap();
        let mid = hybrid_distribution(&kp, &h2, 1).unwrap();
        let expected = make_product_distribution(&[
            bern(0.3),
            Marginal1D::uniform(vec![0.0, 1.0, 2.0]).unwrap(),
        ])
        .unwrap();
        for (a, b) in mid.weights().iter().zip(expected.weights()) {
            assert!((a - b).abs() < 1e-15);
        }

        let other = make_joint_pmf(Grid::new(vec![vec![0.0, 2.0]; 3]).unwrap(), vec![0.125; 8]).unwrap();
        assert!(matches!(hybrid_distribution(&k, &other, 1), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn expectations() {
        let b = make_product_distribution(&[bern(0.3)]).unwrap();
        let x1 = FunctionModel::linear(0.0, vec![1.0]);
        assert!((b.expectation(&x1).unwrap() - 0.3).abs() < 1e-15);

        let d = dependent_2x2();
        let sum = FunctionModel::linear(0.0, vec![1.0, 1.0]);
        assert!((d.expectation(&sum).unwrap() - 1.0).abs() < 1e-15);

        let log = crate::functions::parse_expression("log(x1)", 1).unwrap();
        let neg = make_product_distribution(&[Marginal1D::new(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap()]).unwrap();
        assert!(matches!(neg.expectation(&log), Err(Error::Domain { point, .. }) if point == vec![-1.0]));
    }

    #[test]
    fn embedding_and_alignment() {
        let h = make_product_distribution(&[Marginal1D::uniform(vec![-1.0, 1.0]).unwrap()]).unwrap();
        let k = make_product_distribution(&[Marginal1D::uniform(vec![0.0, 2.0]).unwrap()]).unwrap();
        let (ha, ka) = align_supports(&h, &k).unwrap();
        assert_eq!(ha.grid().axis(0), &[-1.0, 0.0, 1.0, 2.0]);
        assert_eq!(ha.weights(), &[0.5, 0.0, 0.5, 0.0]);
        assert_eq!(ka.weights(), &[0.0, 0.5, 0.0, 0.5]);
        assert!(ha.is_product() && !ha.is_interior());
    }
}
