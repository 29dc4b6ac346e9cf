//! Misattribution diagnostics.
//!
//! With a shared outcome model `f`, the `Y|X` term for subset `S` reduces to
//! `Δ(S) = E_H[L(f,K,S) − L(f,H,S)]`. Anything nonzero is a covariate shift
//! credited to the outcome model. This module computes `Δ`, checks the
//! closed forms FANOVA gives for it, probes how components respond to
//! perturbations of the measure, and searches for functions with `Δ ≠ 0`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition::{Backend, Decomposition};
use crate::error::{Error, Result};
use crate::fanova::{fanova_generalized, fanova_recursive};
use crate::functions::{tabulated_model, FunctionModel};
use crate::measures::DiscreteJoint;
use crate::subset::Subset;

/// Default central-difference step for [`directional_jacobian_probe`].
pub const DEFAULT_PROBE_STEP: f64 = 1e-5;

/// Tolerance for [`AffineGap::consistent`].
pub const AFFINE_TOL: f64 = 1e-9;

fn check_shared_grid(h: &DiscreteJoint, k: &DiscreteJoint) -> Result<()> {
    if h.grid() != k.grid() {
        return Err(Error::GridMismatch("populations must share one grid".into()));
    }
    Ok(())
}

fn delta_from(dec_h: &Decomposition, dec_k: &Decomposition, h: &DiscreteJoint, s: Subset) -> Result<f64> {
    Ok(dec_k.expectation_under(s, h)? - dec_h.expectation_under(s, h)?)
}

/// `E_h[L(f,k,S) − L(f,h,S)]` with both decompositions at full order.
pub fn misattribution_delta(
    backend: Backend,
    f: &FunctionModel,
    h: &DiscreteJoint,
    k: &DiscreteJoint,
    s: Subset,
) -> Result<f64> {
    check_shared_grid(h, k)?;
    let d = k.dims();
    let dec_k = backend.decompose(f, k, d)?;
    let dec_h = backend.decompose(f, h, d)?;
    delta_from(&dec_h, &dec_k, h, s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetDelta {
    pub subset: Subset,
    pub delta: f64,
}

/// `Δ(S)` for every subset the backend produces, in subset order.
pub fn misattribution_profile(
    backend: Backend,
    f: &FunctionModel,
    h: &DiscreteJoint,
    k: &DiscreteJoint,
) -> Result<Vec<SubsetDelta>> {
    check_shared_grid(h, k)?;
    let d = k.dims();
    let dec_k = backend.decompose(f, k, d)?;
    let dec_h = backend.decompose(f, h, d)?;
    dec_k
        .subsets()
        .filter(|s| dec_h.component(*s).is_some())
        .map(|s| {
            Ok(SubsetDelta {
                subset: s,
                delta: delta_from(&dec_h, &dec_k, h, s)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedZeroCheck {
    pub subset: Subset,
    /// `E_h[L(f,k,S) − L(f,h,S)]`.
    pub direct: f64,
    /// `E_h[L(f,k,S)]`; FANOVA components under `h` have `h`-mean zero.
    pub via_k_component: f64,
    pub difference: f64,
}

/// Computes `Δ(S)` for generalized FANOVA both directly and as
/// `E_h[L(f,k,S)]`. `S = ∅` is rejected: the constant term has no mean-zero
/// property to exploit.
pub fn expected_zero_check(
    f: &FunctionModel,
    h: &DiscreteJoint,
    k: &DiscreteJoint,
    s: Subset,
) -> Result<ExpectedZeroCheck> {
    if s.is_empty() {
        return Err(Error::InvalidArgument(
            "the expected-zero identity holds only for non-empty subsets".into(),
        ));
    }
    check_shared_grid(h, k)?;
    let d = k.dims();
    let dec_k = fanova_generalized(f, k, d)?;
    let dec_h = fanova_generalized(f, h, d)?;
    let via_k_component = dec_k.expectation_under(s, h)?;
    let direct = via_k_component - dec_h.expectation_under(s, h)?;
    Ok(ExpectedZeroCheck {
        subset: s,
        direct,
        via_k_component,
        difference: (direct - via_k_component).abs(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineGapTerm {
    /// One-based covariate.
    pub covariate: usize,
    /// `a_m (E_h[b_m] − E_k[b_m])`.
    pub gap: f64,
    /// `E_h[L(f,k,{m})]` from the FANOVA backend.
    pub backend_value: f64,
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineGap {
    pub terms: Vec<AffineGapTerm>,
    /// All closed-form gaps match the backend within [`AFFINE_TOL`].
    pub consistent: bool,
}

impl AffineGap {
    pub fn max_difference(&self) -> f64 {
        self.terms.iter().fold(0.0, |m, t| m.max(t.difference))
    }
}

/// Closed-form main-effect misattribution for `f(x) = Σ_m a_m b_m(x_m)` under
/// independent covariates, compared against the FANOVA backend.
///
/// The backend is generalized FANOVA when `k` has full support and the
/// recursive formula otherwise; the two agree on product measures.
pub fn affine_class_gap(
    a: &[f64],
    b: &[FunctionModel],
    h: &DiscreteJoint,
    k: &DiscreteJoint,
) -> Result<AffineGap> {
    check_shared_grid(h, k)?;
    let d = k.dims();
    if a.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: a.len() });
    }
    if b.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: b.len() });
    }
    if let Some(m) = a.iter().position(|&v| v == 0.0) {
        return Err(Error::InvalidArgument(format!(
            "coefficient a{} is zero; every covariate must enter the model",
            m + 1
        )));
    }
    if let Some(m) = b.iter().position(|g| g.arity() != 1) {
        return Err(Error::InvalidArgument(format!("b{} is not univariate", m + 1)));
    }
    for (name, p) in [("H", h), ("K", k)] {
        if !p.is_product() {
            return Err(Error::NotProduct(format!("population {name} has dependent covariates")));
        }
    }
    let grid = k.grid();
    let tables: Vec<Vec<f64>> = b
        .iter()
        .enumerate()
        .map(|(m, g)| grid.axis(m).iter().map(|&x| g.evaluate(&[x])).collect())
        .collect::<Result<_>>()?;
    let values: Vec<f64> = (0..grid.len())
        .map(|f| {
            grid.multi_index(f)
                .iter()
                .enumerate()
                .map(|(m, &i)| a[m] * tables[m][i])
                .sum()
        })
        .collect();
    let model = tabulated_model(grid.clone(), values)?;
    let dec = if k.is_interior() {
        fanova_generalized(&model, k, d)?
    } else {
        fanova_recursive(&model, k, d)?
    };

    let mut terms = Vec::with_capacity(d);
    for m in 0..d {
        let mean = |p: &DiscreteJoint| -> f64 {
            p.axis_masses(m).iter().zip(&tables[m]).map(|(w, v)| w * v).sum()
        };
        let gap = a[m] * (mean(h) - mean(k));
        let backend_value = dec.expectation_under(Subset::single(m), h)?;
        terms.push(AffineGapTerm {
            covariate: m + 1,
            gap,
            backend_value,
            difference: (gap - backend_value).abs(),
        });
    }
    let consistent = terms.iter().all(|t| t.difference <= AFFINE_TOL);
    Ok(AffineGap { terms, consistent })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeVerdict {
    /// Every mean-zero direction leaves the component unchanged.
    RankOneOnes,
    Violated,
}

/// A mean-zero perturbation `e_plus − e_minus` of the mass table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeDirection {
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobianProbe {
    pub subset: Subset,
    pub step: f64,
    pub directions: Vec<ProbeDirection>,
    /// Central-difference derivative of `L(f,k,S)` along each direction,
    /// tabulated on the sub-grid of `S`.
    pub derivatives: Vec<Vec<f64>>,
    /// Sup-norm of each derivative.
    pub norms: Vec<f64>,
    pub verdict: ProbeVerdict,
}

impl JacobianProbe {
    pub fn max_norm(&self) -> f64 {
        self.norms.iter().fold(0.0, |m, v| m.max(*v))
    }
}

/// Differentiates component `S` with respect to the mass table along every
/// direction `e_i − e_n` (the last grid point is the pivot).
///
/// The verdict is [`ProbeVerdict::RankOneOnes`] iff every sup-norm is at
/// most `10·step`.
pub fn directional_jacobian_probe(
    backend: Backend,
    f: &FunctionModel,
    k: &DiscreteJoint,
    s: Subset,
    step: f64,
) -> Result<JacobianProbe> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!("probe step {step} must be positive")));
    }
    k.require_interior()?;
    let grid = k.grid();
    let n = grid.len();
    if n < 2 {
        return Err(Error::InvalidArgument("a one-point support has no mean-zero directions".into()));
    }
    if let Some(a) = s.max_axis().filter(|&a| a >= grid.dims()) {
        return Err(Error::InvalidArgument(format!("subset {s} names axis {}", a + 1)));
    }
    let pivot = n - 1;
    let half = 0.5 * step;
    if let Some(i) = k.weights().iter().position(|&w| w - half <= 0.0) {
        return Err(Error::NotInterior(grid.point(i)));
    }
    let d = grid.dims();
    let component = |weights: Vec<f64>| -> Result<Vec<f64>> {
        let p = DiscreteJoint::from_weights(grid.clone(), weights)?;
        let dec = backend.decompose(f, &p, d)?;
        dec.component(s).map(<[f64]>::to_vec).ok_or_else(|| {
            Error::Unsupported(format!("backend {backend} has no component for {s}"))
        })
    };
    let derivatives: Vec<Vec<f64>> = (0..pivot)
        .into_par_iter()
        .map(|i| {
            let shifted = |sign: f64| {
                let mut w = k.weights().to_vec();
                w[i] += sign * half;
                w[pivot] -= sign * half;
                w
            };
            let up = component(shifted(1.0))?;
            let down = component(shifted(-1.0))?;
            Ok(up.iter().zip(&down).map(|(u, v)| (u - v) / step).collect())
        })
        .collect::<Result<_>>()?;
    let norms: Vec<f64> = derivatives
        .iter()
        .map(|t| t.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
        .collect();
    let verdict = if norms.iter().all(|&v| v <= 10.0 * step) {
        ProbeVerdict::RankOneOnes
    } else {
        ProbeVerdict::Violated
    };
    let directions = (0..pivot)
        .map(|i| ProbeDirection {
            plus: grid.point(i),
            minus: grid.point(pivot),
        })
        .collect();
    Ok(JacobianProbe {
        subset: s,
        step,
        directions,
        derivatives,
        norms,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WitnessSource {
    /// `1[x_axis = value]`, axis one-based.
    Indicator { axis: usize, value: f64 },
    /// Standard-normal table drawn in the given trial.
    Random { trial: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub source: WitnessSource,
    /// The function's value at every grid point, row-major.
    pub values: Vec<f64>,
    pub subset: Subset,
    pub delta: f64,
}

impl Witness {
    pub fn abs_delta(&self) -> f64 {
        self.delta.abs()
    }
}

fn best_subset(backend: Backend, f: &FunctionModel, h: &DiscreteJoint, k: &DiscreteJoint) -> Result<(Subset, f64)> {
    let mut best = (Subset::EMPTY, 0.0_f64);
    for SubsetDelta { subset, delta } in misattribution_profile(backend, f, h, k)? {
        if !subset.is_empty() && (best.0.is_empty() || delta.abs() > best.1.abs()) {
            best = (subset, delta);
        }
    }
    if best.0.is_empty() {
        return Err(Error::Unsupported(format!("backend {backend} has no non-constant components")));
    }
    Ok(best)
}

/// Searches for a tabulated `f` and `S ≠ ∅` maximizing `|Δ(S)|`.
///
/// Candidates are every coordinate indicator `1[x_i = v]` followed by
/// `trials` standard-normal tables; trial `t` draws from stream `t` of a
/// ChaCha8 generator seeded with `seed`, so results do not depend on thread
/// scheduling. Ties keep the earlier candidate.
pub fn witness_search(
    h: &DiscreteJoint,
    k: &DiscreteJoint,
    backend: Backend,
    trials: usize,
    seed: u64,
) -> Result<Witness> {
    check_shared_grid(h, k)?;
    if h.same_as(k, 0.0) {
        return Err(Error::InvalidArgument(
            "populations are identical; no function can be misattributed".into(),
        ));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("witness search needs at least one trial".into()));
    }
    let grid = k.grid();
    let mut sources: Vec<WitnessSource> = Vec::new();
    for axis in 0..grid.dims() {
        for &value in grid.axis(axis) {
            sources.push(WitnessSource::Indicator { axis: axis + 1, value });
        }
    }
    sources.extend((0..trials).map(|trial| WitnessSource::Random { trial }));

    let candidates: Vec<Witness> = sources
        .into_par_iter()
        .map(|source| {
            let values: Vec<f64> = match &source {
                WitnessSource::Indicator { axis, value } => grid
                    .points()
                    .map(|p| if p[axis - 1] == *value { 1.0 } else { 0.0 })
                    .collect(),
                WitnessSource::Random { trial } => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(*trial as u64);
                    (0..grid.len()).map(|_| StandardNormal.sample(&mut rng)).collect()
                }
            };
            let f = tabulated_model(grid.clone(), values.clone())?;
            let (subset, delta) = best_subset(backend, &f, h, k)?;
            Ok(Witness {
                source,
                values,
                subset,
                delta,
            })
        })
        .collect::<Result<_>>()?;
    let mut best: Option<Witness> = None;
    for c in candidates {
        if best.as_ref().is_none_or(|b| c.abs_delta() > b.abs_delta()) {
            best = Some(c);
        }
    }
    Ok(best.expect("at least one candidate"))
}

/// Everything the diagnostics stage of a run produced. Absent parts were not
/// requested.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deltas: Vec<SubsetDelta>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expected_zero: Vec<ExpectedZeroCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affine_gap: Option<AffineGap>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<JacobianProbe>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl DiagnosticsReport {
    pub fn is_empty(&self) -> bool {
        self == &DiagnosticsReport::default()
    }
}
