//! The run pipeline: decomposition, constraint checks, diagnostics.

use decomp_core::diagnostics::{
    affine_class_gap, directional_jacobian_probe, expected_zero_check, misattribution_profile, witness_search,
    DiagnosticsReport,
};
use decomp_core::fanova::verify_fanova_constraints;
use decomp_core::functions::ModelKind;
use decomp_core::measures::{make_product_distribution, DiscreteJoint, Marginal1D};
use decomp_core::population::{importance_decompose, kob_decompose};
use decomp_core::Backend;

use crate::config::{affine_functions, probe_subsets, Prepared};
use crate::error::{CliResult, CoreContext};
use crate::report::{PopulationConstraints, RunReport};

fn uniform_on(p: &DiscreteJoint) -> decomp_core::Result<DiscreteJoint> {
    let ms = p
        .grid()
        .axes()
        .iter()
        .map(|a| Marginal1D::uniform(a.clone()))
        .collect::<decomp_core::Result<Vec<_>>>()?;
    make_product_distribution(&ms)
}

fn axis_means(p: &DiscreteJoint) -> Vec<f64> {
    (0..p.dims())
        .map(|i| p.axis_masses(i).iter().zip(p.grid().axis(i)).map(|(m, x)| m * x).sum())
        .collect()
}

/// Runs every requested computation. Nothing is written to disk.
pub fn execute(run: &Prepared) -> CliResult<RunReport> {
    let (h, k) = (&run.h, &run.k);
    if run.backend == Backend::FanovaGeneralized {
        h.require_interior().context("population H")?;
        k.require_interior().context("population K")?;
    }
    let importance = importance_decompose(
        &run.f_h,
        &run.f_k,
        h,
        k,
        run.backend,
        Some(run.max_order),
        run.ordering.as_deref(),
    )
    .context("importance decomposition")?;

    let mut constraints = Vec::new();
    if run.backend != Backend::Ale {
        for (name, p, f) in [("H", h, &run.f_h), ("K", k, &run.f_k)] {
            let what = format!("population {name}");
            let dec = run.backend.decompose(f, p, run.max_order).context(&what)?;
            let reference = match run.backend {
                Backend::FanovaUniform => uniform_on(p).context(&what)?,
                _ => p.clone(),
            };
            let report = verify_fanova_constraints(&dec, &reference, f).context(&what)?;
            constraints.push(PopulationConstraints {
                population: name.into(),
                report,
            });
        }
    }

    let kob = match (run.f_h.kind(), run.f_k.kind()) {
        (ModelKind::Linear { coefficients: bh, .. }, ModelKind::Linear { coefficients: bk, .. }) => {
            Some(kob_decompose(bh, bk, &axis_means(h), &axis_means(k)).context("KOB")?)
        }
        _ => None,
    };

    let diagnostics = match &run.diagnostics {
        Some(cfg) => {
            let f = &run.f_k;
            let mut d = DiagnosticsReport::default();
            if cfg.misattribution {
                d.deltas = misattribution_profile(run.backend, f, h, k).context("misattribution")?;
            }
            if cfg.expected_zero {
                let n = k.dims();
                for s in decomp_core::Subset::all_up_to(n, n).into_iter().filter(|s| !s.is_empty()) {
                    d.expected_zero.push(expected_zero_check(f, h, k, s).context("expected-zero check")?);
                }
            }
            if let Some(a) = &cfg.affine {
                let b = affine_functions(a)?;
                d.affine_gap = Some(affine_class_gap(&a.a, &b, h, k).context("affine gap")?);
            }
            if let Some(p) = &cfg.probe {
                for s in probe_subsets(p)? {
                    d.probes.push(
                        directional_jacobian_probe(run.backend, f, k, s, p.step)
                            .context(&format!("probe of {s} under K"))?,
                    );
                }
            }
            if let Some(w) = &cfg.witness {
                d.witness = Some(witness_search(h, k, run.backend, w.trials, run.seed).context("witness search")?);
            }
            (!d.is_empty()).then_some(d)
        }
        None => None,
    };

    Ok(RunReport {
        title: run.title.clone(),
        dims: k.dims(),
        max_order: run.max_order,
        mean_h: h.expectation(&run.f_h).context("E_H[f^H]")?,
        mean_k: k.expectation(&run.f_k).context("E_K[f^K]")?,
        importance,
        kob,
        constraints,
        diagnostics,
    })
}
