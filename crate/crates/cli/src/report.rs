//! Run reports and their JSON, CSV and text renderings.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use decomp_core::diagnostics::{DiagnosticsReport, ProbeVerdict};
use decomp_core::fanova::ConstraintReport;
use decomp_core::population::{ImportanceReport, KobReport};
use serde::{Deserialize, Serialize};

use crate::config::Format;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationConstraints {
    /// `H` or `K`.
    pub population: String,
    pub report: ConstraintReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub dims: usize,
    pub max_order: usize,
    pub mean_h: f64,
    pub mean_k: f64,
    #[serde(flatten)]
    pub importance: ImportanceReport,
    /// Classical split, present when both models are linear.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kob: Option<KobReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<PopulationConstraints>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<DiagnosticsReport>,
}

pub fn to_json(report: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> Result<RunReport, serde_json::Error> {
    serde_json::from_str(text)
}

/// One row per term: `block,term,value`.
pub fn to_csv(report: &RunReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut row = |block: &str, term: String, value: f64| {
        w.write_record([block, &term, &value.to_string()]).expect("in-memory write");
    };
    let imp = &report.importance;
    for t in &imp.yx_terms {
        row("yx", t.subset.to_string(), t.value);
    }
    for t in &imp.x_terms {
        row("x", format!("x{}", t.covariate), t.value);
    }
    row("summary", "total".into(), imp.total);
    row("summary", "telescoping_residual".into(), imp.telescoping_residual);
    if let Some(u) = imp.unattributed {
        row("summary", "unattributed".into(), u);
    }
    if let Some(kob) = &report.kob {
        for (j, v) in kob.yx_effects.iter().enumerate() {
            row("kob_yx", format!("x{}", j + 1), *v);
        }
        for (j, v) in kob.covariate_effects.iter().enumerate() {
            row("kob_x", format!("x{}", j + 1), *v);
        }
    }
    if let Some(diag) = &report.diagnostics {
        for d in &diag.deltas {
            row("delta", d.subset.to_string(), d.delta);
        }
        for c in &diag.expected_zero {
            row("expected_zero", c.subset.to_string(), c.via_k_component);
        }
        if let Some(a) = &diag.affine_gap {
            for t in &a.terms {
                row("affine_gap", format!("x{}", t.covariate), t.gap);
            }
        }
        for p in &diag.probes {
            row("probe_max_norm", p.subset.to_string(), p.max_norm());
        }
        if let Some(wit) = &diag.witness {
            row("witness", wit.subset.to_string(), wit.delta);
        }
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// Two-block table: outcome-model terms, then covariate terms.
pub fn to_text(report: &RunReport) -> String {
    let imp = &report.importance;
    let mut s = String::new();
    if let Some(t) = &report.title {
        let _ = writeln!(s, "{t}");
        let _ = writeln!(s, "{}", "=".repeat(t.chars().count()));
    }
    let _ = writeln!(s, "backend            {}", imp.backend);
    let _ = writeln!(s, "covariates         {}", report.dims);
    let _ = writeln!(s, "max order          {}", report.max_order);
    let _ = writeln!(s, "E_H[f^H]           {:.12}", report.mean_h);
    let _ = writeln!(s, "E_K[f^K]           {:.12}", report.mean_k);
    let _ = writeln!(s, "difference         {:.12}", imp.total);
    let _ = writeln!(s);
    let _ = writeln!(s, "Outcome model (Y|X) terms");
    let _ = writeln!(s, "  {:<14} {:>20}", "subset", "value");
    for t in &imp.yx_terms {
        let _ = writeln!(s, "  {:<14} {:>20.12}", t.subset.to_string(), t.value);
    }
    for u in &imp.uncomputed_subsets {
        let _ = writeln!(s, "  {:<14} {:>20}", u.to_string(), "not computed");
    }
    let yx: f64 = imp.yx_terms.iter().map(|t| t.value).sum();
    let _ = writeln!(s, "  {:<14} {:>20.12}", "subtotal", yx);
    let _ = writeln!(s);
    let _ = writeln!(s, "Covariate (X) terms");
    let _ = writeln!(s, "  {:<14} {:>20}", "covariate", "value");
    for t in &imp.x_terms {
        let _ = writeln!(s, "  {:<14} {:>20.12}", format!("x{}", t.covariate), t.value);
    }
    let x: f64 = imp.x_terms.iter().map(|t| t.value).sum();
    let _ = writeln!(s, "  {:<14} {:>20.12}", "subtotal", x);
    let _ = writeln!(s);
    if let Some(u) = imp.unattributed {
        let _ = writeln!(s, "unattributed       {u:.12}");
    }
    let _ = writeln!(s, "telescoping resid. {:.3e}", imp.telescoping_residual);

    if let Some(kob) = &report.kob {
        let _ = writeln!(s);
        let _ = writeln!(s, "Linear KOB split");
        let _ = writeln!(s, "  {:<14} {:>20} {:>20}", "covariate", "Y|X", "X");
        for (j, (a, b)) in kob.yx_effects.iter().zip(&kob.covariate_effects).enumerate() {
            let _ = writeln!(s, "  {:<14} {:>20.12} {:>20.12}", format!("x{}", j + 1), a, b);
        }
    }

    if !report.constraints.is_empty() {
        let _ = writeln!(s);
        let _ = writeln!(s, "Constraint residuals");
        for c in &report.constraints {
            let _ = writeln!(
                s,
                "  {}: mean {:.3e}, annihilating {:.3e}, reconstruction {:.3e}",
                c.population,
                c.report.max_mean_residual(),
                c.report.max_annihilating_residual(),
                c.report.reconstruction_residual
            );
        }
    }

    if let Some(diag) = &report.diagnostics {
        let _ = writeln!(s);
        let _ = writeln!(s, "Diagnostics (shared model f = f^K)");
        for d in &diag.deltas {
            let _ = writeln!(s, "  {:<22} {:>20.12}", format!("delta {}", d.subset), d.delta);
        }
        for c in &diag.expected_zero {
            let _ = writeln!(
                s,
                "  {:<22} {:>20.12}  (direct {:.12}, diff {:.3e})",
                format!("E_H[L(f,K,{})]", c.subset),
                c.via_k_component,
                c.direct,
                c.difference
            );
        }
        if let Some(a) = &diag.affine_gap {
            for t in &a.terms {
                let _ = writeln!(
                    s,
                    "  {:<22} {:>20.12}  (backend {:.12})",
                    format!("affine gap x{}", t.covariate),
                    t.gap,
                    t.backend_value
                );
            }
        }
        for p in &diag.probes {
            let verdict = match p.verdict {
                ProbeVerdict::RankOneOnes => "rank_one_ones",
                ProbeVerdict::Violated => "violated",
            };
            let _ = writeln!(
                s,
                "  probe {:<10} max norm {:.3e} over {} directions: {verdict}",
                p.subset.to_string(),
                p.max_norm(),
                p.directions.len()
            );
        }
        if let Some(w) = &diag.witness {
            let _ = writeln!(s, "  witness on {}: delta {:.12} ({:?})", w.subset, w.delta, w.source);
        }
    }
    s
}

/// Writes the requested renderings into `dir`, returning the files written.
pub fn emit(report: &RunReport, formats: &[Format], dir: &Path) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    for f in formats {
        let (name, body) = match f {
            Format::Json => ("report.json", to_json(report)),
            Format::Csv => ("report.csv", to_csv(report)),
            Format::Text => ("report.txt", to_text(report)),
        };
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }
    Ok(written)
}
