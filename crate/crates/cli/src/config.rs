//! Run configuration (TOML).
//!
//! One file fully describes a run: both populations, both outcome models,
//! the backend, the subset ordering, which diagnostics to compute, where to
//! write reports and the random seed. Relative paths resolve against the
//! directory holding the config file.

use std::path::{Path, PathBuf};

use decomp_core::functions::{fit_linear, parse_expression, tabulated_model, FunctionModel};
use decomp_core::measures::{
    align_supports, gauss_hermite_marginal, make_joint_pmf, make_product_distribution, DiscreteJoint, Grid,
    Marginal1D,
};
use decomp_core::{Backend, Subset};
use serde::Deserialize;

use crate::error::{CliError, CliResult, CoreContext};
use crate::ingest::read_sample;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Free-text label copied into reports.
    #[serde(default)]
    pub title: Option<String>,
    pub backend: String,
    #[serde(default)]
    pub max_order: Option<usize>,
    /// One-based subsets; must list every subset exactly once.
    #[serde(default)]
    pub ordering: Option<Vec<Vec<usize>>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    pub populations: Populations,
    pub models: Models,
    #[serde(default)]
    pub diagnostics: Option<DiagnosticsConfig>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("report")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv, Format::Text]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Populations {
    pub h: PopulationSpec,
    pub k: PopulationSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginalSpec {
    pub points: Vec<f64>,
    /// Uniform when omitted.
    #[serde(default)]
    pub masses: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PopulationSpec {
    Product {
        marginals: Vec<MarginalSpec>,
    },
    GaussHermite {
        means: Vec<f64>,
        sds: Vec<f64>,
        nodes: usize,
    },
    Joint {
        axes: Vec<Vec<f64>>,
        masses: Vec<f64>,
    },
    Csv {
        path: PathBuf,
        columns: Vec<String>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Models {
    pub h: ModelSpec,
    pub k: ModelSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Expression {
        text: String,
    },
    Linear {
        #[serde(default)]
        intercept: f64,
        coefficients: Vec<f64>,
    },
    /// Ordinary least squares on a CSV sample.
    Fitted {
        path: PathBuf,
        columns: Vec<String>,
        #[serde(default = "default_response")]
        response: String,
    },
    /// Values on the aligned grid of both populations, row-major.
    Tabulated {
        values: Vec<f64>,
    },
}

fn default_response() -> String {
    "y".into()
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// `Δ(S)` for every subset the backend produces, using `f^K`.
    #[serde(default)]
    pub misattribution: bool,
    /// Direct and expected-zero forms of `Δ` (generalized FANOVA only).
    #[serde(default)]
    pub expected_zero: bool,
    #[serde(default)]
    pub affine: Option<AffineConfig>,
    #[serde(default)]
    pub probe: Option<ProbeConfig>,
    #[serde(default)]
    pub witness: Option<WitnessConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineConfig {
    pub a: Vec<f64>,
    /// Univariate expressions in `x1`, one per covariate.
    pub b: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    /// One-based subsets to probe under `K`.
    pub subsets: Vec<Vec<usize>>,
    #[serde(default = "default_step")]
    pub step: f64,
}

fn default_step() -> f64 {
    decomp_core::diagnostics::DEFAULT_PROBE_STEP
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessConfig {
    pub trials: usize,
}

impl Config {
    pub fn from_toml(text: &str) -> CliResult<Config> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Config::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// A validated run: populations on one grid, models of matching arity.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub title: Option<String>,
    pub backend: Backend,
    pub max_order: usize,
    pub ordering: Option<Vec<Subset>>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub formats: Vec<Format>,
    pub h: DiscreteJoint,
    pub k: DiscreteJoint,
    pub f_h: FunctionModel,
    pub f_k: FunctionModel,
    pub diagnostics: Option<DiagnosticsConfig>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn one_based(subsets: &[Vec<usize>], what: &str) -> CliResult<Vec<Subset>> {
    subsets
        .iter()
        .map(|s| Subset::from_one_based(s))
        .collect::<decomp_core::Result<_>>()
        .context(what)
}

fn build_population(spec: &PopulationSpec, name: &str, base: &Path) -> CliResult<DiscreteJoint> {
    let what = format!("population {name}");
    match spec {
        PopulationSpec::Product { marginals } => {
            let ms = marginals
                .iter()
                .map(|m| match &m.masses {
                    Some(w) => Marginal1D::new(m.points.clone(), w.clone()),
                    None => Marginal1D::uniform(m.points.clone()),
                })
                .collect::<decomp_core::Result<Vec<_>>>()
                .context(&what)?;
            make_product_distribution(&ms).context(&what)
        }
        PopulationSpec::GaussHermite { means, sds, nodes } => {
            if means.len() != sds.len() {
                return Err(CliError::Config(format!(
                    "{what}: {} means but {} standard deviations",
                    means.len(),
                    sds.len()
                )));
            }
            let ms = means
                .iter()
                .zip(sds)
                .map(|(&m, &s)| gauss_hermite_marginal(m, s, *nodes))
                .collect::<decomp_core::Result<Vec<_>>>()
                .context(&what)?;
            make_product_distribution(&ms).context(&what)
        }
        PopulationSpec::Joint { axes, masses } => {
            let grid = Grid::new(axes.clone()).context(&what)?;
            make_joint_pmf(grid, masses.clone()).context(&what)
        }
        PopulationSpec::Csv { path, columns } => {
            read_sample(&resolve(base, path), columns, None)?.empirical_joint()
        }
    }
}

fn build_model(spec: &ModelSpec, name: &str, grid: &Grid, base: &Path) -> CliResult<FunctionModel> {
    let what = format!("model {name}");
    let d = grid.dims();
    let model = match spec {
        ModelSpec::Expression { text } => parse_expression(text, d).context(&what)?,
        ModelSpec::Linear {
            intercept,
            coefficients,
        } => {
            if coefficients.len() != d {
                return Err(CliError::Config(format!(
                    "{what}: {} coefficients for {d} covariates",
                    coefficients.len()
                )));
            }
            FunctionModel::linear(*intercept, coefficients.clone())
        }
        ModelSpec::Fitted {
            path,
            columns,
            response,
        } => {
            let sample = read_sample(&resolve(base, path), columns, Some(response))?;
            let ys = sample.response.as_deref().unwrap_or_default();
            fit_linear(&sample.rows, ys).context(&what)?
        }
        ModelSpec::Tabulated { values } => tabulated_model(grid.clone(), values.clone()).context(&what)?,
    };
    if model.arity() != d {
        return Err(CliError::Config(format!(
            "{what}: takes {} covariates but the populations have {d}",
            model.arity()
        )));
    }
    Ok(model)
}

impl Config {
    /// Builds populations and models. `base` is the directory relative
    /// paths resolve against.
    pub fn prepare(&self, base: &Path) -> CliResult<Prepared> {
        let backend: Backend = self.backend.parse().context("config")?;
        let h = build_population(&self.populations.h, "H", base)?;
        let k = build_population(&self.populations.k, "K", base)?;
        if h.dims() != k.dims() {
            return Err(CliError::Config(format!(
                "population H has {} covariates but K has {}",
                h.dims(),
                k.dims()
            )));
        }
        let (h, k) = align_supports(&h, &k).context("aligning populations")?;
        let d = k.dims();
        let max_order = self.max_order.unwrap_or(d);
        if max_order > d {
            return Err(CliError::Config(format!("max_order {max_order} exceeds {d} covariates")));
        }
        let ordering = self
            .ordering
            .as_ref()
            .map(|o| one_based(o, "ordering"))
            .transpose()?;
        if let Some(o) = &ordering {
            decomp_core::population::validate_ordering(o, d).context("ordering")?;
        }
        let f_h = build_model(&self.models.h, "H", k.grid(), base)?;
        let f_k = build_model(&self.models.k, "K", k.grid(), base)?;
        if let Some(diag) = &self.diagnostics {
            if let Some(a) = &diag.affine {
                if a.a.len() != d || a.b.len() != d {
                    return Err(CliError::Config(format!(
                        "diagnostics.affine needs {d} coefficients and {d} functions"
                    )));
                }
            }
            if let Some(p) = &diag.probe {
                one_based(&p.subsets, "diagnostics.probe")?;
            }
        }
        if self.formats.is_empty() {
            return Err(CliError::Config("formats is empty".into()));
        }
        Ok(Prepared {
            title: self.title.clone(),
            backend,
            max_order,
            ordering,
            seed: self.seed,
            output_dir: resolve(base, &self.output_dir),
            formats: self.formats.clone(),
            h,
            k,
            f_h,
            f_k,
            diagnostics: self.diagnostics.clone(),
        })
    }
}

/// Parsed affine-class functions `b_m`.
pub(crate) fn affine_functions(cfg: &AffineConfig) -> CliResult<Vec<FunctionModel>> {
    cfg.b
        .iter()
        .enumerate()
        .map(|(m, t)| parse_expression(t, 1).context(&format!("diagnostics.affine b{}", m + 1)))
        .collect()
}

pub(crate) fn probe_subsets(cfg: &ProbeConfig) -> CliResult<Vec<Subset>> {
    one_based(&cfg.subsets, "diagnostics.probe")
}
