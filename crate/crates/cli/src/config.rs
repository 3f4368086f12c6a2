//! Run configuration loaded from a single JSON document.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use irdf_core::budget::{ensure_cells, pow_cells};
use irdf_core::{DistortionDoc, DistortionSpec, OracleOptions, SolverOptions, SourceModel};

fn default_tol() -> f64 {
    1e-9
}

fn default_max_iter() -> usize {
    2000
}

fn default_threshold() -> f64 {
    irdf_core::DEFAULT_THRESHOLD
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    #[serde(default = "OracleSection::default_restarts")]
    pub restarts: usize,
    #[serde(default = "OracleSection::default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "OracleSection::default_step_size")]
    pub step_size: f64,
}

impl OracleSection {
    fn default_restarts() -> usize {
        OracleOptions::default().restarts
    }
    fn default_max_steps() -> usize {
        OracleOptions::default().max_steps
    }
    fn default_step_size() -> f64 {
        OracleOptions::default().step_size
    }
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection {
            restarts: Self::default_restarts(),
            max_steps: Self::default_max_steps(),
            step_size: Self::default_step_size(),
        }
    }
}

/// The JSON document as written by the user.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub source: SourceModel,
    pub distortion: DistortionDoc,
    pub s_grid: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Restrict structure rows to this window length.
    #[serde(default)]
    pub forced_window: Option<usize>,
    #[serde(default)]
    pub oracle: OracleSection,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

/// A config whose fields have all been checked.
#[derive(Debug, Clone)]
pub struct Run {
    pub model: SourceModel,
    pub spec: DistortionSpec,
    pub s_grid: Vec<f64>,
    pub solver: SolverOptions,
    pub oracle: OracleOptions,
    pub threshold: f64,
    pub forced_window: Option<usize>,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            anyhow::anyhow!("config field `{path}`: {}", e.into_inner())
        })
    }

    pub fn validate(self, out_override: Option<PathBuf>, threshold: Option<f64>) -> Result<Run> {
        let model = self.source;
        let spec = self
            .distortion
            .resolve(model.x_alphabet().size())
            .context("config field `distortion`")?;
        if self.s_grid.is_empty() {
            bail!("config field `s_grid`: must not be empty");
        }
        if let Some(s) = self.s_grid.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            bail!("config field `s_grid`: {s} is not a finite nonnegative value");
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            bail!("config field `tol`: must be positive");
        }
        if self.max_iter == 0 {
            bail!("config field `max_iter`: must be at least 1");
        }
        let threshold = threshold.unwrap_or(self.threshold);
        if threshold.is_nan() || threshold <= 0.0 {
            bail!("config field `threshold`: must be positive");
        }
        if let Some(w) = self.forced_window {
            if w == 0 || w > model.horizon() {
                bail!(
                    "config field `forced_window`: {w} is outside 1..={}",
                    model.horizon()
                );
            }
        }
        if self.oracle.restarts == 0 {
            bail!("config field `oracle.restarts`: must be at least 1");
        }
        if self.oracle.step_size.is_nan() || self.oracle.step_size <= 0.0 {
            bail!("config field `oracle.step_size`: must be positive");
        }
        let n = model.horizon();
        let (xs, ys) = (model.x_alphabet().size(), spec.y_size());
        ensure_cells(
            || format!("joint over {xs}^{n} x {ys}^{n}"),
            pow_cells(xs, n).saturating_mul(pow_cells(ys, n)),
        )?;
        Ok(Run {
            s_grid: self.s_grid,
            solver: SolverOptions {
                tol: self.tol,
                max_iter: self.max_iter,
            },
            oracle: OracleOptions {
                restarts: self.oracle.restarts,
                max_steps: self.oracle.max_steps,
                step_size: self.oracle.step_size,
                seed: self.seed,
                ..OracleOptions::default()
            },
            threshold,
            forced_window: self.forced_window,
            out_dir: out_override
                .or(self.out_dir)
                .unwrap_or_else(|| PathBuf::from("irdf-out")),
            model,
            spec,
        })
    }
}
