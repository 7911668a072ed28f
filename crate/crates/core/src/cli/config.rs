//! JSON experiment configuration. One document drives one command; sections
//! that a command does not use are ignored. Relative paths resolve against
//! the directory containing the config file.
//!
//! ```json
//! {
//!   "solver": { "beta": 1.0, "tau": 0.8, "r": 1.1, "tol": 1e-6 },
//!   "scheme": "iidl",
//!   "qp": {
//!     "a": "A.csv", "b": "b.csv",
//!     "objective": { "kind": "quadratic", "p": "P.csv" }
//!   }
//! }
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::certify::suite::SuiteOptions;
use crate::error::{Error, Result};
use crate::operators::ProjectionSet;
use crate::problem::SolverConfig;
use crate::solvers::SchemeKind;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub solver: SolverConfig,
    pub scheme: SchemeKind,
    /// Certify every iteration (dense; small problems only).
    pub certify: bool,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qp: Option<QpSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svm: Option<SvmSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potts: Option<PottsSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<SuiteOptions>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QpSection {
    /// Dense constraint matrix, one row per line.
    pub a: PathBuf,
    /// Right-hand side, one value per line or a single row.
    pub b: PathBuf,
    pub objective: ObjectiveSpec,
    #[serde(default = "whole")]
    pub domain: ProjectionSet,
    /// Starting point; defaults to the projection of the origin and `λ = 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda0: Option<Vec<f64>>,
}

fn whole() -> ProjectionSet {
    ProjectionSet::Whole
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    /// `½xᵀPx + qᵀx` with `P` (and optionally `q`) read from CSV.
    Quadratic {
        p: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q: Option<PathBuf>,
    },
    /// `weight·‖x‖₁`
    L1 { weight: f64 },
    /// `weight·‖x‖₁ + ½Σ dᵢxᵢ²`
    L1Quadratic { weight: f64, diag: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmSection {
    /// CSV with columns `f1..fn,label`; the generator is used when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    pub generator: GeneratorSpec,
    pub beta: f64,
    /// `r = β·ρ̂(AᵀA) + r_offset`
    pub r_offset: f64,
}

impl Default for SvmSection {
    fn default() -> Self {
        Self {
            data: None,
            generator: GeneratorSpec::default(),
            beta: crate::apps::svm::SVM_BETA,
            r_offset: crate::apps::svm::SVM_R_OFFSET,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSpec {
    pub n_per_class: usize,
    pub dim: usize,
    pub separation: f64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            n_per_class: 50,
            dim: 10,
            separation: 12.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PottsSection {
    /// PGM (2D) or RAW3D (3D) input; the synthetic image is used when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image: Option<PathBuf>,
    pub synthetic: SyntheticSpec,
    pub labels: usize,
    pub alpha: f64,
    /// Label intensities `c_i`; evenly spaced in `[0, 1]` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_values: Option<Vec<f64>>,
}

impl Default for PottsSection {
    fn default() -> Self {
        Self {
            image: None,
            synthetic: SyntheticSpec::default(),
            labels: 2,
            alpha: 0.5,
            label_values: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SyntheticSpec {
    TwoRegion { width: usize, height: usize, noise: f64 },
    FourRegion { width: usize, height: usize, noise: f64 },
    NestedVolume { size: usize, labels: usize, noise: f64 },
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec::TwoRegion {
            width: 64,
            height: 64,
            noise: 0.2,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepTarget {
    #[default]
    Svm,
    Potts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub target: SweepTarget,
    pub taus: Vec<f64>,
    /// One summary file per tolerance; defaults to the solver tolerance.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub tols: Vec<f64>,
    /// Fill the `wall_time_ms` column. Off by default so that repeated runs
    /// produce byte-identical summaries.
    pub record_timings: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            target: SweepTarget::Svm,
            taus: vec![1.0, 0.9, 0.8, 0.75],
            tols: Vec::new(),
            record_timings: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Reads a config file and resolves its relative paths against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(out) = self.output_dir.as_mut() {
            fix(out);
        }
        if let Some(qp) = self.qp.as_mut() {
            fix(&mut qp.a);
            fix(&mut qp.b);
            if let ObjectiveSpec::Quadratic { p, q } = &mut qp.objective {
                fix(p);
                if let Some(q) = q.as_mut() {
                    fix(q);
                }
            }
        }
        if let Some(path) = self.svm.as_mut().and_then(|s| s.data.as_mut()) {
            fix(path);
        }
        if let Some(path) = self.potts.as_mut().and_then(|s| s.image.as_mut()) {
            fix(path);
        }
    }
}
