//! JSON run configuration.

use std::path::{Path, PathBuf};

use homog_core::{CoefficientSpec, CoefficientTerm, KernelFamily, KernelSpec, SpatialFactor, TimeFactor, TrigKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyConfig {
    Uniform,
    Triangular,
    TruncatedGaussian,
}

/// `center`/`half_width` for uniform and triangular, `sigma`/`cutoff` for the truncated Gaussian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub family: FamilyConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindConfig {
    One,
    Sin,
    Cos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpatialConfig {
    pub kind: KindConfig,
    #[serde(default)]
    pub harmonic: [i32; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub kind: KindConfig,
    #[serde(default)]
    pub harmonic: i32,
}

fn one_spatial() -> SpatialConfig {
    SpatialConfig { kind: KindConfig::One, harmonic: [0, 0] }
}

fn one_time() -> TimeConfig {
    TimeConfig { kind: KindConfig::One, harmonic: 0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub coeff: f64,
    #[serde(default = "one_spatial")]
    pub departure: SpatialConfig,
    #[serde(default = "one_spatial")]
    pub arrival: SpatialConfig,
    #[serde(default = "one_time")]
    pub time: TimeConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuConfig {
    pub constant: f64,
    #[serde(default)]
    pub terms: Vec<TermConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub n_cell: usize,
    pub s_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub length: usize,
}

fn default_cfl() -> f64 {
    0.9
}

fn default_scan() -> usize {
    512
}

fn default_t0() -> f64 {
    0.5
}

fn default_phases() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_final: f64,
    pub checkpoints: Vec<f64>,
    pub epsilons: Vec<f64>,
    #[serde(default = "default_cfl")]
    pub cfl_fraction: f64,
    #[serde(default = "default_scan")]
    pub rate_scan: usize,
    #[serde(default = "default_t0")]
    pub residual_t0: f64,
    #[serde(default = "default_phases")]
    pub residual_phases: usize,
}

fn default_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesConfig {
    #[serde(default = "default_tol")]
    pub compat: f64,
    #[serde(default = "default_tol")]
    pub solve: f64,
}

impl Default for TolerancesConfig {
    fn default() -> Self {
        Self { compat: default_tol(), solve: default_tol() }
    }
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
    #[serde(default)]
    pub snapshots: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_out(), snapshots: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub kernel: KernelConfig,
    pub mu: MuConfig,
    pub alpha: f64,
    pub grid: GridConfig,
    #[serde(rename = "box")]
    pub box_: BoxConfig,
    pub time: TimeSection,
    #[serde(default)]
    pub tolerances: TolerancesConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn kind(k: KindConfig) -> TrigKind {
    match k {
        KindConfig::One => TrigKind::One,
        KindConfig::Sin => TrigKind::Sin,
        KindConfig::Cos => TrigKind::Cos,
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec, HarnessError> {
        let k = &self.kernel;
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| HarnessError::Config(format!("kernel {:?} needs `{name}`", k.family)))
        };
        let family = match k.family {
            FamilyConfig::Uniform => {
                KernelFamily::Uniform { center: need(k.center, "center")?, half_width: need(k.half_width, "half_width")? }
            }
            FamilyConfig::Triangular => {
                KernelFamily::Triangular { center: need(k.center, "center")?, half_width: need(k.half_width, "half_width")? }
            }
            FamilyConfig::TruncatedGaussian => {
                KernelFamily::TruncatedGaussian { sigma: need(k.sigma, "sigma")?, cutoff: need(k.cutoff, "cutoff")? }
            }
        };
        Ok(KernelSpec::new(family, self.grid.dim))
    }

    pub fn coefficient_spec(&self) -> CoefficientSpec {
        let mut spec = CoefficientSpec::constant(self.mu.constant);
        for t in &self.mu.terms {
            spec = spec.with_term(CoefficientTerm::new(
                t.coeff,
                SpatialFactor { kind: kind(t.departure.kind), harmonic: t.departure.harmonic },
                SpatialFactor { kind: kind(t.arrival.kind), harmonic: t.arrival.harmonic },
                TimeFactor { kind: kind(t.time.kind), harmonic: t.time.harmonic },
            ));
        }
        spec
    }

    /// Structural checks that need no solve.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return bad(format!("alpha {} outside (0, 2)", self.alpha));
        }
        if self.grid.dim != 1 && self.grid.dim != 2 {
            return bad(format!("dimension {} unsupported", self.grid.dim));
        }
        for &eps in &self.time.epsilons {
            let q = (1.0 / eps).round();
            if !(eps > 0.0) || (q * eps - 1.0).abs() > 1e-9 {
                return bad(format!("epsilon {eps} is not 1/q for an integer q"));
            }
        }
        let mut prev = 0.0;
        for &c in &self.time.checkpoints {
            if !(c > prev && c <= self.time.t_final) {
                return bad(format!("checkpoint {c} outside (0, T] or out of order"));
            }
            prev = c;
        }
        homog_core::kernel::validate_kernel(&self.kernel_spec()?)?;
        self.coefficient_spec().check()?;
        homog_core::corrector_schedule(self.alpha)?;
        homog_core::TorusGrid::new(self.grid.dim, self.grid.n_cell)?;
        homog_core::SSampleSet::new(self.grid.s_samples)?;
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
