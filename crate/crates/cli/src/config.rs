//! Run configuration: one TOML file, every field optional, with a few
//! global flags layered on top. The effective configuration is echoed into
//! every artifact together with its SHA-256.

use std::path::{Path, PathBuf};

use msqg::flow::{IntegratorConfig, Method, Truncation};
use msqg::gibbs::{GibbsLaw, SeededStream};
use msqg::{Formulation, LatticeMode, ModelParams, StreamlineVariant};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
    pub out: PathBuf,
    pub model: ModelSection,
    pub integrator: IntegratorSection,
    pub coefficients: CoefficientsSection,
    pub sample: SampleSection,
    pub evolve: EvolveSection,
    pub expectation: ExpectationSection,
    pub invariance: InvarianceSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub delta: f64,
    pub formulation: Formulation,
    pub streamline_variant: StreamlineVariant,
    pub cutoff: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSection {
    pub method: Method,
    pub dt: f64,
    pub fixed_point_tol: f64,
    pub max_fixed_point_iters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoefficientsSection {
    /// Output modes `k`, as `[k1, k2]` pairs.
    pub k_modes: Vec<[i32; 2]>,
    /// Every `h` with `max(|h1|, |h2|) <= h_extent` is listed.
    pub h_extent: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSection {
    pub members: usize,
    /// How many of the draws are written as snapshot files.
    pub snapshots: usize,
    pub law: GibbsLaw,
    pub z_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialData {
    Gibbs,
    Zero,
    Snapshot(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveSection {
    pub t_final: f64,
    pub initial: InitialData,
    pub law: GibbsLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpectationSection {
    pub k_modes: Vec<[i32; 2]>,
    /// Largest radius of the dyadic inner sums.
    pub radius: u32,
    pub sobolev: Vec<f64>,
    /// Monte Carlo draws per Sobolev index; 0 skips the comparison.
    pub members: usize,
    pub z_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InvarianceSection {
    pub times: Vec<f64>,
    pub members: usize,
    pub family_alpha: f64,
    pub z_floor: f64,
    pub max_failure_rate: f64,
    /// Outer radius of the frozen complement; 0 means `2N`.
    pub complement_extent: u32,
    pub law: GibbsLaw,
    /// Runs the deliberately broken truncation (negative control).
    pub bug_switch: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            threads: 0,
            out: PathBuf::from("out"),
            model: ModelSection::default(),
            integrator: IntegratorSection::default(),
            coefficients: CoefficientsSection::default(),
            sample: SampleSection::default(),
            evolve: EvolveSection::default(),
            expectation: ExpectationSection::default(),
            invariance: InvarianceSection::default(),
        }
    }
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { delta: 0.5, formulation: Formulation::Regularized, streamline_variant: StreamlineVariant::Derived, cutoff: 4 }
    }
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self { method: Method::ImplicitMidpoint, dt: 0.01, fixed_point_tol: 1e-13, max_fixed_point_iters: 100 }
    }
}

impl Default for CoefficientsSection {
    fn default() -> Self {
        Self { k_modes: vec![[1, 0]], h_extent: 2 }
    }
}

impl Default for SampleSection {
    fn default() -> Self {
        Self { members: 1000, snapshots: 1, law: GibbsLaw::Invariant, z_threshold: 5.0 }
    }
}

impl Default for EvolveSection {
    fn default() -> Self {
        Self { t_final: 1.0, initial: InitialData::Gibbs, law: GibbsLaw::Invariant }
    }
}

impl Default for ExpectationSection {
    fn default() -> Self {
        Self { k_modes: vec![[1, 0]], radius: 512, sobolev: vec![-2.5], members: 1000, z_threshold: 3.0 }
    }
}

impl Default for InvarianceSection {
    fn default() -> Self {
        Self {
            times: vec![0.25, 0.5, 1.0],
            members: 1000,
            family_alpha: 0.01,
            z_floor: 4.0,
            max_failure_rate: 1e-3,
            complement_extent: 0,
            law: GibbsLaw::Invariant,
            bug_switch: false,
        }
    }
}

pub const MAX_WINDOW: u32 = 1024;

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of the canonical TOML echo.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        let m = &self.model;
        let params = ModelParams::new(m.delta, m.formulation, m.cutoff)?.with_variant(m.streamline_variant);
        Ok(params)
    }

    pub fn integrator(&self) -> Result<IntegratorConfig, CliError> {
        let i = &self.integrator;
        let config = IntegratorConfig {
            method: i.method,
            dt: i.dt,
            fixed_point_tol: i.fixed_point_tol,
            max_fixed_point_iters: i.max_fixed_point_iters,
            truncation: Truncation::Galerkin,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn stream(&self, stream_id: u64) -> SeededStream {
        SeededStream::new(self.seed, stream_id)
    }
}

pub fn modes(list: &[[i32; 2]]) -> Vec<LatticeMode> {
    list.iter().map(|&[a, b]| LatticeMode::new(a, b)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn echo_round_trips() {
        let mut c = RunConfig::default();
        c.model.delta = 0.1 + 0.2;
        c.evolve.initial = InitialData::Snapshot("a/b.msqg".into());
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(RunConfig::from_toml("sede = 3"), Err(CliError::Config(_))));
        assert!(RunConfig::from_toml("[model]\nformulation = \"sqg\"").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
