use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::IntegratorConfig;
use crate::error::{Error, Result};
use crate::gibbs::snapshot::{load_snapshot, save_snapshot};
use crate::gibbs::{log_density_truncated, GibbsSpec, SeededStream};
use crate::scalar::Real;
use crate::spectral::{InteractionTable, ModelParams, OutputModes, SpectralField};
use crate::summation::CompensatedSum;

/// Sobolev index of the norm used for the Duhamel residual.
pub const DUHAMEL_SOBOLEV_INDEX: f64 = -2.5;

/// Time-stamped states of one run of the truncated flow.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T: Real> {
    times: Vec<f64>,
    states: Vec<SpectralField<T>>,
    params: ModelParams,
    config: IntegratorConfig,
    reversed: bool,
    gibbs: Option<GibbsSpec>,
    seed: Option<SeededStream>,
}

/// Conservation diagnostics along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    /// Sobolev index of the conserved form (1, or `1 + delta` for the
    /// stream function).
    pub conserved_index: f64,
    pub initial_value: f64,
    pub max_relative_drift: f64,
    pub final_relative_drift: f64,
    pub complement_frozen: bool,
    pub max_hermitian_defect: f64,
    /// Largest change of the truncated log-density, when a law is attached.
    pub log_density_drift: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    times: Vec<f64>,
    params: ModelParams,
    config: IntegratorConfig,
    reversed: bool,
    gibbs: Option<GibbsSpec>,
    seed: Option<SeededStream>,
    drift: DriftReport,
    files: Vec<String>,
}

pub const SIDECAR_NAME: &str = "trajectory.json";

impl<T: Real> Trajectory<T> {
    pub(crate) fn new(times: Vec<f64>, states: Vec<SpectralField<T>>, params: ModelParams, config: IntegratorConfig, reversed: bool) -> Self {
        Self { times, states, params, config, reversed, gibbs: None, seed: None }
    }

    /// Attaches the law and stream the initial state was drawn from.
    pub fn with_provenance(mut self, gibbs: Option<GibbsSpec>, seed: Option<SeededStream>) -> Self {
        self.gibbs = gibbs;
        self.seed = seed;
        self
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[SpectralField<T>] {
        &self.states
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.config
    }

    pub fn gibbs(&self) -> Option<&GibbsSpec> {
        self.gibbs.as_ref()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &SpectralField<T> {
        self.states.last().expect("trajectories hold the initial state")
    }

    pub fn drift(&self) -> DriftReport {
        let n = self.params.cutoff;
        let index = T::of(self.params.conserved_sobolev_index());
        let values: Vec<f64> = self.states.iter().map(|s| s.project(n).sobolev_norm_sq(index).to_f64_lossy()).collect();
        let initial = values[0];
        let rel = |v: f64| if initial == 0.0 { (v - initial).abs() } else { ((v - initial) / initial).abs() };
        let complement = self.states[0].project_complement(n);
        let log_density_drift = self.gibbs.map(|spec| {
            let d: Vec<f64> = self
                .states
                .iter()
                .map(|s| log_density_truncated(&s.project(n), &spec, n).map(|x| x.to_f64_lossy()).unwrap_or(f64::NAN))
                .collect();
            d.iter().map(|x| (x - d[0]).abs()).fold(0.0, f64::max)
        });
        DriftReport {
            conserved_index: self.params.conserved_sobolev_index(),
            initial_value: initial,
            max_relative_drift: values.iter().map(|v| rel(*v)).fold(0.0, f64::max),
            final_relative_drift: rel(*values.last().unwrap()),
            complement_frozen: self.states.iter().all(|s| s.project_complement(n) == complement),
            max_hermitian_defect: self.states.iter().map(|s| s.hermitian_defect().to_f64_lossy()).fold(0.0, f64::max),
            log_density_drift,
        }
    }

    /// Writes `state_00000.msqg, ...` and a `trajectory.json` sidecar into `dir`.
    pub fn save(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let code = self.params.formulation_code();
        let mut files = Vec::with_capacity(self.states.len());
        let mut paths = Vec::with_capacity(self.states.len() + 1);
        for (i, s) in self.states.iter().enumerate() {
            let name = format!("state_{i:05}.msqg");
            let path = dir.join(&name);
            save_snapshot(&path, s, self.params.delta, code)?;
            files.push(name);
            paths.push(path);
        }
        let sidecar = Sidecar {
            times: self.times.clone(),
            params: self.params,
            config: self.config,
            reversed: self.reversed,
            gibbs: self.gibbs,
            seed: self.seed,
            drift: self.drift(),
            files,
        };
        let path = dir.join(SIDECAR_NAME);
        std::fs::write(&path, serde_json::to_string_pretty(&sidecar)?)?;
        paths.push(path);
        Ok(paths)
    }
}

impl Trajectory<f64> {
    pub fn load(dir: &Path) -> Result<Self> {
        let sidecar: Sidecar = serde_json::from_str(&std::fs::read_to_string(dir.join(SIDECAR_NAME))?)?;
        if sidecar.files.len() != sidecar.times.len() {
            return Err(Error::Format("sidecar lists a different number of states and times".into()));
        }
        let states = sidecar
            .files
            .iter()
            .map(|f| load_snapshot(&dir.join(f)).map(|(_, s)| s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            times: sidecar.times,
            states,
            params: sidecar.params,
            config: sidecar.config,
            reversed: sidecar.reversed,
            gibbs: sidecar.gibbs,
            seed: sidecar.seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuhamelReport {
    pub sobolev_index: f64,
    /// Residual at each stored time.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

/// `max_t || Psi(t) - Psi(0) - int_0^t B^N(Psi) ||_{H^{-2.5}}` with the
/// integral taken by the composite trapezoid rule on the stored times.
pub fn duhamel_residual<T: Real>(traj: &Trajectory<T>) -> DuhamelReport {
    let n = traj.params.cutoff;
    let table = InteractionTable::<f64>::truncated(&traj.params, OutputModes::Representatives);
    let sign = if traj.reversed { -1.0 } else { 1.0 };
    let states: Vec<SpectralField<f64>> = traj.states.iter().map(|s| s.project(n).with_extent(n).cast()).collect();
    let rates: Vec<SpectralField<f64>> = states.iter().map(|s| table.apply(s).scaled(sign)).collect();

    let len = states[0].as_slice().len();
    let mut integral = vec![vec![CompensatedSum::<f64>::new(); len]; 2];
    let mut residuals = vec![0.0];
    for j in 1..states.len() {
        let h = traj.times[j] - traj.times[j - 1];
        let (a, b) = (rates[j - 1].as_slice(), rates[j].as_slice());
        for i in 0..len {
            integral[0][i].add(0.5 * h * a[i].re);
            integral[0][i].add(0.5 * h * b[i].re);
            integral[1][i].add(0.5 * h * a[i].im);
            integral[1][i].add(0.5 * h * b[i].im);
        }
        let now = states[j].as_slice();
        let start = states[0].as_slice();
        let grid = states[0].grid();
        let mut acc = CompensatedSum::<f64>::new();
        for i in 0..len {
            let k = grid.mode(i);
            if k.is_zero() {
                continue;
            }
            let re = now[i].re - start[i].re - integral[0][i].value();
            let im = now[i].im - start[i].im - integral[1][i].value();
            acc.add((k.norm_sq() as f64).powf(DUHAMEL_SOBOLEV_INDEX) * (re * re + im * im));
        }
        residuals.push(acc.value().sqrt());
    }
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    DuhamelReport { sobolev_index: DUHAMEL_SOBOLEV_INDEX, residuals, max_residual }
}
