//! Monte Carlo checks that the truncated flow leaves its Gaussian measure
//! invariant.
//!
//! An ensemble is drawn from the truncated measure (box part) together with
//! a frozen complement on the shell up to `2N`, every member is evolved,
//! and a panel of observables is compared between time 0 and each later
//! time: paired z-tests on the per-member differences (Bonferroni over the
//! whole panel and all times) and two-sample Kolmogorov-Smirnov tests on
//! the marginal distributions.

mod norms;

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use norms::{trajectory_norm_bounds, NormBoundReport};

use crate::error::{Error, Result};
use crate::flow::{GalerkinFlow, IntegratorConfig};
use crate::gibbs::{sample_with_complement, GibbsLaw, GibbsSpec, SeededStream};
use crate::report::{fmt_float, write_csv_row};
use crate::spectral::{LatticeMode, ModelParams, SpectralField};
use crate::stats::{normal_critical_value, two_sample_test, Welford};

/// A scalar function of the box part of a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Observable {
    Re { k: LatticeMode },
    Im { k: LatticeMode },
    ModulusSq { k: LatticeMode },
    SobolevNormSq { sigma: f64 },
    CosRe { k: LatticeMode, c: f64 },
    CosIm { k: LatticeMode, c: f64 },
}

impl Observable {
    pub fn name(&self) -> String {
        match self {
            Observable::Re { k } => format!("re{k}"),
            Observable::Im { k } => format!("im{k}"),
            Observable::ModulusSq { k } => format!("abs2{k}"),
            Observable::SobolevNormSq { sigma } => format!("hnorm2[{sigma}]"),
            Observable::CosRe { k, c } => format!("cos({c}re{k})"),
            Observable::CosIm { k, c } => format!("cos({c}im{k})"),
        }
    }

    /// Value on the box part (`max-norm <= n`) of `psi`.
    pub fn eval(&self, psi: &SpectralField<f64>, n: u32) -> f64 {
        let at = |k: LatticeMode| if k.in_box(n) { psi.get(k) } else { num_complex::Complex::new(0.0, 0.0) };
        match *self {
            Observable::Re { k } => at(k).re,
            Observable::Im { k } => at(k).im,
            Observable::ModulusSq { k } => at(k).norm_sqr(),
            Observable::SobolevNormSq { sigma } => psi.project(n).sobolev_norm_sq(sigma),
            Observable::CosRe { k, c } => (c * at(k).re).cos(),
            Observable::CosIm { k, c } => (c * at(k).im).cos(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservablePanel {
    pub observables: Vec<Observable>,
}

pub const DEFAULT_PANEL_MODES: [(i32, i32); 4] = [(1, 0), (0, 1), (1, 1), (2, 1)];
pub const DEFAULT_PANEL_SIGMAS: [f64; 2] = [-2.5, -3.0];

impl Default for ObservablePanel {
    /// Twenty observables: real part, imaginary part, squared modulus and
    /// `cos(Re)` at four low modes; two negative Sobolev norms; `cos(Im)`
    /// at the two axis modes.
    fn default() -> Self {
        let modes: Vec<LatticeMode> = DEFAULT_PANEL_MODES.iter().map(|&m| m.into()).collect();
        let mut observables = Vec::new();
        for &k in &modes {
            observables.push(Observable::Re { k });
            observables.push(Observable::Im { k });
            observables.push(Observable::ModulusSq { k });
        }
        observables.extend(DEFAULT_PANEL_SIGMAS.iter().map(|&sigma| Observable::SobolevNormSq { sigma }));
        observables.extend(modes.iter().map(|&k| Observable::CosRe { k, c: 1.0 }));
        observables.extend(modes[..2].iter().map(|&k| Observable::CosIm { k, c: 1.0 }));
        Self { observables }
    }
}

impl ObservablePanel {
    pub fn new(observables: Vec<Observable>) -> Self {
        Self { observables }
    }

    pub fn len(&self) -> usize {
        self.observables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observables.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.observables.iter().map(|o| o.name()).collect()
    }
}

/// Pre-registered settings of an invariance experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceConfig {
    pub times: Vec<f64>,
    pub members: usize,
    pub integrator: IntegratorConfig,
    pub law: GibbsLaw,
    /// Outer radius of the stored complement (default `2N`).
    pub complement_extent: Option<u32>,
    /// Family-wise level shared by the z-tests and by the KS tests.
    pub family_alpha: f64,
    /// Lower bound on the z threshold.
    pub z_floor: f64,
    /// Largest tolerated fraction of members whose integration fails.
    pub max_failure_rate: f64,
}

pub const MIN_MEMBERS: usize = 100;

impl InvarianceConfig {
    pub fn new(times: Vec<f64>, members: usize, integrator: IntegratorConfig) -> Self {
        Self {
            times,
            members,
            integrator,
            law: GibbsLaw::Invariant,
            complement_extent: None,
            family_alpha: 0.01,
            z_floor: 4.0,
            max_failure_rate: 1e-3,
        }
    }

    fn spec(&self, params: &ModelParams) -> GibbsSpec {
        match self.law {
            GibbsLaw::MomentTable => GibbsSpec::moment_table(params),
            _ => GibbsSpec::invariant(params),
        }
    }

    /// `(z threshold, KS p threshold)` for `tests` simultaneous comparisons.
    pub fn thresholds(&self, tests: usize) -> (f64, f64) {
        let m = tests.max(1) as f64;
        (normal_critical_value(self.family_alpha / m).max(self.z_floor), self.family_alpha / m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeStatistics {
    pub time: f64,
    pub mean: f64,
    pub variance: f64,
    pub standard_error: f64,
    /// Mean and standard error of the per-member change since time 0.
    pub change_mean: f64,
    pub change_standard_error: f64,
    pub z: f64,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableReport {
    pub name: String,
    pub observable: Observable,
    pub initial_mean: f64,
    pub initial_variance: f64,
    pub initial_standard_error: f64,
    pub times: Vec<TimeStatistics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub params: ModelParams,
    pub config: InvarianceConfig,
    pub gibbs: GibbsSpec,
    pub seed: SeededStream,
    pub members_used: usize,
    pub failures: usize,
    pub z_threshold: f64,
    pub ks_p_threshold: f64,
    /// Pre-registered choices the verdict depends on.
    pub decisions: Vec<String>,
    pub observables: Vec<ObservableReport>,
    pub max_abs_z: f64,
    pub min_ks_p_value: f64,
    pub passed: bool,
}

impl EnsembleReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `observable,time,mean,variance,se,change_mean,change_se,z,ks_statistic,ks_p,pass`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write_csv_row(&mut w, &["observable", "time", "mean", "variance", "se", "change_mean", "change_se", "z", "ks_statistic", "ks_p", "pass"])?;
        for o in &self.observables {
            for t in &o.times {
                write_csv_row(
                    &mut w,
                    &[
                        o.name.clone(),
                        fmt_float(t.time),
                        fmt_float(t.mean),
                        fmt_float(t.variance),
                        fmt_float(t.standard_error),
                        fmt_float(t.change_mean),
                        fmt_float(t.change_standard_error),
                        fmt_float(t.z),
                        fmt_float(t.ks_statistic),
                        fmt_float(t.ks_p_value),
                        t.pass.to_string(),
                    ],
                )?;
            }
        }
        Ok(())
    }
}

/// Draws `config.members` states, evolves each to `config.times` and tests
/// the panel for invariance. Member `i` uses `stream.child(i)`.
pub fn run_invariance_experiment(params: &ModelParams, config: &InvarianceConfig, panel: &ObservablePanel, stream: &SeededStream) -> Result<EnsembleReport> {
    params.require_dynamics()?;
    if config.members < MIN_MEMBERS {
        return Err(Error::SampleTooSmall { size: config.members, required: MIN_MEMBERS });
    }
    if panel.is_empty() || config.times.is_empty() {
        return Err(Error::InvalidParameter("empty panel or time list".into()));
    }
    let n = params.cutoff;
    let outer = config.complement_extent.unwrap_or(2 * n).max(n);
    let spec = config.spec(params);
    let flow = GalerkinFlow::<f64>::with_input_extent(params, &config.integrator, outer)?;

    let per_member: Vec<Result<Vec<Vec<f64>>>> = (0..config.members as u64)
        .into_par_iter()
        .map(|i| {
            let psi = sample_with_complement::<f64>(&spec, n, outer, &stream.child(i))?;
            let states = flow.evolve_to(&psi, &config.times)?;
            let eval = |s: &SpectralField<f64>| panel.observables.iter().map(|o| o.eval(s, n)).collect::<Vec<f64>>();
            Ok(std::iter::once(&psi).chain(states.iter()).map(eval).collect())
        })
        .collect();

    let mut values = Vec::with_capacity(per_member.len());
    let mut failures = 0;
    for r in per_member {
        match r {
            Ok(v) => values.push(v),
            Err(Error::NonConvergence { .. }) => failures += 1,
            Err(e) => return Err(e),
        }
    }
    if failures as f64 > config.max_failure_rate * config.members as f64 {
        return Err(Error::EnsembleInvalid { failures, members: config.members });
    }

    let tests = panel.len() * config.times.len();
    let (z_threshold, ks_p_threshold) = config.thresholds(tests);
    let mut observables = Vec::with_capacity(panel.len());
    let mut max_abs_z: f64 = 0.0;
    let mut min_ks_p: f64 = 1.0;
    for (j, obs) in panel.observables.iter().enumerate() {
        let initial: Vec<f64> = values.iter().map(|m| m[0][j]).collect();
        let w0: Welford = initial.iter().copied().collect();
        let mut times = Vec::with_capacity(config.times.len());
        for (ti, &time) in config.times.iter().enumerate() {
            let now: Vec<f64> = values.iter().map(|m| m[ti + 1][j]).collect();
            let w: Welford = now.iter().copied().collect();
            let d: Welford = now.iter().zip(&initial).map(|(a, b)| a - b).collect();
            let z = crate::stats::z_score(d.mean(), d.standard_error());
            let ks = two_sample_test(&initial, &now)?;
            let pass = z.abs() <= z_threshold && ks.p_value > ks_p_threshold;
            max_abs_z = max_abs_z.max(z.abs());
            min_ks_p = min_ks_p.min(ks.p_value);
            times.push(TimeStatistics {
                time,
                mean: w.mean(),
                variance: w.variance(),
                standard_error: w.standard_error(),
                change_mean: d.mean(),
                change_standard_error: d.standard_error(),
                z,
                ks_statistic: ks.statistic,
                ks_p_value: ks.p_value,
                pass,
            });
        }
        observables.push(ObservableReport {
            name: obs.name(),
            observable: *obs,
            initial_mean: w0.mean(),
            initial_variance: w0.variance(),
            initial_standard_error: w0.standard_error(),
            times,
        });
    }
    let passed = observables.iter().all(|o| o.times.iter().all(|t| t.pass));
    let decisions = vec![
        format!("paired z-test per observable and time, |z| <= max({}, Bonferroni critical value at family level {} over {tests} tests) = {z_threshold}", config.z_floor, config.family_alpha),
        format!("two-sample Kolmogorov-Smirnov per observable and time, p > {} / {tests}", config.family_alpha),
        format!("frozen complement sampled on {n} < max-norm <= {outer}"),
        format!("initial law {:?}: E|psi_k|^2 = {} |k|^(-{})", spec.law, spec.scale, 2.0 * spec.exponent),
        format!("integrator {:?}, dt = {}, truncation {:?}", config.integrator.method, config.integrator.dt, config.integrator.truncation),
    ];
    Ok(EnsembleReport {
        params: *params,
        config: config.clone(),
        gibbs: spec,
        seed: *stream,
        members_used: values.len(),
        failures,
        z_threshold,
        ks_p_threshold,
        decisions,
        observables,
        max_abs_z,
        min_ks_p_value: min_ks_p,
        passed,
    })
}
