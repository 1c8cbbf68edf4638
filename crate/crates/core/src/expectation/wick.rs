//! Closed-form Gaussian expectations of `||B^N||^2_{H^s}` and their Monte
//! Carlo counterparts.
//!
//! For a real Gaussian field with `E|psi_h|^2 = C(h)` the Wick expansion of
//! `E|B_k|^2` pairs `psi_h psi_{k-h}` with its conjugate either directly or
//! after `h -> k - h`; by the symmetry of `alpha` both pairings agree, so
//! `E|B_k|^2 = 2 sum_h alpha_{k,h}^2 C(h) C(k-h)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{sample_field, GibbsSpec, SeededStream};
use crate::spectral::{interaction_coefficient, InteractionTable, LatticeBox, LatticeMode, ModelParams, OutputModes};
use crate::stats::Estimate;
use crate::summation::{sorted_compensated_sum, CompensatedSum};

/// `E|B_k|^2` restricted to the pairs `(h, k-h)` accepted by `keep`, which
/// must be invariant under `h -> k - h`. `h` ranges over the box `extent`.
pub(crate) fn mode_expectation<F>(k: LatticeMode, extent: u32, params: &ModelParams, spec: &GibbsSpec, halving: bool, keep: F) -> f64
where
    F: Fn(LatticeMode, LatticeMode) -> bool,
{
    let mut terms = Vec::new();
    for h in LatticeBox::new(extent).modes() {
        let q = k - h;
        if q.is_zero() || !keep(h, q) {
            continue;
        }
        if halving {
            // one representative per unordered pair {h, k-h}
            let (a, b) = ((h.k1, h.k2), (q.k1, q.k2));
            if a > b {
                continue;
            }
            let weight = if a == b { 2.0 } else { 4.0 };
            let al: f64 = interaction_coefficient(k, h, params);
            terms.push(weight * al * al * spec.covariance_unchecked(h) * spec.covariance_unchecked(q));
        } else {
            let al: f64 = interaction_coefficient(k, h, params);
            terms.push(2.0 * al * al * spec.covariance_unchecked(h) * spec.covariance_unchecked(q));
        }
    }
    sorted_compensated_sum(&mut terms)
}

fn weighted_total<F>(outputs: &[LatticeMode], s: f64, per_mode: F) -> f64
where
    F: Fn(LatticeMode) -> f64 + Sync,
{
    let values: Vec<f64> = outputs.par_iter().map(|&k| (k.norm_sq() as f64).powf(s) * per_mode(k)).collect();
    // both k and -k, equal by parity
    2.0 * values.iter().copied().collect::<CompensatedSum<f64>>().value()
}

/// `E ||B^N(psi)||^2_{H^s}` in closed form for `psi ~ spec`, with
/// `N = params.cutoff`. Under the invariant regularized law this is
/// `4 sum_{k} |k|^{2s} sum_{h} alpha^2 / (|h|^2 |h-k|^2)` over the box.
pub fn expectation_b_analytic(params: &ModelParams, spec: &GibbsSpec, s: f64) -> f64 {
    let n = params.cutoff;
    let reps: Vec<LatticeMode> = LatticeBox::new(n).representatives().collect();
    weighted_total(&reps, s, |k| mode_expectation(k, n, params, spec, true, |_, q| q.in_box(n)))
}

/// Same as [`expectation_b_analytic`] without the `h <-> k-h` halving.
pub fn expectation_b_analytic_unreduced(params: &ModelParams, spec: &GibbsSpec, s: f64) -> f64 {
    let n = params.cutoff;
    let reps: Vec<LatticeMode> = LatticeBox::new(n).representatives().collect();
    weighted_total(&reps, s, |k| mode_expectation(k, n, params, spec, false, |_, q| q.in_box(n)))
}

pub const MC_MIN_SAMPLES: usize = 100;

/// Sample mean and standard error of `||B^N(psi)||^2_{H^s}` over `m`
/// independent fields; member `i` uses `stream.child(i)`.
pub fn expectation_b_monte_carlo(params: &ModelParams, spec: &GibbsSpec, s: f64, m: usize, stream: &SeededStream) -> Result<Estimate> {
    params.require_dynamics()?;
    if m < MC_MIN_SAMPLES {
        return Err(Error::SampleTooSmall { size: m, required: MC_MIN_SAMPLES });
    }
    let table = InteractionTable::<f64>::truncated(params, OutputModes::Representatives);
    let values: Vec<f64> = (0..m as u64)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let psi = sample_field::<f64>(spec, params.cutoff, &stream.child(i))?;
            Ok(table.apply(&psi).sobolev_norm_sq(s))
        })
        .collect::<Result<_>>()?;
    Ok(Estimate::from_samples(&values))
}

/// `E ||B^{N_big} - B^N||^2_{H^s}`: the Wick sum over the triads present in
/// `B^{N_big}` but not in `B^N`.
pub fn galerkin_tail(n: u32, n_big: u32, s: f64, params: &ModelParams, spec: &GibbsSpec) -> Result<f64> {
    params.require_dynamics()?;
    if n > n_big {
        return Err(Error::InvalidParameter(format!("need N <= N_big, got {n} > {n_big}")));
    }
    if n == n_big {
        return Ok(0.0);
    }
    let reps: Vec<LatticeMode> = LatticeBox::new(n_big).representatives().collect();
    Ok(weighted_total(&reps, s, |k| {
        let low = k.in_box(n);
        mode_expectation(k, n_big, params, spec, true, |h, q| q.in_box(n_big) && !(low && h.in_box(n) && q.in_box(n)))
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectationRow {
    pub cutoff: u32,
    pub s: f64,
    pub delta: f64,
    pub analytic: f64,
    pub monte_carlo: f64,
    pub standard_error: f64,
}

impl ExpectationRow {
    pub fn z_score(&self) -> f64 {
        crate::stats::z_score(self.monte_carlo - self.analytic, self.standard_error)
    }
}

/// Analytic value and Monte Carlo estimate side by side.
pub fn compare_expectation(params: &ModelParams, spec: &GibbsSpec, s: f64, m: usize, stream: &SeededStream) -> Result<ExpectationRow> {
    let mc = expectation_b_monte_carlo(params, spec, s, m, stream)?;
    Ok(ExpectationRow {
        cutoff: params.cutoff,
        s,
        delta: params.delta,
        analytic: expectation_b_analytic(params, spec, s),
        monte_carlo: mc.mean,
        standard_error: mc.standard_error,
    })
}
