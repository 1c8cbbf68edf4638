use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expectation::expectation_b_analytic;
use crate::flow::{GalerkinFlow, IntegratorConfig, Truncation};
use crate::gibbs::{sample_field, GibbsSpec, SeededStream};
use crate::spectral::{ModelParams, SpectralField};
use crate::stats::Estimate;

/// Time-integrated norms along the flow against their stationary values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormBoundReport {
    pub sigma: f64,
    pub horizon: f64,
    pub members: usize,
    /// `(1/M) sum_i int_0^T ||Psi_i||^2_{H^sigma}`.
    pub state_integral: Estimate,
    /// `T E ||psi||^2_{H^sigma}`.
    pub state_expected: f64,
    /// `(1/M) sum_i int_0^T ||d_t Psi_i||^2_{H^sigma}`.
    pub rate_integral: Estimate,
    /// `T E ||B^N(psi)||^2_{H^sigma}`.
    pub rate_expected: f64,
    pub state_z: f64,
    pub rate_z: f64,
    /// Both integrals within 4 standard errors of their expected values.
    pub consistent: bool,
}

fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times.windows(2).zip(values.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum()
}

/// Integrates `||Psi||^2` and `||d_t Psi||^2` in `H^sigma` over `[0, T]`
/// for `members` draws from the invariant law on the box. By invariance
/// their means are `T` times the stationary expectations.
pub fn trajectory_norm_bounds(params: &ModelParams, horizon: f64, sigma: f64, members: usize, config: &IntegratorConfig, stream: &SeededStream) -> Result<NormBoundReport> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon {horizon} must be positive")));
    }
    if members < 2 {
        return Err(Error::SampleTooSmall { size: members, required: 2 });
    }
    let n = params.cutoff;
    let spec = GibbsSpec::invariant(params);
    let config = config.with_truncation(Truncation::Galerkin);
    let flow = GalerkinFlow::<f64>::new(params, &config)?;
    let integrals: Vec<(f64, f64)> = (0..members as u64)
        .into_par_iter()
        .map(|i| {
            let psi = sample_field::<f64>(&spec, n, &stream.child(i))?;
            let traj = flow.evolve(&psi, horizon)?;
            let states: &[SpectralField<f64>] = traj.states();
            let norms: Vec<f64> = states.iter().map(|s| s.sobolev_norm_sq(sigma)).collect();
            let rates: Vec<f64> = states.iter().map(|s| flow.vector_field(s).sobolev_norm_sq(sigma)).collect();
            Ok((trapezoid(traj.times(), &norms), trapezoid(traj.times(), &rates)))
        })
        .collect::<Result<_>>()?;
    let (state, rate): (Vec<f64>, Vec<f64>) = integrals.into_iter().unzip();
    let state_integral = Estimate::from_samples(&state);
    let rate_integral = Estimate::from_samples(&rate);
    let state_expected = horizon * spec.expected_sobolev_norm_sq(sigma, 0, n);
    let rate_expected = horizon * expectation_b_analytic(params, &spec, sigma);
    let state_z = state_integral.z_score(state_expected);
    let rate_z = rate_integral.z_score(rate_expected);
    Ok(NormBoundReport {
        sigma,
        horizon,
        members,
        state_integral,
        state_expected,
        rate_integral,
        rate_expected,
        state_z,
        rate_z,
        consistent: state_z.abs() <= 4.0 && rate_z.abs() <= 4.0,
    })
}
