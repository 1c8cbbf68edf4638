//! Triad interaction coefficients `alpha_{k,h}`.
//!
//! The nonlinearity is `B_k = sum_{h != 0, k} alpha_{k,h} psi_h psi_{k-h}`
//! with, for the regularized unknown,
//!
//! ```text
//! alpha_{k,h} = -1/2 (h^perp . k / |k|) (|k-h|^{-delta} |h| - |h|^{-delta} |k-h|)
//! ```
//!
//! and for the stream function
//!
//! ```text
//! alpha_{k,h} = 1/2 |k|^{-(1+delta)} (h^perp . k) (|k-h|^{1+delta} - |h|^{1+delta})
//! ```
//!
//! Both are symmetric under `h -> k - h` bit for bit: the two factors change
//! sign together and are computed from the same rounded quantities.

use super::lattice::LatticeMode;
use super::params::{Formulation, ModelParams, StreamlineVariant};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// `alpha_{k,h}`; rejects `k = 0`.
pub fn alpha<T: Real>(k: LatticeMode, h: LatticeMode, params: &ModelParams) -> Result<T> {
    if k.is_zero() {
        return Err(Error::ZeroMode);
    }
    Ok(interaction_coefficient(k, h, params))
}

/// Total version of [`alpha`]: zero for `k = 0` (the mean never evolves),
/// for the excluded terms `h in {0, k}` and whenever `h` is parallel to `k`.
pub fn interaction_coefficient<T: Real>(k: LatticeMode, h: LatticeMode, params: &ModelParams) -> T {
    let q = k - h;
    if k.is_zero() || h.is_zero() || q.is_zero() {
        return T::zero();
    }
    let cross = h.perp_dot(k);
    if cross == 0 {
        return T::zero();
    }
    let cross = T::of(cross as f64);
    let half = T::of(0.5);
    let delta = T::of(params.delta);
    let k2 = T::of(k.norm_sq() as f64);
    let h2 = T::of(h.norm_sq() as f64);
    let q2 = T::of(q.norm_sq() as f64);
    match params.formulation {
        Formulation::Regularized => {
            let p = -delta * half;
            let a = q2.powf(p) * h2.sqrt();
            let b = h2.powf(p) * q2.sqrt();
            -half * (cross / k2.sqrt()) * (a - b)
        }
        Formulation::Streamline => {
            let p = (T::one() + delta) * half;
            let outer = match params.streamline_variant {
                StreamlineVariant::Derived => k2.powf(-p),
                StreamlineVariant::InvertedPrefactor => k2.powf(p),
            };
            half * outer * cross * (q2.powf(p) - h2.powf(p))
        }
    }
}
