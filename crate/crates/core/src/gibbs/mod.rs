//! Centered Gaussian measures on spectral fields and their sampling.
//!
//! A [`GibbsSpec`] fixes the mode covariance `E|psi_k|^2 = scale |k|^{-2a}`.
//! Two laws are provided:
//!
//! * [`GibbsSpec::invariant`]: `a` equals the Sobolev index of the conserved
//!   quadratic form (1 for the regularized unknown, `1 + delta` for the
//!   stream function). Its density is a function of the conserved quantity,
//!   so together with the Liouville property the truncated flow preserves
//!   it. The scale `sqrt(2)` makes the Wick expansion of
//!   `E ||B||^2_{H^s}` equal to `4 sum_k |k|^{2s} sum_h alpha^2 / (|h|^2 |k-h|^2)`.
//! * [`GibbsSpec::moment_table`]: `E|psi_k|^2 = 2 / |k|^4` (resp.
//!   `2 / |k|^{4+4 delta}`), the tabulated second moments. This law is *not*
//!   preserved by the flow; it is kept for static moment checks.
//!
//! Sampling draws one complex Gaussian per pair `{k, -k}` (the
//! lexicographically positive representative) and assigns the conjugate at
//! `-k`, so samples are real fields.

pub mod snapshot;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{Formulation, LatticeBox, LatticeMode, ModelParams, SpectralField};

/// Named covariance laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GibbsLaw {
    Invariant,
    MomentTable,
    Custom,
}

/// Covariance law `E|psi_k|^2 = scale |k|^{-2 exponent}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsSpec {
    pub exponent: f64,
    pub scale: f64,
    pub formulation: Formulation,
    pub law: GibbsLaw,
}

impl GibbsSpec {
    pub fn new(exponent: f64, scale: f64, formulation: Formulation) -> Result<Self> {
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::InvalidParameter(format!("covariance exponent {exponent} must be positive")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("covariance scale {scale} must be positive")));
        }
        Ok(Self { exponent, scale, formulation, law: GibbsLaw::Custom })
    }

    /// The flow-invariant law built from the conserved quadratic form.
    pub fn invariant(params: &ModelParams) -> Self {
        Self {
            exponent: params.conserved_sobolev_index(),
            scale: std::f64::consts::SQRT_2,
            formulation: params.formulation,
            law: GibbsLaw::Invariant,
        }
    }

    /// The tabulated second moments `2 / |k|^4` (regularized) or
    /// `2 / |k|^{4 + 4 delta}` (stream function).
    pub fn moment_table(params: &ModelParams) -> Self {
        let exponent = match params.formulation {
            Formulation::Regularized => 2.0,
            Formulation::Streamline => 2.0 + 2.0 * params.delta,
        };
        Self { exponent, scale: 2.0, formulation: params.formulation, law: GibbsLaw::MomentTable }
    }

    /// Whether `sum_k |k|^{-2a}` converges over the whole lattice.
    pub fn is_trace_class(&self) -> bool {
        self.exponent > 1.0
    }

    /// `E|psi_k|^2`; rejects `k = 0`.
    pub fn covariance(&self, k: LatticeMode) -> Result<f64> {
        if k.is_zero() {
            return Err(Error::ZeroMode);
        }
        Ok(self.covariance_unchecked(k))
    }

    #[inline]
    pub(crate) fn covariance_unchecked(&self, k: LatticeMode) -> f64 {
        self.scale * (k.norm_sq() as f64).powf(-self.exponent)
    }

    /// `E ||psi||^2_{H^sigma}` restricted to modes with `inner < max-norm <= outer`.
    pub fn expected_sobolev_norm_sq(&self, sigma: f64, inner: u32, outer: u32) -> f64 {
        let mut acc = crate::summation::CompensatedSum::new();
        for k in LatticeBox::new(outer).modes().filter(|k| k.max_norm() > inner) {
            acc.add(self.covariance_unchecked(k) * (k.norm_sq() as f64).powf(sigma));
        }
        acc.value()
    }
}

/// `E|psi_k|^2` under `spec`.
pub fn covariance(k: LatticeMode, spec: &GibbsSpec) -> Result<f64> {
    spec.covariance(k)
}

/// A reproducible random stream: identical `(master_seed, stream_id)`
/// reproduce identical draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeededStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeededStream {
    pub const fn new(master_seed: u64, stream_id: u64) -> Self {
        Self { master_seed, stream_id }
    }

    /// ChaCha20 keyed by the master seed, on the stream `stream_id`.
    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Derived stream for the `index`-th member of an ensemble.
    pub fn child(&self, index: u64) -> Self {
        Self { master_seed: self.master_seed, stream_id: splitmix64(self.stream_id ^ splitmix64(index.wrapping_add(1))) }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws a real (Hermitian) field on the shell `inner < max-norm <= outer`,
/// laid out on the box of radius `outer`.
pub fn sample_shell<T: Real, R: Rng + ?Sized>(spec: &GibbsSpec, inner: u32, outer: u32, rng: &mut R) -> SpectralField<T> {
    let mut field = SpectralField::zeros(outer, true);
    for k in LatticeBox::new(outer).representatives().filter(|k| k.max_norm() > inner) {
        let sd = (spec.covariance_unchecked(k) / 2.0).sqrt();
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        field
            .set_pair(k, Complex::new(T::of(sd * re), T::of(sd * im)))
            .expect("representatives are nonzero and inside the box");
    }
    field
}

/// Real field on the box `N` drawn from the truncated measure `rho_N`.
pub fn sample_field<T: Real>(spec: &GibbsSpec, n: u32, stream: &SeededStream) -> Result<SpectralField<T>> {
    if n < 1 {
        return Err(Error::InvalidParameter("sampling box must have N >= 1".into()));
    }
    Ok(sample_shell(spec, 0, n, &mut stream.rng()))
}

/// Box part from `rho_N` and complement from `rho_N^perp` restricted to the
/// shell `N < max-norm <= outer`, from one stream. Returns their sum.
pub fn sample_with_complement<T: Real>(spec: &GibbsSpec, n: u32, outer: u32, stream: &SeededStream) -> Result<SpectralField<T>> {
    if n < 1 || outer < n {
        return Err(Error::InvalidParameter(format!("need 1 <= N <= outer, got N = {n}, outer = {outer}")));
    }
    let mut rng = stream.rng();
    let low: SpectralField<T> = sample_shell(spec, 0, n, &mut rng);
    let high: SpectralField<T> = sample_shell(spec, n, outer, &mut rng);
    Ok(low.add(&high))
}

/// Every coefficient an independent complex Gaussian (no reality
/// constraint). For static moment checks only; the flow rejects these.
pub fn sample_field_independent<T: Real>(spec: &GibbsSpec, n: u32, stream: &SeededStream) -> Result<SpectralField<T>> {
    if n < 1 {
        return Err(Error::InvalidParameter("sampling box must have N >= 1".into()));
    }
    let mut rng = stream.rng();
    let mut field = SpectralField::zeros(n, false);
    for k in LatticeBox::new(n).modes() {
        let sd = (spec.covariance_unchecked(k) / 2.0).sqrt();
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        field.set(k, Complex::new(T::of(sd * re), T::of(sd * im)))?;
    }
    Ok(field)
}

/// Exponent of the truncated density, `-sum |psi_k|^2 / E|psi_k|^2` over
/// independent coordinates (representatives for real fields, every mode
/// otherwise). The normalisation is [`log_normalization`].
pub fn log_density_truncated<T: Real>(psi: &SpectralField<T>, spec: &GibbsSpec, n: u32) -> Result<T> {
    let radius = psi.support_radius();
    if radius > n {
        return Err(Error::SupportOutsideBox { radius, cutoff: n });
    }
    let hermitian = psi.is_hermitian();
    Ok(psi
        .iter()
        .filter(|(k, _)| !hermitian || k.is_representative())
        .map(|(k, c)| -c.norm_sqr() / T::of(spec.covariance_unchecked(k)))
        .sum())
}

/// `log` of the normalising factor of `rho_N` for real fields:
/// `-sum_{representatives} log(pi E|psi_k|^2)`.
pub fn log_normalization(spec: &GibbsSpec, n: u32) -> f64 {
    LatticeBox::new(n)
        .representatives()
        .map(|k| -(std::f64::consts::PI * spec.covariance_unchecked(k)).ln())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg(delta: f64) -> ModelParams {
        ModelParams::regularized(delta, 4).unwrap()
    }

    #[test]
    fn moment_table_covariances() {
        let spec = GibbsSpec::moment_table(&reg(0.5));
        assert_eq!(spec.covariance(LatticeMode::new(1, 0)).unwrap(), 2.0);
        assert_eq!(spec.covariance(LatticeMode::new(0, 2)).unwrap(), 0.125);
        assert!(spec.covariance(LatticeMode::ZERO).is_err());
        let s = GibbsSpec::moment_table(&ModelParams::streamline(0.5, 4).unwrap());
        assert!((s.covariance(LatticeMode::new(1, 1)).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn invariant_law_follows_conserved_form() {
        let spec = GibbsSpec::invariant(&reg(0.5));
        assert_eq!(spec.exponent, 1.0);
        assert!((spec.covariance(LatticeMode::new(1, 1)).unwrap() - std::f64::consts::SQRT_2 / 2.0).abs() < 1e-15);
        let s = GibbsSpec::invariant(&ModelParams::streamline(0.5, 4).unwrap());
        assert_eq!(s.exponent, 1.5);
        assert!(!spec.is_trace_class());
        assert!(GibbsSpec::moment_table(&reg(0.5)).is_trace_class());
        assert!(GibbsSpec::new(0.0, 1.0, Formulation::Regularized).is_err());
    }

    #[test]
    fn sampling_is_reproducible_and_hermitian() {
        let spec = GibbsSpec::invariant(&reg(0.5));
        let s = SeededStream::new(7, 3);
        let a: SpectralField<f64> = sample_field(&spec, 4, &s).unwrap();
        let b: SpectralField<f64> = sample_field(&spec, 4, &s).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hermitian_defect(), 0.0);
        let c: SpectralField<f64> = sample_field(&spec, 4, &SeededStream::new(7, 4)).unwrap();
        assert_ne!(a, c);
        assert!(sample_field::<f64>(&spec, 0, &s).is_err());
        let one: SpectralField<f64> = sample_field(&spec, 1, &s).unwrap();
        assert_eq!(one.iter().filter(|(_, c)| c.norm() > 0.0).count(), 8);
    }

    #[test]
    fn complement_sample_extends_box_sample() {
        let spec = GibbsSpec::invariant(&reg(0.5));
        let s = SeededStream::new(1, 1);
        let low: SpectralField<f64> = sample_field(&spec, 3, &s).unwrap();
        let both: SpectralField<f64> = sample_with_complement(&spec, 3, 6, &s).unwrap();
        assert_eq!(both.project(3).with_extent(3), low);
        assert_eq!(both.extent(), 6);
        assert!(!both.project_complement(3).is_zero());
    }

    #[test]
    fn log_density_examples() {
        let spec = GibbsSpec::moment_table(&reg(0.5));
        assert_eq!(log_density_truncated(&SpectralField::<f64>::zeros(2, true), &spec, 2).unwrap(), 0.0);
        let pair = SpectralField::hermitian_from_pairs([(LatticeMode::new(1, 0), Complex::new(1.0, 0.0))]).unwrap();
        assert_eq!(log_density_truncated(&pair, &spec, 2).unwrap(), -0.5);
        assert_eq!(log_density_truncated(&pair, &GibbsSpec::invariant(&reg(0.5)), 2).unwrap(), -1.0 / std::f64::consts::SQRT_2);

        let psi: SpectralField<f64> = sample_field(&spec, 3, &SeededStream::new(2, 0)).unwrap();
        let d = log_density_truncated(&psi, &spec, 3).unwrap();
        let d3 = log_density_truncated(&psi.scaled(3.0), &spec, 3).unwrap();
        assert!((d3 - 9.0 * d).abs() <= 1e-12 * d.abs());
        assert!(matches!(log_density_truncated(&psi, &spec, 2), Err(Error::SupportOutsideBox { .. })));
    }

    #[test]
    fn normalization_integrates_to_one_per_mode() {
        // one representative at N = 1 in each direction: check against direct formula
        let spec = GibbsSpec::moment_table(&reg(1.0));
        let expected: f64 = [LatticeMode::new(0, 1), LatticeMode::new(1, -1), LatticeMode::new(1, 0), LatticeMode::new(1, 1)]
            .iter()
            .map(|&k| -(std::f64::consts::PI * spec.covariance(k).unwrap()).ln())
            .sum();
        assert!((log_normalization(&spec, 1) - expected).abs() < 1e-14);
    }
}
