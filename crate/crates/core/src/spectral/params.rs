use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which unknown the spectral system is written for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formulation {
    /// Regularized stream function `psi = |D|^delta phi`; conserves `||psi||_{H^1}`.
    Regularized,
    /// Stream function `phi` itself; conserves `||phi||_{H^{1+delta}}`.
    Streamline,
}

impl Formulation {
    pub fn tag(self) -> u8 {
        match self {
            Formulation::Regularized => 0,
            Formulation::Streamline => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Formulation::Regularized),
            1 => Some(Formulation::Streamline),
            _ => None,
        }
    }
}

/// Outer prefactor of the streamline coefficient.
///
/// `Derived` uses `|k|^{-(1+delta)}`, which is what inverting
/// `|D|^{1+delta}` in the transport equation produces. `InvertedPrefactor`
/// uses `|k|^{+(1+delta)}` and exists only for side-by-side comparison;
/// it does not conserve any quadratic form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StreamlineVariant {
    #[default]
    Derived,
    InvertedPrefactor,
}

/// Model parameters: smoothing exponent, formulation and Galerkin cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub delta: f64,
    pub formulation: Formulation,
    #[serde(default)]
    pub streamline_variant: StreamlineVariant,
    pub cutoff: u32,
}

impl ModelParams {
    /// Validates `delta` in `[0, 1]` and `cutoff >= 1`.
    pub fn new(delta: f64, formulation: Formulation, cutoff: u32) -> Result<Self> {
        let params = Self { delta, formulation, streamline_variant: StreamlineVariant::Derived, cutoff };
        params.validate()?;
        Ok(params)
    }

    pub fn regularized(delta: f64, cutoff: u32) -> Result<Self> {
        Self::new(delta, Formulation::Regularized, cutoff)
    }

    pub fn streamline(delta: f64, cutoff: u32) -> Result<Self> {
        Self::new(delta, Formulation::Streamline, cutoff)
    }

    pub fn with_variant(mut self, variant: StreamlineVariant) -> Self {
        self.streamline_variant = variant;
        self
    }

    pub fn with_cutoff(mut self, cutoff: u32) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::InvalidParameter(format!("delta = {} is outside [0, 1]", self.delta)));
        }
        if self.cutoff < 1 {
            return Err(Error::InvalidParameter("cutoff must be >= 1".into()));
        }
        Ok(())
    }

    /// Dynamics need `delta > 0`.
    pub fn require_dynamics(&self) -> Result<()> {
        self.validate()?;
        if self.delta == 0.0 {
            return Err(Error::ZeroDelta);
        }
        Ok(())
    }

    /// Sobolev index of the quadratic form the Galerkin flow conserves:
    /// 1 for the regularized unknown, `1 + delta` for the stream function.
    pub fn conserved_sobolev_index(&self) -> f64 {
        match self.formulation {
            Formulation::Regularized => 1.0,
            Formulation::Streamline => 1.0 + self.delta,
        }
    }

    /// Single-byte formulation code used in snapshot headers (2 marks the
    /// inverted-prefactor streamline variant).
    pub fn formulation_code(&self) -> u8 {
        match (self.formulation, self.streamline_variant) {
            (Formulation::Streamline, StreamlineVariant::InvertedPrefactor) => 2,
            (f, _) => f.tag(),
        }
    }

    pub fn from_formulation_code(delta: f64, code: u8, cutoff: u32) -> Option<Self> {
        let (formulation, variant) = match code {
            0 => (Formulation::Regularized, StreamlineVariant::Derived),
            1 => (Formulation::Streamline, StreamlineVariant::Derived),
            2 => (Formulation::Streamline, StreamlineVariant::InvertedPrefactor),
            _ => return None,
        };
        Some(Self { delta, formulation, streamline_variant: variant, cutoff })
    }
}
