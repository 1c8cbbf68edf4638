//! Time integration of the truncated system `d/dt Psi = B^N(Psi)`.
//!
//! Only the box part `Pi_N Psi` moves; the complement `Pi_N^perp Psi` is
//! carried along unchanged. The default integrator is the implicit midpoint
//! rule, which preserves every quadratic first integral of the flow, so the
//! conserved Sobolev norm is kept to the fixed-point tolerance rather than
//! to the order of the method.

mod liouville;
mod trajectory;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

pub use liouville::liouville_divergence;
pub use trajectory::{duhamel_residual, DriftReport, DuhamelReport, Trajectory, DUHAMEL_SOBOLEV_INDEX};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{InteractionTable, LatticeBox, ModelParams, OutputModes, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    ImplicitMidpoint,
    Rk4,
}

/// How the vector field sees the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Truncation {
    /// `Pi_N B(Pi_N Psi)`.
    #[default]
    Galerkin,
    /// Deliberately broken: `Pi_N B(Psi)`, i.e. the frozen complement feeds
    /// the box modes. Used as a negative control for the invariance tests.
    UnprojectedInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    pub dt: f64,
    #[serde(default = "default_tol")]
    pub fixed_point_tol: f64,
    #[serde(default = "default_iters")]
    pub max_fixed_point_iters: usize,
    #[serde(default)]
    pub truncation: Truncation,
}

fn default_tol() -> f64 {
    1e-13
}

fn default_iters() -> usize {
    100
}

impl IntegratorConfig {
    pub fn new(method: Method, dt: f64) -> Result<Self> {
        let config = Self { method, dt, fixed_point_tol: default_tol(), max_fixed_point_iters: default_iters(), truncation: Truncation::Galerkin };
        config.validate()?;
        Ok(config)
    }

    pub fn implicit_midpoint(dt: f64) -> Result<Self> {
        Self::new(Method::ImplicitMidpoint, dt)
    }

    pub fn rk4(dt: f64) -> Result<Self> {
        Self::new(Method::Rk4, dt)
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.fixed_point_tol = tol;
        self
    }

    pub fn with_truncation(mut self, truncation: Truncation) -> Self {
        self.truncation = truncation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if self.fixed_point_tol.is_nan() || self.fixed_point_tol <= 0.0 {
            return Err(Error::InvalidParameter(format!("fixed-point tolerance must be positive, got {}", self.fixed_point_tol)));
        }
        if self.max_fixed_point_iters == 0 {
            return Err(Error::InvalidParameter("max_fixed_point_iters must be positive".into()));
        }
        Ok(())
    }
}

/// An integrator for one parameter set. Immutable after construction and
/// shareable across threads.
pub struct GalerkinFlow<T: Real> {
    params: ModelParams,
    config: IntegratorConfig,
    table: InteractionTable<T>,
    /// Box of the vector-field input; equals the cutoff box unless the
    /// input is deliberately left unprojected.
    input_extent: u32,
    direction: f64,
}

type Coeffs<T> = Vec<Complex<T>>;

/// The midpoint iteration also stops once the relative update no longer
/// contracts while within this factor of the tolerance: it has reached the
/// rounding floor of the vector-field evaluation.
pub const STALL_FACTOR: f64 = 1e3;

impl<T: Real> GalerkinFlow<T> {
    /// For [`Truncation::UnprojectedInput`] the vector field reads the state
    /// on the box of radius `2N`.
    pub fn new(params: &ModelParams, config: &IntegratorConfig) -> Result<Self> {
        Self::with_input_extent(params, config, 2 * params.cutoff)
    }

    pub fn with_input_extent(params: &ModelParams, config: &IntegratorConfig, unprojected_extent: u32) -> Result<Self> {
        params.validate()?;
        params.require_dynamics()?;
        config.validate()?;
        let n = params.cutoff;
        let input_extent = match config.truncation {
            Truncation::Galerkin => n,
            Truncation::UnprojectedInput => unprojected_extent.max(n),
        };
        let table = InteractionTable::new(params, input_extent, n, OutputModes::Representatives);
        Ok(Self { params: *params, config: *config, table, input_extent, direction: 1.0 })
    }

    /// The same flow run backwards in time.
    pub fn reversed(mut self) -> Self {
        self.direction = -self.direction;
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.config
    }

    pub fn cutoff(&self) -> u32 {
        self.params.cutoff
    }

    fn check_state(&self, state: &SpectralField<T>) -> Result<()> {
        let defect = state.hermitian_defect();
        if !state.is_hermitian() || defect > T::of(64.0) * T::epsilon() * state.max_abs() {
            return Err(Error::NotHermitian { defect: defect.to_f64_lossy() });
        }
        Ok(())
    }

    fn tolerance(&self) -> T {
        T::of(self.config.fixed_point_tol).max(T::of(16.0) * T::epsilon())
    }

    /// Splits a state into its box coefficients and the frozen vector-field
    /// input (zeros on the box, complement elsewhere).
    fn split(&self, state: &SpectralField<T>) -> (Coeffs<T>, Coeffs<T>) {
        let n = self.cutoff();
        let v = state.with_extent(n).as_slice().to_vec();
        let frozen = state.project_complement(n).with_extent(self.input_extent).as_slice().to_vec();
        (v, frozen)
    }

    fn join(&self, state: &SpectralField<T>, v: Coeffs<T>) -> SpectralField<T> {
        let n = self.cutoff();
        let boxed = SpectralField::from_raw(LatticeBox::new(n), v, true);
        let out = state.project_complement(n).add(&boxed.with_extent(state.extent().max(n)));
        let mut out = out.with_extent(state.extent().max(n));
        out.set_hermitian_flag(true);
        out
    }

    /// `B^N` on box coefficients `v`, written into `out`.
    fn field(&self, v: &[Complex<T>], frozen: &mut [Complex<T>], out: &mut [Complex<T>]) {
        match self.config.truncation {
            Truncation::Galerkin => self.table.apply_into(v, out),
            Truncation::UnprojectedInput => {
                let outer = self.table.input_box();
                let inner = LatticeBox::new(self.cutoff());
                let saved: Vec<(usize, Complex<T>)> = inner
                    .modes()
                    .map(|k| {
                        let i = outer.index_unchecked(k);
                        let keep = (i, frozen[i]);
                        frozen[i] = v[inner.index_unchecked(k)];
                        keep
                    })
                    .collect();
                self.table.apply_into(frozen, out);
                for (i, c) in saved {
                    frozen[i] = c;
                }
            }
        }
    }

    /// Vector field `B^N(state)` on the box.
    pub fn vector_field(&self, state: &SpectralField<T>) -> SpectralField<T> {
        let (v, mut frozen) = self.split(state);
        let mut out = vec![Complex::new(T::zero(), T::zero()); v.len()];
        self.field(&v, &mut frozen, &mut out);
        SpectralField::from_raw(LatticeBox::new(self.cutoff()), out, true)
    }

    fn advance(&self, v: &mut Coeffs<T>, frozen: &mut [Complex<T>], dt: T, time: f64) -> Result<()> {
        let len = v.len();
        let zero = Complex::new(T::zero(), T::zero());
        match self.config.method {
            Method::Rk4 => {
                let mut k1 = vec![zero; len];
                let mut k2 = vec![zero; len];
                let mut k3 = vec![zero; len];
                let mut k4 = vec![zero; len];
                let mut tmp = vec![zero; len];
                let half = T::of(0.5) * dt;
                self.field(v, frozen, &mut k1);
                axpy(&mut tmp, v, half, &k1);
                self.field(&tmp, frozen, &mut k2);
                axpy(&mut tmp, v, half, &k2);
                self.field(&tmp, frozen, &mut k3);
                axpy(&mut tmp, v, dt, &k3);
                self.field(&tmp, frozen, &mut k4);
                let sixth = dt / T::of(6.0);
                let two = T::of(2.0);
                for i in 0..len {
                    v[i] = v[i] + (k1[i] + k2[i].scale(two) + k3[i].scale(two) + k4[i]).scale(sixth);
                }
                Ok(())
            }
            Method::ImplicitMidpoint => {
                let mut f = vec![zero; len];
                let mut mid = vec![zero; len];
                self.field(v, frozen, &mut f);
                let mut next: Coeffs<T> = v.iter().zip(&f).map(|(a, b)| *a + b.scale(dt)).collect();
                let tol = self.tolerance();
                let half = T::of(0.5);
                let mut update = T::infinity();
                let stall_limit = T::of(STALL_FACTOR) * tol;
                for iteration in 0..self.config.max_fixed_point_iters {
                    let previous = update;
                    for i in 0..len {
                        mid[i] = (v[i] + next[i]).scale(half);
                    }
                    self.field(&mid, frozen, &mut f);
                    let mut diff = T::zero();
                    let mut scale = T::zero();
                    for i in 0..len {
                        let new = v[i] + f[i].scale(dt);
                        diff = diff.max((new - next[i]).norm());
                        scale = scale.max(new.norm());
                        next[i] = new;
                    }
                    update = if scale > T::zero() { diff / scale } else { T::zero() };
                    let stalled = iteration >= 2 && update >= T::of(0.5) * previous && update <= stall_limit;
                    if update <= tol || stalled {
                        *v = next;
                        return Ok(());
                    }
                }
                Err(Error::NonConvergence { time, iterations: self.config.max_fixed_point_iters, update: update.to_f64_lossy() })
            }
        }
    }

    /// One step of size `config.dt` (signed by the flow direction).
    pub fn step(&self, state: &SpectralField<T>) -> Result<SpectralField<T>> {
        self.step_by(state, self.config.dt)
    }

    /// One step of size `dt` (any sign; the flow direction still applies).
    pub fn step_by(&self, state: &SpectralField<T>, dt: f64) -> Result<SpectralField<T>> {
        self.check_state(state)?;
        let (mut v, mut frozen) = self.split(state);
        self.advance(&mut v, &mut frozen, T::of(dt * self.direction), 0.0)?;
        Ok(self.join(state, v))
    }

    /// States at each requested time (non-decreasing, non-negative), using
    /// steps of `dt` shortened to land on every requested time.
    pub fn evolve_to(&self, initial: &SpectralField<T>, times: &[f64]) -> Result<Vec<SpectralField<T>>> {
        self.check_state(initial)?;
        if times.iter().any(|t| t.is_nan() || *t < 0.0) || times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter("times must be non-negative and non-decreasing".into()));
        }
        let (mut v, mut frozen) = self.split(initial);
        let mut t = 0.0;
        let mut out = Vec::with_capacity(times.len());
        for &target in times {
            self.run(&mut v, &mut frozen, &mut t, target, |_, _| {})?;
            out.push(self.join(initial, v.clone()));
        }
        Ok(out)
    }

    fn run<F: FnMut(f64, &[Complex<T>])>(&self, v: &mut Coeffs<T>, frozen: &mut [Complex<T>], t: &mut f64, target: f64, mut record: F) -> Result<()> {
        let dt = self.config.dt;
        let steps = ((target - *t) / dt - 1e-9).ceil().max(0.0) as u64;
        let start = *t;
        for j in 1..=steps {
            let next = if j == steps { target } else { start + j as f64 * dt };
            let h = next - *t;
            self.advance(v, frozen, T::of(h * self.direction), *t)?;
            *t = next;
            record(*t, v);
        }
        Ok(())
    }

    /// Trajectory on `[0, t_final]` with uniform steps (the last one
    /// shortened), storing every step.
    pub fn evolve(&self, initial: &SpectralField<T>, t_final: f64) -> Result<Trajectory<T>> {
        self.check_state(initial)?;
        if !(t_final >= 0.0 && t_final.is_finite()) {
            return Err(Error::InvalidParameter(format!("final time must be non-negative, got {t_final}")));
        }
        let (mut v, mut frozen) = self.split(initial);
        let mut times = vec![0.0];
        let mut states = vec![initial.with_extent(initial.extent().max(self.cutoff()))];
        let mut t = 0.0;
        self.run(&mut v, &mut frozen, &mut t, t_final, |time, v| {
            times.push(time);
            states.push(self.join(initial, v.to_vec()));
        })?;
        Ok(Trajectory::new(times, states, self.params, self.config, self.direction < 0.0))
    }
}

fn axpy<T: Real>(out: &mut [Complex<T>], x: &[Complex<T>], a: T, y: &[Complex<T>]) {
    for i in 0..out.len() {
        out[i] = x[i] + y[i].scale(a);
    }
}
