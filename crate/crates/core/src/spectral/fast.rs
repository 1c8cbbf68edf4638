//! Transform-space evaluation of `B^N`.
//!
//! Both coefficient families factor into differences of two convolutions,
//!
//! ```text
//! B_k = c |k|^p [ (k1|k|^a psi) * (k2|k|^b psi) - (k2|k|^a psi) * (k1|k|^b psi) ]_k
//! ```
//!
//! with `(c, p, a, b) = (-1, -1, 1, -delta)` for the regularized unknown and
//! `(1, -(1+delta), 0, 1+delta)` for the stream function. Each convolution
//! is computed exactly as a pointwise product on a zero-padded grid of at
//! least `2(2N+1)` points per axis, so no product aliases back into the box.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::field::SpectralField;
use super::lattice::LatticeBox;
use super::params::{Formulation, ModelParams, StreamlineVariant};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Smallest admissible grid for cutoff `n`.
pub fn minimum_grid(n: u32) -> usize {
    2 * (2 * n as usize + 1)
}

/// Reusable plan for transform-space evaluation at a fixed cutoff.
pub struct FastNonlinearity<T: Real> {
    params: ModelParams,
    grid: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    /// Per box mode: (k1 w_a, k2 w_a, k1 w_b, k2 w_b, c |k|^p).
    weights: Vec<[T; 5]>,
}

impl<T: Real> FastNonlinearity<T> {
    pub fn new(params: &ModelParams, grid: usize) -> Result<Self> {
        params.require_dynamics()?;
        let required = minimum_grid(params.cutoff);
        if grid < required {
            return Err(Error::GridTooSmall { grid, cutoff: params.cutoff, required });
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid);
        let inverse = planner.plan_fft_inverse(grid);

        let delta = params.delta;
        let (c, p, a, b) = match (params.formulation, params.streamline_variant) {
            (Formulation::Regularized, _) => (-1.0, -1.0, 1.0, -delta),
            (Formulation::Streamline, StreamlineVariant::Derived) => (1.0, -(1.0 + delta), 0.0, 1.0 + delta),
            (Formulation::Streamline, StreamlineVariant::InvertedPrefactor) => (1.0, 1.0 + delta, 0.0, 1.0 + delta),
        };
        let bx = LatticeBox::new(params.cutoff);
        let weights = (0..bx.len())
            .map(|i| {
                let k = bx.mode(i);
                if k.is_zero() {
                    return [T::zero(); 5];
                }
                let n = (k.norm_sq() as f64).sqrt();
                let (k1, k2) = (k.k1 as f64, k.k2 as f64);
                let wa = n.powf(a);
                let wb = n.powf(b);
                [T::of(k1 * wa), T::of(k2 * wa), T::of(k1 * wb), T::of(k2 * wb), T::of(c * n.powf(p))]
            })
            .collect();
        Ok(Self { params: *params, grid, forward, inverse, weights })
    }

    pub fn with_minimum_grid(params: &ModelParams) -> Result<Self> {
        Self::new(params, minimum_grid(params.cutoff))
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    #[inline]
    fn wrap(&self, k: i32) -> usize {
        k.rem_euclid(self.grid as i32) as usize
    }

    fn transform(&self, data: &mut [Complex<T>], fft: &Arc<dyn Fft<T>>, scratch: &mut Vec<Complex<T>>) {
        let m = self.grid;
        fft.process(data);
        transpose(data, m, scratch);
        fft.process(data);
        transpose(data, m, scratch);
    }

    /// `B^N(psi)` on the box of the cutoff.
    pub fn apply(&self, psi: &SpectralField<T>) -> SpectralField<T> {
        let n = self.params.cutoff;
        let bx = LatticeBox::new(n);
        let m = self.grid;
        let zero = Complex::new(T::zero(), T::zero());
        let input = psi.with_extent(n);

        let mut planes = vec![vec![zero; m * m]; 4];
        for (i, c) in input.as_slice().iter().enumerate() {
            let k = bx.mode(i);
            if k.is_zero() {
                continue;
            }
            let slot = self.wrap(k.k1) * m + self.wrap(k.k2);
            let w = &self.weights[i];
            for (plane, weight) in planes.iter_mut().zip(w.iter()) {
                plane[slot] = c.scale(*weight);
            }
        }
        let mut scratch = Vec::with_capacity(m * m);
        for plane in planes.iter_mut() {
            self.transform(plane, &self.inverse, &mut scratch);
        }
        let (a_planes, b_planes) = planes.split_at(2);
        let mut product: Vec<Complex<T>> = (0..m * m)
            .map(|j| a_planes[0][j] * b_planes[1][j] - a_planes[1][j] * b_planes[0][j])
            .collect();
        self.transform(&mut product, &self.forward, &mut scratch);

        let norm = T::of((m * m) as f64).recip();
        let mut out = SpectralField::zeros(n, psi.is_hermitian());
        let slice = out.as_mut_slice();
        for (i, w) in self.weights.iter().enumerate() {
            let k = bx.mode(i);
            if k.is_zero() || (psi.is_hermitian() && !k.is_representative()) {
                continue;
            }
            let v = product[self.wrap(k.k1) * m + self.wrap(k.k2)].scale(norm * w[4]);
            slice[i] = v;
            if psi.is_hermitian() {
                slice[bx.index_unchecked(-k)] = v.conj();
            }
        }
        out
    }
}

fn transpose<T: Copy>(data: &mut [T], m: usize, scratch: &mut Vec<T>) {
    scratch.clear();
    scratch.extend_from_slice(data);
    for r in 0..m {
        for c in 0..m {
            data[c * m + r] = scratch[r * m + c];
        }
    }
}

/// One-shot transform-space `B^N` on the minimum grid.
pub fn fast_nonlinearity<T: Real>(psi: &SpectralField<T>, params: &ModelParams) -> Result<SpectralField<T>> {
    Ok(FastNonlinearity::with_minimum_grid(params)?.apply(psi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::lattice::LatticeMode;
    use crate::spectral::nonlinearity::truncated_nonlinearity;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(n: u32, seed: u64, hermitian: bool) -> SpectralField<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = SpectralField::zeros(n, hermitian);
        for k in LatticeBox::new(n).modes() {
            if hermitian && !k.is_representative() {
                continue;
            }
            let c = Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            if hermitian {
                f.set_pair(k, c).unwrap();
            } else {
                f.set(k, c).unwrap();
            }
        }
        f
    }

    fn rel(a: &SpectralField<f64>, b: &SpectralField<f64>) -> f64 {
        a.max_abs_diff(b) / b.max_abs().max(1e-300)
    }

    #[test]
    fn zero_field() {
        let p = ModelParams::regularized(0.5, 3).unwrap();
        assert!(fast_nonlinearity(&SpectralField::<f64>::zeros(3, true), &p).unwrap().is_zero());
    }

    #[test]
    fn rejects_small_grid() {
        let p = ModelParams::regularized(0.5, 3).unwrap();
        assert!(matches!(FastNonlinearity::<f64>::new(&p, 13), Err(Error::GridTooSmall { required: 14, .. })));
        assert!(FastNonlinearity::<f64>::new(&p, 14).is_ok());
    }

    #[test]
    fn matches_direct_sum_small_cutoff() {
        for delta in [0.25, 0.5, 1.0] {
            let p = ModelParams::regularized(delta, 1).unwrap();
            for seed in 0..5 {
                let psi = random_field(1, seed, seed % 2 == 0);
                let direct = truncated_nonlinearity(&psi, &p).unwrap();
                let fast = fast_nonlinearity(&psi, &p).unwrap();
                assert!(fast.max_abs_diff(&direct) <= 1e-12, "{}", fast.max_abs_diff(&direct));
            }
        }
    }

    #[test]
    fn matches_direct_sum_both_formulations() {
        let psi = random_field(6, 42, true);
        for params in [
            ModelParams::regularized(0.7, 6).unwrap(),
            ModelParams::streamline(0.4, 6).unwrap(),
            ModelParams::streamline(0.4, 6).unwrap().with_variant(StreamlineVariant::InvertedPrefactor),
        ] {
            let direct = truncated_nonlinearity(&psi, &params).unwrap();
            let fast = fast_nonlinearity(&psi, &params).unwrap();
            assert!(rel(&fast, &direct) <= 1e-12, "{params:?}: {}", rel(&fast, &direct));
            // a larger, non-minimal grid gives the same answer
            let big = FastNonlinearity::new(&params, 40).unwrap().apply(&psi);
            assert!(rel(&big, &direct) <= 1e-12);
        }
    }

    #[test]
    fn projects_input_outside_box() {
        let p = ModelParams::regularized(0.5, 2).unwrap();
        let psi = random_field(4, 3, true);
        let direct = truncated_nonlinearity(&psi, &p).unwrap();
        let fast = fast_nonlinearity(&psi, &p).unwrap();
        assert!(rel(&fast, &direct) <= 1e-12);
        assert_eq!(fast.get(LatticeMode::new(3, 0)), Complex::new(0.0, 0.0));
    }
}
