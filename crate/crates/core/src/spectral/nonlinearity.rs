//! The quadratic nonlinearity `B` and its Galerkin truncation
//! `B^N = Pi_N B Pi_N`.

use num_complex::Complex;

use super::coefficients::interaction_coefficient;
use super::field::SpectralField;
use super::lattice::{LatticeBox, LatticeMode};
use super::params::ModelParams;
use crate::error::Result;
use crate::scalar::Real;

/// Which output modes a table evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputModes {
    /// Every nonzero mode of the output box.
    All,
    /// Lexicographically positive modes only; the rest are filled by
    /// conjugation, which keeps Hermitian symmetry exact.
    Representatives,
}

#[derive(Debug, Clone, Copy)]
struct Pair<T> {
    h: u32,
    q: u32,
    weight: T,
}

#[derive(Debug, Clone, Copy)]
struct Row {
    out: u32,
    mirror: u32,
    start: u32,
    end: u32,
}

/// Precomputed triad list for `B_k = sum alpha_{k,h} psi_h psi_{k-h}` with
/// `k` in an output box and `h`, `k-h` in an input box.
///
/// Unordered pairs `{h, k-h}` are stored once with weight `2 alpha`; terms
/// with `alpha = 0` are dropped. Tables are immutable and can be shared
/// across threads.
#[derive(Debug, Clone)]
pub struct InteractionTable<T> {
    input: LatticeBox,
    output: LatticeBox,
    outputs: OutputModes,
    rows: Vec<Row>,
    pairs: Vec<Pair<T>>,
}

impl<T: Real> InteractionTable<T> {
    pub fn new(params: &ModelParams, input_extent: u32, output_extent: u32, outputs: OutputModes) -> Self {
        let input = LatticeBox::new(input_extent);
        let output = LatticeBox::new(output_extent);
        let mut rows = Vec::new();
        let mut pairs = Vec::new();
        let out_modes: Vec<LatticeMode> = match outputs {
            OutputModes::All => output.modes().collect(),
            OutputModes::Representatives => output.representatives().collect(),
        };
        for k in out_modes {
            let start = pairs.len() as u32;
            for h in input.modes() {
                let q = k - h;
                let Some(qi) = input.index(q) else { continue };
                let hi = input.index_unchecked(h);
                if q.is_zero() || hi > qi {
                    continue;
                }
                let a: T = interaction_coefficient(k, h, params);
                if a == T::zero() {
                    continue;
                }
                let weight = if hi == qi { a } else { a + a };
                pairs.push(Pair { h: hi as u32, q: qi as u32, weight });
            }
            rows.push(Row {
                out: output.index_unchecked(k) as u32,
                mirror: output.index_unchecked(-k) as u32,
                start,
                end: pairs.len() as u32,
            });
        }
        Self { input, output, outputs, rows, pairs }
    }

    /// Table for `B^N`: input and output both in the box of the cutoff.
    pub fn truncated(params: &ModelParams, outputs: OutputModes) -> Self {
        Self::new(params, params.cutoff, params.cutoff, outputs)
    }

    pub fn input_box(&self) -> LatticeBox {
        self.input
    }

    pub fn output_box(&self) -> LatticeBox {
        self.output
    }

    /// Number of stored triads.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Evaluates into `out` (dense over the output box). `input` is dense
    /// over the input box.
    pub fn apply_into(&self, input: &[Complex<T>], out: &mut [Complex<T>]) {
        debug_assert_eq!(input.len(), self.input.len());
        debug_assert_eq!(out.len(), self.output.len());
        let zero = Complex::new(T::zero(), T::zero());
        out.iter_mut().for_each(|c| *c = zero);
        for row in &self.rows {
            let mut acc = zero;
            for p in &self.pairs[row.start as usize..row.end as usize] {
                acc = acc + (input[p.h as usize] * input[p.q as usize]).scale(p.weight);
            }
            out[row.out as usize] = acc;
            if self.outputs == OutputModes::Representatives {
                out[row.mirror as usize] = acc.conj();
            }
        }
    }

    /// Evaluates on a field; the field is re-laid onto the input box first
    /// (which projects away anything outside it).
    pub fn apply(&self, psi: &SpectralField<T>) -> SpectralField<T> {
        let input;
        let slice = if psi.extent() == self.input.extent() {
            psi.as_slice()
        } else {
            input = psi.with_extent(self.input.extent());
            input.as_slice()
        };
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.output.len()];
        self.apply_into(slice, &mut out);
        SpectralField::from_raw(self.output, out, psi.is_hermitian())
    }
}

fn output_modes_for<T: Real>(psi: &SpectralField<T>) -> OutputModes {
    if psi.is_hermitian() {
        OutputModes::Representatives
    } else {
        OutputModes::All
    }
}

/// Full nonlinearity `B(psi)`. The output lives on the box of twice the
/// input extent, which contains the sum set of the support.
pub fn nonlinearity<T: Real>(psi: &SpectralField<T>, params: &ModelParams) -> Result<SpectralField<T>> {
    params.require_dynamics()?;
    let extent = psi.support_radius().max(1);
    let table = InteractionTable::new(params, extent, 2 * extent, output_modes_for(psi));
    Ok(table.apply(psi))
}

/// Truncated nonlinearity `B^N(psi) = Pi_N B(Pi_N psi)` with `N = params.cutoff`.
pub fn truncated_nonlinearity<T: Real>(psi: &SpectralField<T>, params: &ModelParams) -> Result<SpectralField<T>> {
    params.require_dynamics()?;
    let table = InteractionTable::truncated(params, output_modes_for(psi));
    Ok(table.apply(psi))
}

/// `Pi_N psi`.
pub fn project<T: Real>(psi: &SpectralField<T>, n: u32) -> SpectralField<T> {
    psi.project(n)
}

/// `Pi_N^perp psi`.
pub fn project_complement<T: Real>(psi: &SpectralField<T>, n: u32) -> SpectralField<T> {
    psi.project_complement(n)
}

/// `sum_k |k|^{2s} |psi_k|^2`.
pub fn sobolev_norm_sq<T: Real>(psi: &SpectralField<T>, s: T) -> T {
    psi.sobolev_norm_sq(s)
}

/// `Re sum_k |k|^2 B_k conj(psi_k)`, normalised by `sum |k|^2 |B_k| |psi_k|`.
/// Zero (to round-off) for the truncated flow, which is the differential
/// form of H^1 conservation.
pub fn h1_pairing_defect<T: Real>(psi: &SpectralField<T>, b: &SpectralField<T>, sobolev_index: T) -> T {
    let mut num = T::zero();
    let mut scale = T::zero();
    for (k, bk) in b.iter() {
        let w = T::of(k.norm_sq() as f64).powf(sobolev_index);
        let pk = psi.get(k);
        num = num + w * (bk * pk.conj()).re;
        scale = scale + w * bk.norm() * pk.norm();
    }
    if scale == T::zero() {
        T::zero()
    } else {
        num.abs() / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: u32, seed: u64) -> SpectralField<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = SpectralField::zeros(n, true);
        for k in LatticeBox::new(n).representatives() {
            f.set_pair(k, Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).unwrap();
        }
        f
    }

    fn random_complex(n: u32, seed: u64) -> SpectralField<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = SpectralField::zeros(n, false);
        for k in LatticeBox::new(n).modes() {
            f.set(k, Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).unwrap();
        }
        f
    }

    /// Ordered double loop with the closed-form coefficient written out again.
    fn brute_force(psi: &SpectralField<f64>, delta: f64, out_extent: u32) -> SpectralField<f64> {
        let mut out = SpectralField::zeros(out_extent, psi.is_hermitian());
        let n = psi.extent() as i32;
        for k in LatticeBox::new(out_extent).modes() {
            let mut acc = Complex::new(0.0, 0.0);
            for h1 in -n..=n {
                for h2 in -n..=n {
                    let h = LatticeMode::new(h1, h2);
                    let q = k - h;
                    if h.is_zero() || q.is_zero() || q.max_norm() > psi.extent() {
                        continue;
                    }
                    let kn = (k.norm_sq() as f64).sqrt();
                    let hn = (h.norm_sq() as f64).sqrt();
                    let qn = (q.norm_sq() as f64).sqrt();
                    let cross = -(h.k2 as f64) * k.k1 as f64 + h.k1 as f64 * k.k2 as f64;
                    let a = -0.5 * cross / kn * (qn.powf(-delta) * hn - hn.powf(-delta) * qn);
                    acc += psi.get(h) * psi.get(q) * a;
                }
            }
            out.set(k, acc).unwrap();
        }
        out
    }

    fn rel_diff(a: &SpectralField<f64>, b: &SpectralField<f64>) -> f64 {
        a.max_abs_diff(b) / a.max_abs().max(b.max_abs()).max(1e-300)
    }

    #[test]
    fn zero_field_maps_to_zero() {
        let p = ModelParams::regularized(0.5, 4).unwrap();
        assert!(nonlinearity(&SpectralField::<f64>::zeros(3, true), &p).unwrap().is_zero());
        assert!(truncated_nonlinearity(&SpectralField::<f64>::zeros(3, true), &p).unwrap().is_zero());
    }

    #[test]
    fn single_pair_has_only_parallel_interactions() {
        let p = ModelParams::regularized(0.5, 4).unwrap();
        let psi = SpectralField::hermitian_from_pairs([(LatticeMode::new(2, 1), Complex::new(0.7, -0.2))]).unwrap();
        let b = nonlinearity(&psi, &p).unwrap();
        assert!(b.is_zero());
        assert_eq!(b.get(LatticeMode::new(4, 2)), Complex::new(0.0, 0.0));
    }

    #[test]
    fn delta_zero_rejected() {
        let p = ModelParams::regularized(0.0, 4).unwrap();
        assert!(nonlinearity(&random_hermitian(2, 1), &p).is_err());
        assert!(truncated_nonlinearity(&random_hermitian(2, 1), &p).is_err());
    }

    #[test]
    fn matches_brute_force() {
        let p = ModelParams::regularized(0.5, 4).unwrap();
        let psi = random_hermitian(4, 7);
        let fast = nonlinearity(&psi, &p).unwrap();
        let slow = brute_force(&psi, 0.5, 8);
        assert!(rel_diff(&fast, &slow) <= 1e-12, "{}", rel_diff(&fast, &slow));
        let psi = random_complex(3, 8);
        let fast = nonlinearity(&psi, &p).unwrap();
        let slow = brute_force(&psi, 0.5, 6);
        assert!(rel_diff(&fast, &slow) <= 1e-12);
    }

    #[test]
    fn hermitian_output_is_exactly_hermitian() {
        let p = ModelParams::regularized(0.3, 5).unwrap();
        let b = truncated_nonlinearity(&random_hermitian(5, 3), &p).unwrap();
        assert_eq!(b.hermitian_defect(), 0.0);
        // the full evaluation of a Hermitian input also agrees with the all-modes path
        let mut psi = random_hermitian(3, 4);
        let b_rep = nonlinearity(&psi, &p).unwrap();
        psi.set_hermitian_flag(false);
        let b_all = nonlinearity(&psi, &p).unwrap();
        assert!(rel_diff(&b_rep, &b_all) < 1e-13);
    }

    #[test]
    fn truncation_is_compositional() {
        let p = ModelParams::regularized(0.5, 3).unwrap();
        let psi = random_hermitian(5, 11);
        let lhs = truncated_nonlinearity(&psi, &p).unwrap();
        let rhs = nonlinearity(&psi.project(3).with_extent(3), &p).unwrap().project(3).with_extent(3);
        assert!(lhs.max_abs_diff(&rhs) <= 1e-15 * lhs.max_abs());
    }

    #[test]
    fn truncation_edge_cases() {
        let p = ModelParams::regularized(0.5, 2).unwrap();
        let outside = SpectralField::hermitian_from_pairs([
            (LatticeMode::new(3, 0), Complex::new(1.0, 0.0)),
            (LatticeMode::new(1, 4), Complex::new(0.0, 1.0)),
        ])
        .unwrap();
        assert!(truncated_nonlinearity(&outside, &p).unwrap().is_zero());

        // no truncation active when N >= 2 * support radius
        let psi = random_hermitian(2, 5);
        let p4 = ModelParams::regularized(0.5, 4).unwrap();
        let full = nonlinearity(&psi, &p4).unwrap();
        let trunc = truncated_nonlinearity(&psi, &p4).unwrap();
        assert!(full.max_abs_diff(&trunc) <= 1e-15 * full.max_abs());
    }

    #[test]
    fn h1_orthogonality() {
        for (delta, seed) in [(0.25, 1), (0.5, 2), (1.0, 3)] {
            let p = ModelParams::regularized(delta, 5).unwrap();
            let psi = random_hermitian(5, seed);
            let b = truncated_nonlinearity(&psi, &p).unwrap();
            assert!(h1_pairing_defect(&psi, &b, 1.0) < 1e-13);
            let ps = ModelParams::streamline(delta, 5).unwrap();
            let b = truncated_nonlinearity(&psi, &ps).unwrap();
            assert!(h1_pairing_defect(&psi, &b, 1.0 + delta) < 1e-13);
        }
    }
}
