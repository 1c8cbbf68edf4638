use num_complex::Complex;

use crate::error::{Error, Result};
use crate::spectral::{InteractionTable, LatticeBox, ModelParams, OutputModes, SpectralField};

/// Trace of the Jacobian of `B^N` in the real coordinates
/// `(Re psi_k, Im psi_k)` of the independent representatives, by central
/// differences with step `1e-5` relative to the probe.
pub fn liouville_divergence(params: &ModelParams, n: u32, probe: &SpectralField<f64>) -> Result<f64> {
    let radius = probe.support_radius();
    if radius > n {
        return Err(Error::SupportOutsideBox { radius, cutoff: n });
    }
    let params = params.with_cutoff(n);
    let table = InteractionTable::<f64>::truncated(&params, OutputModes::Representatives);
    let grid = LatticeBox::new(n);
    let base = probe.with_extent(n);
    let eps = 1e-5 * if base.max_abs() > 0.0 { base.max_abs() } else { 1.0 };

    let mut input = base.as_slice().to_vec();
    let mut out = vec![Complex::new(0.0, 0.0); grid.len()];
    let mut trace = 0.0;
    for k in grid.representatives() {
        let (i, j) = (grid.index_unchecked(k), grid.index_unchecked(-k));
        for dir in [Complex::new(1.0, 0.0), Complex::new(0.0, 1.0)] {
            let mut eval = |sign: f64| {
                let d = dir * (sign * eps);
                input[i] = base.as_slice()[i] + d;
                input[j] = base.as_slice()[j] + d.conj();
                table.apply_into(&input, &mut out);
                input[i] = base.as_slice()[i];
                input[j] = base.as_slice()[j];
                // component of B_k along the perturbed coordinate
                (out[i] * dir.conj()).re
            };
            trace += (eval(1.0) - eval(-1.0)) / (2.0 * eps);
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::{sample_field, GibbsSpec, SeededStream};
    use crate::spectral::{alpha, interaction_coefficient, LatticeMode};

    #[test]
    fn divergence_vanishes() {
        let p = ModelParams::regularized(0.5, 2).unwrap();
        let spec = GibbsSpec::invariant(&p);
        let a = liouville_divergence(&p, 2, &sample_field(&spec, 2, &SeededStream::new(1, 0)).unwrap()).unwrap();
        let b = liouville_divergence(&p, 2, &sample_field(&spec, 2, &SeededStream::new(1, 1)).unwrap()).unwrap();
        assert!(a.abs() <= 1e-7 && b.abs() <= 1e-7);
        assert!((a - b).abs() <= 2e-7);
    }

    #[test]
    fn single_pair_probe_and_box_check() {
        let p = ModelParams::regularized(0.5, 2).unwrap();
        let probe = SpectralField::hermitian_from_pairs([(LatticeMode::new(1, 0), Complex::new(1.0, 0.0))]).unwrap();
        assert!(liouville_divergence(&p, 2, &probe).unwrap().abs() <= 1e-9);
        assert!(liouville_divergence(&p, 0, &probe).is_err());
    }

    #[test]
    fn diagonal_coefficients_vanish() {
        let p = ModelParams::regularized(0.5, 3).unwrap();
        for k in LatticeBox::new(3).modes() {
            assert_eq!(alpha::<f64>(k, k, &p).unwrap(), 0.0);
            assert_eq!(interaction_coefficient::<f64>(LatticeMode::ZERO, k, &p), 0.0);
        }
    }
}
