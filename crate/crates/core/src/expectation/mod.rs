//! Lattice-sum and Gaussian-expectation estimates for the nonlinearity:
//! the inner sum and its convergence in the radius, its growth in `|k|`,
//! the mean-value bound on `|k-h|^{-delta} - |h|^{-delta}`, the closed form
//! and Monte Carlo value of `E ||B^N||^2_{H^s}`, the Galerkin tail, and the
//! threshold scan for the stream-function formulation.

mod sums;
mod threshold;
mod wick;

use std::io::Write;

pub use sums::{
    delta_difference_bound, delta_difference_ratio, increments, inner_sum, inner_sum_value, inner_sum_with, scaling_check,
    scaling_radius, tail_bound, ClassifyRule, DeltaBoundReport, ScalingReport, ScalingRow, SumReport, Verdict,
};
pub use threshold::{
    streamline_threshold_scan, GrowthVerdict, ThresholdRow, ThresholdScan, VariantScan, CONVERGED_EXPONENT, GROWING_EXPONENT,
};
pub use wick::{
    compare_expectation, expectation_b_analytic, expectation_b_analytic_unreduced, expectation_b_monte_carlo, galerkin_tail,
    ExpectationRow, MC_MIN_SAMPLES,
};

use crate::report::{fmt_float, write_csv_row};

/// One row per radius: `k1,k2,R,S,S1,S2,S3,verdict`.
pub fn write_sum_csv<W: Write>(mut w: W, reports: &[SumReport]) -> std::io::Result<()> {
    write_csv_row(&mut w, &["k1", "k2", "R", "S", "S1", "S2", "S3", "verdict"])?;
    for rep in reports {
        for (i, r) in rep.radii.iter().enumerate() {
            write_csv_row(
                &mut w,
                &[
                    rep.k.k1.to_string(),
                    rep.k.k2.to_string(),
                    r.to_string(),
                    fmt_float(rep.partial_sums[i]),
                    fmt_float(rep.s1[i]),
                    fmt_float(rep.s2[i]),
                    fmt_float(rep.s3[i]),
                    rep.verdict.as_str().to_string(),
                ],
            )?;
        }
    }
    Ok(())
}

/// `N,s,delta,analytic,mc,se`.
pub fn write_expectation_csv<W: Write>(mut w: W, rows: &[ExpectationRow]) -> std::io::Result<()> {
    write_csv_row(&mut w, &["N", "s", "delta", "analytic", "mc", "se"])?;
    for r in rows {
        write_csv_row(
            &mut w,
            &[r.cutoff.to_string(), fmt_float(r.s), fmt_float(r.delta), fmt_float(r.analytic), fmt_float(r.monte_carlo), fmt_float(r.standard_error)],
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::LatticeMode;

    #[test]
    fn sum_csv_has_one_row_per_radius() {
        let rep = inner_sum(LatticeMode::new(1, 0), 0.5, 16).unwrap();
        let mut out = Vec::new();
        write_sum_csv(&mut out, std::slice::from_ref(&rep)).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k1,k2,R,S,S1,S2,S3,verdict");
        assert_eq!(lines.len(), 1 + rep.radii.len());
        let last: Vec<&str> = lines.last().unwrap().split(',').collect();
        assert_eq!(last[2], "16");
        assert_eq!(last[3].parse::<f64>().unwrap(), rep.value());
    }
}
