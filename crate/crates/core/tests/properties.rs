use msqg::expectation::{delta_difference_ratio, expectation_b_analytic, expectation_b_analytic_unreduced};
use msqg::flow::{GalerkinFlow, IntegratorConfig};
use msqg::gibbs::snapshot::{read_snapshot, write_snapshot};
use msqg::gibbs::{log_density_truncated, sample_field, GibbsSpec, SeededStream};
use msqg::spectral::{fast_nonlinearity, h1_pairing_defect, truncated_nonlinearity};
use msqg::stats::{two_sample_test, Welford};
use msqg::{Complex64, Field, LatticeBox, LatticeMode, ModelParams};
use proptest::prelude::*;

fn params(delta: f64, n: u32, streamline: bool) -> ModelParams {
    if streamline {
        ModelParams::streamline(delta, n).unwrap()
    } else {
        ModelParams::regularized(delta, n).unwrap()
    }
}

fn hermitian_field(n: u32, values: &[(f64, f64)]) -> Field {
    let pairs = LatticeBox::new(n).representatives().zip(values).map(|(k, &(re, im))| (k, Complex64::new(re, im)));
    Field::hermitian_from_pairs(pairs).unwrap().with_extent(n)
}

fn coefficients(len: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn truncated_nonlinearity_is_hermitian_and_energy_neutral(
        values in coefficients(24), delta in 0.05f64..=1.0, streamline in any::<bool>()
    ) {
        let p = params(delta, 3, streamline);
        let psi = hermitian_field(3, &values);
        let b = truncated_nonlinearity(&psi, &p).unwrap();
        prop_assert!(b.hermitian_defect() <= 1e-14 * b.max_abs().max(1.0));
        prop_assert!(h1_pairing_defect(&psi, &b, p.conserved_sobolev_index()) <= 1e-12);
    }

    #[test]
    fn transform_path_matches_triad_sum(values in coefficients(40), delta in 0.05f64..=1.0) {
        let p = params(delta, 4, false);
        let psi = hermitian_field(4, &values);
        let direct = truncated_nonlinearity(&psi, &p).unwrap();
        let fast = fast_nonlinearity(&psi, &p).unwrap();
        prop_assert!(fast.max_abs_diff(&direct) <= 1e-12 * direct.max_abs().max(1.0));
    }

    #[test]
    fn midpoint_step_conserves_the_quadratic_form(
        values in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 24), delta in 0.1f64..=1.0, dt in 0.001f64..0.02, streamline in any::<bool>()
    ) {
        let p = params(delta, 3, streamline);
        let psi = hermitian_field(3, &values);
        // the conservation error follows the fixed-point tolerance
        let config = IntegratorConfig::implicit_midpoint(dt).unwrap().with_tolerance(1e-15);
        let flow = GalerkinFlow::new(&p, &config).unwrap();
        let next = flow.step(&psi).unwrap();
        let s = p.conserved_sobolev_index();
        let (a, b) = (psi.sobolev_norm_sq(s), next.sobolev_norm_sq(s));
        prop_assert!((a - b).abs() <= 1e-11 * a.max(1e-300));
        prop_assert!(next.hermitian_defect() <= 1e-14 * next.max_abs().max(1.0));
        let spec = GibbsSpec::invariant(&p);
        let (la, lb) = (log_density_truncated(&psi, &spec, 3).unwrap(), log_density_truncated(&next, &spec, 3).unwrap());
        prop_assert!((la - lb).abs() <= 1e-10 * la.abs().max(1.0));
    }

    #[test]
    fn flow_is_reversible(values in coefficients(24), delta in 0.1f64..=1.0) {
        let p = params(delta, 3, false);
        let psi = hermitian_field(3, &values);
        let config = IntegratorConfig::implicit_midpoint(0.01).unwrap();
        let forward = GalerkinFlow::new(&p, &config).unwrap();
        let back = GalerkinFlow::new(&p, &config).unwrap().reversed();
        let there = forward.evolve(&psi, 0.1).unwrap();
        let again = back.evolve(there.last(), 0.1).unwrap();
        prop_assert!(again.last().max_abs_diff(&psi) <= 1e-10 * psi.max_abs());
    }

    #[test]
    fn snapshot_round_trip(values in coefficients(12), delta in 0.0f64..=1.0) {
        let psi = hermitian_field(2, &values);
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, &psi, delta, 0).unwrap();
        let (header, back) = read_snapshot(bytes.as_slice()).unwrap();
        prop_assert_eq!(header.delta, delta);
        prop_assert_eq!(back, psi);
    }

    #[test]
    fn sampling_is_a_pure_function_of_the_stream(seed in any::<u64>(), id in any::<u64>()) {
        let p = params(0.5, 2, false);
        let spec = GibbsSpec::invariant(&p);
        let a: Field = sample_field(&spec, 2, &SeededStream::new(seed, id)).unwrap();
        let b: Field = sample_field(&spec, 2, &SeededStream::new(seed, id)).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.hermitian_defect(), 0.0);
    }

    #[test]
    fn difference_bound_holds_pointwise(
        k1 in -8i32..=8, k2 in -8i32..=8, h1 in -200i32..=200, h2 in -200i32..=200, delta in 0.05f64..=1.0
    ) {
        let k = LatticeMode::new(k1, k2);
        let h = LatticeMode::new(h1, h2);
        prop_assume!(!k.is_zero() && h.norm_sq() >= 4 * k.norm_sq());
        prop_assert!(delta_difference_ratio(k, h, delta) <= 1.0);
    }

    #[test]
    fn ks_statistic_is_symmetric(a in prop::collection::vec(-5.0f64..5.0, 30..60), b in prop::collection::vec(-5.0f64..5.0, 30..60)) {
        let x = two_sample_test(&a, &b).unwrap();
        let y = two_sample_test(&b, &a).unwrap();
        prop_assert_eq!(x.statistic, y.statistic);
        prop_assert!((0.0..=1.0).contains(&x.p_value));
    }

    #[test]
    fn welford_matches_two_pass(xs in prop::collection::vec(-1e3f64..1e3, 2..200)) {
        let w: Welford = xs.iter().copied().collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        prop_assert!((w.mean() - mean).abs() <= 1e-9);
        prop_assert!((w.variance() - var).abs() <= 1e-9 * var.max(1.0));
    }
}

#[test]
fn pair_reduction_matches_full_sum() {
    for (delta, n, s) in [(0.3, 3, -2.5), (1.0, 4, -3.0), (0.7, 2, 0.0)] {
        for streamline in [false, true] {
            let p = params(delta, n, streamline);
            let spec = GibbsSpec::invariant(&p);
            let a = expectation_b_analytic(&p, &spec, s);
            let b = expectation_b_analytic_unreduced(&p, &spec, s);
            assert!((a - b).abs() <= 1e-12 * b, "{a} {b}");
        }
    }
}
