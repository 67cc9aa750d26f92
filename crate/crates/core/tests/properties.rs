use inflation_core::bounds::{choose_parameters, n_min, verify_seq_bound, Scenario, ScenarioKind};
use inflation_core::equations::EquationSpec;
use inflation_core::experiment::{fit_points, ScenarioConfig};
use inflation_core::picard::{iterate_series, EngineChoice, SeriesOptions};
use inflation_core::spectral::{convolve, convolve_direct, cube_sandwich, DataFamily, GridSpec, Norm, SpectralField};
use num_complex::Complex64;
use proptest::prelude::*;

fn field(grid: GridSpec, re: &[f64], im: &[f64], lo: i64) -> SpectralField {
    let mut f = SpectralField::zeros(grid);
    for (k, (a, b)) in re.iter().zip(im).enumerate() {
        f.set(&[lo + k as i64], Complex64::new(*a, *b));
    }
    f
}

fn real_bump(grid: GridSpec, amps: &[f64]) -> SpectralField {
    // a real function has a Hermitian transform
    let mut f = SpectralField::zeros(grid);
    for (k, a) in amps.iter().enumerate() {
        let o = k as i64 + 1;
        f.set(&[o], Complex64::new(*a, 0.3 * a));
        f.set(&[-o], Complex64::new(*a, -0.3 * a));
    }
    f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn convolution_is_commutative_and_fl1_submultiplicative(
        re1 in prop::collection::vec(-2.0f64..2.0, 6),
        im1 in prop::collection::vec(-2.0f64..2.0, 6),
        re2 in prop::collection::vec(-2.0f64..2.0, 5),
        im2 in prop::collection::vec(-2.0f64..2.0, 5),
        lo1 in -10i64..4,
        lo2 in -10i64..4,
    ) {
        let grid = GridSpec::new(1, 8.0, 64).unwrap();
        let f = field(grid, &re1, &im1, lo1);
        let g = field(grid, &re2, &im2, lo2);
        let fg = convolve(&f, &g).unwrap();
        let gf = convolve(&g, &f).unwrap();
        let direct = convolve_direct(&f, &g).unwrap();
        let scale = fg.norm(Norm::L2).max(1e-300);
        prop_assert!(fg.sub(&gf).unwrap().norm(Norm::L2) <= 1e-12 * scale);
        prop_assert!(fg.sub(&direct).unwrap().norm(Norm::L2) <= 1e-12 * scale);
        prop_assert!(fg.norm(Norm::FL1) <= f.norm(Norm::FL1) * g.norm(Norm::FL1) * (1.0 + 1e-12));
    }

    #[test]
    fn modulation_is_symmetric_within_classes(
        xs in prop::collection::vec(-30.0f64..30.0, 3),
    ) {
        let eq = EquationSpec::power_nls(2.0, 3, 0).unwrap();
        let a = eq.modulation(&[&[xs[0]], &[xs[1]], &[xs[2]]]);
        let b = eq.modulation(&[&[xs[2]], &[xs[0]], &[xs[1]]]);
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        let m = EquationSpec::power_nls(2.0, 3, 2).unwrap();
        let c = m.modulation(&[&[xs[0]], &[xs[1]], &[xs[2]]]);
        let d = m.modulation(&[&[xs[0]], &[xs[2]], &[xs[1]]]);
        prop_assert!((c - d).abs() <= 1e-9 * c.abs().max(1.0));
    }

    #[test]
    fn extremal_sequences_obey_the_geometric_bound(c in 0.1f64..4.0, p in 2usize..5) {
        let r = verify_seq_bound(c, p, 24).unwrap();
        prop_assert!(r.passed(), "{:?}", r);
    }

    #[test]
    fn condition_ledger_is_consistent(k in 5i32..16, s in -3.0f64..-1.05) {
        let sc = Scenario::new(ScenarioKind::DispersiveCube, 1, 2, 2.0, None, s).unwrap();
        let c = choose_parameters(&sc, 2f64.powi(k), None).unwrap();
        for cond in &c.conditions {
            let holds = if cond.upper { cond.lhs <= cond.rhs } else { cond.lhs >= cond.rhs };
            prop_assert_eq!(holds, cond.satisfied, "{}", cond.name);
        }
        prop_assert!(c.t > 0.0 && c.a >= 1.0);
    }

    #[test]
    fn iterates_scale_with_the_data(lam in 0.2f64..3.0) {
        let grid = GridSpec::new(1, 16.0, 64).unwrap();
        let u0 = DataFamily::cube_pair(1, 2.0, 0.5, -0.5).unwrap().build(&grid).unwrap();
        let eq = EquationSpec::catalog("nls_uu").unwrap();
        let opts = SeriesOptions { n_max: 3, engine: EngineChoice::Tree, ..SeriesOptions::default() };
        let base = iterate_series(&eq, &u0, 0.02, &opts).unwrap();
        let set = iterate_series(&eq, &u0.scale(Complex64::new(lam, 0.0)), 0.02, &opts).unwrap();
        for n in 1..=3 {
            let (a, b) = (set.norm(n, Norm::L2), base.norm(n, Norm::L2) * lam.powi(n as i32));
            prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300), "level {}", n);
        }
    }

    #[test]
    fn kawahara_iterates_of_real_data_are_hermitian(amps in prop::collection::vec(0.0f64..1.0, 4), b in -1i32..2) {
        let grid = GridSpec::new(1, 8.0, 64).unwrap();
        let u0 = real_bump(grid, &amps);
        let eq = EquationSpec::kawahara(b).unwrap();
        let opts = SeriesOptions { n_max: 3, engine: EngineChoice::Tree, ..SeriesOptions::default() };
        let set = iterate_series(&eq, &u0, 1e-3, &opts).unwrap();
        for n in 1..=3 {
            let it = set.iterate(n);
            prop_assert!(it.hermitian_defect() <= 1e-12 * it.norm(Norm::L2).max(1.0), "level {}", n);
        }
    }

    #[test]
    fn fit_recovers_any_power_law(slope in -2.0f64..2.0, amp in 0.1f64..10.0, c in 0.0f64..3.0) {
        let pts: Vec<(f64, f64)> = (4..10).map(|k| 2f64.powi(k)).map(|n| (n, amp * n.powf(slope) * n.ln().powf(-c))).collect();
        let f = fit_points(&pts, c).unwrap();
        prop_assert!((f.slope - slope).abs() < 1e-10);
    }

    #[test]
    fn non_dyadic_lists_are_rejected(n in 3u32..1000) {
        prop_assume!(!n.is_power_of_two());
        let text = format!(
            r#"{{"equation": "nls_uu", "family": "cube_pair", "s": -1.2, "N_list": [{n}], "n_max": 4}}"#
        );
        prop_assert!(ScenarioConfig::from_json(&text).is_err());
    }

    #[test]
    fn cube_convolution_sandwich(r in 0.25f64..2.0, q1 in -4.0f64..4.0, q2 in -4.0f64..4.0) {
        let rep = cube_sandwich(1, r, q1, q2, r / 16.0).unwrap();
        prop_assert!(rep.passed(), "{:?}", rep);
    }
}

#[test]
fn conditions_hold_beyond_the_reported_threshold() {
    let sc = Scenario::new(ScenarioKind::DispersiveCube, 1, 2, 2.0, None, -1.2).unwrap();
    let start = n_min(&sc, 20).unwrap().expect("conditions hold at 2^20");
    let mut n = start;
    while n <= 2f64.powi(20) {
        assert!(choose_parameters(&sc, n, None).unwrap().all_satisfied(), "N = {n}");
        n *= 2.0;
    }
}
