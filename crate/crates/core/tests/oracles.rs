use inflation_core::equations::EquationSpec;
use inflation_core::oracles::{
    brute_leading_iterate, contraction_time, general_data_experiment, solve, step_solver, GeneralDataOptions,
    SolverOptions,
};
use inflation_core::picard::{iterate_series, leading_iterate_closed, series_sum, SeriesOptions};
use inflation_core::spectral::{DataFamily, GridSpec, Norm, SpectralField};
use num_complex::Complex64;

fn rel(a: &SpectralField, b: &SpectralField) -> f64 {
    a.rel_l2_distance(b).unwrap()
}

fn oracle_instances() -> Vec<(EquationSpec, SpectralField, f64)> {
    let cube_grid = GridSpec::new(1, 16.0, 64).unwrap();
    let cube = DataFamily::cube_pair(1, 4.0, 0.5, -0.5).unwrap().build(&cube_grid).unwrap();
    let kaw_grid = GridSpec::new(1, 8.0, 64).unwrap();
    let kaw = DataFamily::kawahara_window(4.0, -2.5).unwrap().build(&kaw_grid).unwrap();
    vec![
        (EquationSpec::catalog("nls_uu").unwrap(), cube.clone(), 0.05),
        (EquationSpec::catalog("nls_mod2").unwrap(), cube.clone(), 0.05),
        (EquationSpec::boussinesq(2).unwrap(), cube.clone(), 0.05),
        (EquationSpec::boussinesq(3).unwrap(), cube, 0.01),
        (EquationSpec::kawahara(1).unwrap(), kaw.clone(), 4f64.powf(-4.5)),
        (EquationSpec::kawahara(-1).unwrap(), kaw, 4f64.powf(-4.5)),
    ]
}

#[test]
fn brute_force_matches_closed_form() {
    for (eq, u0, t) in oracle_instances() {
        let w = u0.grid().full_box();
        let closed = leading_iterate_closed(&eq, &u0, t, &w).unwrap();
        let brute = brute_leading_iterate(&eq, &u0, t, &w).unwrap();
        assert!(closed.norm(Norm::L2) > 0.0);
        let e = rel(&brute, &closed);
        assert!(e <= 1e-10, "{}: relative L2 gap {e:.3e}", eq.name);
    }
}

#[test]
fn quadratic_leading_term_obeys_polarization() {
    let grid = GridSpec::new(1, 16.0, 64).unwrap();
    let f = DataFamily::cube_pair(1, 4.0, 0.5, -0.5).unwrap().build(&grid).unwrap();
    let g = SpectralField::from_fn(grid, |xi| Complex64::new((-(xi[0] - 1.0).powi(2)).exp(), 0.3 * xi[0].sin()));
    for name in ["nls_uu", "nls_mod2", "nls_ubar2"] {
        let eq = EquationSpec::catalog(name).unwrap();
        let w = grid.full_box();
        let q = |u: &SpectralField| brute_leading_iterate(&eq, u, 0.1, &w).unwrap();
        let lhs = q(&f.add(&g).unwrap()).add(&q(&f.sub(&g).unwrap())).unwrap();
        let rhs = q(&f).add(&q(&g)).unwrap().scale(Complex64::new(2.0, 0.0));
        assert!(rel(&lhs, &rhs) < 1e-12, "{name}");
    }
}

fn smooth_data(grid: GridSpec, center: f64, amp: f64) -> SpectralField {
    SpectralField::from_fn(grid, |xi| {
        let r2: f64 = xi.iter().map(|x| (x.abs() - center).powi(2)).sum();
        Complex64::new(amp * (-2.0 * r2).exp(), 0.0)
    })
}

#[test]
fn solver_is_fourth_order_in_time() {
    let grid = GridSpec::new(1, 8.0, 64).unwrap();
    for eq in [EquationSpec::catalog("nls_uu").unwrap(), EquationSpec::boussinesq(2).unwrap()] {
        let u0 = smooth_data(grid, 1.0, 1.0);
        let t = 0.5 * contraction_time(&eq, &u0, eq.mass_term);
        let run = |steps: usize| step_solver(&eq, &u0, t, t / steps as f64).unwrap();
        let (a, b, c) = (run(4), run(8), run(16));
        let e1 = a.sub(&b).unwrap().norm(Norm::L2);
        let e2 = b.sub(&c).unwrap().norm(Norm::L2);
        let order = (e1 / e2).log2();
        assert!(order >= 3.5, "{}: observed order {order:.2}", eq.name);
    }
}

#[test]
fn solver_keeps_kawahara_data_real_every_step() {
    let eq = EquationSpec::kawahara(-1).unwrap();
    let grid = GridSpec::new(1, 16.0, 64).unwrap();
    let u0 = DataFamily::kawahara_window(4.0, -2.5).unwrap().build(&grid).unwrap();
    let t = 0.5 * contraction_time(&eq, &u0, false);
    let steps = 16;
    let opts = SolverOptions { snapshots: steps, ..SolverOptions::new(&eq, t / steps as f64) };
    let run = solve(&eq, &u0, t, &opts).unwrap();
    assert_eq!(run.steps, steps);
    for (k, s) in run.states.iter().enumerate() {
        let defect = s.hermitian_defect();
        assert!(defect <= 1e-10 * (k + 1) as f64, "step {}: defect {defect:.3e}", k + 1);
    }
}

/// Data, equation and final time for the solver-versus-series comparison.
fn comparison_cases() -> Vec<(EquationSpec, SpectralField, f64)> {
    let n = 16.0;
    let grid = GridSpec::with_spacing(1, 0.5, 1.1 * 5.0 * (2.0 * n + 1.0)).unwrap();
    let cube = DataFamily::cube_pair(1, n, 1.0, -0.6).unwrap().build(&grid).unwrap();
    let kaw = DataFamily::kawahara_window(n, -2.5).unwrap().build(&grid).unwrap();
    let nls = EquationSpec::catalog("nls_uu").unwrap();
    let bq = EquationSpec::boussinesq(2).unwrap();
    let kw = EquationSpec::kawahara(1).unwrap();
    vec![
        (nls.clone(), cube.clone(), 0.25 * contraction_time(&nls, &cube, false)),
        (bq.clone(), cube.clone(), 0.25 * contraction_time(&bq, &cube, false)),
        (kw.clone(), kaw.clone(), 0.25 * contraction_time(&kw, &kaw, false)),
    ]
}

#[test]
fn truncated_series_matches_solver_within_tail() {
    for (eq, u0, t) in comparison_cases() {
        // the solver error has to sit below the smallest tail
        let opts = SolverOptions { mass_term: false, ..SolverOptions::new(&eq, t / 512.0) };
        let reference = solve(&eq, &u0, t, &opts).unwrap();
        let mut previous = f64::INFINITY;
        for n_max in [3, 4, 5] {
            let set = iterate_series(&eq, &u0, t, &SeriesOptions { n_max, k: 257, ..SeriesOptions::default() }).unwrap();
            let sum = series_sum(&set).unwrap();
            let gap = sum.sum.sub(reference.last()).unwrap().norm(Norm::L2);
            // plus a rounding allowance relative to the solution size
            let tail = sum.tail(Norm::L2) + 1e-12 * u0.norm(Norm::L2);
            assert!(gap <= tail, "{} n_max={n_max}: gap {gap:.3e} vs tail {tail:.3e}", eq.name);
            assert!(gap < previous, "{} n_max={n_max}: residual did not shrink", eq.name);
            previous = gap;
        }
    }
}

#[test]
fn perturbation_gap_vanishes_as_n_grows() {
    let eq = EquationSpec::kawahara(1).unwrap();
    let mut last = f64::INFINITY;
    for n in [4.0, 8.0, 16.0] {
        let s = -2.5;
        let fam = DataFamily::kawahara_window(n, s).unwrap();
        let grid = GridSpec::with_spacing(1, 0.5, 5.0 * (n + 8.0)).unwrap();
        let opts = GeneralDataOptions {
            snapshots: 2,
            series: SeriesOptions { n_max: 3, ..SeriesOptions::default() },
            ..Default::default()
        };
        let rep = general_data_experiment(&eq, &fam, &grid, 0.2 * n.powf(s - 2.0), &opts).unwrap();
        assert!(rep.bound_holds);
        assert!(rep.log10_init_gap_hs < last);
        last = rep.log10_init_gap_hs;
        assert!(rep.difference_c1.iter().all(|&(_, c)| c.is_finite() && c < 10.0), "{:?}", rep.difference_c1);
    }
}
