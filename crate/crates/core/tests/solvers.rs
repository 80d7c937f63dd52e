use choquard::energy::{action_choquard, ChoquardParams};
use choquard::grid::{h1_inner, h1_norm, reflect_axis1, translate};
use choquard::reference::{limit_groundstate_v, nls_groundstate};
use choquard::solvers::{
    fit_two_bumps, solve_groundstate, solve_nodal, symmetry_defect,
    two_bump_init, SolverConfig, Termination,
};
use choquard::{Field, GridSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config() -> SolverConfig {
    SolverConfig {
        residual_tolerance: 1e-8,
        ..SolverConfig::default()
    }
}

#[test]
fn groundstate_near_zero_order_approaches_nls_level() {
    let grid = GridSpec::new(1, 30.0, 1024).unwrap();
    let params = ChoquardParams::new(1, 2.0, 0.05, true).unwrap();
    let init = nls_groundstate(1, 4.0, &grid).unwrap();
    let res = solve_groundstate(&params, &init, &config()).unwrap();
    assert_eq!(res.termination, Termination::Converged);
    assert!(((res.energy - 4.0 / 3.0) / (4.0 / 3.0)).abs() < 0.1);
    let norm2 = h1_inner(&res.field, &res.field).unwrap();
    assert!(res.nehari_defects[0].abs() <= 1e-8 * norm2);
    assert!(res.field.min() >= -1e-10 * res.field.max());
    // radial about its own peak
    let centre = res
        .field
        .values()
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |a, (i, &v)| if v > a.1 { (i, v) } else { a })
        .0;
    let x0 = grid.coordinate(centre);
    let mirrored = reflect_axis1(&res.field, 2.0 * x0);
    let even_defect = h1_norm(&res.field.sub(&mirrored).unwrap()) / h1_norm(&res.field);
    assert!(even_defect <= 1e-6, "{even_defect}");

    let shifted = solve_groundstate(&params, &translate(&init, &[2.5]), &config()).unwrap();
    assert!((shifted.energy - res.energy).abs() <= 1e-8 * res.energy.abs());
    let back = translate(&shifted.field, &[-2.5]);
    let drift = back.sub(&res.field).unwrap().max_abs();
    assert!(drift <= 1e-6, "drift {drift}");
}

#[test]
fn nodal_solution_near_zero_order() {
    let grid = GridSpec::new(1, 40.0, 2048).unwrap();
    let params = ChoquardParams::new(1, 2.0, 0.2, true).unwrap();
    let w = nls_groundstate(1, 4.0, &grid).unwrap();
    let gst = solve_groundstate(&params, &w, &config()).unwrap();
    let init = two_bump_init(&w, 8.0, 0.25, 3);
    let nod = solve_nodal(&params, &init, &config()).unwrap();
    assert!(nod.energy < 2.0 * gst.energy);
    assert!(nod.energy > gst.energy);
    let fit = fit_two_bumps(&nod.field, &w).unwrap();
    assert!(fit.xi_plus[0] < fit.xi_minus[0]);
    let sym = symmetry_defect(&nod.field, &w).unwrap();
    assert!(sym.minimum <= 1e-5);
}

#[test]
fn exact_two_bump_field_is_recovered() {
    let grid = GridSpec::new(1, 30.0, 1024).unwrap();
    let w = nls_groundstate(1, 4.0, &grid).unwrap();
    let (a, b) = (-3.217, 4.561);
    let u = translate(&w, &[a]).sub(&translate(&w, &[b])).unwrap();
    let fit = fit_two_bumps(&u, &w).unwrap();
    assert!((fit.xi_plus[0] - a).abs() < 1e-9, "{:?}", fit);
    assert!((fit.xi_minus[0] - b).abs() < 1e-9);
    assert!(fit.fit_error_h1 <= 1e-9);
    assert!((fit.separation - (b - a)).abs() < 1e-9);
    let swapped = fit_two_bumps(&u.scaled(-1.0), &w).unwrap();
    assert!((swapped.xi_plus[0] - b).abs() < 1e-9 && (swapped.xi_minus[0] - a).abs() < 1e-9);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let bumps: Vec<(f64, f64)> = (0..6)
        .map(|_| (rng.gen_range(-10.0..10.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let noise = Field::from_fn(grid, |x| {
        bumps
            .iter()
            .map(|&(c, s)| s * (-(x[0] - c).powi(2)).exp())
            .sum()
    });
    let scale = 0.01 * choquard::grid::h1_norm(&u) / choquard::grid::h1_norm(&noise);
    let noisy = u.axpy(scale, &noise).unwrap();
    let fit = fit_two_bumps(&noisy, &w).unwrap();
    assert!(
        fit.fit_error_h1 <= 0.011 && fit.fit_error_h1 >= 0.001,
        "{}",
        fit.fit_error_h1
    );
    assert!((fit.xi_plus[0] - a).abs() < grid.spacing());
    assert!((fit.xi_minus[0] - b).abs() < grid.spacing());
}

#[test]
fn symmetry_defect_cases() {
    let grid = GridSpec::new(1, 30.0, 1024).unwrap();
    let w = nls_groundstate(1, 4.0, &grid).unwrap();
    let odd = translate(&w, &[-4.3]).sub(&translate(&w, &[3.9])).unwrap();
    let s = symmetry_defect(&odd, &w).unwrap();
    assert!(s.at_fit_midpoint <= 1e-10 && s.minimum <= 1e-10);
    assert!((s.midplane + 0.2).abs() < 1e-8);
    let lopsided = w.sub(&translate(&w, &[8.0]).scaled(0.5)).unwrap();
    let s2 = symmetry_defect(&lopsided, &w).unwrap();
    assert!(s2.minimum > 0.2, "{:?}", s2);
    let moved = symmetry_defect(&translate(&lopsided, &[1.37]), &w).unwrap();
    assert!((moved.minimum - s2.minimum).abs() < 1e-8);
}

#[test]
fn alpha_n_groundstate_approaches_kappa() {
    let grid = GridSpec::new(1, 30.0, 1024).unwrap();
    let params = ChoquardParams::new(1, 3.0, 0.9, false).unwrap();
    let init = limit_groundstate_v(1, 3.0, 1.0, &grid).unwrap();
    let res = solve_groundstate(&params, &init, &config()).unwrap();
    let kappa = choquard::reference::kappa_level(1, 3.0, 1.0).unwrap();
    assert!(((res.energy - kappa) / kappa).abs() < 0.2);
    assert!((action_choquard(&res.field, &params) - res.energy).abs() < 1e-12);
}

#[test]
fn invalid_inputs() {
    let grid = GridSpec::new(1, 10.0, 64).unwrap();
    let params = ChoquardParams::new(1, 2.0, 0.5, true).unwrap();
    let z = Field::zeros(grid);
    assert!(solve_groundstate(&params, &z, &config()).is_err());
    let pos = Field::from_fn(grid, |x| (-(x[0] * x[0])).exp());
    assert!(solve_nodal(&params, &pos, &config()).is_err());
    let bad = SolverConfig {
        residual_tolerance: 0.0,
        ..config()
    };
    assert!(solve_groundstate(&params, &pos, &bad).is_err());
}
