use choquard::energy::{
    action_choquard, action_nls, action_nls_n, nehari_nodal_defects, nehari_scale,
    nehari_scale_psi, nodal_scales, recombine, residual_choquard, residual_nls, residual_nls_n,
    ChoquardParams,
};
use choquard::grid::{h1_inner, FieldOf};
use choquard::{Field, GridSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_smooth(grid: GridSpec, rng: &mut ChaCha8Rng) -> Field {
    let bumps: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.gen_range(-4.0..4.0),
                rng.gen_range(0.6..1.6),
                rng.gen_range(-1.0..1.0),
            )
        })
        .collect();
    Field::from_fn(grid, |x| {
        bumps
            .iter()
            .map(|&(c, w, a)| a * (-((x[0] - c) / w).powi(2)).exp())
            .sum()
    })
}

fn fd_check(action: impl Fn(&Field) -> f64, residual: &Field, u: &Field, v: &Field) {
    let eps = 1e-5;
    let fd = (action(&u.axpy(eps, v).unwrap()) - action(&u.axpy(-eps, v).unwrap())) / (2.0 * eps);
    let analytic = h1_inner(residual, v).unwrap();
    let scale = fd.abs().max(1e-3);
    assert!(
        (fd - analytic).abs() <= 1e-5 * scale,
        "fd {fd} vs analytic {analytic}"
    );
}

#[test]
fn gradients_match_central_differences() {
    let grid = GridSpec::new(1, 12.0, 256).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let choquard = ChoquardParams::new(1, 2.5, 0.4, true).unwrap();
    for _ in 0..5 {
        let u = random_smooth(grid, &mut rng);
        let v = random_smooth(grid, &mut rng);
        fd_check(
            |w| action_choquard(w, &choquard),
            &residual_choquard(&u, &choquard),
            &u,
            &v,
        );
        fd_check(|w| action_nls(w, 3.5), &residual_nls(&u, 3.5), &u, &v);
        fd_check(
            |w| action_nls_n(w, 3.0, 1.5),
            &residual_nls_n(&u, 3.0, 1.5),
            &u,
            &v,
        );
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > 1e-12 * b.abs().max(1.0) {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

#[test]
fn nehari_scale_maximizes_along_ray() {
    let grid = GridSpec::new(1, 12.0, 256).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let params = ChoquardParams::new(1, 3.0, 0.3, true).unwrap();
    for _ in 0..3 {
        let u = random_smooth(grid, &mut rng);
        let t = nehari_scale(&u, &params).unwrap();
        let oracle = golden_max(|s| action_choquard(&u.scaled(s), &params), 1e-3, 50.0);
        assert!((t - oracle).abs() <= 1e-6 * oracle, "{t} vs {oracle}");
        let best = action_choquard(&u.scaled(t), &params);
        for k in 1..40 {
            let s = 0.1 * k as f64 * t;
            assert!(action_choquard(&u.scaled(s), &params) <= best + 1e-12);
        }
    }
}

#[test]
fn nehari_scale_psi_maximizes_along_ray() {
    let grid = GridSpec::new(1, 12.0, 256).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let u = random_smooth(grid, &mut rng);
    for &(p, mu) in &[(3.0, 1.0), (2.5, 2.0)] {
        let t = nehari_scale_psi(&u, p, mu).unwrap();
        let oracle = golden_max(|s| action_nls_n(&u.scaled(s), p, mu), 1e-3, 50.0);
        assert!((t - oracle).abs() <= 1e-6 * oracle);
        let tl = nehari_scale_psi(&u.scaled(3.0), p, mu).unwrap();
        assert!((tl - t / 3.0).abs() < 1e-10 * t);
        let w = u.scaled(t);
        assert!((nehari_scale_psi(&w, p, mu).unwrap() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn nodal_scales_match_grid_search() {
    let grid = GridSpec::new(1, 16.0, 256).unwrap();
    let u = Field::from_fn(grid, |x| {
        1.3 * (-(x[0] + 2.5).powi(2)).exp() - 0.6 * (-((x[0] - 2.0) / 1.4).powi(2)).exp()
    });
    let params = ChoquardParams::new(1, 2.0, 0.6, true).unwrap();
    let sc = nodal_scales(&u, &params, 1e-12).unwrap();
    // brute force over (t, s) on a 2D lattice, refined once around the best cell
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    let (mut t_lo, mut t_hi, mut s_lo, mut s_hi) = (0.05, 5.0, 0.05, 5.0);
    for _ in 0..3 {
        let k = 40;
        for i in 0..=k {
            for j in 0..=k {
                let t = t_lo + (t_hi - t_lo) * i as f64 / k as f64;
                let s = s_lo + (s_hi - s_lo) * j as f64 / k as f64;
                let value = action_choquard(&recombine(&u, t, s), &params);
                if value > best.0 {
                    best = (value, t, s);
                }
            }
        }
        let (dt, ds) = ((t_hi - t_lo) / 40.0, (s_hi - s_lo) / 40.0);
        (t_lo, t_hi, s_lo, s_hi) = (best.1 - dt, best.1 + dt, best.2 - ds, best.2 + ds);
    }
    let resolution = (t_hi - t_lo).max(s_hi - s_lo);
    assert!(
        (sc.t - best.1).abs() <= resolution,
        "t {} vs {}",
        sc.t,
        best.1
    );
    assert!(
        (sc.s - best.2).abs() <= resolution,
        "s {} vs {}",
        sc.s,
        best.2
    );
    let w = recombine(&u, sc.t, sc.s);
    let (dp, dm) = nehari_nodal_defects(&w, &params);
    let h1 = h1_inner(&w, &w).unwrap();
    assert!(dp.abs() <= 1e-11 * h1 && dm.abs() <= 1e-11 * h1);
}

/// Naive DFT evaluation of `Σ_k (1 + 4π²ξ_k²) Re(û_k conj v̂_k) h / n` on 1D grids.
fn naive_h1(u: &[f64], v: &[f64], h: f64) -> f64 {
    let n = u.len();
    let big_l = n as f64 * h;
    let mut sum = 0.0;
    for k in 0..n {
        let kk = if k <= n / 2 {
            k as f64
        } else {
            k as f64 - n as f64
        };
        let xi = kk / big_l;
        let (mut ur, mut ui, mut vr, mut vi) = (0.0, 0.0, 0.0, 0.0);
        for j in 0..n {
            let ph = -2.0 * std::f64::consts::PI * (k * j) as f64 / n as f64;
            ur += u[j] * ph.cos();
            ui += u[j] * ph.sin();
            vr += v[j] * ph.cos();
            vi += v[j] * ph.sin();
        }
        let w = 1.0 + 4.0 * std::f64::consts::PI.powi(2) * xi * xi;
        sum += w * (ur * vr + ui * vi);
    }
    sum * h / n as f64
}

#[test]
fn nodal_defects_on_eight_cells_match_hand_computation() {
    let grid = GridSpec::new(1, 4.0, 8).unwrap();
    let values: Vec<f64> = vec![0.0, 0.0, 0.9, 0.4, 0.0, -0.7, 0.0, 0.0];
    let u = FieldOf::new(grid, values.clone()).unwrap();
    let (p, alpha) = (2.0, 0.5);
    let params = ChoquardParams::new(1, p, alpha, false).unwrap();
    let plus: Vec<f64> = values.iter().map(|v| v.max(0.0)).collect();
    let minus: Vec<f64> = values.iter().map(|v| v.min(0.0)).collect();
    // h = 1: weight of offset o is ∫ over [|o|-1/2, |o|+1/2] of |x|^{α-1}
    let w = |o: i64| -> f64 {
        let o = o.abs() as f64;
        if o == 0.0 {
            2.0 * 0.5f64.powf(alpha) / alpha
        } else {
            ((o + 0.5).powf(alpha) - (o - 0.5).powf(alpha)) / alpha
        }
    };
    let pair = |f: &[f64], g: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..8 {
            for j in 0..8 {
                s += w(i as i64 - j as i64) * f[j].abs().powf(p) * g[i].abs().powf(p);
            }
        }
        s
    };
    let expect_plus = naive_h1(&values, &plus, 1.0) - pair(&values, &plus);
    let expect_minus = naive_h1(&values, &minus, 1.0) - pair(&values, &minus);
    let (dp, dm) = nehari_nodal_defects(&u, &params);
    assert!((dp - expect_plus).abs() < 1e-12, "{dp} vs {expect_plus}");
    assert!((dm - expect_minus).abs() < 1e-12, "{dm} vs {expect_minus}");
}

#[test]
fn nodal_scales_handle_unequal_parts() {
    let grid = GridSpec::new(1, 20.0, 512).unwrap();
    let params = ChoquardParams::new(1, 3.0, 0.9, false).unwrap();
    let u = Field::from_fn(grid, |x| {
        0.2 / (x[0] + 4.0).cosh() - 2.0 / ((x[0] - 4.0) / 0.7).cosh()
    });
    let sc = nodal_scales(&u, &params, 1e-12).unwrap();
    assert!(sc.t > 0.0 && sc.s > 0.0);
    let w = recombine(&u, sc.t, sc.s);
    let h1 = h1_inner(&w, &w).unwrap();
    let (dp, dm) = nehari_nodal_defects(&w, &params);
    assert!(dp.abs() <= 1e-11 * h1 && dm.abs() <= 1e-11 * h1);
}
