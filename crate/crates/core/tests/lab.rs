use choquard::grid::translate;
use choquard::lab::*;
use choquard::solvers::SolverConfig;
use choquard::{Field, GridSpec};

fn grid() -> GridSpec {
    GridSpec::new(1, 30.0, 2048).unwrap()
}

fn gaussian(g: GridSpec) -> Field {
    Field::from_fn(g, |x| (-x[0] * x[0]).exp())
}

#[test]
fn fourier_bound_cases() {
    let g = grid();
    let f = gaussian(g);
    let rec = check_fourier_bound(&f, &f, 0.05, 0.5, 0.5).unwrap();
    assert!(rec.holds && rec.lhs > 0.0, "{rec:?}");
    let zero = Field::zeros(g);
    let rec = check_fourier_bound(&zero, &f, 0.1, 0.2, 0.5).unwrap();
    assert_eq!((rec.lhs, rec.rhs), (0.0, 0.0));
    assert!(rec.holds);
    assert!(check_fourier_bound(&f, &f, 0.3, 0.2, 0.5).is_err());
    assert!(check_fourier_bound(&f, &f, 0.1, 0.2, 1.0).is_err());
    assert!(check_fourier_bound(&f, &f, 0.1, 1.0, 0.5).is_err());
    // lhs/α is bounded along a shrinking ladder
    let slopes: Vec<f64> = [0.2, 0.1, 0.05, 0.025]
        .iter()
        .map(|&a| check_fourier_bound(&f, &f, a, 0.4, 0.5).unwrap().lhs / a)
        .collect();
    let (lo, hi) = slopes
        .iter()
        .fold((f64::MAX, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    assert!(hi / lo < 1.5, "{slopes:?}");
    let suite = suite_fourier_bound(&g).unwrap();
    assert_eq!(suite.len(), 30);
    assert!(suite.iter().all(|r| r.record.holds && r.record.lhs > 0.0));
}

#[test]
fn riesz_error_ladders() {
    let g = grid();
    let zero = check_riesz_energy_error(&Field::zeros(g), 2.0, 0.1).unwrap();
    assert_eq!((zero.error, zero.bound_ratio), (0.0, 0.0));
    let sech = Field::from_fn(g, |x| 1.0 / x[0].cosh());
    let ladder = riesz_error_ladder("sech", &sech, 2.0, &[0.2, 0.1, 0.05]).unwrap();
    assert!(ladder.spread < 2.0, "{}", ladder.spread);
    let pair = Field::from_fn(g, |x| {
        1.0 / (x[0] - 10.0).cosh() + 1.0 / (x[0] + 10.0).cosh()
    });
    let ladder = riesz_error_ladder("pair", &pair, 2.0, &[0.2, 0.1, 0.05]).unwrap();
    assert!(ladder.spread < 2.0, "{}", ladder.spread);
    for l in suite_riesz_error(&g, 2.0).unwrap() {
        assert!(l.spread <= 4.0, "{}: {}", l.label, l.spread);
    }
}

#[test]
fn oscillation_degrades_the_estimate() {
    let g = GridSpec::new(1, 30.0, 4096).unwrap();
    let psi = gaussian(g);
    let rule = AlphaRule::InverseLog(0.25);
    let recs = check_oscillation_degradation(&psi, &[0, 8, 32], rule, 0.25).unwrap();
    // without oscillation this is the smooth estimate with f = g = ψ
    let smooth = check_riesz_energy_error(&psi, 1.0, recs[0].alpha).unwrap();
    assert!((recs[0].error.abs() - smooth.error).abs() <= 1e-12);
    for r in &recs[1..] {
        assert!(r.error < 0.0);
        assert!(((r.error - r.predicted) / r.predicted).abs() < 0.02, "{r:?}");
    }
    // the relative error stays away from zero while α_n shrinks
    let rel: Vec<f64> = recs[1..].iter().map(|r| -r.error / r.l2_squared).collect();
    assert!(rel.iter().all(|&v| v > 0.2), "{rel:?}");
    assert!(recs[2].amplification > recs[1].amplification);
}

#[test]
fn upper_bound_deficits() {
    let g = grid();
    let f = gaussian(g);
    let alphas = [0.8, 0.9, 0.95, 0.98];
    let rec = check_upper_bound_alpha_n(&f, &alphas, 2.0).unwrap();
    let e = rec.fitted_exponent.unwrap();
    assert!((0.8..=1.2).contains(&e), "{e}");
    assert!(rec.ratio_spread < 2.0);
    let zero = check_upper_bound_alpha_n(&Field::zeros(g), &alphas, 2.0).unwrap();
    assert!(zero.entries.iter().all(|e| e.deficit == 0.0));
    // whole cells, so the grid maximum samples the same profile points
    let shift = 112.0 * g.spacing();
    let moved = check_upper_bound_alpha_n(&translate(&f, &[shift]), &alphas, 2.0).unwrap();
    for (a, b) in rec.entries.iter().zip(&moved.entries) {
        assert!((a.deficit - b.deficit).abs() <= 1e-10, "{} {}", a.deficit, b.deficit);
    }
    assert!(check_upper_bound_alpha_n(&f, &[0.4], 2.0).is_err());
    assert!(check_upper_bound_alpha_n(&f.scaled(-1.0), &alphas, 2.0).is_err());
}

#[test]
fn translated_limits() {
    let g = grid();
    let f = gaussian(g);
    let sech = Field::from_fn(g, |x| 1.0 / x[0].cosh());
    let alphas = [0.7, 0.85, 0.95, 0.98];
    for rule in [SeparationRule::Rho(1.0), SeparationRule::Rho(0.5)] {
        let rec = check_translated_limit(&f, &sech, &alphas, rule).unwrap();
        assert!(rec.final_gap <= 0.02, "{rec:?}");
        let gaps: Vec<f64> = rec.entries.iter().map(|e| e.gap).collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    }
    let zero = check_translated_limit(&f, &Field::zeros(g), &alphas, SeparationRule::Fixed(0.0))
        .unwrap();
    assert!(zero.entries.iter().all(|e| e.integral == 0.0));
    // beyond the box and too many points for the pairwise sum
    let big = GridSpec::new(1, 30.0, 16384).unwrap();
    let fb = gaussian(big);
    assert!(check_translated_limit(&fb, &fb, &[0.9], SeparationRule::Fixed(100.0)).is_err());
    // the pairwise sum agrees with the box pairing where both apply
    let near = check_translated_limit(&f, &sech, &[0.6], SeparationRule::Fixed(14.0)).unwrap();
    let small = GridSpec::new(1, 30.0, 1024).unwrap();
    let far = check_translated_limit(
        &gaussian(small),
        &Field::from_fn(small, |x| 1.0 / x[0].cosh()),
        &[0.6],
        SeparationRule::Fixed(16.0),
    )
    .unwrap();
    assert_eq!(far.entries[0].method, PairingMethod::Direct);
    assert_eq!(near.entries[0].method, PairingMethod::Box);
    let expected = near.entries[0].integral * (16.0f64 / 14.0).powf(-0.4);
    assert!((far.entries[0].integral / expected - 1.0).abs() < 0.01);
}

#[test]
fn hls_table_and_nondegeneracy() {
    let rows = hls_table(1, &default_hls_alphas(1)).unwrap();
    assert!((rows[0].normalized - 1.0).abs() < 1e-3);
    assert!((rows.last().unwrap().unnormalized - 1.0).abs() < 1e-3);
    assert!(hls_table(1, &[1.5]).is_err());
    let rec = check_nondegeneracy(&grid(), 4.0, 1e-4).unwrap();
    assert_eq!(rec.kernel_dimension, 1);
    assert!(rec.kernel_cosines[0] >= 0.9999);
}

#[test]
fn report_formatting() {
    assert_eq!(format_float(4.0 / 3.0), "1.3333333333333333e0");
    assert_eq!(format_float(f64::NAN), "null");
    for &x in &[0.1, -2.5e-300, 1.0 / 3.0, 6.02e23, f64::MIN_POSITIVE] {
        let back: f64 = format_float(x).parse().unwrap();
        assert_eq!(back.to_bits(), x.to_bits());
    }
    let fit = fit_power_law([0.4, 0.2, 0.1], [1.0, 1.5, 1.75]).unwrap();
    assert!((fit.limit - 2.0).abs() < 1e-9 && (fit.exponent - 1.0).abs() < 1e-9);
}

fn small_sweep(out: Option<std::path::PathBuf>) -> SweepConfig {
    let g = GridSpec::new(1, 20.0, 512).unwrap();
    let mut c = SweepConfig::new(SweepMode::Alpha0, 1, 2.0, vec![0.4, 0.2], g);
    c.solver = SolverConfig {
        residual_tolerance: 1e-7,
        seed: 9,
        ..SolverConfig::default()
    };
    c.output_dir = out;
    c.format = ReportFormat::Csv;
    c
}

#[test]
fn sweep_writes_reports_and_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_sweep(&small_sweep(Some(dir.path().to_path_buf()))).unwrap();
    assert_eq!(out.report.records.len(), 2);
    for r in &out.report.records {
        assert!(r.error.is_none(), "{:?}", r.error);
        assert!(r.c_nod.unwrap() < 2.0 * r.c_gst.unwrap());
        let files = r.fields.as_ref().unwrap();
        let gst: Field = choquard::io::load(dir.path().join(&files.groundstate)).unwrap();
        assert!(gst.max() > 0.0);
    }
    let json = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(value["report_version"], 1);
    assert_eq!(value["mode"], "alpha0");
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), CSV_COLUMNS.join(","));
    assert_eq!(csv.lines().count(), 3);
    // same config, same bytes
    let again = run_sweep(&small_sweep(None)).unwrap();
    let mut first = out.report.clone();
    for r in first.records.iter_mut() {
        r.fields = None;
    }
    assert_eq!(
        to_canonical_json(&first).unwrap(),
        to_canonical_json(&again.report).unwrap()
    );
}

#[test]
fn sweep_config_validation() {
    let mut c = small_sweep(None);
    c.alphas = vec![0.2, 0.4];
    assert!(run_sweep(&c).is_err());
    let mut c = small_sweep(None);
    c.alphas = vec![1.2];
    assert!(run_sweep(&c).is_err());
    let mut c = small_sweep(None);
    c.mode = SweepMode::AlphaN;
    c.alphas = vec![0.7, 0.8];
    // p = 2 is outside the nodal range of the α → N sweep
    assert!(run_sweep(&c).is_err());
    assert!(run_sweep_alpha_n(&small_sweep(None)).is_err());
    assert!("alphaN".parse::<SweepMode>().is_ok());
    assert!("sideways".parse::<SweepMode>().is_err());
}
