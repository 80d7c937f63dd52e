//! Constrained descent for groundstates and least-energy nodal solutions,
//! and the two-bump diagnostics used by the experiments.
//!
//! Both solvers take Sobolev-gradient steps (the H¹ residual of
//! [`evaluate_choquard`]) along Polak–Ribière conjugate directions and
//! project every trial point back onto the relevant Nehari set: by a scalar
//! rescaling for groundstates, by the two-parameter [`nodal_scales`] for
//! nodal solutions. Step sizes are chosen by backtracking on the action.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::energy::{
    evaluate_choquard, nehari_nodal_defects, nehari_scale, nodal_scales, recombine, ChoquardEval,
    ChoquardParams, NodalScales,
};
use crate::error::{Error, Result, SignPart};
use crate::grid::{
    boundary_mass, h1_inner, h1_norm, negative_part, positive_part, reflect_axis1, translate,
};
use crate::optimize::brent_minimize;
use crate::Field;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub initial_step: f64,
    /// Target for `‖residual‖_{H¹}`.
    pub residual_tolerance: f64,
    /// Relative action change over a window of iterations below which the
    /// run is declared stalled.
    pub energy_stall_tolerance: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            initial_step: 1.0,
            residual_tolerance: 1e-8,
            energy_stall_tolerance: 1e-15,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.initial_step)
            || !positive(self.residual_tolerance)
            || !positive(self.energy_stall_tolerance)
        {
            return Err(Error::InvalidParams(
                "solver step and tolerances must be positive".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParams(
                "max_iterations must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Termination {
    Converged,
    Stalled,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub field: Field,
    pub energy: f64,
    pub residual_h1: f64,
    pub iterations: usize,
    /// One entry for groundstates, `(plus, minus)` for nodal solutions.
    pub nehari_defects: Vec<f64>,
    pub boundary_mass: f64,
    pub termination: Termination,
    /// Scales of the last nodal projection.
    pub scales: Option<NodalScales>,
}

const STALL_WINDOW: usize = 200;
const ARMIJO: f64 = 1e-4;
const MAX_STEP: f64 = 1.0;
const MIN_STEP: f64 = 1e-12;

/// Projection onto the constraint set used by one solver.
trait Projection {
    fn project(&self, v: &Field) -> Result<(Field, Option<NodalScales>)>;
}

struct NehariRay<'a>(&'a ChoquardParams);

impl Projection for NehariRay<'_> {
    fn project(&self, v: &Field) -> Result<(Field, Option<NodalScales>)> {
        let t = nehari_scale(v, self.0)?;
        if !t.is_finite() {
            return Err(Error::Collapse);
        }
        Ok((v.scaled(t), None))
    }
}

struct NehariNodal<'a>(&'a ChoquardParams);

impl Projection for NehariNodal<'_> {
    fn project(&self, v: &Field) -> Result<(Field, Option<NodalScales>)> {
        let sc = nodal_scales(v, self.0, 1e-13)?;
        Ok((recombine(v, sc.t, sc.s), Some(sc)))
    }
}

struct State {
    u: Field,
    eval: ChoquardEval<f64>,
    residual_h1: f64,
    scales: Option<NodalScales>,
}

fn state_at(u: Field, scales: Option<NodalScales>, params: &ChoquardParams) -> State {
    let eval = evaluate_choquard(&u, params);
    let residual_h1 = h1_norm(&eval.residual);
    State {
        u,
        eval,
        residual_h1,
        scales,
    }
}

fn descend(
    params: &ChoquardParams,
    init: &Field,
    config: &SolverConfig,
    projection: &dyn Projection,
) -> Result<(State, usize, Termination)> {
    config.validate()?;
    if init.grid().dimension() != params.dimension {
        return Err(Error::InvalidParams(
            "initial field dimension differs from N".into(),
        ));
    }
    if init.is_zero() {
        return Err(Error::ZeroField);
    }
    let (u0, sc0) = projection.project(init)?;
    let mut state = state_at(u0, sc0, params);
    let mut step = config.initial_step;
    let mut direction: Option<Field> = None;
    let mut previous_residual: Option<Field> = None;
    let mut history: Vec<(f64, f64)> = Vec::new();
    for iteration in 0..config.max_iterations {
        if !state.eval.action.is_finite() || state.u.is_zero() {
            return Err(Error::Collapse);
        }
        if state.residual_h1 <= config.residual_tolerance {
            return Ok((state, iteration, Termination::Converged));
        }
        history.push((state.eval.action, state.residual_h1));
        if history.len() > STALL_WINDOW {
            let (old_action, old_residual) = history[history.len() - 1 - STALL_WINDOW];
            let change = (old_action - state.eval.action).abs();
            let best_recent = history[history.len() - STALL_WINDOW..]
                .iter()
                .map(|h| h.1)
                .fold(f64::INFINITY, f64::min);
            if change <= config.energy_stall_tolerance * state.eval.action.abs()
                && best_recent >= 0.5 * old_residual
            {
                return Ok((state, iteration, Termination::Stalled));
            }
        }

        let r = &state.eval.residual;
        // Polak–Ribière+ with restart on loss of descent
        let mut d = r.scaled(-1.0);
        if let (Some(prev_d), Some(prev_r)) = (&direction, &previous_residual) {
            let denom = h1_inner(prev_r, prev_r)?;
            let beta = (h1_inner(r, &r.sub(prev_r)?)? / denom).max(0.0);
            if beta > 0.0 && beta.is_finite() {
                let candidate = d.axpy(beta, prev_d)?;
                if h1_inner(&candidate, r)? < 0.0 {
                    d = candidate;
                }
            }
        }
        let slope = h1_inner(r, &d)?;

        let mut accepted = None;
        let mut trial = step;
        let mut last_error = None;
        while trial >= MIN_STEP {
            let v = state.u.axpy(trial, &d)?;
            match projection.project(&v) {
                Ok((w, sc)) => {
                    let next = state_at(w, sc, params);
                    let expected = ARMIJO * trial * slope;
                    let decrease_ok = next.eval.action <= state.eval.action + expected;
                    // at the rounding floor of the action, accept on the residual
                    let floor = (trial * slope).abs() < 1e-12 * state.eval.action.abs()
                        && next.residual_h1 < state.residual_h1;
                    if next.eval.action.is_finite() && (decrease_ok || floor) {
                        accepted = Some(next);
                        break;
                    }
                }
                Err(e @ (Error::SignPartVanished(_) | Error::NewtonFailed { .. })) => {
                    last_error = Some(e);
                }
                Err(Error::Collapse | Error::ZeroField) => last_error = Some(Error::Collapse),
                Err(e) => return Err(e),
            }
            trial *= 0.5;
        }
        match accepted {
            Some(next) => {
                step = (trial * 2.0).min(MAX_STEP);
                previous_residual = Some(state.eval.residual.clone());
                direction = Some(d);
                state = next;
            }
            None if direction.is_some() => {
                // retry from steepest descent before giving up
                direction = None;
                previous_residual = None;
                step = config.initial_step;
            }
            None => {
                if let Some(e) = last_error {
                    return Err(e);
                }
                return Ok((state, iteration, Termination::Stalled));
            }
        }
    }
    if state.residual_h1 <= config.residual_tolerance {
        return Ok((state, config.max_iterations, Termination::Converged));
    }
    Err(Error::MaxIterations {
        iterations: config.max_iterations,
        residual: state.residual_h1,
    })
}

/// Positive groundstate by descent on the Nehari manifold.
pub fn solve_groundstate(
    params: &ChoquardParams,
    init: &Field,
    config: &SolverConfig,
) -> Result<SolveResult> {
    let (state, iterations, termination) = descend(params, init, config, &NehariRay(params))?;
    let mut field = state.u;
    if field.max() < -field.min() {
        field = field.scaled(-1.0);
    }
    let defect = state.eval.h1 - state.eval.riesz;
    Ok(SolveResult {
        boundary_mass: boundary_mass(&field),
        field,
        energy: state.eval.action,
        residual_h1: state.residual_h1,
        iterations,
        nehari_defects: vec![defect],
        termination,
        scales: None,
    })
}

fn axis1_centroid(f: &Field) -> Option<f64> {
    let grid = f.grid();
    let (mut m0, mut m1) = (0.0, 0.0);
    for (flat, &v) in f.values().iter().enumerate() {
        let w = v * v;
        m0 += w;
        m1 += w * grid.point(flat)[0];
    }
    (m0 > 0.0).then(|| m1 / m0)
}

/// Least-energy nodal solution by descent on the Nehari nodal set.
///
/// The output is oriented so that the positive bump has the smaller
/// axis-1 centroid.
pub fn solve_nodal(
    params: &ChoquardParams,
    init: &Field,
    config: &SolverConfig,
) -> Result<SolveResult> {
    if positive_part(init).is_zero() {
        return Err(Error::SignPartVanished(SignPart::Positive));
    }
    if negative_part(init).is_zero() {
        return Err(Error::SignPartVanished(SignPart::Negative));
    }
    let (state, iterations, termination) = descend(params, init, config, &NehariNodal(params))?;
    let mut field = state.u;
    let mut scales = state.scales;
    let plus = axis1_centroid(&positive_part(&field));
    let minus = axis1_centroid(&negative_part(&field));
    if let (Some(a), Some(b)) = (plus, minus) {
        if a > b {
            field = field.scaled(-1.0);
            scales = scales.map(|s| NodalScales {
                t: s.s,
                s: s.t,
                defect_plus: s.defect_minus,
                defect_minus: s.defect_plus,
            });
        }
    }
    let (dp, dm) = nehari_nodal_defects(&field, params);
    Ok(SolveResult {
        boundary_mass: boundary_mass(&field),
        field,
        energy: state.eval.action,
        residual_h1: state.residual_h1,
        iterations,
        nehari_defects: vec![dp, dm],
        termination,
        scales,
    })
}

/// `W(· + (d/2) e₁) − W(· − (d/2) e₁)` with each bump moved along axis 1 by
/// an independent seeded offset in `[−jitter, jitter]`.
pub fn two_bump_init(w: &Field, separation: f64, jitter: f64, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut offset = || {
        if jitter > 0.0 {
            rng.gen_range(-jitter..=jitter)
        } else {
            0.0
        }
    };
    let (a, b) = (offset(), offset());
    let dim = w.grid().dimension();
    let mut left = vec![0.0; dim];
    let mut right = vec![0.0; dim];
    left[0] = -0.5 * separation + a;
    right[0] = 0.5 * separation + b;
    translate(w, &left)
        .sub(&translate(w, &right))
        .expect("same grid")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BumpFit {
    pub xi_plus: Vec<f64>,
    pub xi_minus: Vec<f64>,
    /// `‖u − (W(·−ξ⁺) − W(·−ξ⁻))‖_{H¹} / ‖u‖_{H¹}`.
    pub fit_error_h1: f64,
    pub separation: f64,
}

/// Spectral data for evaluating `‖u − W(·−a) + W(·−b)‖²_{H¹}` and its
/// derivatives in O(n^N) per call.
struct FitObjective {
    dim: usize,
    /// `(1 + 4π²|ξ|²) û conj(Ŵ)` and `(1 + 4π²|ξ|²)|Ŵ|²`, scaled to integrals.
    cross: Vec<Complex<f64>>,
    auto: Vec<f64>,
    frequencies: Vec<[f64; 3]>,
    u_norm2: f64,
    w_norm2: f64,
}

impl FitObjective {
    fn new(u: &Field, w: &Field) -> Self {
        let grid = *u.grid();
        let symbol = grid.laplacian_symbol();
        let scale = grid.cell_volume() / grid.len() as f64;
        let su = u.spectrum();
        let sw = w.spectrum();
        let mut cross = Vec::with_capacity(grid.len());
        let mut auto = Vec::with_capacity(grid.len());
        let mut frequencies = Vec::with_capacity(grid.len());
        let (mut u_norm2, mut w_norm2) = (0.0, 0.0);
        for k in 0..grid.len() {
            let weight = (1.0 + symbol[k]) * scale;
            let a = su.coefficients()[k];
            let b = sw.coefficients()[k];
            cross.push(a * b.conj() * weight);
            auto.push(b.norm_sqr() * weight);
            u_norm2 += a.norm_sqr() * weight;
            w_norm2 += b.norm_sqr() * weight;
            frequencies.push(grid.wavevector(k));
        }
        Self {
            dim: grid.dimension(),
            cross,
            auto,
            frequencies,
            u_norm2,
            w_norm2,
        }
    }

    fn phase(&self, k: usize, shift: &[f64]) -> f64 {
        let f = &self.frequencies[k];
        2.0 * std::f64::consts::PI * (0..self.dim).map(|a| f[a] * shift[a]).sum::<f64>()
    }

    /// `⟨u, W(·−s)⟩_{H¹}` and its first and second derivative in `s_axis`.
    fn cross_term(&self, shift: &[f64], axis: usize) -> (f64, f64, f64) {
        let mut out = (0.0, 0.0, 0.0);
        for (k, c) in self.cross.iter().enumerate() {
            let z = *c * Complex::from_polar(1.0, self.phase(k, shift));
            let w = 2.0 * std::f64::consts::PI * self.frequencies[k][axis];
            out.0 += z.re;
            out.1 += -w * z.im;
            out.2 += -w * w * z.re;
        }
        out
    }

    /// `⟨W(·−a), W(·−b)⟩_{H¹}` as a function of `δ = a − b`.
    fn overlap(&self, delta: &[f64], axis: usize) -> (f64, f64, f64) {
        let mut out = (0.0, 0.0, 0.0);
        for (k, &c) in self.auto.iter().enumerate() {
            let (sin, cos) = self.phase(k, delta).sin_cos();
            let w = 2.0 * std::f64::consts::PI * self.frequencies[k][axis];
            out.0 += c * cos;
            out.1 += -c * w * sin;
            out.2 += -c * w * w * cos;
        }
        out
    }

    fn value(&self, plus: &[f64], minus: &[f64]) -> f64 {
        let delta: Vec<f64> = plus.iter().zip(minus).map(|(a, b)| a - b).collect();
        self.u_norm2 + 2.0 * self.w_norm2 - 2.0 * self.cross_term(plus, 0).0
            + 2.0 * self.cross_term(minus, 0).0
            - 2.0 * self.overlap(&delta, 0).0
    }

    /// First and second derivative of the objective in one coordinate.
    fn coordinate_derivatives(
        &self,
        plus: &[f64],
        minus: &[f64],
        moving_plus: bool,
        axis: usize,
    ) -> (f64, f64) {
        let delta: Vec<f64> = plus.iter().zip(minus).map(|(a, b)| a - b).collect();
        let (_, o1, o2) = self.overlap(&delta, axis);
        if moving_plus {
            let (_, c1, c2) = self.cross_term(plus, axis);
            (-2.0 * c1 - 2.0 * o1, -2.0 * c2 - 2.0 * o2)
        } else {
            let (_, c1, c2) = self.cross_term(minus, axis);
            // d/db of overlap(a − b) is −overlap′
            (2.0 * c1 + 2.0 * o1, 2.0 * c2 - 2.0 * o2)
        }
    }
}

/// Grid point maximizing the periodic cross-correlation `∫ f(x) W(x − s) dx`.
fn correlation_peak(f: &Field, w: &Field) -> Option<Vec<f64>> {
    let grid = *f.grid();
    let sf = f.spectrum();
    let sw = w.spectrum();
    let coefficients: Vec<Complex<f64>> = sf
        .coefficients()
        .iter()
        .zip(sw.coefficients())
        .map(|(a, b)| a * b.conj())
        .collect();
    let corr = crate::grid::SpectralFieldOf::new(grid, coefficients)
        .ok()?
        .to_field();
    let (best, value) =
        corr.values()
            .iter()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
            );
    if !(value > 0.0) {
        return None;
    }
    // correlation index i corresponds to the shift i·h (periodic)
    let idx = grid.unravel(best);
    let n = grid.points_per_axis();
    let h = grid.spacing();
    Some(
        (0..grid.dimension())
            .map(|a| {
                let i = idx[a] as f64;
                if idx[a] >= n / 2 {
                    (i - n as f64) * h
                } else {
                    i * h
                }
            })
            .collect(),
    )
}

const FIT_SWEEPS: usize = 200;

/// Best H¹ approximation of `u` by `W(·−ξ⁺) − W(·−ξ⁻)`.
pub fn fit_two_bumps(u: &Field, w: &Field) -> Result<BumpFit> {
    crate::grid::ensure_same_grid(u, w)?;
    let plus_part = positive_part(u);
    let minus_part = negative_part(u).scaled(-1.0);
    let mut found = 0;
    let xp = correlation_peak(&plus_part, w);
    found += xp.is_some() as usize;
    let xm = correlation_peak(&minus_part, w);
    found += xm.is_some() as usize;
    let (mut plus, mut minus) = match (xp, xm) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::TooFewPeaks { found }),
    };
    let objective = FitObjective::new(u, w);
    let h = u.grid().spacing();
    let dim = u.grid().dimension();
    let mut value = objective.value(&plus, &minus);
    for _ in 0..FIT_SWEEPS {
        let before = value;
        for moving_plus in [true, false] {
            for axis in 0..dim {
                let current = if moving_plus { plus[axis] } else { minus[axis] };
                let set = |x: f64, plus: &mut Vec<f64>, minus: &mut Vec<f64>| {
                    if moving_plus {
                        plus[axis] = x
                    } else {
                        minus[axis] = x
                    }
                };
                // safeguarded Newton on the coordinate derivative
                let mut x = current;
                let mut ok = true;
                for _ in 0..30 {
                    let (g, curv) =
                        objective.coordinate_derivatives(&plus, &minus, moving_plus, axis);
                    if !(curv > 0.0) {
                        ok = false;
                        break;
                    }
                    let dx = -g / curv;
                    if dx.abs() > 2.0 * h {
                        ok = false;
                        break;
                    }
                    x += dx;
                    set(x, &mut plus, &mut minus);
                    if dx.abs() <= 1e-15 * (1.0 + x.abs()) {
                        break;
                    }
                }
                let newton_value = objective.value(&plus, &minus);
                if !ok || newton_value > value {
                    set(current, &mut plus, &mut minus);
                    let (best, _) = brent_minimize(
                        |x| {
                            let mut p = plus.clone();
                            let mut m = minus.clone();
                            set(x, &mut p, &mut m);
                            objective.value(&p, &m)
                        },
                        current - 2.0 * h,
                        current + 2.0 * h,
                        1e-12,
                        200,
                    );
                    set(best, &mut plus, &mut minus);
                }
                value = objective.value(&plus, &minus);
            }
        }
        if (before - value).abs() <= 1e-10 * objective.u_norm2.max(f64::MIN_POSITIVE)
            && before >= value
        {
            break;
        }
    }
    let model = translate(w, &plus).sub(&translate(w, &minus))?;
    let fit_error_h1 = h1_norm(&u.sub(&model)?) / h1_norm(u);
    let separation = plus
        .iter()
        .zip(&minus)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(BumpFit {
        xi_plus: plus,
        xi_minus: minus,
        fit_error_h1,
        separation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetryDefect {
    /// Defect about the midpoint of the fitted bump centres.
    pub at_fit_midpoint: f64,
    /// Minimum over midplanes within two cells of the fitted midpoint.
    pub minimum: f64,
    /// Axis-1 coordinate of the minimizing midplane.
    pub midplane: f64,
}

/// `‖u + u∘R‖_{H¹} / ‖u‖_{H¹}` for `R(x) = (2m − x₁, x₂, …)`.
pub fn reflection_defect(u: &Field, midplane: f64) -> f64 {
    let reflected = reflect_axis1(u, 2.0 * midplane);
    h1_norm(&u.add(&reflected).expect("same grid")) / h1_norm(u)
}

/// Odd-symmetry defect about the bump midplane found by [`fit_two_bumps`].
pub fn symmetry_defect(u: &Field, w: &Field) -> Result<SymmetryDefect> {
    let fit = fit_two_bumps(u, w)?;
    let m = 0.5 * (fit.xi_plus[0] + fit.xi_minus[0]);
    let at_fit_midpoint = reflection_defect(u, m);
    let h = u.grid().spacing();
    let (midplane, minimum) = brent_minimize(
        |x| reflection_defect(u, x),
        m - 2.0 * h,
        m + 2.0 * h,
        1e-10,
        200,
    );
    let (minimum, midplane) = if minimum <= at_fit_midpoint {
        (minimum, midplane)
    } else {
        (at_fit_midpoint, m)
    };
    Ok(SymmetryDefect {
        at_fit_midpoint,
        minimum,
        midplane,
    })
}
