//! Groundstates of the two limit problems and their action levels.
//!
//! * `−Δu + u = |u|^{q−2}u` (local NLS), groundstate `U`, level `γ_q`;
//! * `−Δv + v = μ(∫|v|^p)|v|^{p−2}v`, groundstate `V = U/(μ∫U^p)^{1/(2p−2)}`
//!   with `U` the NLS groundstate for `q = p`, level `κ_{p,μ}`.
//!
//! In 1D the NLS groundstate is explicit. In higher dimensions it is computed
//! by shooting on `u(0)` for the radial ODE `u″ + (N−1)u′/r = u − u^{q−1}`;
//! beyond the matching radius the profile is continued by the linear decay
//! `c r^{−ν} K_ν(r)`, `ν = (N−2)/2`.

use std::f64::consts::PI;

use libm::{lgamma, tgamma};
use serde::Serialize;

use crate::eigen::{lobpcg, LobpcgOptions};
use crate::error::{Error, Result};
use crate::grid::{helmholtz_apply, helmholtz_solve, integrate, FieldOf, GridSpec};
use crate::scalar::abs_pow;
use crate::Field;

const R_MAX: f64 = 40.0;
const MAX_STEP: f64 = 0.01;
const BISECTIONS: usize = 80;
const MATCH_FRACTION: f64 = 1e-4;

/// Radial groundstate profile `u(r)` of the NLS problem.
#[derive(Debug, Clone, Serialize)]
pub struct RadialProfile {
    pub dimension: usize,
    pub q: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(skip)]
    slopes: Vec<f64>,
    /// Fitted rate `λ` of `u(r) r^{(N−1)/2} ≈ c e^{−λ r}` over the last decade.
    pub decay_rate: f64,
    #[serde(skip)]
    tail: Tail,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tail {
    start: f64,
    coefficient: f64,
    nu: f64,
}

/// `K_ν(r) e^r sqrt(2r/π)` by its large-argument asymptotic series.
fn scaled_bessel_k(nu: f64, r: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let kf = k as f64;
        let next = term * (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * r);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

impl Tail {
    /// Shape `r^{−ν} K_ν(r)` up to a constant factor.
    fn shape(&self, r: f64) -> f64 {
        r.powf(-self.nu) * (-r).exp() * scaled_bessel_k(self.nu, r) / r.sqrt()
    }

    fn eval(&self, r: f64) -> f64 {
        self.coefficient * self.shape(r)
    }
}

impl RadialProfile {
    /// `u(r)` for any `r >= 0`.
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= self.tail.start {
            return self.tail.eval(r);
        }
        let i = match self.radii.binary_search_by(|x| x.total_cmp(&r)) {
            Ok(i) => return self.values[i],
            Err(0) => return self.values[0],
            Err(i) => i - 1,
        };
        // cubic Hermite on [r_i, r_{i+1}]
        let (r0, r1) = (self.radii[i], self.radii[i + 1]);
        let h = r1 - r0;
        let s = (r - r0) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.values[i]
            + h10 * h * self.slopes[i]
            + h01 * self.values[i + 1]
            + h11 * h * self.slopes[i + 1]
    }

    pub fn peak(&self) -> f64 {
        self.values[0]
    }
}

enum Outcome {
    /// `u` crossed zero: initial value too large.
    Overshoot,
    /// `u′` turned positive while `u > 0`: initial value too small.
    Undershoot,
    /// Reached `R_MAX` without either event.
    Neither,
}

struct Trajectory {
    radii: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    outcome: Outcome,
}

fn rhs(dim: f64, q: f64, r: f64, y: [f64; 2]) -> [f64; 2] {
    let damping = if r > 0.0 { (dim - 1.0) / r * y[1] } else { 0.0 };
    [
        y[1],
        y[0] - abs_pow(y[0], q - 1.0) * y[0].signum() - damping,
    ]
}

// Dormand–Prince 5(4) tableau
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn shoot(dimension: usize, q: f64, a: f64) -> Trajectory {
    let dim = dimension as f64;
    let (rtol, atol) = (1e-12, 1e-15);
    // series start: u(r) ≈ a + u″(0) r²/2
    let curvature = (a - a.powf(q - 1.0)) / dim;
    let r0 = 1e-5;
    let mut r = r0;
    let mut y = [a + 0.5 * curvature * r0 * r0, curvature * r0];
    let mut radii = vec![0.0, r];
    let mut values = vec![a, y[0]];
    let mut slopes = vec![0.0, y[1]];
    let mut h = 1e-3f64;
    let mut k = [[0.0; 2]; 7];
    k[0] = rhs(dim, q, r, y);
    while r < R_MAX {
        h = h.min(MAX_STEP).min(R_MAX - r);
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                ys[0] += h * A[s][j] * kj[0];
                ys[1] += h * A[s][j] * kj[1];
            }
            k[s] = rhs(dim, q, r + C[s] * h, ys);
        }
        let mut y5 = y;
        let mut err = 0.0f64;
        for c in 0..2 {
            let mut d5 = 0.0;
            let mut d4 = 0.0;
            for s in 0..7 {
                d5 += B5[s] * k[s][c];
                d4 += B4[s] * k[s][c];
            }
            y5[c] += h * d5;
            let scale = atol + rtol * y[c].abs().max(y5[c].abs());
            err = err.max((h * (d5 - d4)).abs() / scale);
        }
        if err > 1.0 {
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            continue;
        }
        r += h;
        y = y5;
        k[0] = k[6];
        radii.push(r);
        values.push(y[0]);
        slopes.push(y[1]);
        if y[0] < 0.0 {
            return Trajectory {
                radii,
                values,
                slopes,
                outcome: Outcome::Overshoot,
            };
        }
        if y[1] > 0.0 {
            return Trajectory {
                radii,
                values,
                slopes,
                outcome: Outcome::Undershoot,
            };
        }
        h *= if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).min(5.0)
        };
    }
    Trajectory {
        radii,
        values,
        slopes,
        outcome: Outcome::Neither,
    }
}

fn check_subcritical(dimension: usize, q: f64) -> Result<()> {
    if !(1..=3).contains(&dimension) {
        return Err(Error::InvalidParams(format!(
            "dimension {dimension} not in 1..=3"
        )));
    }
    let critical = if dimension <= 2 {
        f64::INFINITY
    } else {
        2.0 * dimension as f64 / (dimension as f64 - 2.0)
    };
    if !(q > 2.0 && q < critical) {
        return Err(Error::InvalidParams(format!(
            "q = {q} not in the subcritical range (2, {critical}) for N = {dimension}"
        )));
    }
    Ok(())
}

/// Radial NLS groundstate by shooting on `u(0)`.
pub fn shoot_radial_profile(dimension: usize, q: f64) -> Result<RadialProfile> {
    check_subcritical(dimension, q)?;
    let fail = || Error::ShootingBracket { dimension, q };
    // coarse scan: small u(0) > 1 undershoots, large u(0) overshoots
    let mut lo = 1.0 + 1e-6;
    if !matches!(shoot(dimension, q, lo).outcome, Outcome::Undershoot) {
        return Err(fail());
    }
    let mut hi = 1.1;
    loop {
        match shoot(dimension, q, hi).outcome {
            Outcome::Overshoot => break,
            _ => {
                lo = hi;
                hi *= 1.25;
                if hi > 1e4 {
                    return Err(fail());
                }
            }
        }
    }
    let mut best = None;
    for _ in 0..BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let traj = shoot(dimension, q, mid);
        match traj.outcome {
            Outcome::Overshoot => hi = mid,
            Outcome::Undershoot | Outcome::Neither => lo = mid,
        }
        best = Some((mid, traj));
    }
    let (a, traj) = best.ok_or_else(fail)?;
    let cut = traj
        .values
        .iter()
        .position(|&u| u < MATCH_FRACTION * a)
        .ok_or_else(fail)?;
    let radii = traj.radii[..=cut].to_vec();
    let values = traj.values[..=cut].to_vec();
    let slopes = traj.slopes[..=cut].to_vec();
    let nu = (dimension as f64 - 2.0) / 2.0;
    let start = radii[cut];
    let mut tail = Tail {
        start,
        coefficient: 1.0,
        nu,
    };
    tail.coefficient = values[cut] / tail.shape(start);

    // least-squares slope of ln(u r^{(N−1)/2}) over the last decade
    let lower = MATCH_FRACTION * 10.0 * a;
    let from = values.iter().position(|&u| u < lower).unwrap_or(0);
    let half_dim = 0.5 * (dimension as f64 - 1.0);
    let pts: Vec<(f64, f64)> = (from..=cut)
        .filter(|&i| radii[i] > 0.0)
        .map(|i| (radii[i], (values[i] * radii[i].powf(half_dim)).ln()))
        .collect();
    let n = pts.len() as f64;
    let (sx, sy) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), &(x, y)| {
        (a + (x - mx) * (y - my), b + (x - mx) * (x - mx))
    });
    let decay_rate = -sxy / sxx;
    Ok(RadialProfile {
        dimension,
        q,
        radii,
        values,
        slopes,
        decay_rate,
        tail,
    })
}

/// `(q/2)^{1/(q−2)} sech^{2/(q−2)}((q−2)x/2)`.
pub fn nls_groundstate_1d(q: f64, x: f64) -> f64 {
    let beta = 2.0 / (q - 2.0);
    (q / 2.0).powf(1.0 / (q - 2.0)) / ((q - 2.0) * x / 2.0).cosh().powf(beta)
}

/// NLS groundstate `U` centred at the origin of `grid`.
pub fn nls_groundstate(dimension: usize, q: f64, grid: &GridSpec) -> Result<Field> {
    check_subcritical(dimension, q)?;
    if grid.dimension() != dimension {
        return Err(Error::InvalidParams("grid dimension differs from N".into()));
    }
    if dimension == 1 {
        return Ok(Field::from_fn(*grid, |x| nls_groundstate_1d(q, x[0])));
    }
    let profile = shoot_radial_profile(dimension, q)?;
    Ok(Field::from_fn(*grid, |x| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        profile.eval(r)
    }))
}

fn surface_area(dimension: usize) -> f64 {
    let n = dimension as f64;
    2.0 * PI.powf(n / 2.0) / tgamma(n / 2.0)
}

/// `γ_q = Φ_q(U) = (½ − 1/q) ∫ U^q`, evaluated from the 1D closed form or by
/// radial quadrature of the shooting profile.
pub fn gamma_level(dimension: usize, q: f64) -> Result<f64> {
    check_subcritical(dimension, q)?;
    let factor = 0.5 - 1.0 / q;
    if dimension == 1 {
        // ∫ sech^m = B(m/2, 1/2)
        let beta = 2.0 / (q - 2.0);
        let m = beta * q;
        let amplitude = (q / 2.0).powf(1.0 / (q - 2.0));
        let rate = (q - 2.0) / 2.0;
        let log_beta = lgamma(m / 2.0) + lgamma(0.5) - lgamma((m + 1.0) / 2.0);
        return Ok(factor * amplitude.powf(q) * log_beta.exp() / rate);
    }
    let profile = shoot_radial_profile(dimension, q)?;
    Ok(factor * radial_moment(&profile, q))
}

/// `∫_{R^N} u^q` for a radial profile, composite Simpson in `r`.
pub fn radial_moment(profile: &RadialProfile, q: f64) -> f64 {
    let steps = 16_000;
    let h = R_MAX / steps as f64;
    let dim = profile.dimension as i32;
    let f = |r: f64| r.powi(dim - 1) * profile.eval(r).powf(q);
    let mut sum = f(0.0) + f(R_MAX);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(i as f64 * h);
    }
    surface_area(profile.dimension) * sum * h / 3.0
}

/// `V = U / (μ ∫U^p)^{1/(2p−2)}` with `U` the NLS groundstate for `q = p`;
/// the integral is taken on the grid so the discrete equation is preserved.
pub fn limit_groundstate_v(dimension: usize, p: f64, mu: f64, grid: &GridSpec) -> Result<Field> {
    if !(mu > 0.0) {
        return Err(Error::InvalidParams(format!("mu = {mu} must be positive")));
    }
    let u = nls_groundstate(dimension, p, grid)?;
    let mass = integrate(&u.map(|v| abs_pow(v, p)));
    Ok(u.scaled((mu * mass).powf(-1.0 / (2.0 * p - 2.0))))
}

/// `κ_{p,μ} = ((½ − 1/2p)/μ^{1/(p−1)}) (γ_p/(½ − 1/p))^{(p−2)/(p−1)}`.
pub fn kappa_level(dimension: usize, p: f64, mu: f64) -> Result<f64> {
    if !(p >= 2.0) || !(mu > 0.0) {
        return Err(Error::InvalidParams(format!(
            "kappa needs p >= 2 and mu > 0, got p = {p}, mu = {mu}"
        )));
    }
    let prefactor = (0.5 - 0.5 / p) / mu.powf(1.0 / (p - 1.0));
    if p == 2.0 {
        return Ok(prefactor);
    }
    let gamma = gamma_level(dimension, p)?;
    Ok(prefactor * (gamma / (0.5 - 1.0 / p)).powf((p - 2.0) / (p - 1.0)))
}

/// Lowest eigenpairs of the linearization `L v = −Δv + v − (q−1)U^{q−2}v`.
#[derive(Debug, Clone)]
pub struct NondegeneracySpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Field>,
}

impl NondegeneracySpectrum {
    /// Number of eigenvalues with `|λ| < threshold`.
    pub fn kernel_dimension(&self, threshold: f64) -> usize {
        self.eigenvalues
            .iter()
            .filter(|l| l.abs() < threshold)
            .count()
    }
}

pub fn nondegeneracy_spectrum(u: &Field, q: f64, k: usize) -> Result<NondegeneracySpectrum> {
    if k == 0 {
        return Err(Error::InvalidParams("need at least one eigenvalue".into()));
    }
    let grid = *u.grid();
    let potential: Vec<f64> = u
        .values()
        .iter()
        .map(|&v| (q - 1.0) * abs_pow(v, q - 2.0))
        .collect();
    let op = |v: &[f64]| -> Vec<f64> {
        let f = FieldOf::new(grid, v.to_vec()).expect("finite iterate");
        let mut out = helmholtz_apply(&f).into_values();
        for ((o, x), w) in out.iter_mut().zip(v).zip(&potential) {
            *o -= w * x;
        }
        out
    };
    let pre = |v: &[f64]| -> Vec<f64> {
        helmholtz_solve(&FieldOf::new(grid, v.to_vec()).expect("finite iterate")).into_values()
    };
    let pairs = lobpcg(
        &op,
        &pre,
        grid.len(),
        &LobpcgOptions {
            count: k,
            extra: 2,
            tolerance: 1e-8,
            max_iterations: 2000,
            seed: 0x5eed,
        },
    )?;
    let eigenvectors = pairs
        .vectors
        .into_iter()
        .map(|v| FieldOf::new(grid, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(NondegeneracySpectrum {
        eigenvalues: pairs.values,
        eigenvectors,
    })
}
