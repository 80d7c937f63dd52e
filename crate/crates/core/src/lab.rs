//! Numerical checks of the Riesz-potential estimates, α-sweeps toward the
//! two limits, and deterministic report output.
//!
//! Every check returns a record that carries both sides of the inequality it
//! probes, so a failing case can be audited from the report alone.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::energy::{nehari_scale_psi, ChoquardParams};
use crate::error::{Error, Result};
use crate::grid::{
    derivative, fractional_norm, h1_inner, integrate, l2_inner, l2_norm,
    negative_part, positive_part, translate,
};
use crate::optimize::bisect_root;
use crate::reference::{
    gamma_level, kappa_level, limit_groundstate_v, nls_groundstate, nondegeneracy_spectrum,
};
use crate::riesz::{
    cross_riesz_energy, hls_constant, hls_constant_unnormalized, riesz_convolve, riesz_energy,
    RieszKernelSpec,
};
use crate::scalar::abs_pow;
use crate::solvers::{
    fit_two_bumps, solve_groundstate, solve_nodal, symmetry_defect, two_bump_init, SolveResult,
    SolverConfig, Termination,
};
use crate::{Field, GridSpec};

pub const REPORT_VERSION: u32 = 1;

/// Relative slack allowed before an inequality check is reported as violated.
pub const INEQUALITY_SLACK: f64 = 1e-6;

fn check_order(dimension: usize, alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < dimension as f64 {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange { alpha, dimension })
    }
}

/// Nonnegative up to round-off relative to the peak.
fn nonnegative(f: &Field) -> bool {
    f.min() >= -1e-12 * f.max_abs()
}

fn ratio_or_zero(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

// ---------------------------------------------------------------------------
// L² estimate as α → 0

#[derive(Debug, Clone, Serialize)]
pub struct FourierBoundRecord {
    pub alpha: f64,
    pub beta: f64,
    pub s: f64,
    /// `|∫(I_α∗f)g − ∫fg|`.
    pub lhs: f64,
    /// `((α/β)‖I_β∗f‖ + (α/s)‖(−Δ)^{s/2}f‖)·‖g‖`.
    pub rhs: f64,
    pub riesz_norm: f64,
    pub fractional_norm: f64,
    pub g_norm: f64,
    pub holds: bool,
}

/// Checks `|∫(I_α∗f)g − ∫fg| ≤ ((α/β)‖I_β∗f‖ + (α/s)‖(−Δ)^{s/2}f‖)‖g‖`.
///
/// `‖I_β∗f‖` is taken over the box only, which can only shrink the right
/// side, so a pass on the grid is not an artefact of truncation.
pub fn check_fourier_bound(
    f: &Field,
    g: &Field,
    alpha: f64,
    beta: f64,
    s: f64,
) -> Result<FourierBoundRecord> {
    let dim = f.grid().dimension();
    let n = dim as f64;
    check_order(dim, alpha)?;
    check_order(dim, beta)?;
    if alpha > beta {
        return Err(Error::InvalidParams(format!(
            "need alpha <= beta, got alpha = {alpha}, beta = {beta}"
        )));
    }
    if !(s > 0.0 && s < n) {
        return Err(Error::InvalidParams(format!("s = {s} outside (0, {dim})")));
    }
    let cross = cross_riesz_energy(f, g, &RieszKernelSpec::new(dim, alpha, true)?)?;
    let lhs = (cross - l2_inner(f, g)?).abs();
    let riesz_norm = l2_norm(&riesz_convolve(f, &RieszKernelSpec::new(dim, beta, true)?));
    let frac = fractional_norm(f, s);
    let g_norm = l2_norm(g);
    let rhs = (alpha / beta * riesz_norm + alpha / s * frac) * g_norm;
    Ok(FourierBoundRecord {
        alpha,
        beta,
        s,
        lhs,
        rhs,
        riesz_norm,
        fractional_norm: frac,
        g_norm,
        holds: lhs <= rhs * (1.0 + INEQUALITY_SLACK),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RieszErrorRecord {
    pub alpha: f64,
    pub p: f64,
    /// `∫|u|^{2p}`.
    pub local: f64,
    /// `∫(I_α∗|u|^p)|u|^p`.
    pub riesz: f64,
    pub error: f64,
    /// `‖u‖²_{H¹}`.
    pub h1_squared: f64,
    /// `error / (α‖u‖^{2p}_{H¹})`.
    pub bound_ratio: f64,
}

pub fn check_riesz_energy_error(u: &Field, p: f64, alpha: f64) -> Result<RieszErrorRecord> {
    let dim = u.grid().dimension();
    check_order(dim, alpha)?;
    if dim > 2 && 1.0 / p <= 1.0 - 2.0 / dim as f64 {
        return Err(Error::InvalidParams(format!(
            "p = {p} is Sobolev-supercritical in dimension {dim}"
        )));
    }
    let local = integrate(&u.map(|v| abs_pow(v, 2.0 * p)));
    let riesz = riesz_energy(u, p, &RieszKernelSpec::new(dim, alpha, true)?);
    let error = (local - riesz).abs();
    let h1_squared = h1_inner(u, u)?;
    Ok(RieszErrorRecord {
        alpha,
        p,
        local,
        riesz,
        error,
        h1_squared,
        bound_ratio: ratio_or_zero(error, alpha * h1_squared.powf(p)),
    })
}

/// Ladder summary: records and `max/min` of the bound ratios.
#[derive(Debug, Clone, Serialize)]
pub struct RieszErrorLadder {
    pub label: String,
    pub records: Vec<RieszErrorRecord>,
    pub spread: f64,
}

pub fn riesz_error_ladder(
    label: &str,
    u: &Field,
    p: f64,
    alphas: &[f64],
) -> Result<RieszErrorLadder> {
    let records = alphas
        .iter()
        .map(|&a| check_riesz_energy_error(u, p, a))
        .collect::<Result<Vec<_>>>()?;
    Ok(RieszErrorLadder {
        label: label.to_string(),
        spread: spread(records.iter().map(|r| r.bound_ratio)),
        records,
    })
}

/// `max/min` of positive values; infinite if some value vanishes.
fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi == 0.0 {
        1.0
    } else {
        hi / lo
    }
}

/// Order schedule for the oscillating test functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", content = "c", rename_all = "snake_case")]
pub enum AlphaRule {
    /// `α_n = c / ln n`.
    InverseLog(f64),
    /// `α_n = c / √(ln n)`.
    InverseSqrtLog(f64),
}

impl AlphaRule {
    /// Order for frequency `n`; frequencies below 2 use the value at `n = 2`.
    pub fn alpha(&self, frequency: u32) -> f64 {
        let l = (frequency.max(2) as f64).ln();
        match *self {
            AlphaRule::InverseLog(c) => c / l,
            AlphaRule::InverseSqrtLog(c) => c / l.sqrt(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OscillationRecord {
    pub frequency: u32,
    pub alpha: f64,
    /// `∫(I_α∗f_n)f_n − ∫f_n²` with `f_n = cos(2πn η x₁)ψ`.
    pub error: f64,
    pub l2_squared: f64,
    /// Same quantity for `ψ` itself at the same order.
    pub baseline_error: f64,
    /// `((2πn|η|)^{−α} − 1)∫f_n²`, the high-frequency prediction.
    pub predicted: f64,
    /// `|error| / |baseline_error|`.
    pub amplification: f64,
}

pub fn check_oscillation_degradation(
    psi: &Field,
    frequencies: &[u32],
    rule: AlphaRule,
    eta: f64,
) -> Result<Vec<OscillationRecord>> {
    let dim = psi.grid().dimension();
    let energy_error = |f: &Field, alpha: f64| -> Result<(f64, f64)> {
        let spec = RieszKernelSpec::new(dim, alpha, true)?;
        let sq = l2_inner(f, f)?;
        Ok((cross_riesz_energy(f, f, &spec)? - sq, sq))
    };
    frequencies
        .iter()
        .map(|&n| {
            let alpha = rule.alpha(n);
            check_order(dim, alpha)?;
            let grid = *psi.grid();
            let values = psi
                .values()
                .iter()
                .enumerate()
                .map(|(flat, &v)| {
                    let x = grid.point(flat)[0];
                    v * (2.0 * std::f64::consts::PI * n as f64 * eta * x).cos()
                })
                .collect();
            let f = Field::new(grid, values)?;
            let (error, l2_squared) = energy_error(&f, alpha)?;
            let (baseline_error, _) = energy_error(psi, alpha)?;
            let predicted = if n == 0 {
                baseline_error
            } else {
                ((2.0 * std::f64::consts::PI * n as f64 * eta.abs()).powf(-alpha) - 1.0)
                    * l2_squared
            };
            Ok(OscillationRecord {
                frequency: n,
                alpha,
                error,
                l2_squared,
                baseline_error,
                predicted,
                amplification: ratio_or_zero(error.abs(), baseline_error.abs()),
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Unnormalized potentials as α → N

#[derive(Debug, Clone, Serialize)]
pub struct UpperBoundEntry {
    pub alpha: f64,
    /// `max_x (Ĩ_α∗f)(x)` over the grid.
    pub sup_potential: f64,
    pub mass: f64,
    /// `sup_potential − mass`.
    pub deficit: f64,
    /// `(N−α)/(rα−N)^{1−1/r}`.
    pub scale: f64,
    /// `(∫f^r)^{1/r}`.
    pub lr_norm: f64,
    /// `deficit / scale`.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct UpperBoundRecord {
    pub r: f64,
    pub entries: Vec<UpperBoundEntry>,
    /// Least-squares slope of `ln deficit` against `ln(N−α)`, if every
    /// deficit is positive and there are at least two entries.
    pub fitted_exponent: Option<f64>,
    /// `max/min` of `ratio`.
    pub ratio_spread: f64,
}

pub fn check_upper_bound_alpha_n(f: &Field, alphas: &[f64], r: f64) -> Result<UpperBoundRecord> {
    let dim = f.grid().dimension();
    let n = dim as f64;
    if !(r > 1.0 && r.is_finite()) {
        return Err(Error::InvalidParams(format!("r = {r} must lie in (1, inf)")));
    }
    if !nonnegative(f) {
        return Err(Error::InvalidParams("f must be nonnegative".into()));
    }
    let mass = integrate(f);
    let lr_norm = integrate(&f.map(|v| v.powf(r))).powf(1.0 / r);
    let entries = alphas
        .iter()
        .map(|&alpha| {
            check_order(dim, alpha)?;
            if r * alpha <= n {
                return Err(Error::InvalidParams(format!(
                    "alpha = {alpha} must exceed N/r = {}",
                    n / r
                )));
            }
            let potential = riesz_convolve(f, &RieszKernelSpec::new(dim, alpha, false)?);
            let sup_potential = if f.is_zero() { 0.0 } else { potential.max() };
            let deficit = sup_potential - mass;
            let scale = (n - alpha) / (r * alpha - n).powf(1.0 - 1.0 / r);
            Ok(UpperBoundEntry {
                alpha,
                sup_potential,
                mass,
                deficit,
                scale,
                lr_norm,
                ratio: deficit / scale,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fitted_exponent = if entries.len() >= 2 && entries.iter().all(|e| e.deficit > 0.0) {
        let pts: Vec<(f64, f64)> = entries
            .iter()
            .map(|e| ((n - e.alpha).ln(), e.deficit.ln()))
            .collect();
        Some(least_squares_slope(&pts))
    } else {
        None
    };
    Ok(UpperBoundRecord {
        r,
        ratio_spread: spread(entries.iter().map(|e| e.ratio.abs())),
        entries,
        fitted_exponent,
    })
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// How far `g` is pushed along axis 1 at each order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum SeparationRule {
    /// Constant shift; the expected limit is `∫f ∫g`.
    Fixed(f64),
    /// `d(α) = ϱ^{−1/(N−α)} − 1`, so `(1+d)^{N−α} = 1/ϱ`; limit `ϱ ∫f ∫g`.
    Rho(f64),
}

impl SeparationRule {
    pub fn shift(&self, dimension: usize, alpha: f64) -> f64 {
        match *self {
            SeparationRule::Fixed(d) => d,
            SeparationRule::Rho(rho) => rho.powf(-1.0 / (dimension as f64 - alpha)) - 1.0,
        }
    }

    pub fn rho(&self) -> f64 {
        match *self {
            SeparationRule::Fixed(_) => 1.0,
            SeparationRule::Rho(rho) => rho,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingMethod {
    /// Padded convolution against the translated field.
    Box,
    /// Pairwise sum over grid points, for shifts beyond the box.
    Direct,
}

#[derive(Debug, Clone, Serialize)]
pub struct TranslatedEntry {
    pub alpha: f64,
    pub shift: f64,
    /// `∫(Ĩ_α∗f)(x) g(x − d e₁) dx`.
    pub integral: f64,
    /// `ϱ ∫f ∫g`.
    pub target: f64,
    /// `|integral − target| / target`.
    pub gap: f64,
    pub method: PairingMethod,
}

#[derive(Debug, Clone, Serialize)]
pub struct TranslatedLimitRecord {
    pub rule: SeparationRule,
    pub entries: Vec<TranslatedEntry>,
    pub final_gap: f64,
}

/// Largest point count for which the pairwise sum is attempted.
const DIRECT_PAIR_LIMIT: usize = 1 << 13;

pub fn check_translated_limit(
    f: &Field,
    g: &Field,
    alphas: &[f64],
    rule: SeparationRule,
) -> Result<TranslatedLimitRecord> {
    let grid = *f.grid();
    let dim = grid.dimension();
    if !nonnegative(f) || !nonnegative(g) {
        return Err(Error::InvalidParams("f and g must be nonnegative".into()));
    }
    let target_base = integrate(f) * integrate(g);
    let entries = alphas
        .iter()
        .map(|&alpha| {
            check_order(dim, alpha)?;
            let shift = rule.shift(dim, alpha);
            if !shift.is_finite() || shift < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "shift {shift} at alpha = {alpha} is not a valid separation"
                )));
            }
            let (integral, method) = if shift <= 0.5 * grid.half_length() {
                let mut d = vec![0.0; dim];
                d[0] = shift;
                let moved = translate(g, &d);
                let spec = RieszKernelSpec::new(dim, alpha, false)?;
                (cross_riesz_energy(f, &moved, &spec)?, PairingMethod::Box)
            } else if grid.len() <= DIRECT_PAIR_LIMIT {
                (direct_pairing(f, g, alpha, shift), PairingMethod::Direct)
            } else {
                return Err(Error::InvalidParams(format!(
                    "separation {shift} exceeds the box guard {}",
                    0.5 * grid.half_length()
                )));
            };
            let target = rule.rho() * target_base;
            Ok(TranslatedEntry {
                alpha,
                shift,
                integral,
                target,
                gap: ratio_or_zero((integral - target).abs(), target),
                method,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TranslatedLimitRecord {
        rule,
        final_gap: entries.last().map_or(0.0, |e| e.gap),
        entries,
    })
}

/// `Σ_{x,y} f(y) g(x) |x + d e₁ − y|^{α−N} h^{2N}`; only used when the
/// shift keeps the kernel away from its singularity.
fn direct_pairing(f: &Field, g: &Field, alpha: f64, shift: f64) -> f64 {
    let grid = *f.grid();
    let dim = grid.dimension();
    let support = |u: &Field| -> Vec<([f64; 3], f64)> {
        u.values()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(flat, &v)| (grid.point(flat), v))
            .collect()
    };
    let fs = support(f);
    let gs = support(g);
    let exponent = alpha - dim as f64;
    let total: f64 = fs
        .par_iter()
        .map(|(y, fv)| {
            gs.iter()
                .map(|(x, gv)| {
                    let mut r2 = 0.0;
                    for axis in 0..dim {
                        let mut d = x[axis] - y[axis];
                        if axis == 0 {
                            d += shift;
                        }
                        r2 += d * d;
                    }
                    gv * r2.powf(0.5 * exponent)
                })
                .sum::<f64>()
                * fv
        })
        .sum();
    total * grid.cell_volume() * grid.cell_volume()
}

// ---------------------------------------------------------------------------
// Constants and limit-problem diagnostics

#[derive(Debug, Clone, Serialize)]
pub struct HlsRow {
    pub alpha: f64,
    pub normalized: f64,
    pub unnormalized: f64,
}

pub fn hls_table(dimension: usize, alphas: &[f64]) -> Result<Vec<HlsRow>> {
    alphas
        .iter()
        .map(|&alpha| {
            Ok(HlsRow {
                alpha,
                normalized: hls_constant(dimension, alpha)?,
                unnormalized: hls_constant_unnormalized(dimension, alpha)?,
            })
        })
        .collect()
}

/// Orders clustered at both ends of `(0, N)`.
pub fn default_hls_alphas(dimension: usize) -> Vec<f64> {
    let n = dimension as f64;
    let mut out: Vec<f64> = [1e-4, 1e-3, 1e-2, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99]
        .iter()
        .map(|f| f * n)
        .collect();
    out.extend([n - 1e-3, n - 1e-4]);
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct NondegeneracyRecord {
    pub dimension: usize,
    pub q: f64,
    pub eigenvalues: Vec<f64>,
    pub kernel_dimension: usize,
    /// `|cos|` between each kernel vector and the nearest partial derivative
    /// of the groundstate.
    pub kernel_cosines: Vec<f64>,
}

pub fn check_nondegeneracy(grid: &GridSpec, q: f64, threshold: f64) -> Result<NondegeneracyRecord> {
    let dim = grid.dimension();
    let u = nls_groundstate(dim, q, grid)?;
    let spec = nondegeneracy_spectrum(&u, q, dim + 2)?;
    let derivatives: Vec<Field> = (0..dim).map(|a| derivative(&u, a)).collect();
    let kernel_cosines = spec
        .eigenvalues
        .iter()
        .zip(&spec.eigenvectors)
        .filter(|(l, _)| l.abs() <= threshold)
        .map(|(_, v)| {
            derivatives
                .iter()
                .map(|d| {
                    let c = l2_inner(v, d).expect("same grid");
                    c.abs() / (l2_norm(v) * l2_norm(d))
                })
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(NondegeneracyRecord {
        dimension: dim,
        q,
        kernel_dimension: spec.kernel_dimension(threshold),
        eigenvalues: spec.eigenvalues,
        kernel_cosines,
    })
}

// ---------------------------------------------------------------------------
// Standard suites

/// Test fields for the estimate suites, labelled.
pub fn suite_fields(grid: &GridSpec) -> Vec<(String, Field)> {
    let r2 = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
    let shifted = |x: &[f64], c: f64| {
        let mut y = x.to_vec();
        y[0] -= c;
        r2(&y)
    };
    let fields: Vec<(&str, Box<dyn Fn(&[f64]) -> f64>)> = vec![
        ("gaussian", Box::new(move |x| (-r2(x)).exp())),
        ("wide_gaussian", Box::new(move |x| (-r2(x) / 4.0).exp())),
        ("sech", Box::new(move |x| 1.0 / r2(x).sqrt().cosh())),
        ("shifted_sech", Box::new(move |x| 1.5 / shifted(x, 2.5).sqrt().cosh())),
        (
            "lorentzian_squared",
            Box::new(move |x| 1.0 / (1.0 + r2(x)).powi(2)),
        ),
        (
            "dipole",
            Box::new(move |x| 2.0 * x[0] * (-r2(x)).exp()),
        ),
        (
            "separated_gaussians",
            Box::new(move |x| (-shifted(x, -6.0)).exp() + (-shifted(x, 6.0)).exp()),
        ),
        (
            "separated_sech",
            Box::new(move |x| {
                1.0 / shifted(x, -5.0).sqrt().cosh() - 1.0 / shifted(x, 5.0).sqrt().cosh()
            }),
        ),
        (
            "narrow_gaussian",
            Box::new(move |x| 2.0 * (-4.0 * r2(x)).exp()),
        ),
        (
            "gaussian_pair_close",
            Box::new(move |x| (-shifted(x, -1.5)).exp() + 0.5 * (-shifted(x, 1.5)).exp()),
        ),
    ];
    fields
        .into_iter()
        .map(|(name, f)| (name.to_string(), Field::from_fn(*grid, f)))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct LabelledFourierRecord {
    pub f: String,
    pub g: String,
    #[serde(flatten)]
    pub record: FourierBoundRecord,
}

/// Thirty cases: three `(f, g)` pairs against ten `(α, β, s)` triples.
/// Orders `β ≥ N/2` are paired only with mean-zero `f`, for which `I_β∗f`
/// is square integrable.
pub fn suite_fourier_bound(grid: &GridSpec) -> Result<Vec<LabelledFourierRecord>> {
    let n = grid.dimension() as f64;
    let fields = suite_fields(grid);
    let get = |name: &str| {
        fields
            .iter()
            .find(|(l, _)| l == name)
            .map(|(_, f)| f.clone())
            .expect("known field")
    };
    let low: [(f64, f64, f64); 10] = [
        (0.05, 0.4, 0.5),
        (0.05, 0.2, 0.5),
        (0.1, 0.1, 0.25),
        (0.2, 0.4, 0.75),
        (0.3, 0.3, 0.5),
        (0.025, 0.45, 0.3),
        (0.01, 0.25, 0.9),
        (0.15, 0.35, 0.1),
        (0.4, 0.45, 0.5),
        (0.2, 0.2, 0.2),
    ];
    let high: [(f64, f64, f64); 10] = [
        (0.05, 0.5, 0.5),
        (0.1, 0.9, 0.25),
        (0.5, 0.9, 0.5),
        (0.7, 0.8, 0.9),
        (0.1, 0.9, 0.1),
        (0.9, 0.95, 0.5),
        (0.3, 0.6, 0.75),
        (0.05, 0.75, 0.3),
        (0.6, 0.6, 0.6),
        (0.95, 0.99, 0.99),
    ];
    let cases: Vec<(&str, &str, &[(f64, f64, f64)])> = vec![
        ("gaussian", "gaussian", &low),
        ("sech", "separated_gaussians", &low),
        ("dipole", "shifted_sech", &high),
    ];
    let mut out = Vec::new();
    for (fname, gname, triples) in cases {
        let (f, g) = (get(fname), get(gname));
        for &(a, b, s) in triples {
            out.push(LabelledFourierRecord {
                f: fname.into(),
                g: gname.into(),
                record: check_fourier_bound(&f, &g, a * n, b * n, s * n)?,
            });
        }
    }
    Ok(out)
}

/// Order ladder shared by the α → 0 estimate suites.
pub const SMALL_ALPHA_LADDER: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

pub fn suite_riesz_error(grid: &GridSpec, p: f64) -> Result<Vec<RieszErrorLadder>> {
    let n = grid.dimension() as f64;
    let alphas: Vec<f64> = SMALL_ALPHA_LADDER.iter().map(|a| a * n).collect();
    suite_fields(grid)
        .iter()
        .map(|(name, u)| riesz_error_ladder(name, u, p, &alphas))
        .collect()
}

pub const OSCILLATION_FREQUENCIES: [u32; 6] = [0, 2, 4, 8, 16, 32];

pub fn suite_oscillation(grid: &GridSpec, rule: AlphaRule, eta: f64) -> Result<Vec<OscillationRecord>> {
    let psi = Field::from_fn(*grid, |x| (-x.iter().map(|v| v * v).sum::<f64>()).exp());
    check_oscillation_degradation(&psi, &OSCILLATION_FREQUENCIES, rule, eta)
}

/// Order ladder toward `N`, as fractions of `N`.
pub const LARGE_ALPHA_LADDER: [f64; 4] = [0.8, 0.9, 0.95, 0.98];

pub fn suite_upper_bound(grid: &GridSpec, r: f64) -> Result<Vec<(String, UpperBoundRecord)>> {
    let n = grid.dimension() as f64;
    let alphas: Vec<f64> = LARGE_ALPHA_LADDER.iter().map(|a| a * n).collect();
    suite_fields(grid)
        .into_iter()
        .filter(|(_, f)| f.min() >= 0.0)
        .map(|(name, f)| Ok((name, check_upper_bound_alpha_n(&f, &alphas, r)?)))
        .collect()
}

pub fn suite_translated_limit(grid: &GridSpec) -> Result<Vec<TranslatedLimitRecord>> {
    let n = grid.dimension() as f64;
    let alphas: Vec<f64> = [0.7, 0.85, 0.95, 0.98].iter().map(|a| a * n).collect();
    let f = Field::from_fn(*grid, |x| (-x.iter().map(|v| v * v).sum::<f64>()).exp());
    let g = Field::from_fn(*grid, |x| {
        1.0 / x.iter().map(|v| v * v).sum::<f64>().sqrt().cosh()
    });
    [SeparationRule::Rho(1.0), SeparationRule::Rho(0.5)]
        .into_iter()
        .map(|rule| check_translated_limit(&f, &g, &alphas, rule))
        .collect()
}

// ---------------------------------------------------------------------------
// Sweeps

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepMode {
    #[serde(rename = "alpha0")]
    Alpha0,
    #[serde(rename = "alphaN")]
    AlphaN,
}

impl FromStr for SweepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha0" => Ok(SweepMode::Alpha0),
            "alphaN" | "alphan" => Ok(SweepMode::AlphaN),
            other => Err(Error::InvalidParams(format!(
                "unknown sweep mode '{other}' (expected alpha0 or alphaN)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub mode: SweepMode,
    /// Orders, moving monotonically toward the limit of `mode`.
    pub alphas: Vec<f64>,
    pub dimension: usize,
    pub p: f64,
    pub grid: GridSpec,
    pub solver: SolverConfig,
    /// Written to when set: `report.json`, optional `report.csv`, fields.
    pub output_dir: Option<PathBuf>,
    pub format: ReportFormat,
    /// Initial bump distance for the nodal descent.
    pub initial_separation: f64,
    /// Seeded jitter on the initial bump centres.
    pub jitter: f64,
    /// Maximum number of box doublings per point.
    pub max_doublings: usize,
    /// Worker threads; `0` picks `min(4, available)`.
    pub workers: usize,
}

impl SweepConfig {
    pub fn new(mode: SweepMode, dimension: usize, p: f64, alphas: Vec<f64>, grid: GridSpec) -> Self {
        Self {
            mode,
            alphas,
            dimension,
            p,
            grid,
            solver: SolverConfig::default(),
            output_dir: None,
            format: ReportFormat::Json,
            initial_separation: 8.0,
            jitter: 0.25,
            max_doublings: 2,
            workers: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if self.grid.dimension() != self.dimension {
            return Err(Error::InvalidParams(format!(
                "grid dimension {} differs from N = {}",
                self.grid.dimension(),
                self.dimension
            )));
        }
        if self.alphas.is_empty() {
            return Err(Error::InvalidParams("empty alpha list".into()));
        }
        for &a in &self.alphas {
            check_order(self.dimension, a)?;
            ChoquardParams::new(self.dimension, self.p, a, true)?;
        }
        let toward_limit = self.alphas.windows(2).all(|w| match self.mode {
            SweepMode::Alpha0 => w[1] < w[0],
            SweepMode::AlphaN => w[1] > w[0],
        });
        if !toward_limit {
            return Err(Error::InvalidParams(
                "alpha list must move strictly toward the limit of the sweep mode".into(),
            ));
        }
        let n = self.dimension as f64;
        let inv = 1.0 / self.p;
        match self.mode {
            SweepMode::Alpha0 => {
                if !(1.0 - 2.0 / n < inv && inv <= 0.5) {
                    return Err(Error::InvalidParams(format!(
                        "alpha0 sweep needs 1 - 2/N < 1/p <= 1/2, got p = {}",
                        self.p
                    )));
                }
            }
            SweepMode::AlphaN => {
                if !(0.5 - 1.0 / n < inv && inv < 0.5) {
                    return Err(Error::InvalidParams(format!(
                        "alphaN sweep needs 1/2 - 1/N < 1/p < 1/2, got p = {}",
                        self.p
                    )));
                }
            }
        }
        if !(self.initial_separation > 0.0) || !(self.jitter >= 0.0) {
            return Err(Error::InvalidParams(
                "initial separation must be positive and jitter nonnegative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::InvalidParams(format!(
                "unknown format '{other}' (expected json or csv)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub energy: f64,
    pub residual_h1: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub boundary_mass: f64,
    pub nehari_defects: Vec<f64>,
}

impl From<&SolveResult> for SolveSummary {
    fn from(r: &SolveResult) -> Self {
        Self {
            energy: r.energy,
            residual_h1: r.residual_h1,
            iterations: r.iterations,
            termination: r.termination,
            boundary_mass: r.boundary_mass,
            nehari_defects: r.nehari_defects.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NodalRecord {
    pub separation: f64,
    /// `separation^{N−α}`.
    pub separation_pow_nmalpha: f64,
    pub fit_error: f64,
    pub xi_plus: Vec<f64>,
    pub xi_minus: Vec<f64>,
    /// Minimum reflection defect near the fitted midpoint.
    pub symmetry_defect: f64,
    pub symmetry_defect_at_fit_midpoint: f64,
    pub symmetry_midplane: f64,
    /// Nehari scales of the sign parts for the `α → N` limit functional
    /// (`μ = 2`); absent in `alpha0` sweeps.
    pub t_scale: Option<f64>,
    pub s_scale: Option<f64>,
    /// Whether the separation exceeds the saturation guard `L/2`.
    pub saturated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoxRecord {
    pub half_length: f64,
    pub points_per_axis: usize,
    pub doublings: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct PointLemmaChecks {
    pub riesz_error: Option<RieszErrorRecord>,
    pub fourier_bound: Option<FourierBoundRecord>,
    pub upper_bound: Option<UpperBoundEntry>,
    pub translated_limit: Option<TranslatedEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub alpha: f64,
    pub c_gst: Option<f64>,
    pub c_nod: Option<f64>,
    /// `γ_{2p}` for `alpha0`, `κ_{p,1}` for `alphaN`.
    pub gamma_or_kappa_target: f64,
    /// `2γ_{2p}` for `alpha0`, `2κ_{p,2}` for `alphaN`.
    pub nodal_target: f64,
    pub gap_gst: Option<f64>,
    pub gap_nod: Option<f64>,
    /// `c_nod < 2 c_gst`.
    pub nodal_below_twice_gst: Option<bool>,
    pub groundstate: Option<SolveSummary>,
    pub nodal_solve: Option<SolveSummary>,
    pub nodal: Option<NodalRecord>,
    pub lemma_checks: PointLemmaChecks,
    #[serde(rename = "box")]
    pub box_record: BoxRecord,
    /// Set when box adaptation ran out of doublings.
    pub flagged: bool,
    pub fields: Option<FieldFiles>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldFiles {
    pub groundstate: String,
    pub nodal: String,
}

/// `v(x) = v∞ + c x^e` through three points.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PowerLawFit {
    pub limit: f64,
    pub coefficient: f64,
    pub exponent: f64,
}

/// Exact three-point fit of `v∞ + c x^e` with `e` in `[1e-3, 20]`;
/// `None` when the increments are not of one sign or no exponent matches.
pub fn fit_power_law(xs: [f64; 3], vs: [f64; 3]) -> Option<PowerLawFit> {
    if xs.iter().any(|&x| !(x > 0.0)) {
        return None;
    }
    let d12 = vs[0] - vs[1];
    let d23 = vs[1] - vs[2];
    if d12 == 0.0 || d23 == 0.0 || (d12 > 0.0) != (d23 > 0.0) {
        return None;
    }
    let target = (d12 / d23).ln();
    let phi = |e: f64| {
        let a = xs[0].powf(e) - xs[1].powf(e);
        let b = xs[1].powf(e) - xs[2].powf(e);
        (a / b).ln() - target
    };
    let (lo, hi) = (1e-3, 20.0);
    let (flo, fhi) = (phi(lo), phi(hi));
    if !(flo.is_finite() && fhi.is_finite()) || (flo > 0.0) == (fhi > 0.0) {
        return None;
    }
    let exponent = bisect_root(phi, lo, hi, 200);
    let coefficient = d12 / (xs[0].powf(exponent) - xs[1].powf(exponent));
    Some(PowerLawFit {
        limit: vs[2] - coefficient * xs[2].powf(exponent),
        coefficient,
        exponent,
    })
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Extrapolation {
    pub c_gst: Option<PowerLawFit>,
    pub c_nod: Option<PowerLawFit>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridSummary {
    pub dimension: usize,
    pub half_length: f64,
    pub points_per_axis: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub report_version: u32,
    pub mode: SweepMode,
    pub dimension: usize,
    pub p: f64,
    pub normalized_kernel: bool,
    pub alphas: Vec<f64>,
    pub grid: GridSummary,
    pub solver: SolverConfig,
    pub initial_separation: f64,
    pub jitter: f64,
    pub gamma_or_kappa_target: f64,
    pub nodal_target: f64,
    pub records: Vec<SweepRecord>,
    /// Fits through the last three successful points, in the distance to
    /// the limit (`α` or `N − α`).
    pub extrapolation: Extrapolation,
}

/// Report plus the solved fields of every point (in `alphas` order).
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub report: ExperimentReport,
    pub fields: Vec<Option<(Field, Field)>>,
}

pub fn run_sweep_alpha0(config: &SweepConfig) -> Result<SweepOutcome> {
    if config.mode != SweepMode::Alpha0 {
        return Err(Error::InvalidParams("run_sweep_alpha0 needs mode alpha0".into()));
    }
    run_sweep(config)
}

pub fn run_sweep_alpha_n(config: &SweepConfig) -> Result<SweepOutcome> {
    if config.mode != SweepMode::AlphaN {
        return Err(Error::InvalidParams("run_sweep_alpha_n needs mode alphaN".into()));
    }
    run_sweep(config)
}

/// Dispatches on `config.mode`.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutcome> {
    config.validate()?;
    let (target, nodal_target) = targets(config)?;
    let workers = if config.workers == 0 {
        std::thread::available_parallelism()
            .map_or(1, |n| n.get())
            .min(4)
    } else {
        config.workers
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.min(config.alphas.len()).max(1))
        .build()
        .map_err(|e| Error::InvalidParams(format!("cannot start worker pool: {e}")))?;
    let points: Vec<(SweepRecord, Option<(Field, Field)>)> = pool.install(|| {
        config
            .alphas
            .par_iter()
            .map(|&alpha| run_point(config, alpha, target, nodal_target))
            .collect()
    });
    let (mut records, fields): (Vec<_>, Vec<_>) = points.into_iter().unzip();
    let n = config.dimension as f64;
    let distance = |a: f64| match config.mode {
        SweepMode::Alpha0 => a,
        SweepMode::AlphaN => n - a,
    };
    let extrapolation = {
        let tail = |get: &dyn Fn(&SweepRecord) -> Option<f64>| -> Option<PowerLawFit> {
            let ok: Vec<(f64, f64)> = records
                .iter()
                .filter_map(|r| get(r).map(|v| (distance(r.alpha), v)))
                .collect();
            if ok.len() < 3 {
                return None;
            }
            let last = &ok[ok.len() - 3..];
            fit_power_law(
                [last[0].0, last[1].0, last[2].0],
                [last[0].1, last[1].1, last[2].1],
            )
        };
        Extrapolation {
            c_gst: tail(&|r| r.c_gst),
            c_nod: tail(&|r| r.c_nod),
        }
    };
    if let Some(dir) = &config.output_dir {
        fs::create_dir_all(dir)?;
        for (i, (record, f)) in records.iter_mut().zip(&fields).enumerate() {
            if let Some((gst, nod)) = f {
                let names = FieldFiles {
                    groundstate: format!("alpha_{i:02}_groundstate.chqf"),
                    nodal: format!("alpha_{i:02}_nodal.chqf"),
                };
                crate::io::save(gst, dir.join(&names.groundstate))?;
                crate::io::save(nod, dir.join(&names.nodal))?;
                record.fields = Some(names);
            }
        }
    }
    let report = ExperimentReport {
        report_version: REPORT_VERSION,
        mode: config.mode,
        dimension: config.dimension,
        p: config.p,
        normalized_kernel: config.mode == SweepMode::Alpha0,
        alphas: config.alphas.clone(),
        grid: GridSummary {
            dimension: config.grid.dimension(),
            half_length: config.grid.half_length(),
            points_per_axis: config.grid.points_per_axis(),
        },
        solver: config.solver,
        initial_separation: config.initial_separation,
        jitter: config.jitter,
        gamma_or_kappa_target: target,
        nodal_target,
        records,
        extrapolation,
    };
    if let Some(dir) = &config.output_dir {
        write_report(&report, dir, config.format)?;
    }
    Ok(SweepOutcome { report, fields })
}

fn targets(config: &SweepConfig) -> Result<(f64, f64)> {
    let n = config.dimension;
    match config.mode {
        SweepMode::Alpha0 => {
            let gamma = gamma_level(n, 2.0 * config.p)?;
            Ok((gamma, 2.0 * gamma))
        }
        SweepMode::AlphaN => Ok((
            kappa_level(n, config.p, 1.0)?,
            2.0 * kappa_level(n, config.p, 2.0)?,
        )),
    }
}

struct PointSolution {
    gst: SolveResult,
    nod: SolveResult,
    bump: Field,
    grid: GridSpec,
    doublings: usize,
    flagged: bool,
}

fn solve_point(config: &SweepConfig, params: &ChoquardParams) -> Result<PointSolution> {
    let dim = config.dimension;
    let mut grid = config.grid;
    let mut doublings = 0;
    loop {
        let (gst_init, bump) = match config.mode {
            SweepMode::Alpha0 => {
                let u = nls_groundstate(dim, 2.0 * config.p, &grid)?;
                (u.clone(), u)
            }
            SweepMode::AlphaN => (
                limit_groundstate_v(dim, config.p, 1.0, &grid)?,
                limit_groundstate_v(dim, config.p, 2.0, &grid)?,
            ),
        };
        let gst = solve_groundstate(params, &gst_init, &config.solver)?;
        let init = two_bump_init(&bump, config.initial_separation, config.jitter, config.solver.seed);
        let nod = solve_nodal(params, &init, &config.solver)?;
        let separation = fit_two_bumps(&nod.field, &bump)?.separation;
        let leaky = |r: &SolveResult| r.boundary_mass > 1e-8 * r.field.max_abs();
        let adapt = leaky(&gst) || leaky(&nod) || separation > 0.5 * grid.half_length();
        if !adapt || doublings >= config.max_doublings {
            return Ok(PointSolution {
                gst,
                nod,
                bump,
                grid,
                doublings,
                flagged: adapt,
            });
        }
        grid = grid.doubled();
        doublings += 1;
    }
}

fn run_point(
    config: &SweepConfig,
    alpha: f64,
    target: f64,
    nodal_target: f64,
) -> (SweepRecord, Option<(Field, Field)>) {
    let mut record = SweepRecord {
        alpha,
        c_gst: None,
        c_nod: None,
        gamma_or_kappa_target: target,
        nodal_target,
        gap_gst: None,
        gap_nod: None,
        nodal_below_twice_gst: None,
        groundstate: None,
        nodal_solve: None,
        nodal: None,
        lemma_checks: PointLemmaChecks::default(),
        box_record: BoxRecord {
            half_length: config.grid.half_length(),
            points_per_axis: config.grid.points_per_axis(),
            doublings: 0,
        },
        flagged: false,
        fields: None,
        error: None,
    };
    match fill_point(config, alpha, &mut record) {
        Ok(fields) => (record, Some(fields)),
        Err(e) => {
            record.error = Some(e.to_string());
            (record, None)
        }
    }
}

fn fill_point(config: &SweepConfig, alpha: f64, record: &mut SweepRecord) -> Result<(Field, Field)> {
    let normalized = config.mode == SweepMode::Alpha0;
    let params = ChoquardParams::new(config.dimension, config.p, alpha, normalized)?;
    let sol = solve_point(config, &params)?;
    let n = config.dimension as f64;
    record.box_record = BoxRecord {
        half_length: sol.grid.half_length(),
        points_per_axis: sol.grid.points_per_axis(),
        doublings: sol.doublings,
    };
    record.flagged = sol.flagged;
    record.c_gst = Some(sol.gst.energy);
    record.c_nod = Some(sol.nod.energy);
    record.gap_gst = Some((sol.gst.energy - record.gamma_or_kappa_target).abs());
    record.gap_nod = Some((sol.nod.energy - record.nodal_target).abs());
    record.nodal_below_twice_gst = Some(sol.nod.energy < 2.0 * sol.gst.energy);
    record.groundstate = Some((&sol.gst).into());
    record.nodal_solve = Some((&sol.nod).into());

    let fit = fit_two_bumps(&sol.nod.field, &sol.bump)?;
    let sym = symmetry_defect(&sol.nod.field, &sol.bump)?;
    let (t_scale, s_scale) = match config.mode {
        SweepMode::Alpha0 => (None, None),
        SweepMode::AlphaN => (
            Some(nehari_scale_psi(&positive_part(&sol.nod.field), config.p, 2.0)?),
            Some(nehari_scale_psi(&negative_part(&sol.nod.field), config.p, 2.0)?),
        ),
    };
    record.nodal = Some(NodalRecord {
        separation: fit.separation,
        separation_pow_nmalpha: fit.separation.powf(n - alpha),
        fit_error: fit.fit_error_h1,
        xi_plus: fit.xi_plus.clone(),
        xi_minus: fit.xi_minus.clone(),
        symmetry_defect: sym.minimum,
        symmetry_defect_at_fit_midpoint: sym.at_fit_midpoint,
        symmetry_midplane: sym.midplane,
        t_scale,
        s_scale,
        saturated: fit.separation > 0.5 * sol.grid.half_length(),
    });
    record.flagged |= fit.separation > 0.5 * sol.grid.half_length();

    let density = sol.gst.field.map(|v| v.abs().powf(config.p));
    match config.mode {
        SweepMode::Alpha0 => {
            record.lemma_checks.riesz_error =
                Some(check_riesz_energy_error(&sol.gst.field, config.p, alpha)?);
            let beta = alpha.max(0.25 * n);
            record.lemma_checks.fourier_bound =
                Some(check_fourier_bound(&density, &density, alpha, beta, 0.5 * n)?);
        }
        SweepMode::AlphaN => {
            if 2.0 * alpha > n {
                let ub = check_upper_bound_alpha_n(&density, &[alpha], 2.0)?;
                record.lemma_checks.upper_bound = ub.entries.into_iter().next();
            }
            let tl = check_translated_limit(&density, &density, &[alpha], SeparationRule::Fixed(0.0))?;
            record.lemma_checks.translated_limit = tl.entries.into_iter().next();
        }
    }
    Ok((sol.gst.field, sol.nod.field))
}

// ---------------------------------------------------------------------------
// Output

/// Canonical JSON: object keys sorted, two-space indentation, floats with
/// 17 significant digits in exponent form, non-finite floats as `null`.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_json(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

/// `x` with 17 significant digits, e.g. `1.3333333333333333e0`.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

fn write_json(v: &Value, indent: usize, out: &mut String) {
    let pad = |k: usize| "  ".repeat(k);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(num) => {
            if num.is_f64() {
                out.push_str(&format_float(num.as_f64().unwrap_or(f64::NAN)));
            } else {
                out.push_str(&num.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_json(item, indent + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, key) in keys.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String((*key).clone()).to_string());
                out.push_str(": ");
                write_json(&map[key.as_str()], indent + 1, out);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// Column order of [`report_csv`].
pub const CSV_COLUMNS: [&str; 17] = [
    "alpha",
    "c_gst",
    "c_nod",
    "gamma_or_kappa_target",
    "nodal_target",
    "gap_gst",
    "gap_nod",
    "separation",
    "separation_pow_nmalpha",
    "fit_error",
    "symmetry_defect",
    "t_scale",
    "s_scale",
    "half_length",
    "points_per_axis",
    "flagged",
    "error",
];

/// Scalar columns of the report, one row per order; empty cells for
/// missing values.
pub fn report_csv(report: &ExperimentReport) -> String {
    let opt = |v: Option<f64>| v.map(format_float).unwrap_or_default();
    let mut out = CSV_COLUMNS.join(",");
    out.push('\n');
    for r in &report.records {
        let nodal = r.nodal.as_ref();
        let cells = [
            format_float(r.alpha),
            opt(r.c_gst),
            opt(r.c_nod),
            format_float(r.gamma_or_kappa_target),
            format_float(r.nodal_target),
            opt(r.gap_gst),
            opt(r.gap_nod),
            opt(nodal.map(|n| n.separation)),
            opt(nodal.map(|n| n.separation_pow_nmalpha)),
            opt(nodal.map(|n| n.fit_error)),
            opt(nodal.map(|n| n.symmetry_defect)),
            opt(nodal.and_then(|n| n.t_scale)),
            opt(nodal.and_then(|n| n.s_scale)),
            format_float(r.box_record.half_length),
            r.box_record.points_per_axis.to_string(),
            r.flagged.to_string(),
            r.error
                .as_ref()
                .map(|e| format!("\"{}\"", e.replace('"', "\"\"")))
                .unwrap_or_default(),
        ];
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Writes `report.json`, plus `report.csv` for [`ReportFormat::Csv`].
pub fn write_report(report: &ExperimentReport, dir: &Path, format: ReportFormat) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), to_canonical_json(report)?)?;
    if format == ReportFormat::Csv {
        fs::write(dir.join("report.csv"), report_csv(report))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_fit_recovers_exact_data() {
        let xs = [0.4, 0.2, 0.1];
        let f = |x: f64| 1.5 + 0.7 * x.powf(1.3);
        let fit = fit_power_law(xs, [f(xs[0]), f(xs[1]), f(xs[2])]).unwrap();
        assert!((fit.exponent - 1.3).abs() < 1e-9);
        assert!((fit.limit - 1.5).abs() < 1e-9);
        assert!(fit_power_law(xs, [1.0, 2.0, 1.0]).is_none());
    }

    #[test]
    fn canonical_json_sorts_and_formats() {
        let v = serde_json::json!({"b": 1.0, "a": [1, 2.5e-3], "c": null});
        let s = to_canonical_json(&v).unwrap();
        assert_eq!(
            s,
            "{\n  \"a\": [\n    1,\n    2.5000000000000001e-3\n  ],\n  \"b\": 1.0000000000000000e0,\n  \"c\": null\n}\n"
        );
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"][1].as_f64(), Some(2.5e-3));
    }
}
