//! Riesz potentials `I_α = A_α |x|^{α-N}` and `Ĩ_α = |x|^{α-N}`: constants,
//! optimal Hardy–Littlewood–Sobolev constants, and linear convolution on the
//! truncated box.
//!
//! Convolution is linear, not circular: fields are zero-padded to a box of
//! twice the size per axis and multiplied against the spectrum of the kernel
//! sampled on the padded box. Each kernel weight is the integral of
//! `|x|^{α-N}` over one grid cell: exact in 1D; in 2D/3D the cells touching
//! the origin use Gauss–Legendre quadrature on a 3^N split (the singular
//! subcube is resolved by self-similarity) and all other cells use the midpoint value.

use std::any::{Any, TypeId};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use libm::lgamma;
use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{ensure_same_grid, integrate, FieldOf, GridSpec, MAX_DIMENSION};
use crate::scalar::{abs_pow, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RieszKernelSpec {
    dimension: usize,
    alpha: f64,
    normalized: bool,
}

impl RieszKernelSpec {
    pub fn new(dimension: usize, alpha: f64, normalized: bool) -> Result<Self> {
        check_alpha(dimension, alpha)?;
        Ok(Self {
            dimension,
            alpha,
            normalized,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    /// Prefactor in front of `|x|^{α-N}`.
    pub fn prefactor(&self) -> f64 {
        if self.normalized {
            riesz_constant(self.dimension, self.alpha).expect("validated on construction")
        } else {
            1.0
        }
    }
}

fn check_alpha(dimension: usize, alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < dimension as f64) || dimension == 0 {
        return Err(Error::AlphaOutOfRange { alpha, dimension });
    }
    Ok(())
}

/// `A_α = Γ((N-α)/2) / (Γ(α/2) π^{N/2} 2^α)`, evaluated in log space.
pub fn riesz_constant(dimension: usize, alpha: f64) -> Result<f64> {
    check_alpha(dimension, alpha)?;
    let n = dimension as f64;
    let log = lgamma((n - alpha) / 2.0)
        - lgamma(alpha / 2.0)
        - 0.5 * n * PI.ln()
        - alpha * std::f64::consts::LN_2;
    Ok(log.exp())
}

/// `Ĩ_α / I_α = 1 / A_α`.
pub fn normalization_ratio(dimension: usize, alpha: f64) -> Result<f64> {
    Ok(1.0 / riesz_constant(dimension, alpha)?)
}

/// Optimal HLS constant for `Ĩ_α` with both exponents `2N/(N+α)`:
/// `π^{(N-α)/2} Γ(α/2) / Γ((N+α)/2) · (Γ(N)/Γ(N/2))^{α/N}`.
pub fn hls_constant_unnormalized(dimension: usize, alpha: f64) -> Result<f64> {
    check_alpha(dimension, alpha)?;
    let n = dimension as f64;
    let log = 0.5 * (n - alpha) * PI.ln() + lgamma(alpha / 2.0) - lgamma((n + alpha) / 2.0)
        + alpha / n * (lgamma(n) - lgamma(n / 2.0));
    Ok(log.exp())
}

/// Optimal HLS constant for the normalized kernel, `A_α · C̃_{N,α}`:
/// `Γ((N-α)/2) / (2^α π^{α/2} Γ((N+α)/2)) · (Γ(N)/Γ(N/2))^{α/N}`.
pub fn hls_constant(dimension: usize, alpha: f64) -> Result<f64> {
    check_alpha(dimension, alpha)?;
    let n = dimension as f64;
    let log = lgamma((n - alpha) / 2.0)
        - alpha * std::f64::consts::LN_2
        - 0.5 * alpha * PI.ln()
        - lgamma((n + alpha) / 2.0)
        + alpha / n * (lgamma(n) - lgamma(n / 2.0));
    Ok(log.exp())
}

/// `∫_a^b x^{α-1} dx` for `0 <= a < b`, stable for tiny `α`.
fn power_integral_1d(a: f64, b: f64, alpha: f64) -> f64 {
    if a == 0.0 {
        return b.powf(alpha) / alpha;
    }
    // a^α (exp(α ln(b/a)) - 1) / α
    a.powf(alpha) * (alpha * ((b - a) / a).ln_1p()).exp_m1() / alpha
}

const GAUSS_POINTS: usize = 20;

/// Gauss–Legendre nodes and weights on `[-1/2, 1/2]`.
fn gauss_legendre() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GAUSS_POINTS;
        (0..n)
            .map(|i| {
                let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
                let mut dp = 1.0;
                for _ in 0..100 {
                    let (mut p0, mut p1) = (1.0, x);
                    for k in 2..=n {
                        let kf = k as f64;
                        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                        p0 = p1;
                        p1 = p2;
                    }
                    dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                    let step = p1 / dp;
                    x -= step;
                    if step.abs() < 1e-16 {
                        break;
                    }
                }
                (0.5 * x, 1.0 / ((1.0 - x * x) * dp * dp))
            })
            .collect()
    })
}

/// Integral of `|y|^{α-N}` over `c + s[-1/2, 1/2]^N`, for cubes away from 0.
fn regular_cube_integral(dimension: usize, alpha: f64, center: &[f64], side: f64) -> f64 {
    let rule = gauss_legendre();
    let exponent = 0.5 * (alpha - dimension as f64);
    let total = GAUSS_POINTS.pow(dimension as u32);
    let mut sum = 0.0;
    for s in 0..total {
        let mut rest = s;
        let mut r2 = 0.0;
        let mut w = 1.0;
        for c in center.iter().take(dimension) {
            let (x, wx) = rule[rest % GAUSS_POINTS];
            rest /= GAUSS_POINTS;
            let y = c + side * x;
            r2 += y * y;
            w *= wx;
        }
        sum += w * r2.powf(exponent);
    }
    sum * side.powi(dimension as i32)
}

/// Mean of `|y|^{α-N}` over the cube `c + [-1/2, 1/2]^N` (unit cells).
fn unit_cell_mean(dimension: usize, alpha: f64, center: &[i64]) -> f64 {
    if center.iter().any(|&c| c != 0) {
        // split in 3^N to keep every quadrature cube at least its own
        // width away from the origin
        let third = 1.0 / 3.0;
        let mut sum = 0.0;
        for s in 0..3usize.pow(dimension as u32) {
            let mut rest = s;
            let mut c = [0.0; MAX_DIMENSION];
            for (axis, ci) in center.iter().take(dimension).enumerate() {
                c[axis] = *ci as f64 + ((rest % 3) as f64 - 1.0) * third;
                rest /= 3;
            }
            sum += regular_cube_integral(dimension, alpha, &c[..dimension], third);
        }
        return sum;
    }
    // the central third is a scaled copy: I = 3^{-α} I + ring
    let mut ring = 0.0;
    for s in 0..3usize.pow(dimension as u32) {
        let mut rest = s;
        let mut c = [0i64; MAX_DIMENSION];
        for ci in c.iter_mut().take(dimension) {
            *ci = (rest % 3) as i64 - 1;
            rest /= 3;
        }
        if c.iter().all(|&v| v == 0) {
            continue;
        }
        ring += 3f64.powf(-alpha) * unit_cell_mean(dimension, alpha, &c[..dimension]);
    }
    ring / -(-alpha * 3f64.ln()).exp_m1()
}

/// Integral of `|x|^{α-N}` over the grid cell centred at `offset * h`.
pub fn cell_weight(dimension: usize, alpha: f64, h: f64, offset: &[i64]) -> f64 {
    if dimension == 1 {
        let o = offset[0].unsigned_abs() as f64;
        return if o == 0.0 {
            2.0 * power_integral_1d(0.0, 0.5 * h, alpha)
        } else {
            power_integral_1d((o - 0.5) * h, (o + 0.5) * h, alpha)
        };
    }
    let volume = h.powi(dimension as i32);
    let scale = h.powf(alpha - dimension as f64);
    let near = offset.iter().take(dimension).all(|o| o.abs() <= 1);
    if near {
        volume * scale * unit_cell_mean(dimension, alpha, offset)
    } else {
        let r2: f64 = offset
            .iter()
            .take(dimension)
            .map(|&o| (o as f64) * (o as f64))
            .sum();
        volume * scale * r2.powf(0.5 * (alpha - dimension as f64))
    }
}

type KernelKey = (TypeId, usize, usize, u64, u64);
type KernelMap = HashMap<KernelKey, Arc<dyn Any + Send + Sync>>;
const KERNEL_CACHE_LIMIT: usize = 64;

fn kernel_cache() -> &'static Mutex<KernelMap> {
    static CACHE: OnceLock<Mutex<KernelMap>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Spectrum of the unnormalized kernel weights on the padded box.
fn kernel_spectrum<S: Scalar>(grid: &GridSpec, alpha: f64) -> Arc<Vec<Complex<S>>> {
    let key = (
        TypeId::of::<S>(),
        grid.dimension(),
        grid.points_per_axis(),
        grid.half_length().to_bits(),
        alpha.to_bits(),
    );
    if let Some(hit) = kernel_cache()
        .lock()
        .expect("kernel cache poisoned")
        .get(&key)
    {
        return hit
            .downcast_ref::<Arc<Vec<Complex<S>>>>()
            .expect("keyed by type")
            .clone();
    }
    let built = Arc::new(build_kernel_spectrum::<S>(grid, alpha));
    let mut cache = kernel_cache().lock().expect("kernel cache poisoned");
    if cache.len() >= KERNEL_CACHE_LIMIT && !cache.contains_key(&key) {
        cache.clear();
    }
    let entry = cache.entry(key).or_insert_with(|| Arc::new(built));
    entry
        .downcast_ref::<Arc<Vec<Complex<S>>>>()
        .expect("keyed by type")
        .clone()
}

fn build_kernel_spectrum<S: Scalar>(grid: &GridSpec, alpha: f64) -> Vec<Complex<S>> {
    let dim = grid.dimension();
    let n = grid.points_per_axis();
    let m = 2 * n;
    let h = grid.spacing();
    let total = m.pow(dim as u32);
    let mut data = vec![Complex::new(S::zero(), S::zero()); total];
    // 1D weights are reused along each axis for the separable index map
    let signed = |i: usize| -> i64 {
        let i = i as i64;
        if i < n as i64 {
            i
        } else {
            i - m as i64
        }
    };
    for (flat, slot) in data.iter_mut().enumerate() {
        let mut rest = flat;
        let mut offset = [0i64; MAX_DIMENSION];
        for axis in (0..dim).rev() {
            offset[axis] = signed(rest % m);
            rest /= m;
        }
        *slot = Complex::new(
            S::lit(cell_weight(dim, alpha, h, &offset[..dim])),
            S::zero(),
        );
    }
    fft::fft_cube(&mut data, dim, m, false);
    data
}

/// Linear convolution of `f` with the kernel of `spec`, restricted to the box.
pub fn riesz_convolve<S: Scalar>(f: &FieldOf<S>, spec: &RieszKernelSpec) -> FieldOf<S> {
    let grid = *f.grid();
    assert_eq!(
        grid.dimension(),
        spec.dimension,
        "kernel and grid dimension differ"
    );
    let dim = grid.dimension();
    let n = grid.points_per_axis();
    let m = 2 * n;
    let kernel = kernel_spectrum::<S>(&grid, spec.alpha);
    let mut padded = vec![Complex::new(S::zero(), S::zero()); m.pow(dim as u32)];
    let padded_index = |idx: &[usize; MAX_DIMENSION]| -> usize {
        idx[..dim].iter().fold(0, |acc, &i| acc * m + i)
    };
    for (flat, &v) in f.values().iter().enumerate() {
        padded[padded_index(&grid.unravel(flat))] = Complex::new(v, S::zero());
    }
    fft::fft_cube(&mut padded, dim, m, false);
    for (c, k) in padded.iter_mut().zip(kernel.iter()) {
        *c = *c * *k;
    }
    fft::ifft_cube_normalized(&mut padded, dim, m);
    let mut out: Vec<S> = (0..grid.len())
        .map(|flat| padded[padded_index(&grid.unravel(flat))].re)
        .collect();
    if spec.normalized {
        let a = S::lit(spec.prefactor());
        for v in out.iter_mut() {
            *v = *v * a;
        }
    }
    FieldOf::from_raw(grid, out)
}

/// `B(f, g) = ∫ (K * f) g`.
pub fn cross_riesz_energy<S: Scalar>(
    f: &FieldOf<S>,
    g: &FieldOf<S>,
    spec: &RieszKernelSpec,
) -> Result<S> {
    ensure_same_grid(f, g)?;
    let conv = riesz_convolve(f, spec);
    Ok(integrate(&conv.mul(g)?))
}

/// `D(u) = ∫ (K * |u|^p) |u|^p`.
pub fn riesz_energy<S: Scalar>(u: &FieldOf<S>, p: f64, spec: &RieszKernelSpec) -> S {
    let pp = S::lit(p);
    let f = u.map(|v| abs_pow(v, pp));
    let conv = riesz_convolve(&f, spec);
    integrate(&conv.mul(&f).expect("same grid"))
}
