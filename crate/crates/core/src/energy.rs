//! Action functionals, their H¹ gradients, and Nehari projections.
//!
//! Three functionals share the quadratic part `½‖u‖²_{H¹}`:
//!
//! * Choquard: `J(u) = ½‖u‖² − (1/2p) ∫(K * |u|^p)|u|^p`
//! * local NLS: `Φ_q(u) = ½‖u‖² − (1/q) ∫|u|^q`
//! * NLS with nonlocal coefficient: `Ψ_{p,μ}(u) = ½‖u‖² − (μ/2p)(∫|u|^p)²`
//!
//! Residuals are H¹ gradients, `u − (−Δ+1)^{-1} N(u)`, so that
//! `h1_inner(residual, v)` is the directional derivative of the discrete
//! functional.

use serde::Serialize;

use crate::error::{Error, Result, SignPart};
use crate::grid::{h1_inner, helmholtz_solve, integrate, negative_part, positive_part, FieldOf};
use crate::riesz::{cross_riesz_energy, riesz_convolve, RieszKernelSpec};
use crate::scalar::{abs_pow, signed_pow, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChoquardParams {
    pub dimension: usize,
    pub p: f64,
    pub alpha: f64,
    pub normalized: bool,
}

impl ChoquardParams {
    /// Validates `p >= 2`, `0 < α < N` and `(N−2)/(N+α) < 1/p < N/(N+α)`.
    pub fn new(dimension: usize, p: f64, alpha: f64, normalized: bool) -> Result<Self> {
        if !(1..=3).contains(&dimension) {
            return Err(Error::InvalidParams(format!(
                "dimension {dimension} not in 1..=3"
            )));
        }
        RieszKernelSpec::new(dimension, alpha, normalized)?;
        if !(p >= 2.0) || !p.is_finite() {
            return Err(Error::InvalidParams(format!("p = {p} must be at least 2")));
        }
        let n = dimension as f64;
        let inv = 1.0 / p;
        if !((n - 2.0) / (n + alpha) < inv && inv < n / (n + alpha)) {
            return Err(Error::InvalidParams(format!(
                "p = {p} outside the existence range for N = {dimension}, alpha = {alpha}"
            )));
        }
        Ok(Self {
            dimension,
            p,
            alpha,
            normalized,
        })
    }

    pub fn kernel(&self) -> RieszKernelSpec {
        RieszKernelSpec::new(self.dimension, self.alpha, self.normalized)
            .expect("validated on construction")
    }
}

/// Scales of a nodal Nehari projection `t u⁺ + s u⁻` and the Nehari
/// pairings of the recombined field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodalScales {
    pub t: f64,
    pub s: f64,
    pub defect_plus: f64,
    pub defect_minus: f64,
}

/// Everything a descent step needs from one Choquard evaluation.
#[derive(Debug, Clone)]
pub struct ChoquardEval<S> {
    pub action: S,
    pub h1: S,
    pub riesz: S,
    pub residual: FieldOf<S>,
}

fn check_grid<S: Scalar>(u: &FieldOf<S>, params: &ChoquardParams) {
    assert_eq!(
        u.grid().dimension(),
        params.dimension,
        "field and params dimension differ"
    );
}

/// `J`, `‖u‖²_{H¹}`, `D(u)` and the H¹ residual in one pass.
pub fn evaluate_choquard<S: Scalar>(u: &FieldOf<S>, params: &ChoquardParams) -> ChoquardEval<S> {
    check_grid(u, params);
    let p = S::lit(params.p);
    let f = u.map(|v| abs_pow(v, p));
    let potential = riesz_convolve(&f, &params.kernel());
    let riesz = integrate(&potential.mul(&f).expect("same grid"));
    let h1 = h1_inner(u, u).expect("same grid");
    let nonlinear = potential
        .zip_map(u, |k, v| k * signed_pow(v, p))
        .expect("same grid");
    let residual = u.sub(&helmholtz_solve(&nonlinear)).expect("same grid");
    let half = S::lit(0.5);
    ChoquardEval {
        action: half * h1 - riesz / (S::lit(2.0) * p),
        h1,
        riesz,
        residual,
    }
}

pub fn action_choquard<S: Scalar>(u: &FieldOf<S>, params: &ChoquardParams) -> S {
    check_grid(u, params);
    let p = S::lit(params.p);
    let riesz = crate::riesz::riesz_energy(u, params.p, &params.kernel());
    S::lit(0.5) * h1_inner(u, u).expect("same grid") - riesz / (S::lit(2.0) * p)
}

pub fn residual_choquard<S: Scalar>(u: &FieldOf<S>, params: &ChoquardParams) -> FieldOf<S> {
    evaluate_choquard(u, params).residual
}

pub fn action_nls<S: Scalar>(u: &FieldOf<S>, q: f64) -> S {
    let qs = S::lit(q);
    let local = integrate(&u.map(|v| abs_pow(v, qs)));
    S::lit(0.5) * h1_inner(u, u).expect("same grid") - local / qs
}

pub fn residual_nls<S: Scalar>(u: &FieldOf<S>, q: f64) -> FieldOf<S> {
    let qs = S::lit(q);
    let nonlinear = u.map(|v| signed_pow(v, qs));
    u.sub(&helmholtz_solve(&nonlinear)).expect("same grid")
}

pub fn action_nls_n<S: Scalar>(u: &FieldOf<S>, p: f64, mu: f64) -> S {
    let ps = S::lit(p);
    let mass = integrate(&u.map(|v| abs_pow(v, ps)));
    S::lit(0.5) * h1_inner(u, u).expect("same grid") - S::lit(mu) * mass * mass / (S::lit(2.0) * ps)
}

pub fn residual_nls_n<S: Scalar>(u: &FieldOf<S>, p: f64, mu: f64) -> FieldOf<S> {
    let ps = S::lit(p);
    let coefficient = S::lit(mu) * integrate(&u.map(|v| abs_pow(v, ps)));
    let nonlinear = u.map(|v| coefficient * signed_pow(v, ps));
    u.sub(&helmholtz_solve(&nonlinear)).expect("same grid")
}

/// Nehari pairing `⟨J′(u), u⟩ = ‖u‖²_{H¹} − D(u)`.
pub fn nehari_defect<S: Scalar>(u: &FieldOf<S>, params: &ChoquardParams) -> S {
    check_grid(u, params);
    h1_inner(u, u).expect("same grid") - crate::riesz::riesz_energy(u, params.p, &params.kernel())
}

/// The `t > 0` maximizing `J(tu)`: `t^{2p−2} = ‖u‖²_{H¹} / D(u)`.
pub fn nehari_scale<S: Scalar>(u: &FieldOf<S>, params: &ChoquardParams) -> Result<S> {
    check_grid(u, params);
    if u.is_zero() {
        return Err(Error::ZeroField);
    }
    let h1 = h1_inner(u, u)?;
    let riesz = crate::riesz::riesz_energy(u, params.p, &params.kernel());
    Ok((h1 / riesz).powf(S::lit(1.0 / (2.0 * params.p - 2.0))))
}

/// The `t > 0` maximizing `Ψ_{p,μ}(tu)`: `t^{2p−2} = ‖u‖²_{H¹} / (μ(∫|u|^p)²)`.
pub fn nehari_scale_psi<S: Scalar>(u: &FieldOf<S>, p: f64, mu: f64) -> Result<S> {
    if u.is_zero() {
        return Err(Error::ZeroField);
    }
    if !(p > 1.0) {
        return Err(Error::InvalidParams(format!(
            "Nehari scaling for Psi needs p > 1, got {p}"
        )));
    }
    let ps = S::lit(p);
    let mass = integrate(&u.map(|v| abs_pow(v, ps)));
    let h1 = h1_inner(u, u)?;
    Ok((h1 / (S::lit(mu) * mass * mass)).powf(S::lit(1.0 / (2.0 * p - 2.0))))
}

/// Discrete Gram data of the sign parts. On a grid `h1(u⁺, u⁻)` is small but
/// not zero (spectral derivatives are nonlocal), so it is carried along to
/// keep `J(t u⁺ + s u⁻)` exact.
#[derive(Debug, Clone, Copy)]
struct NodalGram {
    a_plus: f64,
    a_minus: f64,
    a_cross: f64,
    b_plus: f64,
    b_minus: f64,
    b_cross: f64,
    p: f64,
}

impl NodalGram {
    fn new<S: Scalar>(u: &FieldOf<S>, params: &ChoquardParams) -> Result<Self> {
        let plus = positive_part(u);
        let minus = negative_part(u);
        if plus.is_zero() {
            return Err(Error::SignPartVanished(SignPart::Positive));
        }
        if minus.is_zero() {
            return Err(Error::SignPartVanished(SignPart::Negative));
        }
        let ps = S::lit(params.p);
        let fp = plus.map(|v| abs_pow(v, ps));
        let fm = minus.map(|v| abs_pow(v, ps));
        let kernel = params.kernel();
        let conv_plus = riesz_convolve(&fp, &kernel);
        let b_plus = integrate(&conv_plus.mul(&fp)?).as_f64();
        let b_cross = integrate(&conv_plus.mul(&fm)?).as_f64();
        let b_minus = cross_riesz_energy(&fm, &fm, &kernel)?.as_f64();
        Ok(Self {
            a_plus: h1_inner(&plus, &plus)?.as_f64(),
            a_minus: h1_inner(&minus, &minus)?.as_f64(),
            a_cross: h1_inner(&plus, &minus)?.as_f64(),
            b_plus,
            b_minus,
            b_cross,
            p: params.p,
        })
    }

    /// `J(t u⁺ + s u⁻)`.
    fn action(&self, t: f64, s: f64) -> f64 {
        let p = self.p;
        let (tp, sp) = (t.powf(p), s.powf(p));
        0.5 * (t * t * self.a_plus + 2.0 * t * s * self.a_cross + s * s * self.a_minus)
            - (tp * tp * self.b_plus + 2.0 * tp * sp * self.b_cross + sp * sp * self.b_minus)
                / (2.0 * p)
    }

    /// `(⟨J′(w), t u⁺⟩, ⟨J′(w), s u⁻⟩)` for `w = t u⁺ + s u⁻`.
    fn defects(&self, t: f64, s: f64) -> (f64, f64) {
        let p = self.p;
        let (tp, sp) = (t.powf(p), s.powf(p));
        (
            t * t * self.a_plus + t * s * self.a_cross
                - tp * tp * self.b_plus
                - tp * sp * self.b_cross,
            s * s * self.a_minus + t * s * self.a_cross
                - sp * sp * self.b_minus
                - tp * sp * self.b_cross,
        )
    }

    /// Maximizer of the decoupled problem: `t^{2p−2} = a⁺/B⁺⁺`.
    fn decoupled(&self) -> (f64, f64) {
        let e = 1.0 / (2.0 * self.p - 2.0);
        (
            (self.a_plus / self.b_plus).powf(e),
            (self.a_minus / self.b_minus).powf(e),
        )
    }
}

const NEWTON_MAX_ITERATIONS: usize = 100;
const NEWTON_MAX_HALVINGS: usize = 60;

/// Maximizes `F(τ, σ) = J(τ^{1/p} u⁺ + σ^{1/p} u⁻)` by damped Newton in
/// `(τ, σ)`, starting from the decoupled maximizer. Converged when both
/// pairings are below `tol` relative to `‖w‖²_{H¹}`.
pub fn nodal_scales<S: Scalar>(
    u: &FieldOf<S>,
    params: &ChoquardParams,
    tol: f64,
) -> Result<NodalScales> {
    check_grid(u, params);
    let gram = NodalGram::new(u, params)?;
    maximize_nodal(&gram, tol)
}

fn maximize_nodal(g: &NodalGram, tol: f64) -> Result<NodalScales> {
    let p = g.p;
    let r = 1.0 / p;
    let (t0, s0) = g.decoupled();
    let (mut tau, mut sigma) = (t0.powf(p), s0.powf(p));
    let objective = |tau: f64, sigma: f64| g.action(tau.powf(r), sigma.powf(r));
    for _ in 0..NEWTON_MAX_ITERATIONS {
        let (t, s) = (tau.powf(r), sigma.powf(r));
        let (dp, dm) = g.defects(t, s);
        let scale = t * t * g.a_plus + 2.0 * t * s * g.a_cross + s * s * g.a_minus;
        if dp.abs().max(dm.abs()) <= tol * scale {
            return Ok(NodalScales {
                t,
                s,
                defect_plus: dp,
                defect_minus: dm,
            });
        }
        // gradient: τ F_τ = ⟨J′(w), t u⁺⟩ / p
        let grad = [dp / (p * tau), dm / (p * sigma)];
        let c = g.a_cross;
        let h_tt = r * (2.0 * r - 1.0) * g.a_plus * tau.powf(2.0 * r - 2.0)
            + r * (r - 1.0) * c * tau.powf(r - 2.0) * sigma.powf(r)
            - r * g.b_plus;
        let h_ss = r * (2.0 * r - 1.0) * g.a_minus * sigma.powf(2.0 * r - 2.0)
            + r * (r - 1.0) * c * tau.powf(r) * sigma.powf(r - 2.0)
            - r * g.b_minus;
        let h_ts = r * r * c * tau.powf(r - 1.0) * sigma.powf(r - 1.0) - r * g.b_cross;
        let det = h_tt * h_ss - h_ts * h_ts;
        let mut step = if h_tt < 0.0 && det > 0.0 {
            [
                -(h_ss * grad[0] - h_ts * grad[1]) / det,
                -(-h_ts * grad[0] + h_tt * grad[1]) / det,
            ]
        } else {
            // not locally concave: scaled gradient ascent
            [grad[0] * tau * tau, grad[1] * sigma * sigma]
        };
        let current = objective(tau, sigma);
        // below the rounding level of F the increase test is meaningless
        let predicted = grad[0] * step[0] + grad[1] * step[1];
        if predicted.abs() <= 64.0 * f64::EPSILON * current.abs()
            && tau + step[0] > 0.0
            && sigma + step[1] > 0.0
        {
            tau += step[0];
            sigma += step[1];
            continue;
        }
        let mut accepted = false;
        for _ in 0..NEWTON_MAX_HALVINGS {
            let (nt, ns) = (tau + step[0], sigma + step[1]);
            if nt > 0.0 && ns > 0.0 && objective(nt, ns) >= current {
                tau = nt;
                sigma = ns;
                accepted = true;
                break;
            }
            step = [0.5 * step[0], 0.5 * step[1]];
        }
        if !accepted {
            return Err(Error::NewtonFailed {
                iterations: NEWTON_MAX_ITERATIONS,
            });
        }
    }
    Err(Error::NewtonFailed {
        iterations: NEWTON_MAX_ITERATIONS,
    })
}

/// `(⟨J′(u), u⁺⟩, ⟨J′(u), u⁻⟩)`; a vanishing sign part contributes `0`.
pub fn nehari_nodal_defects<S: Scalar>(u: &FieldOf<S>, params: &ChoquardParams) -> (S, S) {
    check_grid(u, params);
    let ps = S::lit(params.p);
    let f = u.map(|v| abs_pow(v, ps));
    let potential = riesz_convolve(&f, &params.kernel());
    let pairing = |part: FieldOf<S>| -> S {
        if part.is_zero() {
            return S::zero();
        }
        let fp = part.map(|v| abs_pow(v, ps));
        let nonlocal = integrate(&potential.mul(&fp).expect("same grid"));
        h1_inner(u, &part).expect("same grid") - nonlocal
    };
    (pairing(positive_part(u)), pairing(negative_part(u)))
}

/// `t u⁺ + s u⁻`.
pub fn recombine<S: Scalar>(u: &FieldOf<S>, t: f64, s: f64) -> FieldOf<S> {
    let (t, s) = (S::lit(t), S::lit(s));
    u.map(|v| if v > S::zero() { t * v } else { s * v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn params() -> ChoquardParams {
        ChoquardParams::new(1, 2.0, 0.5, true).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(ChoquardParams::new(1, 2.0, 1.0, true).is_err());
        assert!(ChoquardParams::new(1, 1.5, 0.5, true).is_err());
        assert!(ChoquardParams::new(4, 2.0, 0.5, true).is_err());
        // 1/p must stay above (N−2)/(N+α)
        assert!(ChoquardParams::new(3, 5.0, 1.0, true).is_err());
        assert!(ChoquardParams::new(3, 2.0, 1.0, true).is_ok());
        assert!(ChoquardParams::new(1, 3.0, 0.98, false).is_ok());
    }

    #[test]
    fn zero_field_has_zero_action_and_residual() {
        let g = GridSpec::new(1, 10.0, 64).unwrap();
        let z = FieldOf::<f64>::zeros(g);
        assert_eq!(action_choquard(&z, &params()), 0.0);
        assert!(residual_choquard(&z, &params()).is_zero());
        assert_eq!(action_nls(&z, 4.0), 0.0);
        assert!(residual_nls(&z, 4.0).is_zero());
        assert_eq!(action_nls_n(&z, 3.0, 1.0), 0.0);
        assert!(residual_nls_n(&z, 3.0, 1.0).is_zero());
        assert!(matches!(nehari_scale(&z, &params()), Err(Error::ZeroField)));
    }

    #[test]
    fn nehari_scale_lands_on_manifold() {
        let g = GridSpec::new(1, 12.0, 256).unwrap();
        let u = FieldOf::<f64>::from_fn(g, |x| 0.7 / (0.8 * x[0]).cosh());
        let t = nehari_scale(&u, &params()).unwrap();
        let w = u.scaled(t);
        let h1 = h1_inner(&w, &w).unwrap();
        assert!(nehari_defect(&w, &params()).abs() <= 1e-9 * h1);
        assert!((nehari_scale(&w, &params()).unwrap() - 1.0).abs() < 1e-10);
        let lam = 2.5;
        let tl = nehari_scale(&u.scaled(lam), &params()).unwrap();
        assert!((tl - t / lam).abs() < 1e-10 * t);
    }

    #[test]
    fn decoupled_nodal_scales_for_mirror_field() {
        let g = GridSpec::new(1, 16.0, 256).unwrap();
        let u = FieldOf::<f64>::from_fn(g, |x| {
            (-(x[0] + 3.0).powi(2)).exp() - (-(x[0] - 3.0).powi(2)).exp()
        });
        let sc = nodal_scales(&u, &params(), 1e-12).unwrap();
        assert!((sc.t - sc.s).abs() < 1e-10 * sc.t);
        let w = recombine(&u, sc.t, sc.s);
        let (dp, dm) = nehari_nodal_defects(&w, &params());
        let h1 = h1_inner(&w, &w).unwrap();
        assert!(dp.abs() < 1e-10 * h1 && dm.abs() < 1e-10 * h1);
    }

    #[test]
    fn one_signed_field_has_zero_negative_defect() {
        let g = GridSpec::new(1, 12.0, 128).unwrap();
        let u = FieldOf::<f64>::from_fn(g, |x| (-(x[0] * x[0])).exp());
        let (dp, dm) = nehari_nodal_defects(&u, &params());
        assert_eq!(dm, 0.0);
        assert!((dp - nehari_defect(&u, &params())).abs() < 1e-12);
        assert!(matches!(
            nodal_scales(&u, &params(), 1e-10),
            Err(Error::SignPartVanished(SignPart::Negative))
        ));
    }
}
