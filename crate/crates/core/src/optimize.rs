//! Scalar minimization used by the fitting and search routines.

/// Brent's method on `[a, b]`; returns `(x, f(x))` at the located minimum.
pub(crate) fn brent_minimize(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    tol: f64,
    max_iterations: usize,
) -> (f64, f64) {
    const GOLD: f64 = 0.381_966_011_250_105_1;
    let mut x = a + GOLD * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    for _ in 0..max_iterations {
        let m = 0.5 * (a + b);
        let tol1 = tol * x.abs() + 1e-15;
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            // parabola through x, w, v
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            } else {
                q = -q;
            }
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = GOLD * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = f(u);
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            (v, fv, w, fw, x, fx) = (w, fw, x, fx, u, fu);
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                (v, fv, w, fw) = (w, fw, u, fu);
            } else if fu <= fv || v == x || v == w {
                (v, fv) = (u, fu);
            }
        }
    }
    (x, fx)
}

/// Root of a continuous `f` with a sign change on `[a, b]`, by bisection.
pub(crate) fn bisect_root(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    iterations: usize,
) -> f64 {
    let mut fa = f(a);
    for _ in 0..iterations {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_quadratic_and_nonsmooth_minima() {
        let (x, fx) = brent_minimize(|x| (x - 1.3).powi(2) + 2.0, -5.0, 5.0, 1e-10, 200);
        assert!((x - 1.3).abs() < 1e-8 && (fx - 2.0).abs() < 1e-14);
        let (x, _) = brent_minimize(|x| (x - 0.2).abs(), -1.0, 3.0, 1e-10, 200);
        assert!((x - 0.2).abs() < 1e-8);
        let (x, _) = brent_minimize(|x| x.cos(), 2.0, 4.0, 1e-12, 200);
        assert!((x - std::f64::consts::PI).abs() < 1e-7);
    }

    #[test]
    fn bisection_root() {
        let r = bisect_root(|x| x * x - 2.0, 0.0, 2.0, 80);
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }
}
