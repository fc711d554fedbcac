//! Root finding and unconstrained minimization helpers.

use crate::error::{Error, Result};

/// Outcome of a one-dimensional root search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Solves `f(x) = target` for a nondecreasing `f` on `[lo, hi]` using Newton
/// steps with `df`, falling back to bisection whenever a step leaves the
/// current bracket. Converges when `|f(x) - target| < tol`.
pub fn newton_bracketed<F, D>(
    f: F,
    df: D,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    x0: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Root>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut x = x0.clamp(lo, hi);
    let mut last = f64::NAN;
    for it in 1..=max_iter {
        let fx = f(x) - target;
        last = fx;
        if fx.abs() < tol {
            return Ok(Root { x, residual: fx, iterations: it });
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            return Ok(Root { x, residual: fx, iterations: it });
        }
        let d = df(x);
        let step = if d.is_finite() && d > 0.0 { x - fx / d } else { f64::NAN };
        x = if step.is_finite() && step > lo && step < hi {
            step
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::numerical(
        "bracketed Newton",
        format!("no convergence after {max_iter} iterations (bracket [{lo}, {hi}], residual {last})"),
    ))
}

/// Bisection on a continuous function with a sign change on `[lo, hi]`.
/// Stops when the bracket is narrower than `xtol`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, xtol: f64, max_iter: usize) -> Result<Root> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(Root { x: lo, residual: 0.0, iterations: 0 });
    }
    if fhi == 0.0 {
        return Ok(Root { x: hi, residual: 0.0, iterations: 0 });
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::numerical(
            "bisection",
            format!("no sign change on [{lo}, {hi}]: f = {flo}, {fhi}"),
        ));
    }
    for it in 1..=max_iter {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || (hi - lo) < xtol {
            return Ok(Root { x: mid, residual: fm, iterations: it });
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    Ok(Root { x: mid, residual: f(mid), iterations: max_iter })
}

/// Result of a BFGS minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Central-difference gradient.
pub fn numeric_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let h = 1e-6 * x[i].abs().max(1e-3);
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

/// Quasi-Newton (BFGS) minimization with a backtracking Armijo line search.
/// Stops when the gradient infinity-norm drops below `gtol`.
pub fn minimize_bfgs<F, G>(f: F, grad: G, x0: &[f64], gtol: f64, max_iter: usize) -> Minimum
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut g = grad(&x);
    let mut hinv = identity(n);
    let mut iterations = 0;
    while iterations < max_iter {
        if inf_norm(&g) < gtol {
            return Minimum { grad_norm: inf_norm(&g), x, value: fx, iterations, converged: true };
        }
        iterations += 1;
        let mut dir: Vec<f64> = (0..n).map(|i| -dot(&hinv[i], &g)).collect();
        let mut slope = dot(&dir, &g);
        if slope >= 0.0 || !slope.is_finite() {
            hinv = identity(n);
            dir = g.iter().map(|v| -v).collect();
            slope = dot(&dir, &g);
        }
        let mut t = 1.0;
        let mut xn = vec![0.0; n];
        let mut fn_ = f64::INFINITY;
        for _ in 0..60 {
            for i in 0..n {
                xn[i] = x[i] + t * dir[i];
            }
            fn_ = f(&xn);
            if fn_.is_finite() && fn_ <= fx + 1e-4 * t * slope {
                break;
            }
            t *= 0.5;
        }
        if !fn_.is_finite() || fn_ > fx {
            break;
        }
        let gn = grad(&xn);
        let s: Vec<f64> = (0..n).map(|i| xn[i] - x[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| gn[i] - g[i]).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            let hy: Vec<f64> = (0..n).map(|i| dot(&hinv[i], &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    hinv[i][j] += ((sy + yhy) * s[i] * s[j]) / (sy * sy) - (hy[i] * s[j] + s[i] * hy[j]) / sy;
                }
            }
        }
        let stalled = (fx - fn_).abs() <= f64::EPSILON * fx.abs() && inf_norm(&s) <= f64::EPSILON;
        x = xn;
        fx = fn_;
        g = gn;
        if stalled {
            break;
        }
    }
    let grad_norm = inf_norm(&g);
    Minimum { converged: grad_norm < gtol, x, value: fx, grad_norm, iterations }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_finds_cube_root() {
        let r = newton_bracketed(|x| x * x * x, |x| 3.0 * x * x, 2.0, 0.0, 2.0, 1.0, 1e-14, 200).unwrap();
        assert!((r.x - 2f64.cbrt()).abs() < 1e-13);
    }

    #[test]
    fn newton_survives_flat_derivative() {
        // derivative zero at the start point forces a bisection step
        let r = newton_bracketed(|x| x * x * x, |x| 3.0 * x * x, 0.5, -1.0, 1.0, 0.0, 1e-14, 200).unwrap();
        assert!((r.x - 0.5f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn bisect_requires_sign_change() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 100).is_err());
        let r = bisect(|x| x - 0.3, 0.0, 1.0, 1e-14, 200).unwrap();
        assert!((r.x - 0.3).abs() < 1e-13);
    }

    #[test]
    fn bfgs_minimizes_rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let g = |x: &[f64]| {
            vec![
                -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]),
                200.0 * (x[1] - x[0] * x[0]),
            ]
        };
        let m = minimize_bfgs(f, g, &[-1.2, 1.0], 1e-8, 1000);
        assert!(m.converged, "{m:?}");
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn numeric_gradient_matches_analytic() {
        let f = |x: &[f64]| x[0].powi(3) + x[0] * x[1].sin();
        let g = numeric_gradient(&f, &[1.3, 0.4]);
        assert!((g[0] - (3.0 * 1.69 + 0.4f64.sin())).abs() < 1e-7);
        assert!((g[1] - 1.3 * 0.4f64.cos()).abs() < 1e-7);
    }
}
