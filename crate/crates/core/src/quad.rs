//! Numerical integration: Gauss-Legendre and Gauss-Hermite rules (cached
//! per node count) and an adaptive Gauss-Legendre integrator.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights of a quadrature rule.
#[derive(Debug)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

type Cache = Mutex<HashMap<usize, Arc<Rule>>>;

fn legendre_cache() -> &'static Cache {
    static C: OnceLock<Cache> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

fn hermite_cache() -> &'static Cache {
    static C: OnceLock<Cache> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

fn cached(cache: &'static Cache, n: usize, build: fn(usize) -> Rule) -> Arc<Rule> {
    if let Some(rule) = cache.lock().expect("quadrature cache poisoned").get(&n) {
        return Arc::clone(rule);
    }
    let rule = Arc::new(build(n));
    cache
        .lock()
        .expect("quadrature cache poisoned")
        .entry(n)
        .or_insert(rule)
        .clone()
}

/// Gauss-Legendre rule on [-1, 1] with `n` nodes.
pub fn gauss_legendre(n: usize) -> Arc<Rule> {
    cached(legendre_cache(), n, build_legendre)
}

fn build_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * pp * pp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Rule { nodes, weights }
}

/// Gauss-Hermite rule for the standard normal weight: returns nodes `s_i`
/// and weights `w_i` with Σ w_i f(s_i) ≈ ∫ φ(s) f(s) ds.
pub fn gauss_hermite_normal(n: usize) -> Arc<Rule> {
    cached(hermite_cache(), n, build_hermite_normal)
}

fn build_hermite_normal(n: usize) -> Rule {
    // Golub-Welsch: the nodes are the eigenvalues of the Jacobi matrix of
    // the probabilists' Hermite recurrence, the weights the squared first
    // components of its normalized eigenvectors.
    assert!(n >= 1);
    let mut jacobi = nalgebra::DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let off = (k as f64).sqrt();
        jacobi[(k - 1, k)] = off;
        jacobi[(k, k - 1)] = off;
    }
    let eig = nalgebra::SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    // Enforce the exact symmetry of the rule.
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let node = 0.5 * (pairs[j].0 - pairs[i].0);
        let weight = 0.5 * (pairs[i].1 + pairs[j].1);
        pairs[i] = (-node, weight);
        pairs[j] = (node, weight);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1 / total).collect(),
    }
}

/// Integrates `f` over [a, b] with an `n`-point Gauss-Legendre rule.
pub fn integrate_gl<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    let rule = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let mut sum = 0.0;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        sum += w * f(mid + half * x);
    }
    sum * half
}

/// Result of an integration that refines until successive estimates agree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub nodes: usize,
}

/// Gauss-Legendre on [a, b] starting at `start` nodes and doubling until two
/// successive estimates differ by less than `tol`, or `max_nodes` is hit.
/// Returns `Err` carrying the last estimate when the tolerance was not reached.
pub fn integrate_gl_doubling<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    start: usize,
    max_nodes: usize,
    tol: f64,
) -> Result<Estimate, Estimate> {
    let mut n = start;
    let mut prev = integrate_gl(&mut f, a, b, n);
    loop {
        let next_n = n * 2;
        if next_n > max_nodes {
            return Err(Estimate {
                value: prev,
                error: f64::NAN,
                nodes: n,
            });
        }
        let next = integrate_gl(&mut f, a, b, next_n);
        let err = (next - prev).abs();
        if err < tol {
            return Ok(Estimate {
                value: next,
                error: err,
                nodes: next_n,
            });
        }
        prev = next;
        n = next_n;
    }
}

/// Adaptive integration: each panel is accepted when a 10-point rule on the
/// whole panel agrees with the same rule on its two halves.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    const ORDER: usize = 10;
    const MAX_DEPTH: u32 = 48;
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let left = integrate_gl(f, a, m, ORDER);
        let right = integrate_gl(f, m, b, ORDER);
        let split = left + right;
        if depth >= MAX_DEPTH || (split - whole).abs() <= tol {
            return split;
        }
        recurse(f, a, m, left, 0.5 * tol, depth + 1) + recurse(f, m, b, right, 0.5 * tol, depth + 1)
    }
    if a == b {
        return 0.0;
    }
    let whole = integrate_gl(&f, a, b, ORDER);
    recurse(&f, a, b, whole, tol, 0)
}
