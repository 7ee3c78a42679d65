//! Gauss-Legendre quadrature: reference rules, composite rules over panel
//! decompositions, and the graded panel layouts used against integrable
//! endpoint singularities.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
///
/// Newton iteration on the Legendre polynomial `P_n`, seeded with the
/// Chebyshev-like estimate for the k-th root; accurate to a few ulp for
/// the orders used here (`n <= 96`).
fn gauss_legendre_reference(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for k in 0..m {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Recurrence for P_n(x) and P_n'(x).
            let mut p0 = 1.0;
            let mut p1 = x;
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[k] = -x;
        nodes[n - 1 - k] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[k] = w;
        weights[n - 1 - k] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

type Rule = Arc<(Vec<f64>, Vec<f64>)>;

fn rule_cache() -> &'static Mutex<HashMap<usize, Rule>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Cached `n`-point reference rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Rule {
    let mut cache = rule_cache().lock().unwrap();
    cache
        .entry(n)
        .or_insert_with(|| Arc::new(gauss_legendre_reference(n)))
        .clone()
}

/// Composite Gauss-Legendre rule: `order` points on each panel
/// `[bounds[i], bounds[i+1]]`.  Bounds must be strictly increasing.
pub fn composite(bounds: &[f64], order: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = gauss_legendre(order);
    let (ref xs, ref ws) = *rule;
    let mut nodes = Vec::with_capacity(order * (bounds.len() - 1));
    let mut weights = Vec::with_capacity(order * (bounds.len() - 1));
    for p in bounds.windows(2) {
        let (a, b) = (p[0], p[1]);
        debug_assert!(b > a, "panel bounds must increase");
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        for (x, w) in xs.iter().zip(ws) {
            nodes.push(c + h * x);
            weights.push(h * w);
        }
    }
    (nodes, weights)
}

/// Integrate `f` with a composite rule.
pub fn integrate(bounds: &[f64], order: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let (xs, ws) = composite(bounds, order);
    xs.iter().zip(&ws).map(|(&x, &w)| w * f(x)).sum()
}

/// Panel bounds on `[lo, hi]` that start with a geometrically growing
/// sequence of widths (`first_width`, doubling) and continue with panels
/// of width `bulk_width` once the grading has played out.  Used where the
/// integrand has a boundary layer or an integrable singularity at `lo`.
pub fn graded_bounds(lo: f64, hi: f64, first_width: f64, bulk_width: f64) -> Vec<f64> {
    debug_assert!(hi > lo);
    let mut bounds = vec![lo];
    let mut h = first_width.max((hi - lo) * 1e-12);
    let mut t = lo + h;
    while t < hi && h < bulk_width {
        bounds.push(t);
        h *= 2.0;
        t += h;
    }
    let mut t = *bounds.last().unwrap() + bulk_width;
    while t < hi - 1e-12 * (1.0 + hi.abs()) {
        bounds.push(t);
        t += bulk_width;
    }
    bounds.push(hi);
    bounds
}

/// Panel bounds for radial integrals of Maxwellian-weighted functions on
/// `[0, hi]`: a few graded panels through the origin, then unit panels.
pub fn radial_bounds(hi: f64) -> Vec<f64> {
    let mut bounds: Vec<f64> = [0.0, 1e-3, 1e-2, 0.1, 0.5]
        .iter()
        .copied()
        .filter(|&b| b < hi)
        .collect();
    let mut t = 1.0;
    while t < hi - 1e-12 {
        bounds.push(t);
        t += 1.0;
    }
    bounds.push(hi);
    bounds
}
