//! Adaptive Gauss–Legendre quadrature on finite intervals plus a power-law
//! substitution for semi-infinite tails.

use std::sync::OnceLock;

const ORDER: usize = 10;
const MAX_DEPTH: u32 = 48;

fn rule() -> &'static ([f64; ORDER], [f64; ORDER]) {
    static RULE: OnceLock<([f64; ORDER], [f64; ORDER])> = OnceLock::new();
    RULE.get_or_init(gauss_legendre)
}

/// Nodes and weights of the `ORDER`-point Gauss–Legendre rule on [-1, 1].
fn gauss_legendre() -> ([f64; ORDER], [f64; ORDER]) {
    let n = ORDER;
    let mut x = [0.0; ORDER];
    let mut w = [0.0; ORDER];
    for i in 0..n {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, t);
            let dt = p / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, t);
        x[i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    (x, w)
}

fn legendre(n: usize, t: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, t);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, dp)
}

/// Fixed-order Gauss–Legendre estimate on [a, b].
pub fn gl<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (x, w) = rule();
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let mut s = 0.0;
    for i in 0..ORDER {
        s += w[i] * f(c + r * x[i]);
    }
    s * r
}

/// Adaptive bisection on top of [`gl`], comparing each panel with its two halves.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let whole = gl(f, a, b);
    recurse(f, a, b, whole, rel_tol, abs_tol, 0)
}

fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    whole: f64,
    rel_tol: f64,
    abs_tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let left = gl(f, a, m);
    let right = gl(f, m, b);
    let refined = left + right;
    let err = (refined - whole).abs();
    if err <= abs_tol.max(rel_tol * refined.abs()) || depth >= MAX_DEPTH {
        return refined;
    }
    recurse(f, a, m, left, rel_tol, 0.5 * abs_tol, depth + 1)
        + recurse(f, m, b, right, rel_tol, 0.5 * abs_tol, depth + 1)
}

/// Integrates over consecutive pieces `[pts[i], pts[i+1]]` so that kinks at the
/// break points never sit inside a panel.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: &F, pts: &[f64], rel_tol: f64, abs_tol: f64) -> f64 {
    pts.windows(2)
        .map(|w| integrate(f, w[0], w[1], rel_tol, abs_tol))
        .sum()
}

/// ∫_r^∞ g(z) dz for an integrand decaying like z^{-(1+p)}, p > 0.
///
/// Uses z = r s^{-1/p}, which maps the tail onto (0, 1] with a bounded integrand.
pub fn integrate_tail<F: Fn(f64) -> f64>(g: &F, r: f64, p: f64, rel_tol: f64, abs_tol: f64) -> f64 {
    assert!(r > 0.0 && p > 0.0);
    let q = 1.0 / p;
    let h = |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        let z = r * s.powf(-q);
        g(z) * r * q * s.powf(-q - 1.0)
    };
    integrate(&h, 0.0, 1.0, rel_tol, abs_tol)
}
