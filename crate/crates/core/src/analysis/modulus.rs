use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::nonlocal_op::GridFunction;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModulusEstimate {
    pub t: Vec<f64>,
    pub m: Vec<f64>,
}

impl ModulusEstimate {
    pub fn at(&self, t: f64) -> Option<f64> {
        self.t
            .iter()
            .position(|s| (s - t).abs() <= 1e-12 * t.max(1.0))
            .map(|k| self.m[k])
    }
}

/// `m(t) = max |u_i − u_j|` over pairs of selected Ω̄ nodes with `|x_i − x_j| ≤ t`.
pub fn modulus_of_continuity(
    u: &GridFunction,
    restriction: &dyn Fn(f64) -> bool,
    ts: &[f64],
) -> ModulusEstimate {
    let g = u.grid();
    let n = g.len();
    let keep: Vec<bool> = (0..n)
        .map(|i| g.in_closure(i) && restriction(g.x(i)))
        .collect();
    // per-offset maxima, then a running max over offsets
    let mut by_offset = vec![0.0f64; n];
    for i in 0..n {
        if !keep[i] {
            continue;
        }
        for j in i + 1..n {
            if keep[j] {
                let d = (u.get(i) - u.get(j)).abs();
                if d > by_offset[j - i] {
                    by_offset[j - i] = d;
                }
            }
        }
    }
    for k in 1..n {
        by_offset[k] = by_offset[k].max(by_offset[k - 1]);
    }
    let m = ts
        .iter()
        .map(|&t| {
            let k = ((t / g.h()) + 1e-9).floor() as usize;
            if n == 0 {
                0.0
            } else {
                by_offset[k.min(n - 1)]
            }
        })
        .collect();
    ModulusEstimate { t: ts.to_vec(), m }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Envelope {
    pub t: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub members: Vec<ModulusEstimate>,
    pub envelope: Vec<f64>,
    /// `m̄(t_min) / m̄(t_max)`.
    pub small_t_ratio: f64,
}

/// Pointwise maximum of the moduli of a family indexed by ε.
pub fn equicontinuity_envelope(
    family: &[(f64, GridFunction)],
    restriction: &dyn Fn(f64) -> bool,
    ts: &[f64],
) -> Result<Envelope> {
    let eps: Vec<f64> = family.iter().map(|(e, _)| *e).collect();
    let (lo, hi) = eps
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &e| (a.min(e), b.max(e)));
    if family.len() < 3 || hi < 4.0 * lo {
        return config("equicontinuity needs at least 3 epsilons spanning a factor of 4");
    }
    if ts.is_empty() || ts.windows(2).any(|w| w[1] <= w[0]) {
        return config("t list must be nonempty and increasing");
    }
    let members: Vec<ModulusEstimate> = family
        .iter()
        .map(|(_, u)| modulus_of_continuity(u, restriction, ts))
        .collect();
    let envelope: Vec<f64> = (0..ts.len())
        .map(|k| members.iter().map(|m| m.m[k]).fold(0.0, f64::max))
        .collect();
    let small_t_ratio = envelope[0] / envelope[ts.len() - 1];
    Ok(Envelope {
        t: ts.to_vec(),
        epsilons: eps,
        members,
        envelope,
        small_t_ratio,
    })
}

/// Candidate exponents for the boundary jump fit.
pub const BETA_GRID: [f64; 19] = [
    0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85,
    0.9, 0.95,
];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JumpFit {
    pub c0: f64,
    pub beta0: f64,
    /// RMS of the log-deviation from the least-squares power law.
    pub residual: f64,
    /// `(d(x), ε, |u_ε(x)|)`.
    pub data: Vec<(f64, f64, f64)>,
}

/// Fits `|u_ε(x)| ≤ C₀ (ε + d(x))^{β₀}` on `{d ≤ d₀}` over the whole family.
///
/// For each β on [`BETA_GRID`] the prefactor is fitted in log space; the β with
/// the smallest residual wins (ties go to the larger β), and `C₀` is then the
/// smallest constant that majorizes every data point.
pub fn boundary_jump_fit(family: &[(f64, GridFunction)], d0: f64) -> Result<JumpFit> {
    let mut data = Vec::new();
    for (eps, u) in family {
        let g = u.grid();
        let strip: Vec<usize> = g
            .closure_nodes()
            .into_iter()
            .filter(|&i| g.distance(i) <= d0 + 1e-12)
            .collect();
        if strip.is_empty() {
            return config(format!("jump strip d ≤ {d0} is empty for epsilon {eps}"));
        }
        for i in strip {
            if u.get(i).abs() > 1e-12 {
                data.push((g.distance(i), *eps, u.get(i).abs()));
            }
        }
    }
    if data.is_empty() {
        return Err(Error::DegenerateFit(
            "all strip values are below 1e-12".into(),
        ));
    }
    let n = data.len() as f64;
    let mut best: Option<(f64, f64)> = None;
    for &beta in BETA_GRID.iter().rev() {
        let devs: Vec<f64> = data
            .iter()
            .map(|(d, e, v)| v.ln() - beta * (e + d).ln())
            .collect();
        let mean = devs.iter().sum::<f64>() / n;
        let res = (devs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        if best.is_none_or(|(_, r)| res < r - 1e-12) {
            best = Some((beta, res));
        }
    }
    let (beta0, residual) = best.unwrap();
    let c0 = data
        .iter()
        .map(|(d, e, v)| v / (e + d).powf(beta0))
        .fold(0.0, f64::max);
    Ok(JumpFit {
        c0,
        beta0,
        residual,
        data,
    })
}
