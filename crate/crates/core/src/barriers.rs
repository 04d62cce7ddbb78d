//! Explicit barrier functions and numerical certification of their
//! supersolution inequalities on a grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::geometry::{Domain, GEOM_TOL};
use crate::nonlocal_op::{ApplyPlan, GridFunction, NonlocalOperator};

/// Exponent of ζ: the literal ε, or β₀.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZetaExponent {
    #[default]
    Epsilon,
    Beta0,
}

impl ZetaExponent {
    pub fn value(self, epsilon: f64, beta0: f64) -> f64 {
        match self {
            ZetaExponent::Epsilon => epsilon,
            ZetaExponent::Beta0 => beta0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BarrierSpec {
    /// `(ε + d)^β` on Ω̄, optionally capped at `(ε + d₀)^β`.
    Psi {
        beta: f64,
        epsilon: f64,
        cap_d0: Option<f64>,
    },
    /// `scale · 1_Ω̄`.
    Chi { scale: f64 },
    /// `min{(ε+δ̄−|y|)^e, (ε+d−|y|)^e}` on `{d ≥ |y|}`.
    Zeta {
        epsilon: f64,
        delta_bar: f64,
        y: f64,
        exponent: f64,
    },
    /// `C₀ (ε+|y|)^{β₀}` on the collar `{−|y| ≤ d < |y|}`.
    Eta {
        c0: f64,
        beta0: f64,
        epsilon: f64,
        y: f64,
    },
    /// `η + A·m(|y|)·ζ`.
    W {
        c0: f64,
        beta0: f64,
        epsilon: f64,
        y: f64,
        delta_bar: f64,
        zeta_exponent: ZetaExponent,
        a: f64,
        m_at_y: f64,
    },
    /// `A·m₀(|y|)·1_{Σ₂} + C₀ (ε+|y|)^{β₀}·1_{Σ₃}`.
    Z {
        a: f64,
        m0_at_y: f64,
        c0: f64,
        beta0: f64,
        epsilon: f64,
        y: f64,
        delta_bar: f64,
    },
}

/// `m(t) = m_f(t) + t^α`.
pub fn modulus_m(mf_at_t: f64, t: f64, alpha: f64) -> f64 {
    mf_at_t + t.abs().powf(alpha)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        config(format!(
            "barrier parameter {name} must be positive, got {v}"
        ))
    }
}

impl BarrierSpec {
    /// Range checks; `sigma` tightens the ψ exponent bound when known.
    pub fn validate(&self, sigma: Option<f64>) -> Result<()> {
        match *self {
            BarrierSpec::Psi {
                beta,
                epsilon,
                cap_d0,
            } => {
                let top = sigma.map_or(1.0, |s| (2.0 * s).min(1.0));
                if !(beta > 0.0 && beta < top) {
                    return config(format!("psi exponent beta = {beta} must lie in (0, {top})"));
                }
                positive("epsilon", epsilon)?;
                if let Some(d0) = cap_d0 {
                    positive("d0", d0)?;
                }
            }
            BarrierSpec::Chi { scale } => positive("scale", scale)?,
            BarrierSpec::Zeta {
                epsilon,
                delta_bar,
                y,
                exponent,
            } => {
                positive("epsilon", epsilon)?;
                positive("delta_bar", delta_bar)?;
                positive("exponent", exponent)?;
                if y.abs() >= delta_bar {
                    return config("zeta needs |y| < delta_bar");
                }
            }
            BarrierSpec::Eta {
                c0, beta0, epsilon, ..
            } => {
                positive("c0", c0)?;
                positive("beta0", beta0)?;
                positive("epsilon", epsilon)?;
            }
            BarrierSpec::W {
                c0,
                beta0,
                epsilon,
                y,
                delta_bar,
                a,
                m_at_y,
                ..
            } => {
                BarrierSpec::Eta {
                    c0,
                    beta0,
                    epsilon,
                    y,
                }
                .validate(sigma)?;
                positive("a", a)?;
                positive("m(|y|)", m_at_y)?;
                if y.abs() > delta_bar / 2.0 + GEOM_TOL {
                    return config("W needs |y| ≤ delta_bar / 2");
                }
            }
            BarrierSpec::Z {
                a,
                m0_at_y,
                c0,
                beta0,
                epsilon,
                y,
                delta_bar,
            } => {
                positive("a", a)?;
                positive("m0(|y|)", m0_at_y)?;
                BarrierSpec::Eta {
                    c0,
                    beta0,
                    epsilon,
                    y,
                }
                .validate(sigma)?;
                positive("delta_bar", delta_bar)?;
            }
        }
        Ok(())
    }
}

/// `{x : d(x) ≥ |y|}`, the closure of Ω minus its `|y|`-strip.
pub fn in_o_bar(domain: &Domain, y: f64, x: f64) -> bool {
    domain.signed_distance(x) >= y.abs() - GEOM_TOL
}

/// The collar `{−|y| ≤ d < |y|}`.
pub fn in_collar(domain: &Domain, y: f64, x: f64) -> bool {
    let d = domain.signed_distance(x);
    d >= -y.abs() - GEOM_TOL && d < y.abs() - GEOM_TOL
}

/// Pointwise barrier value.
pub fn eval_barrier(spec: &BarrierSpec, domain: &Domain, x: f64) -> Result<f64> {
    spec.validate(None)?;
    Ok(eval_unchecked(spec, domain, x))
}

fn eval_unchecked(spec: &BarrierSpec, domain: &Domain, x: f64) -> f64 {
    let d = domain.signed_distance(x);
    match *spec {
        BarrierSpec::Psi {
            beta,
            epsilon,
            cap_d0,
        } => {
            if !domain.contains_closure(x) {
                return 0.0;
            }
            let v = (epsilon + d.max(0.0)).powf(beta);
            cap_d0.map_or(v, |d0| v.min((epsilon + d0).powf(beta)))
        }
        BarrierSpec::Chi { scale } => {
            if domain.contains_closure(x) {
                scale
            } else {
                0.0
            }
        }
        BarrierSpec::Zeta {
            epsilon,
            delta_bar,
            y,
            exponent,
        } => {
            if !in_o_bar(domain, y, x) {
                return 0.0;
            }
            let a = (epsilon + delta_bar - y.abs()).powf(exponent);
            let b = (epsilon + (d - y.abs()).max(0.0)).powf(exponent);
            a.min(b)
        }
        BarrierSpec::Eta {
            c0,
            beta0,
            epsilon,
            y,
        } => {
            if in_collar(domain, y, x) {
                c0 * (epsilon + y.abs()).powf(beta0)
            } else {
                0.0
            }
        }
        BarrierSpec::W {
            c0,
            beta0,
            epsilon,
            y,
            delta_bar,
            zeta_exponent,
            a,
            m_at_y,
        } => {
            let eta = BarrierSpec::Eta {
                c0,
                beta0,
                epsilon,
                y,
            };
            let zeta = BarrierSpec::Zeta {
                epsilon,
                delta_bar,
                y,
                exponent: zeta_exponent.value(epsilon, beta0),
            };
            eval_unchecked(&eta, domain, x) + a * m_at_y * eval_unchecked(&zeta, domain, x)
        }
        BarrierSpec::Z {
            a,
            m0_at_y,
            c0,
            beta0,
            epsilon,
            y,
            ..
        } => {
            let s = SigmaSets {
                domain: domain.clone(),
                y,
                delta_bar: f64::INFINITY,
            };
            if s.sigma2(x) {
                a * m0_at_y
            } else if s.sigma1(x) {
                c0 * (epsilon + y.abs()).powf(beta0)
            } else {
                0.0
            }
        }
    }
}

/// The four shifted-domain regions used for interior moduli.
#[derive(Clone, Debug)]
pub struct SigmaSets {
    domain: Domain,
    y: f64,
    delta_bar: f64,
}

impl SigmaSets {
    pub fn new(domain: &Domain, y: f64, delta_bar: f64) -> Result<Self> {
        positive("delta_bar", delta_bar)?;
        if y.abs() > delta_bar / 8.0 + GEOM_TOL {
            return config(format!(
                "shift |y| = {} exceeds delta_bar / 8 = {}",
                y.abs(),
                delta_bar / 8.0
            ));
        }
        Ok(Self {
            domain: domain.clone(),
            y,
            delta_bar,
        })
    }

    /// closure of `(Ω − y) ∪ Ω`
    pub fn sigma1(&self, x: f64) -> bool {
        self.domain.contains_closure(x) || self.domain.contains_closure(x + self.y)
    }

    /// `Ω ∩ (Ω − y)`
    pub fn sigma2(&self, x: f64) -> bool {
        self.domain.contains(x) && self.domain.contains(x + self.y)
    }

    pub fn sigma3(&self, x: f64) -> bool {
        self.sigma1(x) && !self.sigma2(x)
    }

    /// Points at depth beyond `δ̄/2`, together with their `−y` translates.
    pub fn sigma4(&self, x: f64) -> bool {
        let r = self.delta_bar / 2.0;
        self.domain.signed_distance(x) > r + GEOM_TOL
            || self.domain.signed_distance(x + self.y) > r + GEOM_TOL
    }

    /// Closure of Σ₄.
    pub fn sigma4_closure(&self, x: f64) -> bool {
        let r = self.delta_bar / 2.0;
        self.domain.signed_distance(x) >= r - GEOM_TOL
            || self.domain.signed_distance(x + self.y) >= r - GEOM_TOL
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SupersolutionReport {
    pub nodes_tested: usize,
    /// min over tested nodes of `−I[b] − rhs`.
    pub min_margin: f64,
    pub argmin_x: f64,
    /// For ψ: min over the strip of `−I[ψ]·(ε+d)^{2σ−β}`.
    pub c_star: Option<f64>,
    pub pass: bool,
}

/// Evaluates `−I[b] − rhs(x)` at every Ω̄ node satisfying `strip`.
pub fn check_supersolution(
    spec: &BarrierSpec,
    plan: &ApplyPlan,
    rhs: &(dyn Fn(f64) -> f64 + Sync),
    strip: &(dyn Fn(f64) -> bool + Sync),
) -> Result<SupersolutionReport> {
    let sigma = plan.spec().sigma();
    spec.validate(sigma)?;
    let grid = plan.grid();
    let domain = grid.domain();
    let nodes: Vec<usize> = grid
        .closure_nodes()
        .into_iter()
        .filter(|&i| strip(grid.x(i)))
        .collect();
    if nodes.is_empty() {
        return config("supersolution check on an empty strip");
    }
    let b = GridFunction::from_fn(grid, |x| eval_unchecked(spec, domain, x));
    let ib = plan.apply_nodes(&b, &nodes);
    let mut min_margin = f64::INFINITY;
    let mut argmin_x = f64::NAN;
    let mut c_star: Option<f64> = None;
    for (&i, v) in nodes.iter().zip(&ib) {
        let x = grid.x(i);
        let m = -v - rhs(x);
        if m < min_margin {
            min_margin = m;
            argmin_x = x;
        }
        if let (BarrierSpec::Psi { beta, epsilon, .. }, Some(s)) = (spec, sigma) {
            let c = -v * (epsilon + grid.distance(i)).powf(2.0 * s - beta);
            c_star = Some(c_star.map_or(c, |p: f64| p.min(c)));
        }
    }
    Ok(SupersolutionReport {
        nodes_tested: nodes.len(),
        min_margin,
        argmin_x,
        c_star,
        pass: min_margin >= 0.0,
    })
}

/// ψ certification for one ε on the strip `{d ≤ δ̄}` with zero right-hand side.
pub fn psi_c_star(plan: &ApplyPlan, beta: f64, delta_bar: f64) -> Result<f64> {
    let epsilon = plan
        .spec()
        .epsilon()
        .ok_or_else(|| Error::Config("psi needs a kernel with epsilon".into()))?;
    let spec = BarrierSpec::Psi {
        beta,
        epsilon,
        cap_d0: None,
    };
    let domain = plan.grid().domain().clone();
    let strip = move |x: f64| domain.signed_distance(x) <= delta_bar + GEOM_TOL;
    let rep = check_supersolution(&spec, plan, &|_| 0.0, &strip)?;
    Ok(rep.c_star.unwrap_or(rep.min_margin))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BetaFit {
    pub beta0: f64,
    pub delta_bar: f64,
    /// Common constant: the smallest per-ε value.
    pub c_star: f64,
    pub per_epsilon: Vec<(f64, f64)>,
}

/// Exponent grid `{0.05, 0.10, …}` strictly below `min{1, 2σ}`.
pub fn beta_grid(sigma: f64) -> Vec<f64> {
    let top = (2.0 * sigma).min(1.0);
    (1..)
        .map(|k| (5 * k) as f64 / 100.0)
        .take_while(|b| *b < top - 1e-9)
        .collect()
}

/// Strip widths: tenths of the largest interior depth.
pub fn strip_grid(domain: &Domain) -> Vec<f64> {
    let depth = domain
        .intervals()
        .iter()
        .map(|(a, b)| 0.5 * (b - a))
        .fold(0.0, f64::max);
    (1..=10).map(|k| depth * k as f64 / 10.0).collect()
}

/// Largest β (then widest strip) for which ψ_β is a strict supersolution for
/// every plan; plans share σ and domain and differ in ε.
pub fn fit_beta0(plans: &[ApplyPlan]) -> Result<BetaFit> {
    let first = plans
        .first()
        .ok_or_else(|| Error::Config("fit_beta0 needs at least one plan".into()))?;
    let sigma = first
        .spec()
        .sigma()
        .ok_or_else(|| Error::Config("fit_beta0 needs a fractional-type kernel".into()))?;
    for p in plans {
        match p.spec().epsilon() {
            Some(e) if e > 0.0 && e < 1.0 => {}
            _ => return config("fit_beta0 needs every epsilon in (0, 1)"),
        }
    }
    let widths = strip_grid(first.grid().domain());
    let mut best_fail = f64::NEG_INFINITY;
    for beta in beta_grid(sigma).into_iter().rev() {
        for &w in widths.iter().rev() {
            let cs: Vec<f64> = plans
                .par_iter()
                .map(|p| psi_c_star(p, beta, w))
                .collect::<Result<_>>()?;
            let c = cs.iter().copied().fold(f64::INFINITY, f64::min);
            if c > 0.0 {
                let per_epsilon = plans
                    .iter()
                    .map(|p| p.spec().epsilon().unwrap())
                    .zip(cs)
                    .collect();
                return Ok(BetaFit {
                    beta0: beta,
                    delta_bar: w,
                    c_star: c,
                    per_epsilon,
                });
            }
            best_fail = best_fail.max(c);
        }
    }
    Err(Error::DegenerateFit(format!(
        "no (beta, strip) pair certifies psi; best margin {best_fail:.3e}"
    )))
}

/// Doubles `A` from 1 until `build(A)` certifies on the given strip.
pub fn doubling_search(
    plan: &ApplyPlan,
    build: &dyn Fn(f64) -> BarrierSpec,
    rhs: f64,
    strip: &(dyn Fn(f64) -> bool + Sync),
    max_doublings: u32,
) -> Result<(f64, SupersolutionReport)> {
    let mut a = 1.0;
    let mut last = None;
    for _ in 0..=max_doublings {
        let rep = check_supersolution(&build(a), plan, &|_| rhs, strip)?;
        if rep.pass {
            return Ok((a, rep));
        }
        last = Some(rep.min_margin);
        a *= 2.0;
    }
    Err(Error::DegenerateFit(format!(
        "no A up to 2^{max_doublings} certifies the barrier; last margin {:.3e}",
        last.unwrap_or(f64::NAN)
    )))
}

/// Certifies `−I[W] ≥ m_f(|y|)` on `{d ≥ |y|}` by doubling `A`.
#[allow(clippy::too_many_arguments)]
pub fn certify_w(
    plan: &ApplyPlan,
    c0: f64,
    beta0: f64,
    y: f64,
    delta_bar: f64,
    zeta_exponent: ZetaExponent,
    mf_at_y: f64,
    alpha: f64,
) -> Result<(f64, SupersolutionReport)> {
    let epsilon = plan
        .spec()
        .epsilon()
        .ok_or_else(|| Error::Config("W needs a kernel with epsilon".into()))?;
    let m_at_y = modulus_m(mf_at_y, y, alpha);
    let domain = plan.grid().domain().clone();
    let strip = move |x: f64| in_o_bar(&domain, y, x);
    let build = |a| BarrierSpec::W {
        c0,
        beta0,
        epsilon,
        y,
        delta_bar,
        zeta_exponent,
        a,
        m_at_y,
    };
    doubling_search(plan, &build, mf_at_y, &strip, 60)
}

/// Certifies `−I[Z] ≥ m_f(|y|)` on the closure of Σ₄ by doubling `A`.
#[allow(clippy::too_many_arguments)]
pub fn certify_z(
    plan: &ApplyPlan,
    c0: f64,
    beta0: f64,
    y: f64,
    delta_bar: f64,
    m0_at_y: f64,
    mf_at_y: f64,
) -> Result<(f64, SupersolutionReport)> {
    let epsilon = plan
        .spec()
        .epsilon()
        .ok_or_else(|| Error::Config("Z needs a kernel with epsilon".into()))?;
    let sets = SigmaSets::new(plan.grid().domain(), y, delta_bar)?;
    let strip = move |x: f64| sets.sigma4_closure(x);
    let build = |a| BarrierSpec::Z {
        a,
        m0_at_y,
        c0,
        beta0,
        epsilon,
        y,
        delta_bar,
    };
    doubling_search(plan, &build, mf_at_y, &strip, 60)
}
