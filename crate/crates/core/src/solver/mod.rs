//! Fixed-point, direct and time-stepping solvers for the discrete Dirichlet problem.

mod direct;
mod parabolic;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::nonlocal_op::{ApplyPlan, GridFunction, IsaacsFamily, NonlocalOperator};

pub use direct::{assemble_system, solve_direct, DenseSystem};
pub use parabolic::{solve_parabolic, ParabolicConfig, ParabolicRun, TimeScheme};

/// Safety factor on the step bound used when no step is given.
pub const DEFAULT_STEP_FRACTION: f64 = 0.9;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardConfig {
    /// Damping `a`; defaults to `0.9 · min{1/ν₀, 1/‖K‖₁}`.
    pub step: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            step: None,
            tol: 1e-9,
            max_iter: 200_000,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub step: f64,
    /// Sup-norm of `I[u] + f` over the equation nodes, one entry per iterate.
    pub residual_history: Vec<f64>,
    /// Geometric mean of successive increment ratios over the whole run.
    pub measured_factor: f64,
    /// Geometric mean over the last quarter of the run (at most 50 ratios).
    pub asymptotic_factor: f64,
    /// `1 − a·ν₀`; for Isaacs families `ν₀` is the smallest member gap.
    pub theoretical_factor: f64,
    pub final_residual: f64,
    pub converged: bool,
    pub wall_time: f64,
}

/// Step bound and dominance gap for the contraction map of a linear plan.
fn linear_bounds(plan: &ApplyPlan) -> Result<(f64, f64)> {
    if plan.spec().is_singular() {
        return config("Picard iteration needs an integrable kernel; use the direct solver");
    }
    let nu0 = plan.nu0();
    Ok(((1.0 / nu0).min(1.0 / plan.l1_norm()), nu0))
}

fn family_bounds(family: &IsaacsFamily) -> Result<(f64, f64)> {
    let mut bound = f64::INFINITY;
    let mut nu0 = f64::INFINITY;
    for p in family.members().iter().flatten() {
        let (b, n) = linear_bounds(p)?;
        bound = bound.min(b);
        nu0 = nu0.min(n);
    }
    Ok((bound, nu0))
}

fn resolve_step(cfg: &PicardConfig, bound: f64) -> Result<f64> {
    match cfg.step {
        None => Ok(DEFAULT_STEP_FRACTION * bound),
        Some(a) if a > 0.0 && a < bound => Ok(a),
        Some(a) => config(format!("Picard step {a} must lie in (0, {bound})")),
    }
}

/// One application of `T_a(u) = u + a (I[u] + f)` on the equation nodes.
pub fn picard_step<O: NonlocalOperator + ?Sized>(
    op: &O,
    u: &GridFunction,
    f: &GridFunction,
    a: f64,
) -> GridFunction {
    let nodes = op.unknowns();
    let iu = op.apply_nodes(u, nodes);
    let mut out = u.clone();
    let v = out.values_mut();
    for (&i, r) in nodes.iter().zip(iu) {
        v[i] += a * (r + f.get(i));
    }
    out
}

/// Validated step for a linear plan (errors if the bound is violated).
pub fn picard_step_size(plan: &ApplyPlan, cfg: &PicardConfig) -> Result<f64> {
    let (bound, _) = linear_bounds(plan)?;
    resolve_step(cfg, bound)
}

fn iterate<O: NonlocalOperator + ?Sized>(
    op: &O,
    f: &GridFunction,
    a: f64,
    nu0: f64,
    cfg: &PicardConfig,
) -> (GridFunction, SolveReport) {
    let start = Instant::now();
    let nodes = op.unknowns();
    let mut u = GridFunction::zeros(op.grid());
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    loop {
        let iu = op.apply_nodes(&u, nodes);
        let res: Vec<f64> = nodes.iter().zip(&iu).map(|(&i, r)| r + f.get(i)).collect();
        let norm = res.iter().map(|r| r.abs()).fold(0.0, f64::max);
        history.push(norm);
        if norm <= cfg.tol {
            converged = true;
            break;
        }
        if iterations == cfg.max_iter {
            break;
        }
        let v = u.values_mut();
        for (&i, r) in nodes.iter().zip(res) {
            v[i] += a * r;
        }
        iterations += 1;
    }
    // the increment at step n is a times the residual before it
    let ratios: Vec<f64> = history
        .windows(2)
        .map(|w| w[1] / w[0])
        .filter(|r| r.is_finite() && *r > 0.0)
        .collect();
    let geo = |rs: &[f64]| {
        if rs.is_empty() {
            0.0
        } else {
            (rs.iter().map(|r| r.ln()).sum::<f64>() / rs.len() as f64).exp()
        }
    };
    let tail = (ratios.len() / 4).clamp(1.min(ratios.len()), 50);
    let report = SolveReport {
        iterations,
        step: a,
        measured_factor: geo(&ratios),
        asymptotic_factor: geo(&ratios[ratios.len() - tail..]),
        theoretical_factor: 1.0 - a * nu0,
        final_residual: *history.last().unwrap(),
        residual_history: history,
        converged,
        wall_time: start.elapsed().as_secs_f64(),
    };
    (u, report)
}

/// Picard iteration from `u⁰ ≡ 0` until the residual drops below `tol`.
/// A run that hits `max_iter` is returned with `converged == false`.
pub fn solve_picard(
    plan: &ApplyPlan,
    f: &GridFunction,
    cfg: &PicardConfig,
) -> Result<(GridFunction, SolveReport)> {
    let (bound, nu0) = linear_bounds(plan)?;
    let a = resolve_step(cfg, bound)?;
    Ok(iterate(plan, f, a, nu0, cfg))
}

/// Picard iteration with the Isaacs operator in place of the linear one.
pub fn solve_isaacs(
    family: &IsaacsFamily,
    f: &GridFunction,
    cfg: &PicardConfig,
) -> Result<(GridFunction, SolveReport)> {
    let (bound, nu0) = family_bounds(family)?;
    let a = resolve_step(cfg, bound)?;
    Ok(iterate(family, f, a, nu0, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, Domain, Grid};
    use crate::kernel::{KernelSpec, RadialProfile};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn plan(eps: f64, h: f64) -> (Arc<Grid>, ApplyPlan) {
        let g = Arc::new(build_grid(&Domain::symmetric(1.0).unwrap(), h, 2.0).unwrap());
        let p = ApplyPlan::natural(KernelSpec::zero_order(0.5, eps).unwrap(), g.clone()).unwrap();
        (g, p)
    }

    #[test]
    fn zero_data_is_a_fixed_point() {
        let (g, p) = plan(0.5, 0.05);
        let z = GridFunction::zeros(&g);
        let (u, rep) = solve_picard(&p, &z, &PicardConfig::default()).unwrap();
        assert!(rep.iterations <= 1 && rep.converged);
        assert_eq!(u.sup_closure(), 0.0);
        let a = picard_step_size(&p, &PicardConfig::default()).unwrap();
        assert_eq!(picard_step(&p, &z, &z, a).sup_closure(), 0.0);
    }

    #[test]
    fn step_bound_enforced() {
        let (_, p) = plan(0.5, 0.05);
        let bad = PicardConfig {
            step: Some(1.0 / p.l1_norm()),
            ..Default::default()
        };
        assert!(matches!(
            picard_step_size(&p, &bad),
            Err(crate::Error::Config(_))
        ));
        let g = p.grid().clone();
        let s = ApplyPlan::natural(KernelSpec::singular(0.5).unwrap(), g.clone()).unwrap();
        assert!(solve_picard(&s, &GridFunction::zeros(&g), &PicardConfig::default()).is_err());
    }

    #[test]
    fn one_unknown_toy() {
        // a single unknown whose neighbours are all held at zero
        let (g, p) = plan(0.5, 0.05);
        let i = g.index_of(0.0).unwrap();
        let f = 1.7;
        let a = picard_step_size(&p, &PicardConfig::default()).unwrap();
        // fixed point of u ↦ u + a(−(l1 − w0) u + f) on one node with every neighbour zero
        let mut u = 0.0;
        for _ in 0..10_000 {
            u += a * (-(p.l1_norm() - p.weights().weights[0]) * u + f);
        }
        let expect = f / (p.l1_norm() - p.weights().weights[0]);
        assert!((u - expect).abs() < 1e-12);
        assert!((p.diag() - (p.l1_norm() - p.weights().weights[0])).abs() < 1e-10 * p.l1_norm());
        // the plan sees the same scalar map for a point mass
        let mut v = GridFunction::zeros(&g);
        v.values_mut()[i] = expect;
        let iv = p.apply(&v, i).unwrap();
        assert!((iv + f).abs() < 1e-10);
    }

    #[test]
    fn picard_matches_direct_and_bound() {
        let (g, p) = plan(0.5, 0.05);
        let f = GridFunction::on_closure(&g, |_| 1.0);
        let cfg = PicardConfig {
            tol: 1e-11,
            ..Default::default()
        };
        let (u, rep) = solve_picard(&p, &f, &cfg).unwrap();
        assert!(rep.converged);
        assert!(rep.measured_factor > 0.0 && rep.measured_factor < 1.0);
        assert!(rep.measured_factor <= rep.theoretical_factor + 0.05);
        assert!(rep.asymptotic_factor <= rep.theoretical_factor + 1e-3);
        let d = solve_direct(&p, &f).unwrap();
        let diff = u.sub(&d).sup_closure();
        assert!(diff <= 10.0 * cfg.tol / p.nu0(), "{diff}");
        for &i in &g.closure_nodes() {
            assert!(u.get(i) > 0.0 && u.get(i) <= 2.0 / 3.0);
        }
    }

    #[test]
    fn singleton_isaacs_matches_linear() {
        let (g, p) = plan(0.4, 0.05);
        let fam = IsaacsFamily::new(
            0.5,
            0.4,
            &[vec![RadialProfile::constant(1.0).unwrap()]],
            1.0,
            1.0,
            g.clone(),
        )
        .unwrap();
        let f = GridFunction::on_closure(&g, |x| 1.0 + x);
        let (u1, _) = solve_picard(&p, &f, &PicardConfig::default()).unwrap();
        let (u2, rep) = solve_isaacs(&fam, &f, &PicardConfig::default()).unwrap();
        assert!(rep.converged);
        assert!(u1.sub(&u2).sup_closure() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn contraction_inequality(a in prop::collection::vec(-3.0f64..3.0, 5),
                                  b in prop::collection::vec(-3.0f64..3.0, 5)) {
            let (g, p) = plan(0.3, 0.05);
            let mk = |c: &Vec<f64>| GridFunction::on_closure(&g, |x| c.iter().enumerate()
                .map(|(k, v)| v * ((k as f64 + 1.0) * 2.1 * x).cos()).sum());
            let (u, v) = (mk(&a), mk(&b));
            let f = GridFunction::on_closure(&g, |x| x.sin());
            let step = picard_step_size(&p, &PicardConfig::default()).unwrap();
            let tu = picard_step(&p, &u, &f, step);
            let tv = picard_step(&p, &v, &f, step);
            let lhs = tu.sub(&tv).sup_closure();
            let rhs = (1.0 - step * p.nu0()) * u.sub(&v).sup_closure();
            prop_assert!(lhs <= rhs + 1e-12);
            // both forms of the step coincide
            let iu = p.apply_all(&u);
            for &i in &g.closure_nodes() {
                prop_assert!((tu.get(i) - u.get(i) - step * (iu[i] + f.get(i))).abs() < 1e-12);
            }
        }

        #[test]
        fn maximum_principle(c in prop::collection::vec(0.0f64..2.0, 4)) {
            let (g, p) = plan(0.3, 0.05);
            let f = GridFunction::on_closure(&g, |x| c.iter().enumerate()
                .map(|(k, v)| v * (1.0 + ((k as f64 + 1.0) * x).sin())).sum());
            let u = solve_direct(&p, &f).unwrap();
            let neg = solve_direct(&p, &f.scaled(-1.0)).unwrap();
            for &i in &g.closure_nodes() {
                prop_assert!(u.get(i) >= -1e-14);
                prop_assert!(neg.get(i) <= 1e-14);
            }
        }
    }
}
