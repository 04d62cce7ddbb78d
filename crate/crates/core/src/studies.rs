//! Config-driven drivers behind the CLI: single solves, barrier checks and
//! the numerical studies, each producing tables and pass/fail checks.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, ComparisonOutcome, FractionalReference, ReferenceMode};
use crate::barriers::{self, BetaFit};
use crate::config::{BarrierBlock, BarrierMode, RunConfig, SolveMethod, StudyBlock, StudyKind};
use crate::error::{config, Error, Result};
use crate::geometry::{build_grid, Grid, GEOM_TOL};
use crate::kernel::{KernelSpec, RadialProfile};
use crate::nonlocal_op::{
    residual, ApplyPlan, ExtremalSign, GridFunction, IsaacsFamily, NonlocalOperator,
};
use crate::record::Table;
use crate::solver::{self, ParabolicConfig, SolveReport, TimeScheme};

/// Caps the global rayon pool when `NONLOC_THREADS` is set.
pub fn configure_threads() {
    if let Some(n) = std::env::var("NONLOC_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
    {
        // a pool may already exist in tests; that is fine
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            relation: Relation::AtMost,
            pass: value <= limit,
        }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            relation: Relation::AtLeast,
            pass: value >= limit,
        }
    }

    pub fn line(&self) -> String {
        let rel = match self.relation {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
        };
        let verdict = if self.pass { "pass" } else { "FAIL" };
        format!(
            "{verdict} {}: {:.6e} {rel} {:.6e}",
            self.name, self.value, self.limit
        )
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Outcome {
    pub name: String,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub tables: Vec<Table>,
    pub report: serde_json::Value,
    /// A solve stopped at `max_iter`.
    pub nonconverged: bool,
}

impl Outcome {
    fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            checks: vec![],
            tables: vec![],
            report: serde_json::Value::Null,
            nonconverged: false,
        }
    }

    pub fn pass(&self) -> bool {
        !self.nonconverged && self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn summary(&self) -> Vec<String> {
        self.checks.iter().map(Check::line).collect()
    }
}

fn json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn grid(cfg: &RunConfig, h: f64) -> Result<Arc<Grid>> {
    Ok(Arc::new(build_grid(
        &cfg.domain,
        h,
        cfg.grid.truncation_radius,
    )?))
}

fn rhs(cfg: &RunConfig, g: &Arc<Grid>) -> GridFunction {
    GridFunction::on_closure(g, |x| cfg.rhs.eval(x))
}

fn sigma(cfg: &RunConfig) -> Result<f64> {
    cfg.kernel
        .sigma()
        .ok_or_else(|| Error::Config("this study needs a kernel with sigma".into()))
}

fn study(cfg: &RunConfig) -> Result<&StudyBlock> {
    cfg.study
        .as_ref()
        .ok_or_else(|| Error::Config("missing [study] block".into()))
}

fn member_h(cfg: &RunConfig, ratio: Option<f64>, eps: f64) -> f64 {
    ratio.map_or(cfg.grid.h_target, |r| r * eps)
}

/// Zero-order problem with `f` from the config for one ε.
fn zero_order_solve(cfg: &RunConfig, eps: f64, h: f64) -> Result<(ApplyPlan, GridFunction)> {
    let g = grid(cfg, h)?;
    let plan = ApplyPlan::natural(KernelSpec::zero_order(sigma(cfg)?, eps)?, g.clone())?;
    let u = solver::solve_direct(&plan, &rhs(cfg, &g))?;
    Ok((plan, u))
}

fn solution_table(name: &str, u: &GridFunction) -> Table {
    let g = u.grid();
    let mut t = Table::new(name, &["x", "d", "u"]);
    for i in g.closure_nodes() {
        t.push(vec![g.x(i), g.domain().signed_distance(g.x(i)), u.get(i)]);
    }
    t
}

/// Solves the configured problem once.
pub fn run_solve(cfg: &RunConfig) -> Result<Outcome> {
    let g = grid(cfg, cfg.grid.h_target)?;
    let plan = ApplyPlan::natural(cfg.kernel.clone(), g.clone())?;
    let f = rhs(cfg, &g);
    let method = match cfg.solver.method {
        SolveMethod::Auto if cfg.kernel.is_singular() => SolveMethod::Direct,
        SolveMethod::Auto => SolveMethod::Picard,
        m => m,
    };
    let (u, report) = match method {
        SolveMethod::Picard => solver::solve_picard(&plan, &f, &cfg.solver.picard())?,
        _ => {
            let start = Instant::now();
            let u = solver::solve_direct(&plan, &f)?;
            let r = residual(&plan, &u, &f).sup_on(plan.unknowns());
            let rep = SolveReport {
                final_residual: r,
                residual_history: vec![r],
                converged: r <= cfg.solver.tol.max(1e-10 * (1.0 + f.sup_closure())),
                wall_time: start.elapsed().as_secs_f64(),
                ..Default::default()
            };
            (u, rep)
        }
    };
    let mut out = Outcome::new("solve");
    out.nonconverged = !report.converged;
    out.checks.push(Check::at_most(
        "final_residual",
        report.final_residual,
        cfg.solver.tol.max(report.final_residual.min(1e-10)),
    ));
    out.tables.push(solution_table("solution", &u));
    out.report = json(&report);
    Ok(out)
}

/// Barrier certification: a single check, or the `(β₀, δ̄, c*)` search with a refinement re-check.
pub fn run_barrier_check(cfg: &RunConfig) -> Result<Outcome> {
    let b = cfg
        .barrier
        .as_ref()
        .ok_or_else(|| Error::Config("missing [barrier] block".into()))?;
    match b.mode {
        BarrierMode::Check => barrier_single(cfg, b),
        BarrierMode::FitBeta0 => barrier_fit(cfg, b),
    }
}

fn barrier_single(cfg: &RunConfig, b: &BarrierBlock) -> Result<Outcome> {
    let spec = b
        .spec
        .as_ref()
        .ok_or_else(|| Error::Config("barrier check needs barrier.spec".into()))?;
    let g = grid(cfg, cfg.grid.h_target)?;
    let plan = ApplyPlan::natural(cfg.kernel.clone(), g.clone())?;
    let dom = g.domain().clone();
    let width = b.strip_width;
    let strip = move |x: f64| width.is_none_or(|w| dom.signed_distance(x) <= w + GEOM_TOL);
    let target = b.target;
    let rep = barriers::check_supersolution(spec, &plan, &|_| target, &strip)?;
    let mut t = Table::new(
        "supersolution",
        &["epsilon", "beta", "strip_width", "min_margin", "c_star"],
    );
    let beta = match spec {
        barriers::BarrierSpec::Psi { beta, .. } => *beta,
        _ => f64::NAN,
    };
    t.push(vec![
        cfg.kernel.epsilon().unwrap_or(f64::NAN),
        beta,
        width.unwrap_or(f64::INFINITY),
        rep.min_margin,
        rep.c_star.unwrap_or(f64::NAN),
    ]);
    let mut out = Outcome::new("barrier-check");
    out.checks
        .push(Check::at_least("min_margin", rep.min_margin, 0.0));
    out.tables.push(t);
    out.report = json(&rep);
    Ok(out)
}

fn barrier_fit(cfg: &RunConfig, b: &BarrierBlock) -> Result<Outcome> {
    if b.epsilons.is_empty() {
        return config("barrier fit needs barrier.epsilons");
    }
    let s = sigma(cfg)?;
    let plans_at = |scale: f64| -> Result<Vec<ApplyPlan>> {
        b.epsilons
            .iter()
            .map(|&e| {
                ApplyPlan::natural(
                    KernelSpec::zero_order(s, e)?,
                    grid(cfg, scale * member_h(cfg, b.h_ratio, e))?,
                )
            })
            .collect()
    };
    let coarse = plans_at(1.0)?;
    let fit: BetaFit = barriers::fit_beta0(&coarse)?;
    let fine = plans_at(0.5)?;
    let fine_c: Vec<f64> = fine
        .par_iter()
        .map(|p| barriers::psi_c_star(p, fit.beta0, fit.delta_bar))
        .collect::<Result<_>>()?;
    let mut t = Table::new(
        "supersolution",
        &["epsilon", "h", "beta", "strip_width", "c_star"],
    );
    let mut degradation = 0.0f64;
    let mut change = 0.0f64;
    for ((p, &(e, c)), &cf) in coarse.iter().zip(&fit.per_epsilon).zip(&fine_c) {
        t.push(vec![e, p.grid().h(), fit.beta0, fit.delta_bar, c]);
        t.push(vec![e, p.grid().h() / 2.0, fit.beta0, fit.delta_bar, cf]);
        // only a loss of margin counts as degradation
        degradation = degradation.max((c - cf) / c);
        change = change.max((c - cf).abs() / c);
    }
    let fine_min = fine_c.iter().copied().fold(f64::INFINITY, f64::min);
    let mut out = Outcome::new("barrier-check");
    out.checks
        .push(Check::at_least("beta0", fit.beta0, f64::MIN_POSITIVE));
    out.checks.push(Check::at_least(
        "delta_bar",
        fit.delta_bar,
        f64::MIN_POSITIVE,
    ));
    out.checks
        .push(Check::at_least("c_star", fit.c_star, f64::MIN_POSITIVE));
    out.checks
        .push(Check::at_least("c_star_fine", fine_min, f64::MIN_POSITIVE));
    out.checks.push(Check::at_most(
        "margin_degradation",
        degradation,
        b.margin_degradation,
    ));
    out.tables.push(t);
    out.report = serde_json::json!({
        "fit": fit,
        "fine_c_star": fine_c,
        "degradation": degradation,
        "relative_change": change,
    });
    Ok(out)
}

/// Runs the study named in the config, or `which` when given.
pub fn run_study(cfg: &RunConfig, which: Option<StudyKind>) -> Result<Outcome> {
    let s = study(cfg)?;
    let kind = which.unwrap_or(s.kind);
    let start = Instant::now();
    let mut out = match kind {
        StudyKind::Contraction => contraction(cfg, s),
        StudyKind::Linfty => linfty(cfg, s),
        StudyKind::Boundary => boundary(cfg, s),
        StudyKind::Jump => jump(cfg, s),
        StudyKind::Equicontinuity => equicontinuity(cfg, s),
        StudyKind::Convergence => convergence(cfg, s),
        StudyKind::Counterexample => counterexample(cfg, s),
        StudyKind::Comparison => comparison(cfg, s),
        StudyKind::Isaacs => isaacs(cfg, s),
        StudyKind::Parabolic => parabolic(cfg, s),
    }?;
    if matches!(kind, StudyKind::Contraction | StudyKind::Convergence) {
        out.checks.push(Check::at_most(
            "wall_time",
            start.elapsed().as_secs_f64(),
            s.thresholds.max_wall_time,
        ));
    }
    Ok(out)
}

fn contraction(cfg: &RunConfig, s: &StudyBlock) -> Result<Outcome> {
    let g = grid(cfg, cfg.grid.h_target)?;
    let plan = ApplyPlan::natural(cfg.kernel.clone(), g.clone())?;
    let f = rhs(cfg, &g);
    let (u, rep) = solver::solve_picard(&plan, &f, &cfg.solver.picard())?;
    let direct = solver::solve_direct(&plan, &f)?;
    let gap = u.sub(&direct).sup_closure();
    let mut out = Outcome::new("contraction");
    out.nonconverged = !rep.converged;
    let th = &s.thresholds;
    out.checks.push(Check::at_most(
        "asymptotic_factor",
        rep.asymptotic_factor,
        rep.theoretical_factor + th.contraction_slack,
    ));
    out.checks.push(Check::at_most(
        "measured_factor",
        rep.measured_factor,
        rep.theoretical_factor + 0.05,
    ));
    out.checks.push(Check::at_most(
        "final_residual",
        rep.final_residual,
        cfg.solver.tol,
    ));
    out.checks.push(Check::at_most(
        "picard_direct_gap",
        gap,
        10.0 * cfg.solver.tol,
    ));
    let mut t = Table::new("residuals", &["iteration", "residual"]);
    for (k, r) in rep.residual_history.iter().enumerate() {
        t.push(vec![k as f64, *r]);
    }
    out.tables.push(t);
    out.tables.push(solution_table("solution", &u));
    out.report = serde_json::json!({ "solve": rep, "nu0": plan.nu0(), "l1_norm": plan.l1_norm() });
    Ok(out)
}

fn linfty(cfg: &RunConfig, s: &StudyBlock) -> Result<Outcome> {
    let sig = sigma(cfg)?;
    let rows: Vec<_> = s
        .epsilons
        .par_iter()
        .map(|&e| {
            let (plan, u) = zero_order_solve(cfg, e, member_h(cfg, s.h_ratio, e))?;
            Ok(analysis::linfty_bound_check(
                &u,
                &rhs(cfg, plan.grid()),
                sig,
                &cfg.domain,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new("linfty", &["epsilon", "sup_u", "bound", "margin"]);
    for (e, r) in s.epsilons.iter().zip(&rows) {
        t.push(vec![*e, r.sup_u, r.bound, r.margin]);
    }
    let mut out = Outcome::new("linfty");
    let violations = rows.iter().filter(|r| !r.pass).count();
    out.checks
        .push(Check::at_most("violations", violations as f64, 0.0));
    out.tables.push(t);
    out.report = json(&rows);
    Ok(out)
}

fn boundary(cfg: &RunConfig, s: &StudyBlock) -> Result<Outcome> {
    let rows: Vec<_> = s
        .epsilons
        .par_iter()
        .map(|&e| {
            let h = member_h(cfg, s.h_ratio, e);
            let (pc, uc) = zero_order_solve(cfg, e, h)?;
            let (_, uf) = zero_order_solve(cfg, e, h / 2.0)?;
            let fc = rhs(cfg, pc.grid());
            let rho0 = fc
                .values()
                .iter()
                .zip(0..)
                .filter(|(_, i)| pc.grid().in_closure(*i))
                .map(|(v, _)| *v)
                .fold(f64::INFINITY, f64::min);
            Ok(analysis::boundary_positivity_check(
                &uc,
                &uf,
                &fc,
                rho0,
                s.thresholds.boundary_change,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(
        "boundary",
        &["epsilon", "boundary_coarse", "boundary_fine", "change"],
    );
    let mut out = Outcome::new("boundary");
    let mut worst = 0.0f64;
    let mut min_b = f64::INFINITY;
    for (e, r) in s.epsilons.iter().zip(&rows) {
        if r.skipped {
            return config("boundary study needs f bounded below by a positive constant");
        }
        for (c, f) in r.boundary_coarse.iter().zip(&r.boundary_fine) {
            t.push(vec![*e, *c, *f, (c - f).abs() / c]);
            min_b = min_b.min(*c);
        }
        worst = worst.max(r.refinement_change);
        min_b = min_b.min(r.interior_min);
    }
    out.checks
        .push(Check::at_least("min_value", min_b, f64::MIN_POSITIVE));
    out.checks.push(Check::at_most(
        "refinement_change",
        worst,
        s.thresholds.boundary_change,
    ));
    out.tables.push(t);
    out.report = json(&rows);
    Ok(out)
}

fn family(cfg: &RunConfig, s: &StudyBlock) -> Result<Vec<(f64, GridFunction)>> {
    s.epsilons
        .par_iter()
        .map(|&e| Ok((e, zero_order_solve(cfg, e, member_h(cfg, s.h_ratio, e))?.1)))
        .collect()
}

fn jump(cfg: &RunConfig, s: &StudyBlock) -> Result<Outcome> {
    let fam = family(cfg, s)?;
    let fit = analysis::boundary_jump_fit(&fam, s.strip_width)?;
    let mut t = Table::new("jump", &["epsilon", "d", "abs_u", "bound"]);
    let mut above = 0usize;
    for &(d, e, v) in &fit.data {
        let bound = fit.c0 * (e + d).powf(fit.beta0);
        if v > bound * (1.0 + 1e-12) {
            above += 1;
        }
        t.push(vec![e, d, v, bound]);
    }
    let mut out = Outcome::new("jump");
    out.checks
        .push(Check::at_least("beta0", fit.beta0, s.thresholds.min_beta0));
    out.checks.push(Check::at_most(
        "fit_residual",
        fit.residual,
        s.thresholds.jump_residual,
    ));
    out.checks
        .push(Check::at_most("majorant_violations", above as f64, 0.0));
    out.tables.push(t);
    out.report = serde_json::json!({ "c0": fit.c0, "beta0": fit.beta0, "residual": fit.residual, "points": fit.data.len() });
    Ok(out)
}

fn envelope_of(cfg: &RunConfig, s: &StudyBlock) -> Result<analysis::Envelope> {
    let fam = family(cfg, s)?;
    analysis::equicontinuity_envelope(&fam, &|_| true, &s.t_list)
}

fn equicontinuity(cfg: &RunConfig, s: &StudyBlock) -> Result<Outcome> {
    let env = envelope_of(cfg, s)?;
    let mut header = vec!["t".to_string(), "envelope".to_string()];
    header.extend(env.epsilons.iter().map(|e| format!("m_eps_{e}")));
    let mut t = Table {
        name: "envelope".into(),
        header,
        rows: vec![],
    };
    for k in 0..env.t.len() {
        let mut row = vec![env.t[k], env.envelope[k]];
        row.extend(env.members.iter().map(|m| m.m[k]));
        t.rows.push(row);
    }
    let mut out = Outcome::new("equicontinuity");
    out.checks.push(Check::at_most(
        "small_t_ratio",
        env.small_t_ratio,
        s.thresholds.envelope_ratio,
    ));
    let monotone = env.envelope.windows(2).all(|w| w[1] >= w[0]);
    out.checks.push(Check::at_least(
        "envelope_nondecreasing",
        monotone as u8 as f64,
        1.0,
    ));
    out.tables.push(t);
    out.report = serde_json::json!({ "t": env.t, "envelope": env.envelope, "small_t_ratio": env.small_t_ratio });
    Ok(out)
}

/// Largest relative sup gap between the two reference modes at step `h`.
pub fn reference_agreement(sigma: f64, h: f64) -> Result<f64> {
    let d = crate::geometry::Domain::symmetric(1.0)?;
    let exact = analysis::fractional_reference(sigma, &d, h, ReferenceMode::Exact)?;
    let numeric = analysis::fractional_reference(sigma, &d, h, ReferenceMode::Numeric)?;
    Ok(exact.sub(&numeric).sup_closure() / exact.sup_closure())
}

fn convergence(cfg: &RunConfig, s: &StudyBlock) -> Result<Outcome> {
    let sig = sigma(cfg)?;
    let reference = FractionalReference::calibrate(sig, s.reference_h)?;
    let ratio = s.h_ratio.unwrap_or(0.25);
    let fit = analysis::convergence_study(
        sig,
        &s.epsilons,
        &|e| ratio * e,
        &reference,
        &cfg.domain,
        s.interior_depth,
    )?;
    let agreement = reference_agreement(sig, s.reference_h)?;
    let mut t = Table::new("convergence", &["epsilon", "error", "interior_error"]);
    for k in 0..fit.epsilons.len() {
        t.push(vec![fit.epsilons[k], fit.errors[k], fit.interior_errors[k]]);
    }
    let mut out = Outcome::new("convergence");
    out.checks.push(Check::at_least(
        "strictly_decreasing",
        fit.strictly_decreasing as u8 as f64,
        1.0,
    ));
    out.checks.push(Check::at_least(
        "gamma0",
        fit.gamma0.unwrap_or(f64::NAN),
        f64::MIN_POSITIVE,
    ));
    out.checks
        .push(Check::at_most("reference_agreement", agreement, 0.02));
    out.tables.push(t);
    out.report = serde_json::json!({ "rate": fit, "reference": reference, "reference_agreement": agreement });
    Ok(out)
}

fn counterexample(cfg: &RunConfig, s: &StudyBlock) -> Result<Outcome> {
    let base: RadialProfile = match &cfg.kernel {
        KernelSpec::GeneralJ { profile } => profile.clone(),
        KernelSpec::RegularizedSingular { base, .. } => base.clone(),
        _ => {
            return config("counterexample study needs a general_j or regularized_singular kernel")
        }
    };
    let f = |x: f64| cfg.rhs.eval(x);
    let rep = analysis::counterexample_study(
        &base,
        s.alpha,
        &s.epsilons,
        &f,
        &cfg.domain,
        cfg.grid.h_target,
        s.interior_depth,
    )?;
    let mut t = Table::new(
        "counterexample",
        &[
            "epsilon",
            "interior_error",
            "global_error",
            "collar_modulus",
        ],
    );
    for r in &rep.rows {
        t.push(vec![
            r.epsilon,
            r.interior_error,
            r.global_error,
            r.collar_modulus,
        ]);
    }
    let min_global = rep
        .rows
        .iter()
        .map(|r| r.global_error)
        .fold(f64::INFINITY, f64::min);
    let mut out = Outcome::new("counterexample");
    out.checks.push(Check::at_least(
        "u0_boundary",
        rep.u0_boundary,
        f64::MIN_POSITIVE,
    ));
    out.checks.push(Check::at_least(
        "interior_reduction",
        rep.interior_reduction,
        s.thresholds.interior_reduction,
    ));
    out.checks.push(Check::at_least(
        "global_over_u0_boundary",
        min_global / rep.u0_boundary,
        s.thresholds.global_fraction,
    ));
    out.tables.push(t);
    out.report = json(&rep);
    Ok(out)
}

/// Piecewise-linear data with random values in `[0.1, 1]` at evenly spaced knots.
fn random_rhs(rng: &mut ChaCha8Rng, g: &Arc<Grid>, knots: usize) -> GridFunction {
    let (a, b) = (g.domain().lower(), g.domain().upper());
    let vals: Vec<f64> = (0..knots).map(|_| rng.random_range(0.1..=1.0)).collect();
    GridFunction::on_closure(g, |x| {
        let s = (x - a) / (b - a) * (knots - 1) as f64;
        let k = (s.floor() as usize).min(knots - 2);
        let t = s - k as f64;
        vals[k] * (1.0 - t) + vals[k + 1] * t
    })
}

fn comparison(cfg: &RunConfig, s: &StudyBlock) -> Result<Outcome> {
    let g = grid(cfg, cfg.grid.h_target)?;
    let plan = ApplyPlan::natural(cfg.kernel.clone(), g.clone())?;
    let sig = sigma(cfg)?;
    let c = analysis::linfty_constant(sig, &cfg.domain);
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut t = Table::new("comparison", &["sample", "shift", "max_gap", "barrier_gap"]);
    let (mut violations, mut precondition, mut barrier_violations) = (0usize, 0usize, 0usize);
    for k in 0..s.samples {
        let f = random_rhs(&mut rng, &g, 6);
        let shift = rng.random_range(0.05..=1.0);
        let fv = GridFunction::on_closure(&g, |x| f.get(g.index_of(x).unwrap()) + shift);
        let u = solver::solve_direct(&plan, &f)?;
        let v = solver::solve_direct(&plan, &fv)?;
        match analysis::comparison_check(&u, &v, &plan, &f, &fv) {
            ComparisonOutcome::Pass => {}
            ComparisonOutcome::Violation { .. } => violations += 1,
            ComparisonOutcome::PreconditionFailed { .. } => precondition += 1,
        }
        let norm = f.sup_closure();
        let chi = barriers::BarrierSpec::Chi { scale: norm / c };
        let w = GridFunction::from_fn(&g, |x| {
            barriers::eval_barrier(&chi, g.domain(), x).unwrap_or(0.0)
        });
        let fw = GridFunction::on_closure(&g, |_| norm);
        if !analysis::comparison_check(&u, &w, &plan, &f, &fw).passed() {
            barrier_violations += 1;
        }
        let gap = g
            .closure_nodes()
            .iter()
            .map(|&i| u.get(i) - v.get(i))
            .fold(f64::NEG_INFINITY, f64::max);
        let bgap = g
            .closure_nodes()
            .iter()
            .map(|&i| u.get(i) - w.get(i))
            .fold(f64::NEG_INFINITY, f64::max);
        t.push(vec![k as f64, shift, gap, bgap]);
    }
    let mut out = Outcome::new("comparison");
    out.checks
        .push(Check::at_most("violations", violations as f64, 0.0));
    out.checks.push(Check::at_most(
        "precondition_failures",
        precondition as f64,
        0.0,
    ));
    out.checks.push(Check::at_most(
        "barrier_violations",
        barrier_violations as f64,
        0.0,
    ));
    out.tables.push(t);
    out.report =
        serde_json::json!({ "samples": s.samples, "seed": s.seed, "barrier_scale_constant": c });
    Ok(out)
}

fn isaacs(cfg: &RunConfig, s: &StudyBlock) -> Result<Outcome> {
    let blk = s
        .isaacs
        .as_ref()
        .ok_or_else(|| Error::Config("isaacs study needs [study.isaacs]".into()))?;
    let (sig, eps) = match cfg.kernel {
        KernelSpec::ZeroOrder { sigma, epsilon } => (sigma, epsilon),
        _ => return config("isaacs study needs a zero_order base kernel"),
    };
    let g = grid(cfg, cfg.grid.h_target)?;
    let fam = IsaacsFamily::new(
        sig,
        eps,
        &blk.profiles()?,
        blk.lambda1,
        blk.lambda2,
        g.clone(),
    )?;
    let nodes = g.closure_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut sandwich_violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..s.samples {
        let u1 = GridFunction::on_closure(&g, |_| rng.random_range(-1.0..=1.0));
        let u2 = GridFunction::on_closure(&g, |_| rng.random_range(-1.0..=1.0));
        let diff = u1.sub(&u2);
        let a = fam.apply_nodes(&u1, &nodes);
        let b = fam.apply_nodes(&u2, &nodes);
        let lo = fam.apply_extremal_nodes(&diff, &nodes, ExtremalSign::Minus);
        let hi = fam.apply_extremal_nodes(&diff, &nodes, ExtremalSign::Plus);
        for n in 0..nodes.len() {
            let d = a[n] - b[n];
            let tol = 1e-10 * (1.0 + d.abs());
            let excess = (lo[n] - d).max(d - hi[n]);
            worst = worst.max(excess);
            if excess > tol {
                sandwich_violations += 1;
            }
        }
    }
    let f = rhs(cfg, &g);
    let (u, rep) = solver::solve_isaacs(&fam, &f, &cfg.solver.picard())?;
    let linear = |lam: f64| -> Result<GridFunction> {
        let coef = RadialProfile::constant(lam)?;
        let spec = KernelSpec::anisotropic(sig, eps, coef, blk.lambda1, blk.lambda2)?;
        solver::solve_direct(&ApplyPlan::natural(spec, g.clone())?, &f)
    };
    let (lo, hi) = (linear(blk.lambda2)?, linear(blk.lambda1)?);
    let slack = 10.0 * cfg.solver.tol;
    let mut below = 0.0f64;
    let mut t = Table::new("isaacs", &["x", "u_lambda2", "u", "u_lambda1"]);
    for &i in &nodes {
        below = below.max(lo.get(i) - u.get(i)).max(u.get(i) - hi.get(i));
        t.push(vec![g.x(i), lo.get(i), u.get(i), hi.get(i)]);
    }
    let mut out = Outcome::new("isaacs");
    out.nonconverged = !rep.converged;
    out.checks.push(Check::at_most(
        "sandwich_violations",
        sandwich_violations as f64,
        0.0,
    ));
    out.checks
        .push(Check::at_most("bracket_excess", below, slack));
    out.tables.push(t);
    out.report = serde_json::json!({
        "solve": rep,
        "samples": s.samples,
        "worst_sandwich_excess": worst,
        "measured_factor": rep.asymptotic_factor,
        "theoretical_factor": rep.theoretical_factor,
    });
    Ok(out)
}

fn parabolic(cfg: &RunConfig, s: &StudyBlock) -> Result<Outcome> {
    let blk = s
        .parabolic
        .as_ref()
        .ok_or_else(|| Error::Config("parabolic study needs [study.parabolic]".into()))?;
    let g = grid(cfg, cfg.grid.h_target)?;
    let plan = ApplyPlan::natural(cfg.kernel.clone(), g.clone())?;
    let f = rhs(cfg, &g);
    let t_final = blk
        .t_final
        .unwrap_or(50.0 * (1.0 / plan.l1_norm()).max(1.0));
    let steps = (t_final / blk.dt).ceil();
    let pcfg = ParabolicConfig {
        dt: t_final / steps,
        t_final,
        scheme: blk.scheme,
    };
    let run = solver::solve_parabolic(&plan, |_| f.clone(), &pcfg)?;
    let nodes = plan.unknowns().to_vec();
    let mut decreases = 0usize;
    for w in run.states.windows(2) {
        if nodes.iter().any(|&i| w[1].get(i) < w[0].get(i) - 1e-14) {
            decreases += 1;
        }
    }
    let elliptic = solver::solve_direct(&plan, &f)?;
    let gap = run.last().sub(&elliptic).sup_closure();
    let env = envelope_of(cfg, s)?;
    let m = analysis::modulus_of_continuity(run.last(), &|_| true, &s.t_list);
    let ratio =
        m.m.iter()
            .zip(&env.envelope)
            .map(|(a, b)| if *b > 0.0 { a / b } else { 0.0 })
            .fold(0.0, f64::max);
    let mut t = Table::new("parabolic", &["t", "modulus_final", "elliptic_envelope"]);
    for k in 0..m.t.len() {
        t.push(vec![m.t[k], m.m[k], env.envelope[k]]);
    }
    let mut traj = Table::new("trajectory", &["time", "sup_u", "gap_to_elliptic"]);
    for (time, st) in run.times.iter().zip(&run.states) {
        traj.push(vec![
            *time,
            st.sup_closure(),
            st.sub(&elliptic).sup_closure(),
        ]);
    }
    let mut out = Outcome::new("parabolic");
    out.checks.push(Check::at_most(
        "monotonicity_violations",
        decreases as f64,
        0.0,
    ));
    out.checks.push(Check::at_most(
        "gap_to_elliptic",
        gap,
        s.thresholds.parabolic_gap,
    ));
    out.checks.push(Check::at_most(
        "modulus_over_envelope",
        ratio,
        s.thresholds.modulus_factor,
    ));
    out.tables.push(t);
    out.tables.push(traj);
    out.report = serde_json::json!({
        "t_final": t_final,
        "dt": pcfg.dt,
        "scheme": match blk.scheme { TimeScheme::ExplicitEuler => "explicit_euler", TimeScheme::ImplicitEuler => "implicit_euler" },
        "gap": gap,
    });
    Ok(out)
}
