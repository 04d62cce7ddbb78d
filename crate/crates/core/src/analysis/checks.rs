use serde::{Deserialize, Serialize};

use crate::geometry::Domain;
use crate::nonlocal_op::{ApplyPlan, GridFunction, NonlocalOperator};

/// Slack for sub/supersolution certificates and pointwise orderings.
pub const CERT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ComparisonOutcome {
    Pass,
    /// `u > v` at an Ω̄ node: `(x, u − v)`.
    Violation {
        x: f64,
        gap: f64,
    },
    /// The inputs are not an ordered sub/supersolution pair: `(x, reason)`.
    PreconditionFailed {
        x: f64,
        reason: String,
    },
}

impl ComparisonOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, ComparisonOutcome::Pass)
    }
}

/// Checks `u ≤ v` on Ω̄ after certifying `−I[u] ≤ f_u`, `−I[v] ≥ f_v`,
/// `f_u ≤ f_v` on the equation nodes and `u ≤ v` off them.
pub fn comparison_check(
    u: &GridFunction,
    v: &GridFunction,
    plan: &ApplyPlan,
    f_u: &GridFunction,
    f_v: &GridFunction,
) -> ComparisonOutcome {
    let grid = plan.grid();
    let nodes = plan.unknowns();
    let scale = 1.0 + f_u.sup_on(nodes).max(f_v.sup_on(nodes));
    let tol = CERT_TOL * scale;
    let iu = plan.apply_nodes(u, nodes);
    let iv = plan.apply_nodes(v, nodes);
    let fail = |i: usize, reason: &str| ComparisonOutcome::PreconditionFailed {
        x: grid.x(i),
        reason: reason.into(),
    };
    for (k, &i) in nodes.iter().enumerate() {
        if -iu[k] > f_u.get(i) + tol {
            return fail(i, "u is not a subsolution");
        }
        if -iv[k] < f_v.get(i) - tol {
            return fail(i, "v is not a supersolution");
        }
        if f_u.get(i) > f_v.get(i) + tol {
            return fail(i, "f_u exceeds f_v");
        }
    }
    let mut is_eq = vec![false; grid.len()];
    for &i in nodes {
        is_eq[i] = true;
    }
    for i in (0..grid.len()).filter(|&i| !is_eq[i]) {
        if u.get(i) > v.get(i) + tol {
            return fail(i, "u exceeds v outside the equation nodes");
        }
    }
    // certificate slack propagates through the inverse, bounded by 1/ν₀
    let slack = tol * (1.0 + 1.0 / plan.nu0().max(f64::MIN_POSITIVE));
    let mut worst = ComparisonOutcome::Pass;
    let mut worst_gap = slack;
    for i in grid.closure_nodes() {
        let gap = u.get(i) - v.get(i);
        if gap > worst_gap {
            worst_gap = gap;
            worst = ComparisonOutcome::Violation { x: grid.x(i), gap };
        }
    }
    worst
}

/// `(2σ)^{-1} · |B₁| · (R + 1)^{-2σ}` with `|B₁| = 2` and `R = diam Ω`.
pub fn linfty_constant(sigma: f64, domain: &Domain) -> f64 {
    2.0 * (domain.diameter() + 1.0).powf(-2.0 * sigma) / (2.0 * sigma)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinftyReport {
    pub constant: f64,
    pub bound: f64,
    pub sup_u: f64,
    pub argmax_x: f64,
    pub margin: f64,
    pub pass: bool,
}

pub fn linfty_bound_check(
    u: &GridFunction,
    f: &GridFunction,
    sigma: f64,
    domain: &Domain,
) -> LinftyReport {
    let grid = u.grid();
    let nodes = grid.closure_nodes();
    let constant = linfty_constant(sigma, domain);
    let bound = constant * f.sup_on(&nodes);
    let (mut sup_u, mut argmax_x) = (0.0, f64::NAN);
    for &i in &nodes {
        if u.get(i).abs() >= sup_u {
            sup_u = u.get(i).abs();
            argmax_x = grid.x(i);
        }
    }
    let margin = bound - sup_u;
    LinftyReport {
        constant,
        bound,
        sup_u,
        argmax_x,
        margin,
        pass: margin >= 0.0,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryReport {
    /// `f ≥ ϱ₀ > 0` failed, so nothing was checked.
    pub skipped: bool,
    pub interior_min: f64,
    /// Boundary values on the coarse grid, in node order.
    pub boundary_coarse: Vec<f64>,
    pub boundary_fine: Vec<f64>,
    /// max over boundary points of `|u_h − u_{h/2}| / u_h`.
    pub refinement_change: f64,
    pub pass: bool,
}

/// Positivity inside and a refinement-stable positive boundary value.
/// `coarse` and `fine` solve the same problem on grids `h` and `h/2`.
pub fn boundary_positivity_check(
    coarse: &GridFunction,
    fine: &GridFunction,
    f_coarse: &GridFunction,
    rho0: f64,
    max_change: f64,
) -> BoundaryReport {
    let g = coarse.grid();
    let nodes = g.closure_nodes();
    let f_min = nodes
        .iter()
        .map(|&i| f_coarse.get(i))
        .fold(f64::INFINITY, f64::min);
    if !(rho0 > 0.0 && f_min >= rho0) {
        return BoundaryReport {
            skipped: true,
            interior_min: f64::NAN,
            boundary_coarse: vec![],
            boundary_fine: vec![],
            refinement_change: f64::NAN,
            pass: false,
        };
    }
    let interior_min = g
        .interior_nodes()
        .iter()
        .map(|&i| coarse.get(i))
        .fold(f64::INFINITY, f64::min);
    let boundary_coarse: Vec<f64> = g.boundary_nodes().iter().map(|&i| coarse.get(i)).collect();
    let gf = fine.grid();
    let boundary_fine: Vec<f64> = g
        .boundary_nodes()
        .iter()
        .map(|&i| gf.index_of(g.x(i)).map_or(f64::NAN, |j| fine.get(j)))
        .collect();
    let refinement_change = boundary_coarse
        .iter()
        .zip(&boundary_fine)
        .map(|(c, f)| (c - f).abs() / c.abs())
        .fold(0.0, f64::max);
    let pass = interior_min > 0.0
        && boundary_coarse.iter().all(|&b| b > 0.0)
        && refinement_change.is_finite()
        && refinement_change <= max_change;
    BoundaryReport {
        skipped: false,
        interior_min,
        boundary_coarse,
        boundary_fine,
        refinement_change,
        pass,
    }
}
