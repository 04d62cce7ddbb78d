use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::modulus::modulus_of_continuity;
use super::reference::FractionalReference;
use crate::error::{config, Result};
use crate::geometry::{build_grid, Domain};
use crate::kernel::{KernelSpec, RadialProfile};
use crate::nonlocal_op::{ApplyPlan, GridFunction};
use crate::solver::solve_direct;

/// Growth factor between consecutive errors that is flagged as non-monotone.
pub const MONOTONE_FLAG_FACTOR: f64 = 1.5;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateFit {
    /// Slope of `log e` against `log ε`; absent with fewer than two points.
    pub gamma0: Option<f64>,
    pub prefactor: Option<f64>,
    pub epsilons: Vec<f64>,
    pub errors: Vec<f64>,
    /// Errors restricted to `{d ≥ interior_depth}`.
    pub interior_errors: Vec<f64>,
    pub interior_depth: f64,
    pub strictly_decreasing: bool,
    /// Consecutive pairs `(ε, e)` where the error grew by more than the flag factor.
    pub flagged: Vec<(f64, f64)>,
}

/// Least-squares fit of `log e = log C + γ log ε`.
pub fn fit_rate(eps: &[f64], errors: &[f64]) -> (Option<f64>, Option<f64>) {
    if eps.len() < 2 {
        return (None, None);
    }
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let g = sxy / sxx;
    (Some(g), Some((my - g * mx).exp()))
}

/// Solves the zero-order problem with `f ≡ 1` for each ε (sorted decreasing)
/// and measures the sup distance to the fractional reference on Ω̄ nodes.
pub fn convergence_study(
    sigma: f64,
    epsilons: &[f64],
    h_of: &(dyn Fn(f64) -> f64 + Sync),
    reference: &FractionalReference,
    domain: &Domain,
    interior_depth: f64,
) -> Result<RateFit> {
    let mut eps = epsilons.to_vec();
    eps.sort_by(|a, b| b.total_cmp(a));
    let rows: Vec<(f64, f64)> = eps
        .par_iter()
        .map(|&e| {
            let h = h_of(e);
            if h > e / 4.0 * (1.0 + 1e-12) {
                return config(format!(
                    "convergence study needs h ≤ epsilon/4, got h = {h} for epsilon = {e}"
                ));
            }
            let g = Arc::new(build_grid(domain, h, 2.0 * domain.diameter())?);
            let plan = ApplyPlan::natural(KernelSpec::zero_order(sigma, e)?, g.clone())?;
            let f = GridFunction::on_closure(&g, |_| 1.0);
            let u = solve_direct(&plan, &f)?;
            let mut glob = 0.0f64;
            let mut inner = 0.0f64;
            for i in g.closure_nodes() {
                let err = (u.get(i) - reference.eval(g.x(i))).abs();
                glob = glob.max(err);
                if g.distance(i) >= interior_depth - 1e-12 {
                    inner = inner.max(err);
                }
            }
            Ok((glob, inner))
        })
        .collect::<Result<_>>()?;
    let errors: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let interior_errors: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let strictly_decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    let flagged = errors
        .windows(2)
        .zip(&eps[1..])
        .filter(|(w, _)| w[1] > MONOTONE_FLAG_FACTOR * w[0])
        .map(|(w, &e)| (e, w[1]))
        .collect();
    let (gamma0, prefactor) = fit_rate(&eps, &errors);
    Ok(RateFit {
        gamma0,
        prefactor,
        epsilons: eps,
        errors,
        interior_errors,
        interior_depth,
        strictly_decreasing,
        flagged,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CounterexampleRow {
    pub epsilon: f64,
    /// sup over `{d ≥ depth}` of `|u_ε − u₀|`.
    pub interior_error: f64,
    /// sup over Ω̄ of `|u_ε − u₀|`.
    pub global_error: f64,
    /// Modulus of `u_ε` at `t = 4h` on the collar `{d ≤ 4h}`.
    pub collar_modulus: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub alpha: f64,
    pub h: f64,
    pub depth: f64,
    /// Smallest value of the limit solution on ∂Ω.
    pub u0_boundary: f64,
    pub rows: Vec<CounterexampleRow>,
    /// First over last interior error, with ε sorted decreasing.
    pub interior_reduction: f64,
}

/// Compares the zero-order solution for `J` with the solutions for the
/// non-integrable family `J_ε = J · max{1, (ε/|z|)^α}` on a common grid.
#[allow(clippy::too_many_arguments)]
pub fn counterexample_study(
    base: &RadialProfile,
    alpha: f64,
    epsilons: &[f64],
    f: &(dyn Fn(f64) -> f64 + Sync),
    domain: &Domain,
    h: f64,
    depth: f64,
) -> Result<CounterexampleReport> {
    let g = Arc::new(build_grid(
        domain,
        h,
        base.support_radius().unwrap_or(2.0 * domain.diameter()),
    )?);
    let fg = GridFunction::on_closure(&g, f);
    let rho0 = g
        .closure_nodes()
        .iter()
        .map(|&i| fg.get(i))
        .fold(f64::INFINITY, f64::min);
    if rho0 <= 0.0 {
        return config("counterexample needs f bounded below by a positive constant");
    }
    let p0 = ApplyPlan::natural(KernelSpec::general(base.clone())?, g.clone())?;
    let u0 = solve_direct(&p0, &fg)?;
    let u0_boundary = g
        .boundary_nodes()
        .iter()
        .map(|&i| u0.get(i))
        .fold(f64::INFINITY, f64::min);
    let mut eps = epsilons.to_vec();
    eps.sort_by(|a, b| b.total_cmp(a));
    let collar = 4.0 * g.h();
    let rows: Vec<CounterexampleRow> = eps
        .par_iter()
        .map(|&e| {
            let plan =
                ApplyPlan::natural(KernelSpec::regularized(e, alpha, base.clone())?, g.clone())?;
            let u = solve_direct(&plan, &fg)?;
            let (mut global_error, mut interior_error) = (0.0f64, 0.0f64);
            for i in g.closure_nodes() {
                let err = (u.get(i) - u0.get(i)).abs();
                global_error = global_error.max(err);
                if g.distance(i) >= depth - 1e-12 {
                    interior_error = interior_error.max(err);
                }
            }
            let dom = g.domain().clone();
            let m =
                modulus_of_continuity(&u, &|x| dom.signed_distance(x) <= collar + 1e-12, &[collar]);
            Ok(CounterexampleRow {
                epsilon: e,
                interior_error,
                global_error,
                collar_modulus: m.m[0],
            })
        })
        .collect::<Result<_>>()?;
    let interior_reduction =
        rows.first().unwrap().interior_error / rows.last().unwrap().interior_error;
    Ok(CounterexampleReport {
        alpha,
        h: g.h(),
        depth,
        u0_boundary,
        rows,
        interior_reduction,
    })
}
