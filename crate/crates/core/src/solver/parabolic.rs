use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::direct::assemble_system;
use crate::error::{config, Result};
use crate::nonlocal_op::{ApplyPlan, GridFunction, NonlocalOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeScheme {
    ExplicitEuler,
    #[default]
    ImplicitEuler,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParabolicConfig {
    pub dt: f64,
    pub t_final: f64,
    #[serde(default)]
    pub scheme: TimeScheme,
}

impl ParabolicConfig {
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.t_final > 0.0) {
            return config("dt and t_final must be positive");
        }
        let n = (self.t_final / self.dt).round();
        if (n * self.dt - self.t_final).abs() > 1e-9 * self.t_final {
            return config(format!(
                "dt = {} does not divide t_final = {}",
                self.dt, self.t_final
            ));
        }
        Ok(n as usize)
    }
}

#[derive(Clone, Debug)]
pub struct ParabolicRun {
    pub times: Vec<f64>,
    pub states: Vec<GridFunction>,
}

impl ParabolicRun {
    pub fn last(&self) -> &GridFunction {
        self.states
            .last()
            .expect("trajectory holds the initial state")
    }
}

/// Time-steps `u_t − I[u] = f(t)` from `u(·,0) = 0`, keeping every state.
pub fn solve_parabolic(
    plan: &ApplyPlan,
    f: impl Fn(f64) -> GridFunction,
    cfg: &ParabolicConfig,
) -> Result<ParabolicRun> {
    let steps = cfg.steps()?;
    let dt = cfg.dt;
    let grid = plan.grid().clone();
    let nodes = plan.unknowns().to_vec();
    let mut u = GridFunction::zeros(&grid);
    let mut times = vec![0.0];
    let mut states = vec![u.clone()];
    match cfg.scheme {
        TimeScheme::ExplicitEuler => {
            if dt * plan.l1_norm() > 1.0 {
                return config(format!(
                    "explicit step violates dt·‖K‖₁ ≤ 1 (dt = {dt}, ‖K‖₁ = {})",
                    plan.l1_norm()
                ));
            }
            for n in 0..steps {
                let t = n as f64 * dt;
                let fn_ = f(t);
                let iu = plan.apply_nodes(&u, &nodes);
                let v = u.values_mut();
                for (&i, r) in nodes.iter().zip(iu) {
                    v[i] += dt * (r + fn_.get(i));
                }
                times.push(t + dt);
                states.push(u.clone());
            }
        }
        TimeScheme::ImplicitEuler => {
            let mut sys = assemble_system(plan);
            for k in 0..nodes.len() {
                sys.matrix[(k, k)] += 1.0 / dt;
            }
            let chol = sys.matrix.clone().cholesky();
            let lu = if chol.is_none() {
                Some(sys.matrix.clone().lu())
            } else {
                None
            };
            for n in 0..steps {
                let t = (n + 1) as f64 * dt;
                let fn_ = f(t);
                let rhs = DVector::from_iterator(
                    nodes.len(),
                    nodes.iter().map(|&i| u.get(i) / dt + fn_.get(i)),
                );
                let sol = match (&chol, &lu) {
                    (Some(c), _) => c.solve(&rhs),
                    (None, Some(l)) => l.solve(&rhs).ok_or_else(|| {
                        crate::Error::Singular("implicit Euler matrix is singular".into())
                    })?,
                    _ => unreachable!(),
                };
                let v = u.values_mut();
                for (k, &i) in nodes.iter().enumerate() {
                    v[i] = sol[k];
                }
                times.push(t);
                states.push(u.clone());
            }
        }
    }
    Ok(ParabolicRun { times, states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, Domain};
    use crate::kernel::KernelSpec;
    use crate::solver::solve_direct;
    use std::sync::Arc;

    fn plan() -> ApplyPlan {
        let g = Arc::new(build_grid(&Domain::symmetric(1.0).unwrap(), 0.05, 2.0).unwrap());
        ApplyPlan::natural(KernelSpec::zero_order(0.5, 0.4).unwrap(), g).unwrap()
    }

    #[test]
    fn explicit_first_step_and_cfl() {
        let p = plan();
        let g = p.grid().clone();
        let one = GridFunction::on_closure(&g, |_| 1.0);
        let dt = 0.5 / p.l1_norm();
        let cfg = ParabolicConfig {
            dt,
            t_final: dt,
            scheme: TimeScheme::ExplicitEuler,
        };
        let run = solve_parabolic(&p, |_| one.clone(), &cfg).unwrap();
        assert!(run.last().sub(&one.scaled(dt)).sup_closure() < 1e-15);
        let bad = ParabolicConfig {
            dt: 2.0 / p.l1_norm(),
            t_final: 2.0 / p.l1_norm(),
            scheme: TimeScheme::ExplicitEuler,
        };
        assert!(solve_parabolic(&p, |_| one.clone(), &bad).is_err());
        let uneven = ParabolicConfig {
            dt: 0.3,
            t_final: 1.0,
            scheme: TimeScheme::ImplicitEuler,
        };
        assert!(uneven.steps().is_err());
    }

    #[test]
    fn zero_data_stays_zero() {
        let p = plan();
        let g = p.grid().clone();
        let cfg = ParabolicConfig {
            dt: 0.1,
            t_final: 1.0,
            scheme: TimeScheme::ImplicitEuler,
        };
        let run = solve_parabolic(&p, |_| GridFunction::zeros(&g), &cfg).unwrap();
        assert!(run.states.iter().all(|s| s.sup_closure() == 0.0));
    }

    #[test]
    fn implicit_monotone_and_converges() {
        let p = plan();
        let g = p.grid().clone();
        let one = GridFunction::on_closure(&g, |_| 1.0);
        let cfg = ParabolicConfig {
            dt: 0.25,
            t_final: 40.0,
            scheme: TimeScheme::ImplicitEuler,
        };
        let run = solve_parabolic(&p, |_| one.clone(), &cfg).unwrap();
        for w in run.states.windows(2) {
            for &i in &g.closure_nodes() {
                assert!(w[1].get(i) >= w[0].get(i) - 1e-15);
            }
        }
        let ell = solve_direct(&p, &one).unwrap();
        assert!(run.last().sub(&ell).sup_closure() < 1e-4);
    }

    #[test]
    fn explicit_monotone_in_data() {
        let p = plan();
        let g = p.grid().clone();
        let dt = 0.9 / p.l1_norm();
        let cfg = ParabolicConfig {
            dt,
            t_final: 20.0 * dt,
            scheme: TimeScheme::ExplicitEuler,
        };
        let f1 = GridFunction::on_closure(&g, |x| 1.0 + x);
        let f2 = GridFunction::on_closure(&g, |x| 1.2 + x + x * x);
        let a = solve_parabolic(&p, |_| f1.clone(), &cfg).unwrap();
        let b = solve_parabolic(&p, |_| f2.clone(), &cfg).unwrap();
        for (s, t) in a.states.iter().zip(&b.states) {
            for i in 0..g.len() {
                assert!(t.get(i) >= s.get(i) - 1e-14);
            }
        }
    }
}
