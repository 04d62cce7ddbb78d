use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::geometry::{build_grid, Domain, Grid};
use crate::kernel::KernelSpec;
use crate::nonlocal_op::{ApplyPlan, GridFunction, NonlocalOperator};
use crate::solver::solve_direct;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMode {
    /// `c_σ (1 − x²)_+^σ` with a calibrated constant; unit interval only.
    Exact,
    /// Direct solve with the singular second-difference plan.
    Numeric,
}

/// Calibrated solution of `−I₀[u] = 1` on (−1, 1), `u = 0` outside.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FractionalReference {
    pub sigma: f64,
    /// `−I₀[(1 − x²)_+^σ](0)` extrapolated to `h → 0`.
    pub kappa: f64,
    pub kappa_coarse: f64,
    pub kappa_fine: f64,
    pub h: f64,
    pub order: f64,
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma < 1.0 {
        Ok(())
    } else {
        config(format!("sigma must lie in (0, 1), got {sigma}"))
    }
}

/// `−I₀[(1 − x²)_+^σ](0)` with the singular plan on step `h`.
fn kappa_at(sigma: f64, h: f64) -> Result<f64> {
    let d = Domain::symmetric(1.0)?;
    let g = Arc::new(build_grid(&d, h, 2.0)?);
    let plan = ApplyPlan::natural(KernelSpec::singular(sigma)?, g.clone())?;
    let w = GridFunction::on_closure(&g, |x| (1.0 - x * x).max(0.0).powf(sigma));
    let i0 = g
        .index_of(0.0)
        .expect("unit interval grids contain the origin");
    Ok(-plan.apply(&w, i0)?)
}

impl FractionalReference {
    /// Evaluates at steps `h` and `h/2` and Richardson-extrapolates.
    pub fn calibrate(sigma: f64, h: f64) -> Result<Self> {
        check_sigma(sigma)?;
        let coarse = kappa_at(sigma, h)?;
        let fine = kappa_at(sigma, h / 2.0)?;
        let order = (2.0 - 2.0 * sigma).min(1.0 + sigma);
        let kappa = fine + (fine - coarse) / (2f64.powf(order) - 1.0);
        Ok(Self {
            sigma,
            kappa,
            kappa_coarse: coarse,
            kappa_fine: fine,
            h,
            order,
        })
    }

    pub fn c_sigma(&self) -> f64 {
        1.0 / self.kappa
    }

    pub fn eval(&self, x: f64) -> f64 {
        (1.0 - x * x).max(0.0).powf(self.sigma) / self.kappa
    }

    pub fn on_grid(&self, grid: &Arc<Grid>) -> GridFunction {
        GridFunction::from_fn(grid, |x| self.eval(x))
    }
}

/// Reference solution for `f ≡ 1` on a grid of step `h` over `domain`.
pub fn fractional_reference(
    sigma: f64,
    domain: &Domain,
    h: f64,
    mode: ReferenceMode,
) -> Result<GridFunction> {
    check_sigma(sigma)?;
    let grid = Arc::new(build_grid(domain, h, domain.diameter())?);
    match mode {
        ReferenceMode::Exact => {
            let unit = domain.intervals().len() == 1
                && (domain.lower() + 1.0).abs() < 1e-12
                && (domain.upper() - 1.0).abs() < 1e-12;
            if !unit {
                return config("exact fractional reference needs the domain (-1, 1)");
            }
            Ok(FractionalReference::calibrate(sigma, h)?.on_grid(&grid))
        }
        ReferenceMode::Numeric => {
            let plan = ApplyPlan::natural(KernelSpec::singular(sigma)?, grid.clone())?;
            let f = GridFunction::on_closure(&grid, |_| 1.0);
            solve_direct(&plan, &f)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::gamma;
    use std::f64::consts::PI;

    /// Normalizing constant of the one-dimensional fractional Laplacian.
    fn c1(s: f64) -> f64 {
        s * 4f64.powf(s) * gamma(0.5 + s) / (PI.sqrt() * gamma(1.0 - s))
    }

    fn kappa_oracle(s: f64) -> f64 {
        4f64.powf(s) * gamma(1.0 + s) * gamma(0.5 + s) / (gamma(0.5) * c1(s))
    }

    #[test]
    fn calibrated_constant_matches_gamma_formula() {
        assert!((kappa_oracle(0.5) - PI).abs() < 1e-12);
        for s in [0.3, 0.5, 0.7] {
            let r = FractionalReference::calibrate(s, 2e-3).unwrap();
            let k = kappa_oracle(s);
            assert!(
                (r.kappa - k).abs() < 5e-3 * k,
                "sigma {s}: {} vs {k}",
                r.kappa
            );
            assert!((r.kappa_coarse - r.kappa_fine).abs() < 0.01 * r.kappa_fine);
        }
    }

    #[test]
    fn exact_mode_shape() {
        let d = Domain::symmetric(1.0).unwrap();
        let r = FractionalReference::calibrate(0.5, 0.01).unwrap();
        assert_eq!(r.eval(1.0), 0.0);
        assert_eq!(r.eval(-1.0), 0.0);
        assert_eq!(r.eval(0.3), r.eval(-0.3));
        assert!(fractional_reference(1.2, &d, 0.01, ReferenceMode::Exact).is_err());
        let other = Domain::symmetric(2.0).unwrap();
        assert!(fractional_reference(0.5, &other, 0.05, ReferenceMode::Exact).is_err());
    }
}
