//! Discretized nonlocal operators acting on grid functions.
//!
//! The linear operator is a symmetric Toeplitz stencil plus a diagonal:
//! `apply(u)_i = Σ_k c_k u_{i+k} − diag · u_i`, with values outside the stored
//! array read as zero and all mass beyond the stencil folded into `diag`.

mod fft;
mod isaacs;
mod plan;

use std::sync::Arc;

use crate::error::Result;
use crate::geometry::Grid;

pub use isaacs::{ExtremalSign, IsaacsFamily};
pub use plan::{ApplyPlan, Form};

/// Nodal values on a grid. Dirichlet iterates vanish at every exterior node.
#[derive(Clone, Debug)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Self {
        assert_eq!(
            values.len(),
            grid.len(),
            "value count does not match the grid"
        );
        Self {
            grid: grid.clone(),
            values,
        }
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: &Arc<Grid>, f: impl FnMut(f64) -> f64) -> Self {
        Self {
            grid: grid.clone(),
            values: grid.xs().into_iter().map(f).collect(),
        }
    }

    /// Samples `f` on Ω̄ nodes and sets exterior nodes to zero.
    pub fn on_closure(grid: &Arc<Grid>, mut f: impl FnMut(f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                if grid.in_closure(i) {
                    f(grid.x(i))
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// `max |u_i|` over the listed nodes.
    pub fn sup_on(&self, nodes: &[usize]) -> f64 {
        nodes
            .iter()
            .map(|&i| self.values[i].abs())
            .fold(0.0, f64::max)
    }

    /// `max |u_i|` over Ω̄ nodes.
    pub fn sup_closure(&self) -> f64 {
        self.sup_on(&self.grid.closure_nodes())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn sub(&self, other: &GridFunction) -> Self {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Self {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn add(&self, other: &GridFunction) -> Self {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Self {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Integer shift: `result_i = u_{i+offset}`, zero where that index leaves the array.
    pub fn shifted(&self, offset: isize) -> Self {
        let n = self.values.len() as isize;
        let values = (0..n)
            .map(|i| {
                let j = i + offset;
                if (0..n).contains(&j) {
                    self.values[j as usize]
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            grid: self.grid.clone(),
            values,
        }
    }
}

/// Anything that can be applied like `I[u]` on a grid: a linear plan or an Isaacs family.
pub trait NonlocalOperator: Sync {
    fn grid(&self) -> &Arc<Grid>;

    /// Nodes where the equation is imposed: Ω̄ for integrable kernels, Ω for
    /// singular ones (whose solutions vanish on ∂Ω).
    fn unknowns(&self) -> &[usize];

    /// Operator values at `nodes`, without class checks.
    fn apply_nodes(&self, u: &GridFunction, nodes: &[usize]) -> Vec<f64>;

    /// Operator value at one node of Ω̄.
    fn apply(&self, u: &GridFunction, node: usize) -> Result<f64>;
}

/// `r_i = −I[u]_i − f_i` on the equation nodes, zero elsewhere.
pub fn residual<O: NonlocalOperator + ?Sized>(
    op: &O,
    u: &GridFunction,
    f: &GridFunction,
) -> GridFunction {
    let nodes = op.unknowns();
    let vals = op.apply_nodes(u, nodes);
    let mut r = GridFunction::zeros(op.grid());
    for (&i, a) in nodes.iter().zip(vals) {
        r.values[i] = -a - f.values[i];
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, Domain};
    use crate::kernel::{Beyond, KernelSpec, RadialProfile};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn setup(sigma: f64, eps: f64, h: f64) -> (Arc<Grid>, ApplyPlan) {
        let d = Domain::symmetric(1.0).unwrap();
        let g = Arc::new(build_grid(&d, h, 2.0).unwrap());
        let p = ApplyPlan::natural(KernelSpec::zero_order(sigma, eps).unwrap(), g.clone()).unwrap();
        (g, p)
    }

    #[test]
    fn constant_on_closure() {
        let (g, p) = setup(0.5, 1.0, 0.05);
        let u = GridFunction::on_closure(&g, |_| 1.0);
        let i0 = g.index_of(0.0).unwrap();
        let v = p.apply(&u, i0).unwrap();
        // cells of Ω̄ nodes cover [-1 - h/2, 1 + h/2]
        let expect = -(PI - 2.0 * (1.0f64 + 0.025).atan());
        assert!((v - expect).abs() < 1e-9, "{v} vs {expect}");
        assert!((p.nu0() - (PI - 2.0 * 1.025f64.atan())).abs() < 1e-9);
        let far = p.apply(&u, 0);
        assert!(matches!(far, Err(crate::Error::Domain(_))));
    }

    #[test]
    fn discrete_nu0_dominates_dilated_bound() {
        let (g, p) = setup(0.3, 0.4, 0.04);
        let dil = g.domain().dilated(g.h() / 2.0).unwrap();
        let lb = p.spec().nu0_lower_bound(&dil).unwrap();
        assert!(p.nu0() >= lb - 1e-9, "{} < {lb}", p.nu0());
        assert!(p.nu0() <= p.spec().nu0_lower_bound(g.domain()).unwrap());
    }

    #[test]
    fn fft_matches_direct() {
        let (g, p) = setup(0.4, 0.3, 0.01);
        let u = GridFunction::on_closure(&g, |x| (3.0 * x).sin() + x * x);
        let a = p.apply_all_direct(&u);
        let b = p.apply_all_fft(&u);
        let scale = a.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-10 * scale.max(1.0));
        }
        let singular = ApplyPlan::natural(KernelSpec::singular(0.5).unwrap(), g.clone()).unwrap();
        let a = singular.apply_all_direct(&u);
        let b = singular.apply_all_fft(&u);
        let scale = a.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-10 * scale);
        }
    }

    fn bump(x: f64) -> f64 {
        if x.abs() < 2.0 {
            (1.0 - x * x / 4.0).powi(4)
        } else {
            0.0
        }
    }

    fn exact(spec: &KernelSpec, x: f64) -> f64 {
        let eps = spec.epsilon().unwrap();
        let mut pts = vec![-2.0 - x, -eps, 0.0, eps, 2.0 - x];
        pts.sort_by(f64::total_cmp);
        let f = |z: f64| bump(x + z) * spec.eval(z).unwrap_or(0.0);
        crate::quad::integrate_pieces(&f, &pts, 1e-13, 1e-15) - bump(x) * spec.l1_norm()
    }

    #[test]
    fn consistency_rate() {
        let eps = 0.5;
        let spec = KernelSpec::zero_order(0.5, eps).unwrap();
        let d = Domain::symmetric(2.0).unwrap();
        let mut errs = Vec::new();
        for h in [eps / 4.0, eps / 8.0, eps / 16.0] {
            let g = Arc::new(build_grid(&d, h, 2.0).unwrap());
            let p = ApplyPlan::natural(spec.clone(), g.clone()).unwrap();
            let u = GridFunction::from_fn(&g, bump);
            let err = [0.0, 0.5, -1.25]
                .iter()
                .map(|&x| (p.apply(&u, g.index_of(x).unwrap()).unwrap() - exact(&spec, x)).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        for w in errs.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!(rate >= 1.5, "{errs:?}");
        }
    }

    #[test]
    fn second_difference_on_quadratic() {
        // for an integrable kernel both forms agree to second order on smooth data
        let (g, p1) = setup(0.5, 0.5, 0.02);
        let p2 = ApplyPlan::new(p1.spec().clone(), g.clone(), Form::SecondDifference).unwrap();
        let u = GridFunction::from_fn(&g, bump);
        let i = g.index_of(0.3).unwrap();
        let a = p1.apply(&u, i).unwrap();
        let b = p2.apply(&u, i).unwrap();
        assert!((a - b).abs() < 1e-3, "{a} {b}");
        assert!(
            ApplyPlan::new(KernelSpec::singular(0.5).unwrap(), g, Form::FirstDifference).is_err()
        );
    }

    fn family(g: &Arc<Grid>) -> IsaacsFamily {
        let c = |v: f64| RadialProfile::constant(v).unwrap();
        let ramp = RadialProfile::new(&[[0.0, 0.6], [1.0, 1.8]], Beyond::Hold).unwrap();
        IsaacsFamily::new(
            0.5,
            0.4,
            &[vec![c(1.0), c(2.0)], vec![ramp, c(0.7)]],
            0.5,
            2.0,
            g.clone(),
        )
        .unwrap()
    }

    fn random_fn(g: &Arc<Grid>, coeffs: &[f64]) -> GridFunction {
        GridFunction::on_closure(g, |x| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * ((k as f64 + 1.0) * x).sin())
                .sum()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn linear_and_monotone(a in prop::collection::vec(-2.0f64..2.0, 4),
                               b in prop::collection::vec(-2.0f64..2.0, 4),
                               s in -3.0f64..3.0) {
            let (g, p) = setup(0.5, 0.4, 0.05);
            let u = random_fn(&g, &a);
            let v = random_fn(&g, &b);
            let lhs = p.apply_all(&u.add(&v.scaled(s)));
            let (pu, pv) = (p.apply_all(&u), p.apply_all(&v));
            for i in 0..g.len() {
                prop_assert!((lhs[i] - pu[i] - s * pv[i]).abs() < 1e-9);
            }
            // w ≥ u everywhere with equality at node i
            let nodes = g.closure_nodes();
            let i = nodes[nodes.len() / 3];
            let w = GridFunction::from_values(&g, (0..g.len())
                .map(|j| if j == i { u.get(j) } else { u.get(j) + v.get(j).abs() }).collect());
            prop_assert!(p.apply(&u, i).unwrap() <= p.apply(&w, i).unwrap() + 1e-9);
        }

        #[test]
        fn translation_invariance(a in prop::collection::vec(-2.0f64..2.0, 3), shift in 1isize..6) {
            let (g, p) = setup(0.3, 0.2, 0.05);
            let u = GridFunction::from_fn(&g, |x| a.iter().enumerate()
                .map(|(k, c)| c * (-(x * (k as f64 + 2.0)).powi(2)).exp()).sum());
            let us = u.shifted(shift);
            let pu = p.apply_all(&u);
            let pus = p.apply_all(&us);
            let mid = g.len() / 2;
            prop_assert!((pus[mid] - pu[(mid as isize + shift) as usize]).abs() < 1e-6);
        }

        #[test]
        fn isaacs_sandwich(a in prop::collection::vec(-2.0f64..2.0, 4),
                           b in prop::collection::vec(-2.0f64..2.0, 4)) {
            let g = Arc::new(build_grid(&Domain::symmetric(1.0).unwrap(), 0.1, 2.0).unwrap());
            let fam = family(&g);
            let u = random_fn(&g, &a);
            let v = random_fn(&g, &b);
            let nodes = g.closure_nodes();
            let iu = fam.apply_nodes(&u, &nodes);
            let iv = fam.apply_nodes(&v, &nodes);
            let lo = fam.apply_extremal_nodes(&u.sub(&v), &nodes, ExtremalSign::Minus);
            let hi = fam.apply_extremal_nodes(&u.sub(&v), &nodes, ExtremalSign::Plus);
            let mu = fam.apply_extremal_nodes(&u, &nodes, ExtremalSign::Minus);
            let pu = fam.apply_extremal_nodes(&u, &nodes, ExtremalSign::Plus);
            for n in 0..nodes.len() {
                prop_assert!(mu[n] <= iu[n] + 1e-12 && iu[n] <= pu[n] + 1e-12);
                let d = iu[n] - iv[n];
                prop_assert!(lo[n] <= d + 1e-9 && d <= hi[n] + 1e-9);
            }
        }
    }

    #[test]
    fn residual_vanishes_off_equation_nodes() {
        let (g, p) = setup(0.5, 0.4, 0.05);
        let u = GridFunction::on_closure(&g, |x| 1.0 - x * x);
        let f = GridFunction::on_closure(&g, |_| 1.0);
        let r = residual(&p, &u, &f);
        for i in 0..g.len() {
            if !g.in_closure(i) {
                assert_eq!(r.get(i), 0.0);
            }
        }
        let i = g.index_of(0.0).unwrap();
        assert!((r.get(i) + p.apply(&u, i).unwrap() + 1.0).abs() < 1e-14);
    }
}
