use std::sync::Arc;

use super::{ApplyPlan, Form, GridFunction, NonlocalOperator};
use crate::error::{config, Error, Result};
use crate::geometry::{Grid, NodeClass};
use crate::kernel::{KernelSpec, RadialProfile};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtremalSign {
    /// `M⁺`: supremum over the whole family.
    Plus,
    /// `M⁻`: infimum over the whole family.
    Minus,
}

/// A two-indexed family `L_{αβ}` of linear operators with kernels `a_{αβ} K_ε`.
#[derive(Debug)]
pub struct IsaacsFamily {
    members: Vec<Vec<ApplyPlan>>,
    lambda1: f64,
    lambda2: f64,
    grid: Arc<Grid>,
}

impl IsaacsFamily {
    /// Builds every member `a_{αβ}(z) / (ε^{1+2σ} + |z|^{1+2σ})` on `grid`.
    pub fn new(
        sigma: f64,
        epsilon: f64,
        coefficients: &[Vec<RadialProfile>],
        lambda1: f64,
        lambda2: f64,
        grid: Arc<Grid>,
    ) -> Result<Self> {
        let members = coefficients
            .iter()
            .map(|row| {
                row.iter()
                    .map(|a| {
                        let spec =
                            KernelSpec::anisotropic(sigma, epsilon, a.clone(), lambda1, lambda2)?;
                        ApplyPlan::new(spec, grid.clone(), Form::FirstDifference)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_plans(members, lambda1, lambda2)
    }

    pub fn from_plans(members: Vec<Vec<ApplyPlan>>, lambda1: f64, lambda2: f64) -> Result<Self> {
        if members.is_empty() || members.iter().any(|r| r.is_empty()) {
            return config("Isaacs family needs nonempty index sets");
        }
        let width = members[0].len();
        if members.iter().any(|r| r.len() != width) {
            return config("Isaacs family rows must have equal length");
        }
        let grid = members[0][0].grid().clone();
        let form = members[0][0].form();
        for p in members.iter().flatten() {
            if !Arc::ptr_eq(p.grid(), &grid)
                || p.form() != form
                || p.reach() != members[0][0].reach()
            {
                return config("Isaacs family members must share grid, truncation and form");
            }
        }
        Ok(Self {
            members,
            lambda1,
            lambda2,
            grid,
        })
    }

    pub fn members(&self) -> &[Vec<ApplyPlan>] {
        &self.members
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.grid.len() || self.grid.class(node) == NodeClass::Exterior {
            return Err(Error::Domain(format!(
                "node {node} is not in the closure of the domain"
            )));
        }
        Ok(())
    }

    /// All member values at `nodes`: `out[a][b][n]`.
    fn member_values(&self, u: &GridFunction, nodes: &[usize]) -> Vec<Vec<Vec<f64>>> {
        self.members
            .iter()
            .map(|row| row.iter().map(|p| p.apply_nodes(u, nodes)).collect())
            .collect()
    }

    pub fn apply_extremal_nodes(
        &self,
        u: &GridFunction,
        nodes: &[usize],
        sign: ExtremalSign,
    ) -> Vec<f64> {
        let vals = self.member_values(u, nodes);
        (0..nodes.len())
            .map(|n| {
                let it = vals.iter().flatten().map(|v| v[n]);
                match sign {
                    ExtremalSign::Plus => it.fold(f64::NEG_INFINITY, f64::max),
                    ExtremalSign::Minus => it.fold(f64::INFINITY, f64::min),
                }
            })
            .collect()
    }

    /// `M^±[u]` at one node.
    pub fn apply_extremal(&self, u: &GridFunction, node: usize, sign: ExtremalSign) -> Result<f64> {
        self.check_node(node)?;
        Ok(self.apply_extremal_nodes(u, &[node], sign)[0])
    }

    /// `inf_α sup_β L_{αβ}[u]` at one node.
    pub fn apply_isaacs(&self, u: &GridFunction, node: usize) -> Result<f64> {
        self.check_node(node)?;
        Ok(self.apply_nodes(u, &[node])[0])
    }
}

impl NonlocalOperator for IsaacsFamily {
    fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    fn unknowns(&self) -> &[usize] {
        self.members[0][0].unknowns()
    }

    fn apply_nodes(&self, u: &GridFunction, nodes: &[usize]) -> Vec<f64> {
        let vals = self.member_values(u, nodes);
        (0..nodes.len())
            .map(|n| {
                vals.iter()
                    .map(|row| row.iter().map(|v| v[n]).fold(f64::NEG_INFINITY, f64::max))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    fn apply(&self, u: &GridFunction, node: usize) -> Result<f64> {
        self.apply_isaacs(u, node)
    }
}
