use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex;

use super::{fft, GridFunction, NonlocalOperator};
use crate::error::{config, Error, Result};
use crate::geometry::{Grid, NodeClass};
use crate::kernel::{CellWeights, KernelSpec};

/// Above this many stencil-times-node products `apply_all` switches to FFT.
pub const FFT_THRESHOLD: usize = 4_000_000;

/// How the integral is paired with grid differences.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    /// `Σ_k w_k (u_{i+k} − u_i) − tail·u_i`; integrable kernels only.
    FirstDifference,
    /// `Σ_{k≥1} w_k (u_{i+k} + u_{i−k} − 2u_i)` with a second-moment centre cell.
    SecondDifference,
}

/// Precomputed stencil for one kernel on one grid.
#[derive(Debug)]
pub struct ApplyPlan {
    spec: KernelSpec,
    grid: Arc<Grid>,
    form: Form,
    weights: CellWeights,
    /// `stencil[k + K]` multiplies `u_{i+k}`; the centre entry is zero.
    stencil: Vec<f64>,
    diag: f64,
    unknowns: Vec<usize>,
    fft_cache: OnceLock<(usize, Vec<Complex<f64>>)>,
}

impl ApplyPlan {
    pub fn new(spec: KernelSpec, grid: Arc<Grid>, form: Form) -> Result<Self> {
        spec.validate()?;
        if form == Form::FirstDifference && spec.is_singular() {
            return config("first-difference form needs an integrable kernel");
        }
        let reach = grid.len() - 1;
        if (reach as f64) * grid.h() < grid.domain().diameter() {
            return config("stencil reach K h is smaller than the domain diameter");
        }
        let weights = spec.cell_weights(grid.h(), reach)?;
        let k = reach;
        let mut stencil = vec![0.0; 2 * k + 1];
        let outer: f64 = weights.weights[1..].iter().sum();
        let diag = match form {
            Form::FirstDifference => {
                for j in 1..=k {
                    stencil[k + j] = weights.weights[j];
                    stencil[k - j] = weights.weights[j];
                }
                2.0 * outer + weights.tail
            }
            Form::SecondDifference => {
                let centre = weights.taylor_moment / (grid.h() * grid.h());
                for j in 1..=k {
                    stencil[k + j] = weights.weights[j];
                    stencil[k - j] = weights.weights[j];
                }
                stencil[k + 1] += centre;
                stencil[k - 1] += centre;
                2.0 * outer + 2.0 * centre + weights.tail
            }
        };
        let unknowns = if spec.is_singular() {
            grid.interior_nodes()
        } else {
            grid.closure_nodes()
        };
        Ok(Self {
            spec,
            grid,
            form,
            weights,
            stencil,
            diag,
            unknowns,
            fft_cache: OnceLock::new(),
        })
    }

    /// First-difference plan for integrable kernels, second-difference otherwise.
    pub fn natural(spec: KernelSpec, grid: Arc<Grid>) -> Result<Self> {
        let form = if spec.is_singular() {
            Form::SecondDifference
        } else {
            Form::FirstDifference
        };
        Self::new(spec, grid, form)
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn form(&self) -> Form {
        self.form
    }

    pub fn weights(&self) -> &CellWeights {
        &self.weights
    }

    pub fn reach(&self) -> usize {
        self.weights.reach()
    }

    /// Coefficient of `−u_i`: all kernel mass except the centre cell.
    pub fn diag(&self) -> f64 {
        self.diag
    }

    /// Stencil coefficient for offset `k` (zero at `k = 0` and beyond the reach).
    pub fn coefficient(&self, k: isize) -> f64 {
        let kk = self.reach() as isize;
        if k.abs() > kk {
            0.0
        } else {
            self.stencil[(k + kk) as usize]
        }
    }

    pub fn l1_norm(&self) -> f64 {
        self.weights.l1_norm
    }

    pub fn tail(&self) -> f64 {
        self.weights.tail
    }

    /// Kernel mass node `i` sends outside the equation nodes: its row's
    /// diagonal-dominance gap.
    pub fn exterior_mass(&self, i: usize) -> f64 {
        let inside: f64 = self
            .unknowns
            .iter()
            .filter(|&&j| j != i)
            .map(|&j| self.coefficient(j as isize - i as isize))
            .sum();
        self.diag - inside
    }

    /// Discrete ν₀: the smallest exterior mass over the equation nodes.
    pub fn nu0(&self) -> f64 {
        self.unknowns
            .iter()
            .map(|&i| self.exterior_mass(i))
            .fold(f64::INFINITY, f64::min)
    }

    fn sum_at(&self, u: &[f64], support: &[usize], i: usize) -> f64 {
        let k = self.reach() as isize;
        let mut s = 0.0;
        for &j in support {
            let off = j as isize - i as isize;
            if off != 0 && off.abs() <= k {
                s += self.stencil[(off + k) as usize] * u[j];
            }
        }
        s - self.diag * u[i]
    }

    /// Direct evaluation at every node.
    pub fn apply_all_direct(&self, u: &GridFunction) -> Vec<f64> {
        let v = u.values();
        let support: Vec<usize> = (0..v.len()).filter(|&j| v[j] != 0.0).collect();
        (0..v.len()).map(|i| self.sum_at(v, &support, i)).collect()
    }

    /// FFT evaluation at every node.
    pub fn apply_all_fft(&self, u: &GridFunction) -> Vec<f64> {
        let v = u.values();
        let (size, spectrum) = self
            .fft_cache
            .get_or_init(|| fft::stencil_spectrum(&self.stencil, v.len()));
        let conv = fft::convolve(*size, spectrum, v, self.reach());
        conv.iter().zip(v).map(|(s, x)| s - self.diag * x).collect()
    }

    /// Operator at every node, choosing direct summation or FFT by size.
    pub fn apply_all(&self, u: &GridFunction) -> Vec<f64> {
        if u.values().len() * self.stencil.len() > FFT_THRESHOLD {
            self.apply_all_fft(u)
        } else {
            self.apply_all_direct(u)
        }
    }
}

impl NonlocalOperator for ApplyPlan {
    fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    fn unknowns(&self) -> &[usize] {
        &self.unknowns
    }

    fn apply_nodes(&self, u: &GridFunction, nodes: &[usize]) -> Vec<f64> {
        let v = u.values();
        let support: Vec<usize> = (0..v.len()).filter(|&j| v[j] != 0.0).collect();
        if nodes.len() * support.len() > FFT_THRESHOLD {
            let all = self.apply_all_fft(u);
            return nodes.iter().map(|&i| all[i]).collect();
        }
        nodes.iter().map(|&i| self.sum_at(v, &support, i)).collect()
    }

    fn apply(&self, u: &GridFunction, node: usize) -> Result<f64> {
        if node >= self.grid.len() || self.grid.class(node) == NodeClass::Exterior {
            return Err(Error::Domain(format!(
                "operator evaluated at node {node}, which is not in the closure of the domain"
            )));
        }
        Ok(self.apply_nodes(u, &[node])[0])
    }
}
