use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::nonlocal_op::{ApplyPlan, GridFunction, NonlocalOperator};

/// Dense matrix of `−I` restricted to the equation nodes (exterior columns dropped).
#[derive(Clone, Debug)]
pub struct DenseSystem {
    pub nodes: Vec<usize>,
    pub matrix: DMatrix<f64>,
}

impl DenseSystem {
    /// `A_ii − Σ_{j≠i} |A_ij|` for every row.
    pub fn dominance_gaps(&self) -> Vec<f64> {
        let n = self.nodes.len();
        (0..n)
            .map(|r| {
                let off: f64 = (0..n)
                    .filter(|&c| c != r)
                    .map(|c| self.matrix[(r, c)].abs())
                    .sum();
                self.matrix[(r, r)] - off
            })
            .collect()
    }
}

pub fn assemble_system(plan: &ApplyPlan) -> DenseSystem {
    let nodes = plan.unknowns().to_vec();
    let n = nodes.len();
    let matrix = DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            plan.diag()
        } else {
            -plan.coefficient(nodes[c] as isize - nodes[r] as isize)
        }
    });
    DenseSystem { nodes, matrix }
}

/// Solves `A u = b` for the assembled system, Cholesky first and LU as fallback.
pub(crate) fn dense_solve(matrix: DMatrix<f64>, rhs: DVector<f64>) -> Result<DVector<f64>> {
    if let Some(ch) = matrix.clone().cholesky() {
        return Ok(ch.solve(&rhs));
    }
    matrix
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("discrete system matrix is singular".into()))
}

/// Exact solution of the linear discrete problem.
pub fn solve_direct(plan: &ApplyPlan, f: &GridFunction) -> Result<GridFunction> {
    let sys = assemble_system(plan);
    let rhs = DVector::from_iterator(sys.nodes.len(), sys.nodes.iter().map(|&i| f.get(i)));
    let sol = dense_solve(sys.matrix, rhs)?;
    let mut u = GridFunction::zeros(plan.grid());
    for (k, &i) in sys.nodes.iter().enumerate() {
        u.values_mut()[i] = sol[k];
    }
    Ok(u)
}
