//! The contractive Riccati solution `X` read off the graph subspace 𝔔,
//! its residual and structural checks, the degenerate subspaces `K0`/`K1`,
//! and uniqueness of contractive solutions.

mod degenerate;
mod uniqueness;

pub use degenerate::{
    compute_k0_k1, isometric_subspaces, lemma_side_checks, verify_karkar, KarkarReport,
    LemmaReport, MaximalSubspaces,
};
pub use uniqueness::{
    classify_uniqueness, family_member, verdict_clauses, FamilyMember, UniquenessVerdict,
};

use serde::{Deserialize, Serialize};

use crate::check::Check;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Subspace, Tolerances};
use crate::model::BlockOperator;
use crate::projections::{self, KernelDecomposition};

/// Allowed Riccati residual, relative to `max(1, ‖B‖)`.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// A singular value σ of `X` counts as 1 when `|σ − 1| ≤ MU1_WINDOW`.
pub const MU1_WINDOW: f64 = 1e-8;
/// Slack for the structural identities on the isometric subspaces,
/// relative to `max(1, ‖B‖)`.
pub const STRUCTURE_TOL: f64 = 1e-8;
/// Slack on `‖X‖ ≤ 1`.
pub const CONTRACTION_TOL: f64 = 1e-10;

/// Where a solution came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    /// Graph of the invariant subspace 𝔔.
    FromQ,
    /// Member of the kernel-coupling family; the id fingerprints `T`.
    Family(u64),
}

/// A solution `X: H0 → H1` (`n1 × n0`) with its singular data.
#[derive(Debug, Clone)]
pub struct GraphSolution {
    pub x: Matrix,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub norm: f64,
    /// `‖A1·X − X·A0 − X·V·X + V*‖₂`.
    pub residual: f64,
    /// Number of singular values equal to 1 within [`MU1_WINDOW`].
    pub mu1_multiplicity: usize,
    pub provenance: Provenance,
}

impl GraphSolution {
    pub fn new(op: &BlockOperator, x: Matrix, provenance: Provenance) -> Result<Self> {
        let residual = residual(op, &x)?;
        let singular_values = linalg::svd(&x)?.sigma;
        let norm = singular_values.first().copied().unwrap_or(0.0);
        let mu1_multiplicity = singular_values
            .iter()
            .filter(|&&s| (s - 1.0).abs() <= MU1_WINDOW)
            .count();
        Ok(GraphSolution {
            x,
            singular_values,
            norm,
            residual,
            mu1_multiplicity,
            provenance,
        })
    }

    pub fn is_contractive(&self) -> bool {
        self.norm <= 1.0 + CONTRACTION_TOL
    }
}

/// Spectral norm of `A1·X − X·A0 − X·V·X + V*`.
pub fn residual(op: &BlockOperator, x: &Matrix) -> Result<f64> {
    if x.shape() != (op.n1(), op.n0()) {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", op.n1(), op.n0()),
            found: format!("{}x{}", x.nrows(), x.ncols()),
        });
    }
    linalg::ensure_finite(x)?;
    let r = op.a1() * x - x * op.a0() - x * op.v() * x + op.v().adjoint();
    Ok(linalg::norm2(&r))
}

/// Everything produced on the way to `X`.
#[derive(Debug, Clone)]
pub struct Solved {
    pub solution: GraphSolution,
    pub q: Subspace,
    pub kernels: KernelDecomposition,
    pub cond_z0: f64,
}

/// The distinguished contractive solution, built spectrally from 𝔔.
pub fn solve(op: &BlockOperator, tol: &Tolerances) -> Result<GraphSolution> {
    Ok(solve_detailed(op, tol)?.solution)
}

pub fn solve_detailed(op: &BlockOperator, tol: &Tolerances) -> Result<Solved> {
    let kernels = projections::kernel_decomposition(op, tol)?;
    let q = projections::build_q_from(op, &kernels, tol)?;
    let extracted = projections::graph_extract(&q, op.n0(), tol)?;
    let solution = GraphSolution::new(op, extracted.x, Provenance::FromQ)?;
    Ok(Solved {
        solution,
        q,
        kernels,
        cond_z0: extracted.cond_z0,
    })
}

/// Eigenvalues of `A0 + V·X`, computed through the Hermitian matrix
/// `G^{1/2}·(A0 + VX)·G^{−1/2}` with `G = I + XᴴX`, together with that
/// matrix's relative distance from Hermitian.
pub fn feedback_spectrum(op: &BlockOperator, x: &Matrix, tol: &Tolerances) -> Result<(Vec<f64>, f64)> {
    let n0 = op.n0();
    let gram = linalg::identity(n0) + x.adjoint() * x;
    let eig = linalg::eig_hermitian(&gram, tol)?;
    let mut up = eig.evecs.clone();
    let mut down = eig.evecs.clone();
    for j in 0..n0 {
        let g = eig.evals[j].max(1.0);
        up.column_mut(j).scale_mut(g.sqrt());
        down.column_mut(j).unscale_mut(g.sqrt());
    }
    let sqrt_g = &up * eig.evecs.adjoint();
    let inv_sqrt_g = &down * eig.evecs.adjoint();
    let h = sqrt_g * (op.a0() + op.v() * x) * inv_sqrt_g;
    let defect = linalg::norm2(&(&h - h.adjoint())) / linalg::norm2(&h).max(1.0);
    Ok((linalg::eig_hermitian_part(&h)?.evals, defect))
}

/// Post-conditions of [`solve`]: residual, contraction, kernel inclusions
/// `N0 ⊆ Ker X` and `N1 ⊆ Ker X*`, `spec(A0 + VX) ≤ λ`, and the graph
/// round trip back to 𝔔.
pub fn solution_checks(op: &BlockOperator, solved: &Solved, tol: &Tolerances) -> Result<Vec<Check>> {
    let sol = &solved.solution;
    let scale = op.scale();
    let w = tol.eig_window(op.norm());
    let mut checks = vec![
        Check::at_most("riccati residual", sol.residual, RESIDUAL_TOL * scale),
        Check::at_most("contraction ‖X‖ ≤ 1", sol.norm, 1.0 + CONTRACTION_TOL),
    ];
    let kd = &solved.kernels;
    checks.push(Check::at_most(
        "N0 ⊆ Ker X",
        linalg::norm2(&(&sol.x * kd.n0.basis())),
        tol.tol_sub,
    ));
    checks.push(Check::at_most(
        "N1 ⊆ Ker X*",
        linalg::norm2(&(sol.x.adjoint() * kd.n1.basis())),
        tol.tol_sub,
    ));
    let (evals, defect) = feedback_spectrum(op, &sol.x, tol)?;
    let top = evals.last().copied().unwrap_or(f64::NEG_INFINITY);
    checks.push(Check::at_most("spec(A0 + VX) ≤ λ", top - op.lambda(), w));
    checks.push(Check::at_most("A0 + VX similar to Hermitian", defect, STRUCTURE_TOL));
    let graph = projections::graph_of(&sol.x, tol)?;
    checks.push(Check::at_most(
        "graph(X) = 𝔔",
        linalg::equality_defect(&graph, &solved.q)?,
        tol.tol_sub,
    ));
    Ok(checks)
}
