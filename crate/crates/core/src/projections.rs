//! Spectral subspaces of `B`, the invariant subspace 𝔔, the two-projection
//! geometry of a pair of subspaces, and extraction of graph operators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Subspace, Tolerances};
use crate::model::{assemble, require_valid, BlockOperator};

/// Eigenvectors of a Hermitian matrix split by their position relative to λ.
#[derive(Debug, Clone)]
pub struct SpectralSplit {
    pub below: Subspace,
    pub at: Subspace,
    pub above: Subspace,
    pub evals: Vec<f64>,
    /// Half-width of the window around λ.
    pub window: f64,
}

/// Splits the spectrum of `b` into `< λ − w`, `[λ − w, λ + w]`, `> λ + w`
/// with `w = tol_eig·max(1, ‖B‖)`.
pub fn spectral_split(b: &Matrix, lambda: f64, tol: &Tolerances) -> Result<SpectralSplit> {
    let eig = linalg::eig_hermitian(b, tol)?;
    let norm = eig.evals.iter().fold(0.0, |acc: f64, e| acc.max(e.abs()));
    let window = tol.eig_window(norm);
    let pick = |pred: &dyn Fn(f64) -> bool| {
        let idx: Vec<usize> = (0..eig.evals.len())
            .filter(|&j| pred(eig.evals[j]))
            .collect();
        Subspace::from_orthonormal(eig.evecs.select_columns(&idx))
    };
    Ok(SpectralSplit {
        below: pick(&|e| e < lambda - window),
        at: pick(&|e| (e - lambda).abs() <= window),
        above: pick(&|e| e > lambda + window),
        evals: eig.evals.clone(),
        window,
    })
}

/// `Ran E_B((−∞, λ))`: eigenvectors with eigenvalue below `λ − w`.
pub fn spectral_subspace_below(b: &Matrix, lambda: f64, tol: &Tolerances) -> Result<Subspace> {
    Ok(spectral_split(b, lambda, tol)?.below)
}

/// `Ker(B − λ)`: eigenvectors with `|eigenvalue − λ| ≤ w`.
pub fn eigenspace_at(b: &Matrix, lambda: f64, tol: &Tolerances) -> Result<Subspace> {
    Ok(spectral_split(b, lambda, tol)?.at)
}

/// Kernel of a block-level operator of `op`. The rank cutoff is
/// `tol_rank·max(σ_max(M), max(1, ‖B‖))`, so blocks that vanish up to
/// rounding relative to `B` count as zero.
pub(crate) fn block_kernel(m: &Matrix, op: &BlockOperator, tol: &Tolerances) -> Result<Subspace> {
    let smax = linalg::norm2(m);
    linalg::null_space(m, tol.tol_rank * smax.max(op.scale()))
}

pub(crate) fn shifted(m: &Matrix, lambda: f64) -> Matrix {
    m - linalg::identity(m.nrows()).scale(lambda)
}

/// The pieces of the kernel splitting `Ker(B − λ) = N0 ⊕ N1`.
#[derive(Debug, Clone)]
pub struct KernelDecomposition {
    /// `Ker(A0 − λ) ∩ Ker V*` in `H0`, with a fixed orthonormal basis.
    pub n0: Subspace,
    /// `Ker(A1 − λ) ∩ Ker V` in `H1`, with a fixed orthonormal basis.
    pub n1: Subspace,
    pub ker_a0: Subspace,
    pub ker_a1: Subspace,
    /// Largest principal angle between `N0 ⊕ N1` and `Ker(B − λ)`
    /// (π/2 when the dimensions differ).
    pub canon_defect: f64,
    pub ker_b_dim: usize,
}

impl KernelDecomposition {
    pub fn canon_ok(&self, tol: &Tolerances) -> bool {
        self.canon_defect <= tol.tol_sub
    }

    /// `N0 ⊕ N1` as a subspace of `H0 ⊕ H1`.
    pub fn embedded_sum(&self) -> Subspace {
        let (n0, n1) = (self.n0.ambient_dim(), self.n1.ambient_dim());
        let a = self.n0.embed(n0 + n1, 0);
        let b = self.n1.embed(n0 + n1, n0);
        let mut basis = Matrix::zeros(n0 + n1, a.dim() + b.dim());
        basis.columns_mut(0, a.dim()).copy_from(a.basis());
        basis.columns_mut(a.dim(), b.dim()).copy_from(b.basis());
        Subspace::from_orthonormal(basis)
    }
}

/// Computes `N0`, `N1` directly in the block factors and cross-checks their
/// sum against `Ker(B − λ)`.
pub fn kernel_decomposition(op: &BlockOperator, tol: &Tolerances) -> Result<KernelDecomposition> {
    require_valid(op, tol)?;
    let lambda = op.lambda();
    let ker_a0 = block_kernel(&shifted(op.a0(), lambda), op, tol)?;
    let ker_a1 = block_kernel(&shifted(op.a1(), lambda), op, tol)?;
    let ker_vs = block_kernel(&op.v().adjoint(), op, tol)?;
    let ker_v = block_kernel(op.v(), op, tol)?;
    let n0 = linalg::intersect(&ker_a0, &ker_vs, tol)?;
    let n1 = linalg::intersect(&ker_a1, &ker_v, tol)?;

    let mut kd = KernelDecomposition {
        n0,
        n1,
        ker_a0,
        ker_a1,
        canon_defect: 0.0,
        ker_b_dim: 0,
    };
    let ker_b = eigenspace_at(&assemble(op), lambda, tol)?;
    let sum = kd.embedded_sum();
    kd.ker_b_dim = ker_b.dim();
    kd.canon_defect = if ker_b.dim() == sum.dim() {
        linalg::max_angle(&ker_b, &sum)?
    } else {
        std::f64::consts::FRAC_PI_2
    };
    Ok(kd)
}

/// 𝔔 = `Ran E_B((−∞, λ)) ⊕ (Ker(A0 − λ) ∩ Ker V*)`, which must have
/// dimension `n0`.
pub fn build_q(op: &BlockOperator, tol: &Tolerances) -> Result<Subspace> {
    let kd = kernel_decomposition(op, tol)?;
    build_q_from(op, &kd, tol)
}

pub(crate) fn build_q_from(
    op: &BlockOperator,
    kd: &KernelDecomposition,
    tol: &Tolerances,
) -> Result<Subspace> {
    let below = spectral_subspace_below(&assemble(op), op.lambda(), tol)?;
    let q = below.sum(&kd.n0.embed(op.dim(), 0), tol)?;
    if q.dim() != op.n0() {
        return Err(Error::DimensionMismatch {
            expected: op.n0(),
            found: q.dim(),
        });
    }
    Ok(q)
}

/// Dimensions of the canonical five-way splitting for a pair of subspaces
/// `(Ran P, Ran Q)`, plus `‖P − Q‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoProjectionGeometry {
    /// `Ker P ∩ Ker Q`
    pub dim_m00: usize,
    /// `Ker P ∩ Ran Q`
    pub dim_m01: usize,
    /// `Ran P ∩ Ker Q`
    pub dim_m10: usize,
    /// `Ran P ∩ Ran Q`
    pub dim_m11: usize,
    /// Generic part.
    pub dim_mprime: usize,
    /// Largest singular value of `P − Q`.
    pub norm_p_minus_q: f64,
}

impl TwoProjectionGeometry {
    /// Graph criterion: `M01 = M10 = {0}`.
    pub fn is_graph_pair(&self) -> bool {
        self.dim_m01 == 0 && self.dim_m10 == 0
    }
}

pub fn two_projection_geometry(
    s_p: &Subspace,
    s_q: &Subspace,
    tol: &Tolerances,
) -> Result<TwoProjectionGeometry> {
    if s_p.ambient_dim() != s_q.ambient_dim() {
        return Err(Error::AmbientMismatch {
            left: s_p.ambient_dim(),
            right: s_q.ambient_dim(),
        });
    }
    let (p_perp, q_perp) = (s_p.complement(), s_q.complement());
    let dim_m11 = linalg::intersect(s_p, s_q, tol)?.dim();
    let dim_m10 = linalg::intersect(s_p, &q_perp, tol)?.dim();
    let dim_m01 = linalg::intersect(&p_perp, s_q, tol)?.dim();
    let dim_m00 = linalg::intersect(&p_perp, &q_perp, tol)?.dim();
    let used = dim_m00 + dim_m01 + dim_m10 + dim_m11;
    let norm = linalg::norm2(&(s_p.projector() - s_q.projector())).clamp(0.0, 1.0);
    Ok(TwoProjectionGeometry {
        dim_m00,
        dim_m01,
        dim_m10,
        dim_m11,
        dim_mprime: s_p.ambient_dim().saturating_sub(used),
        norm_p_minus_q: norm,
    })
}

/// An operator read off a graph subspace.
#[derive(Debug, Clone)]
pub struct GraphExtraction {
    /// `n1 × n0`.
    pub x: Matrix,
    /// Condition number of the `H0` block of the basis.
    pub cond_z0: f64,
}

/// Writes the basis of `s_q` as `[Z0; Z1]` and returns `X = Z1·Z0⁻¹`,
/// so that `s_q = {x ⊕ Xx}`.
pub fn graph_extract(s_q: &Subspace, n0: usize, tol: &Tolerances) -> Result<GraphExtraction> {
    let ambient = s_q.ambient_dim();
    if n0 > ambient || s_q.dim() != n0 {
        return Err(Error::DimensionMismatch {
            expected: n0,
            found: s_q.dim(),
        });
    }
    let n1 = ambient - n0;
    let z0 = s_q.basis().rows(0, n0).into_owned();
    let z1 = s_q.basis().rows(n0, n1).into_owned();
    if n0 == 0 {
        return Ok(GraphExtraction {
            x: Matrix::zeros(n1, 0),
            cond_z0: 1.0,
        });
    }
    let s = linalg::svd(&z0)?;
    let smin = *s.sigma.last().expect("n0 ≥ 1");
    let cond = if smin > 0.0 { s.max_sigma() / smin } else { f64::INFINITY };
    if !(cond <= 1.0 / tol.tol_rank) {
        return Err(Error::NotAGraph { cond });
    }
    let mut w_scaled = s.w.clone();
    for (j, &sig) in s.sigma.iter().enumerate() {
        w_scaled.column_mut(j).unscale_mut(sig);
    }
    let z0_inv = w_scaled * s.u.adjoint();
    Ok(GraphExtraction {
        x: z1 * z0_inv,
        cond_z0: cond,
    })
}

/// The graph `{x ⊕ Xx : x ∈ H0}` as a subspace of `H0 ⊕ H1`.
pub fn graph_of(x: &Matrix, tol: &Tolerances) -> Result<Subspace> {
    let (n1, n0) = x.shape();
    let mut cols = Matrix::zeros(n0 + n1, n0);
    cols.rows_mut(0, n0).copy_from(&linalg::identity(n0));
    cols.rows_mut(n0, n1).copy_from(x);
    Subspace::span(&cols, tol)
}

/// Norm identities between `X` and the projections onto `H0` and its graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormRelations {
    pub norm_x: f64,
    /// `‖X‖ / √(1 + ‖X‖²)`.
    pub norm_p_minus_q: f64,
    /// `arctan σ_i(X)`, ascending.
    pub angles: Vec<f64>,
}

impl NormRelations {
    /// `‖X‖` recovered from `‖P − Q‖` via `t / √(1 − t²)`.
    pub fn norm_x_from_pq(&self) -> f64 {
        let t = self.norm_p_minus_q;
        t / (1.0 - t * t).sqrt()
    }
}

pub fn norm_relations(x: &Matrix) -> Result<NormRelations> {
    let s = linalg::svd(x)?;
    let norm_x = s.max_sigma();
    let mut angles: Vec<f64> = s.sigma.iter().map(|s| s.atan()).collect();
    // Directions of H0 beyond the rank of X are fixed by the graph.
    angles.resize(x.ncols(), 0.0);
    angles.sort_by(f64::total_cmp);
    Ok(NormRelations {
        norm_x,
        norm_p_minus_q: norm_x / (1.0 + norm_x * norm_x).sqrt(),
        angles,
    })
}
