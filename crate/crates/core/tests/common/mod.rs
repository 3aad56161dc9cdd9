//! Reference computations written directly against nalgebra, sharing no
//! code with the library beyond the matrix type.

#![allow(dead_code)]

use blockgraph::model::BlockOperator;
use blockgraph::{Matrix, C64};
use nalgebra::{DMatrix, SymmetricEigen};

pub fn cplx(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Contractive root of the scalar Riccati equation
/// `a1·x − x·a0 − x·v·x + v̄ = 0`.
pub fn scalar_oracle(a0: f64, a1: f64, v: C64) -> C64 {
    if v.norm() == 0.0 {
        return cplx(0.0, 0.0);
    }
    // v·x² − (a1 − a0)·x − v̄ = 0. With y = v·x real, y² − b·y − |v|² = 0,
    // and a0 + y ≤ λ selects the negative root.
    let b = a1 - a0;
    let disc = (b * b + 4.0 * v.norm_sqr()).sqrt();
    cplx(0.5 * (b - disc), 0.0) / v
}

/// Ascending eigenvalues and eigenvectors of the Hermitian part of `m`.
pub fn eigh(m: &Matrix) -> (Vec<f64>, Matrix) {
    let h = (m + m.adjoint()).scale(0.5);
    let e = SymmetricEigen::new(h);
    let mut idx: Vec<usize> = (0..e.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = e.eigenvectors.select_columns(&idx);
    (vals, vecs)
}

pub fn spec_norm(m: &Matrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Orthonormal basis of the span of eigenvectors with `|e − at| ≤ w`.
pub fn eigvecs_near(m: &Matrix, at: f64, w: f64) -> Matrix {
    let (vals, vecs) = eigh(m);
    let idx: Vec<usize> = (0..vals.len()).filter(|&i| (vals[i] - at).abs() <= w).collect();
    vecs.select_columns(&idx)
}

/// Orthonormal basis of the right null space, `σ ≤ cutoff`, via the
/// eigenvectors of `MᴴM`. Squaring limits the resolution of `σ` to about
/// `√ε·‖M‖`, so `cutoff` must sit well above that.
pub fn null_basis(m: &Matrix, cutoff: f64) -> Matrix {
    let g = m.adjoint() * m;
    let (vals, vecs) = eigh(&g);
    let idx: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] <= cutoff * cutoff).collect();
    vecs.select_columns(&idx)
}

/// Orthonormal basis of the column span, `σ > cutoff`.
pub fn range_basis(m: &Matrix, cutoff: f64) -> Matrix {
    let g = m * m.adjoint();
    let (vals, vecs) = eigh(&g);
    let idx: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > cutoff * cutoff).collect();
    vecs.select_columns(&idx)
}

pub fn projector(basis: &Matrix) -> Matrix {
    basis * basis.adjoint()
}

/// Intersection of two subspaces: vectors fixed by both projectors.
pub fn intersect(a: &Matrix, b: &Matrix, n: usize, cutoff: f64) -> Matrix {
    let i = DMatrix::<C64>::identity(n, n);
    let mut stacked = Matrix::zeros(2 * n, n);
    stacked.rows_mut(0, n).copy_from(&(&i - projector(a)));
    stacked.rows_mut(n, n).copy_from(&(&i - projector(b)));
    null_basis(&stacked, cutoff)
}

/// Largest principal angle between two spans, or π/2 on a dimension mismatch.
pub fn max_angle(a: &Matrix, b: &Matrix) -> f64 {
    if a.ncols() != b.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    if a.ncols() == 0 {
        return 0.0;
    }
    // sin of the largest angle is ‖(I − P_b)·a‖.
    let n = a.nrows();
    let resid = (DMatrix::<C64>::identity(n, n) - projector(b)) * a;
    spec_norm(&resid).min(1.0).asin()
}

/// Maximal `VVᴴ`-invariant subspace of
/// `W0 = Ker(A0 − λ) ∩ Ran V ∩ {x : Vᴴx ∈ Ker(A1 − λ)}`, assembled as the
/// sum over eigenvalue clusters `μ` of `VVᴴ` of `W0 ∩ E_μ`.
pub fn brute_force_k0(op: &BlockOperator, w: f64, cutoff: f64) -> Matrix {
    let n0 = op.n0();
    let v = op.v();
    let vs = v.adjoint();
    let ker_a0 = eigvecs_near(op.a0(), op.lambda(), w);
    let ker_a1 = eigvecs_near(op.a1(), op.lambda(), w);
    let ran_v = range_basis(v, cutoff);
    let n1 = op.n1();
    let leave = (DMatrix::<C64>::identity(n1, n1) - projector(&ker_a1)) * &vs;
    let pre = null_basis(&leave, cutoff);
    let w0 = intersect(&intersect(&ker_a0, &ran_v, n0, cutoff), &pre, n0, cutoff);

    let gram = v * &vs;
    let (vals, vecs) = eigh(&gram);
    let mut pieces: Vec<Matrix> = Vec::new();
    let mut start = 0;
    while start < vals.len() {
        let mut end = start + 1;
        while end < vals.len() && vals[end] - vals[end - 1] <= w {
            end += 1;
        }
        let cluster = vecs.columns(start, end - start).into_owned();
        let piece = intersect(&w0, &cluster, n0, cutoff);
        if piece.ncols() > 0 {
            pieces.push(piece);
        }
        start = end;
    }
    let total: usize = pieces.iter().map(|p| p.ncols()).sum();
    let mut k0 = Matrix::zeros(n0, total);
    let mut col = 0;
    for p in pieces {
        k0.columns_mut(col, p.ncols()).copy_from(&p);
        col += p.ncols();
    }
    k0
}

/// `S = Vᴴ·(VVᴴ)^{-1/2}` on `Ran V`, i.e. `W_r·U_rᴴ` for `V = U·Σ·Wᴴ`,
/// keeping `σ > cutoff`.
pub fn partial_isometry_of_adjoint(v: &Matrix, cutoff: f64) -> Matrix {
    let (vals, vecs) = eigh(&(v * v.adjoint()));
    let mut inv_root = Matrix::zeros(v.nrows(), v.nrows());
    for (j, &mu) in vals.iter().enumerate() {
        if mu > cutoff * cutoff {
            let e = vecs.column(j);
            inv_root += (e * e.adjoint()).scale(1.0 / mu.sqrt());
        }
    }
    v.adjoint() * inv_root
}

/// `‖A1·X − X·A0 − X·V·X + Vᴴ‖₂`.
pub fn riccati_residual(op: &BlockOperator, x: &Matrix) -> f64 {
    spec_norm(&(op.a1() * x - x * op.a0() - x * op.v() * x + op.v().adjoint()))
}

/// Right singular vectors of `x` with singular value within `w` of 1.
pub fn isometric_part(x: &Matrix, w: f64) -> Matrix {
    let g = x.adjoint() * x;
    eigvecs_near(&g, 1.0, 2.0 * w)
}
