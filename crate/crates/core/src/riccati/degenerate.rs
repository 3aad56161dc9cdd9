//! Subspaces on which `X` is isometric, and their intrinsic description as
//! the maximal `VV*`-invariant subspace `K0` (and `V*V`-invariant `K1`).

use crate::check::Check;
use crate::error::Result;
use crate::linalg::{self, Matrix, Subspace, Tolerances};
use crate::model::{require_valid, BlockOperator};
use crate::projections::{block_kernel, shifted};

use super::{GraphSolution, MU1_WINDOW, STRUCTURE_TOL};

/// `K0 ⊆ H0` and `K1 ⊆ H1` with the consistency checks between them.
#[derive(Debug, Clone)]
pub struct MaximalSubspaces {
    pub k0: Subspace,
    pub k1: Subspace,
    /// Dimension of the starting space `W0` of the `K0` iteration.
    pub w0_dim: usize,
    pub w1_dim: usize,
    /// Shrinking steps taken (both sides together).
    pub iterations: usize,
    /// `V*K0 = K1`, `VK1 = K0`, and `V*`/`V` preserving the complements.
    pub checks: Vec<Check>,
}

/// Starting space `Ker(A_here − λ) ∩ Ran(C*) ∩ {x : C·x ∈ Ker(A_there − λ)}`
/// where `C` is `V*` for `K0` and `V` for `K1`.
fn starting_space(
    ker_here: &Subspace,
    coupling: &Matrix,
    ker_there: &Subspace,
    op: &BlockOperator,
    tol: &Tolerances,
) -> Result<Subspace> {
    let range = linalg::range(&coupling.adjoint(), tol)?;
    let outside = linalg::identity(ker_there.ambient_dim()) - ker_there.projector();
    let preimage = block_kernel(&(outside * coupling), op, tol)?;
    let w = linalg::intersect(ker_here, &range, tol)?;
    linalg::intersect(&w, &preimage, tol)
}

/// Largest `gram`-invariant subspace of `start`, by repeatedly keeping
/// `{x ∈ K : gram·x ∈ K}` until the dimension stops shrinking.
fn shrink_to_invariant(start: Subspace, gram: &Matrix, cutoff: f64) -> Result<(Subspace, usize)> {
    let mut k = start;
    let mut steps = 0;
    // Dimension strictly decreases until the fixed point, so this terminates
    // after at most `dim W` rounds.
    while !k.is_trivial() {
        let basis = k.basis();
        let image = gram * basis;
        let outside = &image - basis * (basis.adjoint() * &image);
        let coeffs = linalg::null_space(&outside, cutoff)?;
        steps += 1;
        if coeffs.dim() == k.dim() {
            break;
        }
        let next = basis * coeffs.basis();
        k = Subspace::from_orthonormal(next);
    }
    Ok((k, steps))
}

/// `K0` as the maximal `VV*`-invariant subspace of
/// `W0 = Ker(A0 − λ) ∩ Ran V ∩ (V*)⁻¹ Ker(A1 − λ)`, and `K1` symmetrically.
pub fn compute_k0_k1(op: &BlockOperator, tol: &Tolerances) -> Result<MaximalSubspaces> {
    require_valid(op, tol)?;
    let lambda = op.lambda();
    let v = op.v();
    let vs = v.adjoint();
    let ker_a0 = block_kernel(&shifted(op.a0(), lambda), op, tol)?;
    let ker_a1 = block_kernel(&shifted(op.a1(), lambda), op, tol)?;

    let w0 = starting_space(&ker_a0, &vs, &ker_a1, op, tol)?;
    let w1 = starting_space(&ker_a1, v, &ker_a0, op, tol)?;
    let (w0_dim, w1_dim) = (w0.dim(), w1.dim());

    let cutoff = tol.tol_rank * op.scale() * op.scale();
    let (k0, steps0) = shrink_to_invariant(w0, &(v * &vs), cutoff)?;
    let (k1, steps1) = shrink_to_invariant(w1, &(&vs * v), cutoff)?;

    let allowed = STRUCTURE_TOL * op.scale();
    let image_defect = |m: &Matrix, from: &Subspace, to: &Subspace| -> Result<f64> {
        let image = if from.is_trivial() {
            Subspace::trivial(to.ambient_dim())
        } else {
            linalg::range(&(m * from.basis()), tol)?
        };
        linalg::equality_defect(&image, to)
    };
    let leak = |m: &Matrix, from: &Subspace, to: &Subspace| -> f64 {
        let perp = from.complement();
        if perp.is_trivial() || to.is_trivial() {
            return 0.0;
        }
        linalg::norm2(&(to.basis().adjoint() * m * perp.basis()))
    };
    let checks = vec![
        Check::at_most("closure(V*K0) = K1", image_defect(&vs, &k0, &k1)?, tol.tol_sub),
        Check::at_most("closure(V K1) = K0", image_defect(v, &k1, &k0)?, tol.tol_sub),
        Check::at_most("V*(H0 ⊖ K0) ⊆ H1 ⊖ K1", leak(&vs, &k0, &k1), allowed),
        Check::at_most("V(H1 ⊖ K1) ⊆ H0 ⊖ K0", leak(v, &k1, &k0), allowed),
    ];
    Ok(MaximalSubspaces {
        k0,
        k1,
        w0_dim,
        w1_dim,
        iterations: steps0 + steps1,
        checks,
    })
}

/// `(Ker(I − XᴴX), Ker(I − XXᴴ))` from the singular vectors of `X` whose
/// singular value is 1 within [`MU1_WINDOW`].
pub fn isometric_subspaces(x: &Matrix) -> Result<(Subspace, Subspace)> {
    let s = linalg::svd(x)?;
    let idx: Vec<usize> = (0..s.sigma.len())
        .filter(|&j| (s.sigma[j] - 1.0).abs() <= MU1_WINDOW)
        .collect();
    Ok((
        Subspace::from_orthonormal(s.w.select_columns(&idx)),
        Subspace::from_orthonormal(s.u.select_columns(&idx)),
    ))
}

/// Outcome of comparing `Ker(I − XᴴX)` with `K0` and `X|K0` with `−S|K0`.
#[derive(Debug, Clone)]
pub struct KarkarReport {
    pub e0: Subspace,
    pub e1: Subspace,
    pub checks: Vec<Check>,
}

impl KarkarReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Checks `Ker(I − XᴴX) = K0`, `Ker(I − XXᴴ) = K1`, `X|K0 = −S|K0` with `S`
/// the partial isometry of `V* = S(VV*)^{1/2}`, and `closure(X·K0) = K1`.
pub fn verify_karkar(
    op: &BlockOperator,
    sol: &GraphSolution,
    k: &MaximalSubspaces,
    tol: &Tolerances,
) -> Result<KarkarReport> {
    let (e0, e1) = isometric_subspaces(&sol.x)?;
    let s = linalg::polar_isometry(op.v(), tol)?;
    let on_k0 = linalg::norm2(&((&sol.x + &s) * k.k0.basis()));
    let x_k0 = if k.k0.is_trivial() {
        Subspace::trivial(op.n1())
    } else {
        linalg::range(&(&sol.x * k.k0.basis()), tol)?
    };
    let checks = vec![
        Check::at_most("Ker(I − X*X) = K0", linalg::equality_defect(&e0, &k.k0)?, tol.tol_sub),
        Check::at_most("Ker(I − XX*) = K1", linalg::equality_defect(&e1, &k.k1)?, tol.tol_sub),
        Check::at_most("X|K0 = −S|K0", on_k0, STRUCTURE_TOL),
        Check::at_most("closure(X K0) = K1", linalg::equality_defect(&x_k0, &k.k1)?, tol.tol_sub),
    ];
    Ok(KarkarReport { e0, e1, checks })
}

/// Inclusions and reduction properties on the isometric subspaces.
#[derive(Debug, Clone)]
pub struct LemmaReport {
    pub e0: Subspace,
    pub e1: Subspace,
    pub checks: Vec<Check>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn reduction_defect(m: &Matrix, s: &Subspace) -> Result<f64> {
    Ok(linalg::invariance_defect(m, s)?.max(linalg::invariance_defect(&m.adjoint(), s)?))
}

/// On `E0 = Ker(I − XᴴX)`: `E0 ⊆ Ker(A0 − λ)`, `X·E0 ⊆ Ker(A1 − λ)`,
/// `E0 ⊆ Ker(XVX − V*)`, and `E0` reduces `VX` and `VV*`. Mirrored on
/// `E1 = Ker(I − XXᴴ)` with `A1`, `X*`, `X*V*X* − V`, `V*X*`, `V*V`.
pub fn lemma_side_checks(op: &BlockOperator, sol: &GraphSolution, _tol: &Tolerances) -> Result<LemmaReport> {
    let (e0, e1) = isometric_subspaces(&sol.x)?;
    let lambda = op.lambda();
    let x = &sol.x;
    let xs = x.adjoint();
    let v = op.v();
    let vs = v.adjoint();
    let a0 = shifted(op.a0(), lambda);
    let a1 = shifted(op.a1(), lambda);
    let f = e0.basis();
    let g = e1.basis();
    let allowed = STRUCTURE_TOL * op.scale();

    let vx = v * x;
    let vsxs = &vs * &xs;
    let checks = vec![
        Check::at_most("E0 ⊆ Ker(A0 − λ)", linalg::norm2(&(&a0 * f)), allowed),
        Check::at_most("X E0 ⊆ Ker(A1 − λ)", linalg::norm2(&(&a1 * x * f)), allowed),
        Check::at_most("E0 ⊆ Ker(XVX − V*)", linalg::norm2(&((x * v * x - &vs) * f)), allowed),
        Check::at_most("E0 reduces VX", reduction_defect(&vx, &e0)?, allowed),
        Check::at_most("E0 reduces VV*", reduction_defect(&(v * &vs), &e0)?, allowed),
        Check::at_most("E1 ⊆ Ker(A1 − λ)", linalg::norm2(&(&a1 * g)), allowed),
        Check::at_most("X* E1 ⊆ Ker(A0 − λ)", linalg::norm2(&(&a0 * &xs * g)), allowed),
        Check::at_most(
            "E1 ⊆ Ker(X*V*X* − V)",
            linalg::norm2(&((&xs * &vs * &xs - v) * g)),
            allowed,
        ),
        Check::at_most("E1 reduces V*X*", reduction_defect(&vsxs, &e1)?, allowed),
        Check::at_most("E1 reduces V*V", reduction_defect(&(&vs * v), &e1)?, allowed),
    ];
    Ok(LemmaReport { e0, e1, checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::ensure_all;
    use crate::linalg::{c, from_real};
    use crate::model::{generate, GeneratorSpec};
    use crate::riccati::solve;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn scalar(a0: f64, a1: f64, v: crate::linalg::C64) -> BlockOperator {
        BlockOperator::new(
            from_real(1, 1, &[a0]),
            from_real(1, 1, &[a1]),
            Matrix::from_element(1, 1, v),
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn k0_examples() {
        let k = compute_k0_k1(&scalar(0.0, 0.0, c(1.0, 0.0)), &tol()).unwrap();
        assert_eq!((k.k0.dim(), k.k1.dim()), (1, 1));
        ensure_all(&k.checks).unwrap();

        let k = compute_k0_k1(&scalar(-1.0, 1.0, c(1.0, 0.0)), &tol()).unwrap();
        assert_eq!((k.k0.dim(), k.k1.dim()), (0, 0));
        ensure_all(&k.checks).unwrap();
    }

    #[test]
    fn k0_trivial_when_v_leaves_the_kernels() {
        // Ker A0 = span{e2}, Ker A1 = span{e2}; V maps Ker A1 onto e1 ∉ Ker A0.
        let op = BlockOperator::new(
            from_real(2, 2, &[-1.0, 0.0, 0.0, 0.0]),
            from_real(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            from_real(2, 2, &[0.0, 1.0, 0.5, 0.0]),
            0.0,
        )
        .unwrap();
        let k = compute_k0_k1(&op, &tol()).unwrap();
        assert_eq!((k.k0.dim(), k.k1.dim()), (0, 0));
        assert!(k.w0_dim <= 1);
    }

    #[test]
    fn shrinking_needs_more_than_one_step() {
        // Ker A0 = span{e2, e3}, Ker A1 = everything, V = diag-ish so that
        // VV* mixes e2 with e1 but fixes e3.
        let op = BlockOperator::new(
            from_real(3, 3, &[-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
            Matrix::zeros(3, 3),
            from_real(3, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0]),
            0.0,
        )
        .unwrap();
        let k = compute_k0_k1(&op, &tol()).unwrap();
        assert_eq!(k.k0.dim(), 1);
        assert!(linalg::same_subspace(&k.k0, &Subspace::coordinate(3, &[2]), &tol()).unwrap());
        ensure_all(&k.checks).unwrap();
    }

    #[test]
    fn karkar_scalar() {
        let op = scalar(0.0, 0.0, c(1.0, 0.0));
        let sol = solve(&op, &tol()).unwrap();
        let k = compute_k0_k1(&op, &tol()).unwrap();
        let r = verify_karkar(&op, &sol, &k, &tol()).unwrap();
        assert!(r.passed(), "{:?}", r.checks);
    }

    #[test]
    fn karkar_imaginary_coupling() {
        let op = scalar(0.0, 0.0, c(0.0, 2.0));
        let sol = solve(&op, &tol()).unwrap();
        assert!(sol.residual < 1e-14);
        let k = compute_k0_k1(&op, &tol()).unwrap();
        let r = verify_karkar(&op, &sol, &k, &tol()).unwrap();
        assert!(r.passed(), "{:?}", r.checks);
    }

    #[test]
    fn karkar_vacuous_with_gap() {
        let op = generate(&GeneratorSpec::simple(4, 3, 0.5, 1.0, 9)).unwrap();
        let sol = solve(&op, &tol()).unwrap();
        let k = compute_k0_k1(&op, &tol()).unwrap();
        assert_eq!(k.k0.dim(), 0);
        assert_eq!(sol.mu1_multiplicity, 0);
        assert!(verify_karkar(&op, &sol, &k, &tol()).unwrap().passed());
        assert!(lemma_side_checks(&op, &sol, &tol()).unwrap().passed());
    }

    #[test]
    fn lemma_scalar() {
        let op = scalar(0.0, 0.0, c(1.0, 0.0));
        let sol = solve(&op, &tol()).unwrap();
        let r = lemma_side_checks(&op, &sol, &tol()).unwrap();
        assert_eq!(r.e0.dim(), 1);
        assert!(r.passed(), "{:?}", r.checks);
    }

    #[test]
    fn degenerate_generated_instance() {
        let spec = GeneratorSpec {
            ker0_dim: 2,
            ker1_dim: 2,
            link_dim: 1,
            couple_kernels: true,
            ..GeneratorSpec::simple(4, 4, 0.0, 1.0, 3)
        };
        let op = generate(&spec).unwrap();
        let sol = solve(&op, &tol()).unwrap();
        let k = compute_k0_k1(&op, &tol()).unwrap();
        assert_eq!((k.k0.dim(), k.k1.dim()), (1, 1));
        assert_eq!(sol.mu1_multiplicity, 1);
        ensure_all(&k.checks).unwrap();
        let r = verify_karkar(&op, &sol, &k, &tol()).unwrap();
        assert!(r.passed(), "{:?}", r.checks);
        let r = lemma_side_checks(&op, &sol, &tol()).unwrap();
        assert!(r.passed(), "{:?}", r.checks);
    }
}
