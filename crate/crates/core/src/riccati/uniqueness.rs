use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Tolerances};
use crate::model::BlockOperator;
use crate::projections::KernelDecomposition;

use super::{GraphSolution, MaximalSubspaces, Provenance};

/// Whether the distinguished solution is the only contractive one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniquenessVerdict {
    /// One of `N0`, `N1` is trivial.
    pub condition_i: bool,
    /// `K0` is trivial.
    pub condition_ii: bool,
    pub unique: bool,
    /// No singular value of `X` equals 1.
    pub strictly_contractive: bool,
    pub isolated: bool,
}

/// The verdict from dimension counts alone, without the consistency check.
pub fn verdict_clauses(n0_dim: usize, n1_dim: usize, k0_dim: usize, mu1: usize) -> UniquenessVerdict {
    let condition_i = n0_dim == 0 || n1_dim == 0;
    let condition_ii = k0_dim == 0;
    UniquenessVerdict {
        condition_i,
        condition_ii,
        unique: condition_i && condition_ii,
        strictly_contractive: mu1 == 0,
        isolated: condition_i,
    }
}

/// Classifies uniqueness and cross-checks `unique ⟺ strictly contractive ∧ (i)`.
pub fn classify_uniqueness(
    kd: &KernelDecomposition,
    sol: &GraphSolution,
    k: &MaximalSubspaces,
) -> Result<UniquenessVerdict> {
    let v = verdict_clauses(kd.n0.dim(), kd.n1.dim(), k.k0.dim(), sol.mu1_multiplicity);
    if v.unique != (v.strictly_contractive && v.condition_i) {
        return Err(Error::InconsistentVerdict(format!(
            "dim K0 = {} but {} singular values of X equal 1",
            k.k0.dim(),
            sol.mu1_multiplicity
        )));
    }
    Ok(v)
}

/// A solution from the kernel-coupling family.
#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub solution: GraphSolution,
    /// Set when `‖T‖ > 1`, so the member is not a contraction.
    pub non_contraction: bool,
}

fn fingerprint(t: &Matrix) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    feed(t.nrows() as u64);
    feed(t.ncols() as u64);
    for z in t.iter() {
        feed(z.re.to_bits());
        feed(z.im.to_bits());
    }
    h
}

/// `X̃ = X` on `H0 ⊖ N0` and `X̃ = T` on `N0`, with `T` (`dim N1 × dim N0`)
/// written in the fixed orthonormal bases of `kd.n0` and `kd.n1`.
pub fn family_member(
    op: &BlockOperator,
    sol: &GraphSolution,
    kd: &KernelDecomposition,
    t: &Matrix,
    _tol: &Tolerances,
) -> Result<FamilyMember> {
    if kd.n0.is_trivial() || kd.n1.is_trivial() {
        return Err(Error::NoKernelCoupling);
    }
    if t.shape() != (kd.n1.dim(), kd.n0.dim()) {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", kd.n1.dim(), kd.n0.dim()),
            found: format!("{}x{}", t.nrows(), t.ncols()),
        });
    }
    linalg::ensure_finite(t)?;
    let n0 = kd.n0.basis();
    let x = &sol.x - &sol.x * kd.n0.projector() + kd.n1.basis() * t * n0.adjoint();
    let solution = GraphSolution::new(op, x, Provenance::Family(fingerprint(t)))?;
    Ok(FamilyMember {
        solution,
        non_contraction: linalg::norm2(t) > 1.0,
    })
}
